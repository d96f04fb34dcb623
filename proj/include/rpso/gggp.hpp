#ifndef RPSO_GGGP_HPP
#define RPSO_GGGP_HPP

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "parallel.hpp"
#include "problems.hpp"
#include "rng.hpp"
#include "swarm.hpp"

namespace rpso {

// ---------------------------------------------------------------------------
// Grammar

enum class SymbolKind { NonTerminal, IntLeaf, RealLeaf };

struct Production {
    std::string label;
    std::vector<std::string> children;
};

struct Rule {
    std::string symbol;
    SymbolKind kind = SymbolKind::NonTerminal;
    std::vector<Production> productions; // NonTerminal
    double lo = 0.0;                     // leaves
    double hi = 0.0;
};

/// Derivation-tree node. Nonterminals record the index of the applied
/// production; leaves carry the sampled value.
struct Node {
    std::string symbol;
    std::size_t choice = 0;
    double value = 0.0;
    std::vector<Node> children;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Numeric ranges of the leaves. Defaults are the artifact's choices.
struct GrammarRanges {
    long group_min = 2;
    long group_max = 50;
    double prob_mutate_max = 0.5;
    double weight_max = 4.0; // C1, C2, C3, inner C1/C2
    double sigma_max = 10.0;
    long dorm_min = 2;
    long dorm_max = 10;
    long lpop_min = 10;
    long lpop_max = 50;
    double lmut_scale_max = 0.5;
    double in_mut_scale_max = 0.5;
};

namespace sym {
inline constexpr std::string_view start = "<Start>";
inline constexpr std::string_view outer = "<Outer>";
inline constexpr std::string_view inner = "<Inner>";
inline constexpr std::string_view group = "<Group>";
inline constexpr std::string_view mutation = "<Mutation>";
inline constexpr std::string_view mutate = "<Mutate>";
inline constexpr std::string_view prob_mutate = "<Prob Mutate>";
inline constexpr std::string_view network = "<Network>";
inline constexpr std::string_view capability = "<Capability>";
inline constexpr std::string_view baseline = "<Baseline>";
inline constexpr std::string_view movement = "<Movement>";
inline constexpr std::string_view dd = "<DD>";
inline constexpr std::string_view leh = "<LEH>";
inline constexpr std::string_view c1 = "<C1>";
inline constexpr std::string_view c2 = "<C2>";
inline constexpr std::string_view c3 = "<C3>";
inline constexpr std::string_view omega = "<ω>";
inline constexpr std::string_view sigma = "<σ>";
inline constexpr std::string_view sigma_limit = "<σ limit>";
inline constexpr std::string_view min_step = "<Min step>";
inline constexpr std::string_view r3 = "<r3>";
inline constexpr std::string_view leh_relocation = "<LEH relocation>";
inline constexpr std::string_view lpop = "<lpop>";
inline constexpr std::string_view lmutp = "<lmutP>";
inline constexpr std::string_view lmuta = "<lmutA>";
inline constexpr std::string_view lelites = "<lelites>";
inline constexpr std::string_view ltour = "<ltour>";
inline constexpr std::string_view dorm = "<Dorm>";
inline constexpr std::string_view in_ext = "<In Ext>";
inline constexpr std::string_view form_inner = "<Form Inner>";
inline constexpr std::string_view in_pso = "<In PSO>";
inline constexpr std::string_view in_ga = "<In GA>";
inline constexpr std::string_view in_swarm = "<In Swarm>";
inline constexpr std::string_view in_c1 = "<In C1>";
inline constexpr std::string_view in_c2 = "<In C2>";
inline constexpr std::string_view in_omega = "<In ω>";
inline constexpr std::string_view in_pop = "<In pop>";
inline constexpr std::string_view in_mutp = "<In mutP>";
inline constexpr std::string_view in_muta = "<In mutA>";
inline constexpr std::string_view in_elites = "<In elites>";
inline constexpr std::string_view in_tour = "<In tour>";
inline constexpr std::string_view ndorm = "<nDorm>";
inline constexpr std::string_view npbest = "<nPBest>";
inline constexpr std::string_view stopping = "<Stopping>";
} // namespace sym

/// Roots of the subtrees exchanged by crossover and regrown by mutation.
/// Every derivation contains each of them exactly once.
inline const std::array<std::string_view, 11> cut_points{
    sym::group,    sym::mutation, sym::network, sym::capability, sym::baseline, sym::movement,
    sym::in_ext,   sym::form_inner, sym::ndorm, sym::npbest,     sym::stopping,
};

class Grammar {
public:
    static Grammar standard(const GrammarRanges& r = {})
    {
        Grammar g;
        auto nt = [&](std::string_view s, std::vector<Production> prods) {
            g.rules_[std::string(s)] = Rule{std::string(s), SymbolKind::NonTerminal, std::move(prods), 0.0, 0.0};
        };
        auto real = [&](std::string_view s, double lo, double hi) {
            g.rules_[std::string(s)] = Rule{std::string(s), SymbolKind::RealLeaf, {}, lo, hi};
        };
        auto integer = [&](std::string_view s, long lo, long hi) {
            g.rules_[std::string(s)] =
                Rule{std::string(s), SymbolKind::IntLeaf, {}, static_cast<double>(lo), static_cast<double>(hi)};
        };
        auto s = [](std::string_view v) { return std::string(v); };
        auto yes_no = [&](std::string_view name) { nt(name, {{"No", {}}, {"Yes", {}}}); };

        nt(sym::start, {{"", {s(sym::outer), s(sym::inner)}}});
        nt(sym::outer, {{"", {s(sym::group), s(sym::mutation), s(sym::network), s(sym::capability)}}});
        integer(sym::group, r.group_min, r.group_max);
        nt(sym::mutation, {{"", {s(sym::mutate), s(sym::prob_mutate)}}});
        nt(sym::mutate, {{"None", {}}, {"Uniform", {}}, {"Gaussian", {}}});
        real(sym::prob_mutate, 0.0, r.prob_mutate_max);
        nt(sym::network, {{"Global", {}},
                          {"Focal", {}},
                          {"Ring", {}},
                          {"von Neumann", {}},
                          {"Clan", {}},
                          {"Cluster", {}},
                          {"Hierarchical", {}}});
        nt(sym::capability, {{"", {s(sym::baseline), s(sym::movement)}}});
        nt(sym::baseline, {{"Inertia", {s(sym::c1), s(sym::c2), s(sym::omega)}}, {"Constriction", {s(sym::c1), s(sym::c2)}}});
        real(sym::c1, 0.0, r.weight_max);
        real(sym::c2, 0.0, r.weight_max);
        real(sym::omega, 0.0, 1.0);
        nt(sym::movement, {{"rPSO", {}}, {"+DD", {s(sym::dd)}}, {"+LEH", {s(sym::leh)}}, {"+DD+LEH", {s(sym::dd), s(sym::leh)}}});
        nt(sym::dd, {{"", {s(sym::c3), s(sym::sigma), s(sym::sigma_limit), s(sym::min_step), s(sym::r3)}}});
        real(sym::c3, 0.0, r.weight_max);
        real(sym::sigma, 0.0, r.sigma_max);
        real(sym::sigma_limit, 0.0, 1.0); // fraction of sigma
        real(sym::min_step, 0.0, 1.0);    // fraction of gamma
        nt(sym::r3, {{"Random", {}}, {"Unity", {}}});
        nt(sym::leh, {{"LEH", {s(sym::leh_relocation), s(sym::dorm)}}, {"Random", {s(sym::dorm)}}});
        nt(sym::leh_relocation, {{"", {s(sym::lpop), s(sym::lmutp), s(sym::lmuta), s(sym::lelites), s(sym::ltour)}}});
        integer(sym::lpop, r.lpop_min, r.lpop_max);
        real(sym::lmutp, 0.0, 1.0);
        real(sym::lmuta, 0.0, r.lmut_scale_max);
        real(sym::lelites, 0.0, 1.0);
        real(sym::ltour, 0.0, 1.0);
        integer(sym::dorm, r.dorm_min, r.dorm_max);

        nt(sym::inner, {{"", {s(sym::in_ext), s(sym::form_inner), s(sym::ndorm), s(sym::npbest), s(sym::stopping)}}});
        real(sym::in_ext, 0.0, 1.0);
        nt(sym::form_inner, {{"Random", {}}, {"PSO", {s(sym::in_pso)}}, {"GA", {s(sym::in_ga)}}});
        nt(sym::in_pso, {{"", {s(sym::in_swarm), s(sym::in_c1), s(sym::in_c2), s(sym::in_omega)}}});
        real(sym::in_swarm, 0.0, 1.0);
        real(sym::in_c1, 0.0, r.weight_max);
        real(sym::in_c2, 0.0, r.weight_max);
        real(sym::in_omega, 0.0, 1.0);
        nt(sym::in_ga, {{"", {s(sym::in_pop), s(sym::in_mutp), s(sym::in_muta), s(sym::in_elites), s(sym::in_tour)}}});
        real(sym::in_pop, 0.0, 1.0);
        real(sym::in_mutp, 0.0, 1.0);
        real(sym::in_muta, 0.0, r.in_mut_scale_max);
        real(sym::in_elites, 0.0, 1.0);
        real(sym::in_tour, 0.0, 1.0);
        yes_no(sym::ndorm);
        yes_no(sym::npbest);
        yes_no(sym::stopping);

        // Constriction needs phi = C1 + C2 > 4 for a real chi.
        g.constraints_[std::string(sym::baseline)] = [](const Node& n) {
            return n.choice != 1 || n.children[0].value + n.children[1].value > 4.0;
        };
        return g;
    }

    const Rule& rule(std::string_view symbol) const
    {
        auto it = rules_.find(std::string(symbol));
        if (it == rules_.end()) {
            throw std::invalid_argument("grammar has no symbol " + std::string(symbol));
        }
        return it->second;
    }

    const std::map<std::string, Rule>& rules() const noexcept { return rules_; }

    /// Depth-first, leftmost random expansion of `symbol`: alternatives and
    /// leaf values are drawn uniformly.
    Node expand(std::string_view symbol, Rng& rng) const
    {
        const auto& r = rule(symbol);
        auto constraint = constraints_.find(r.symbol);
        for (;;) {
            Node node{r.symbol, 0, 0.0, {}};
            switch (r.kind) {
            case SymbolKind::IntLeaf:
                node.value = static_cast<double>(rng.integer(static_cast<long>(r.lo), static_cast<long>(r.hi)));
                break;
            case SymbolKind::RealLeaf:
                node.value = rng.uniform(r.lo, r.hi);
                break;
            case SymbolKind::NonTerminal:
                node.choice = rng.index(r.productions.size());
                for (const auto& child : r.productions[node.choice].children) {
                    node.children.push_back(expand(child, rng));
                }
                break;
            }
            if (constraint == constraints_.end() || constraint->second(node)) {
                return node;
            }
        }
    }

    bool conforms(const Node& node) const
    {
        auto it = rules_.find(node.symbol);
        if (it == rules_.end()) {
            return false;
        }
        const auto& r = it->second;
        if (r.kind != SymbolKind::NonTerminal) {
            if (!node.children.empty() || !(node.value >= r.lo && node.value <= r.hi)) {
                return false;
            }
            return r.kind != SymbolKind::IntLeaf || node.value == std::round(node.value);
        }
        if (node.choice >= r.productions.size()) {
            return false;
        }
        const auto& prod = r.productions[node.choice];
        if (prod.children.size() != node.children.size()) {
            return false;
        }
        for (std::size_t k = 0; k < prod.children.size(); ++k) {
            if (node.children[k].symbol != prod.children[k] || !conforms(node.children[k])) {
                return false;
            }
        }
        auto constraint = constraints_.find(r.symbol);
        return constraint == constraints_.end() || constraint->second(node);
    }

    std::size_t choice_index(std::string_view symbol, std::string_view label) const
    {
        const auto& prods = rule(symbol).productions;
        for (std::size_t k = 0; k < prods.size(); ++k) {
            if (prods[k].label == label) {
                return k;
            }
        }
        throw std::invalid_argument("symbol " + std::string(symbol) + " has no alternative '" + std::string(label) + "'");
    }

    const std::string& label(const Node& node) const { return rule(node.symbol).productions.at(node.choice).label; }

private:
    std::map<std::string, Rule> rules_;
    std::map<std::string, std::function<bool(const Node&)>> constraints_;
};

inline const Grammar& default_grammar()
{
    static const Grammar g = Grammar::standard();
    return g;
}

// ---------------------------------------------------------------------------
// Tree access and operators

inline const Node* find_node(const Node& root, std::string_view symbol)
{
    if (root.symbol == symbol) {
        return &root;
    }
    for (const auto& c : root.children) {
        if (const auto* hit = find_node(c, symbol)) {
            return hit;
        }
    }
    return nullptr;
}

inline Node* find_node(Node& root, std::string_view symbol)
{
    return const_cast<Node*>(find_node(static_cast<const Node&>(root), symbol));
}

inline Node random_genome(const Grammar& grammar, Rng& rng) { return grammar.expand(sym::start, rng); }

/// Child takes parent2 above the cut and parent1's subtree below it.
inline Node crossover_at(const Node& parent1, const Node& parent2, std::string_view cut)
{
    Node child = parent2;
    Node* slot = find_node(child, cut);
    const Node* donor = find_node(parent1, cut);
    if (slot == nullptr || donor == nullptr) {
        throw std::invalid_argument("cut point " + std::string(cut) + " missing from a parent");
    }
    *slot = *donor;
    return child;
}

inline Node crossover(const Node& parent1, const Node& parent2, Rng& rng)
{
    return crossover_at(parent1, parent2, cut_points[rng.index(cut_points.size())]);
}

inline Node mutate_genome_at(const Node& tree, std::string_view cut, const Grammar& grammar, Rng& rng)
{
    Node out = tree;
    Node* slot = find_node(out, cut);
    if (slot == nullptr) {
        throw std::invalid_argument("cut point " + std::string(cut) + " missing from tree");
    }
    *slot = grammar.expand(cut, rng);
    return out;
}

/// With probability p, regrows the subtree below one uniformly chosen cut.
inline Node mutate_genome(const Node& tree, double probability, const Grammar& grammar, Rng& rng)
{
    if (!rng.bernoulli(probability)) {
        return tree;
    }
    return mutate_genome_at(tree, cut_points[rng.index(cut_points.size())], grammar, rng);
}

// ---------------------------------------------------------------------------
// Decoding

/// extent = max(2, round(frac * budget / (20 * group)))
inline std::size_t inner_extent(double frac, std::size_t budget, std::size_t group)
{
    const double raw = frac * static_cast<double>(budget) / (20.0 * static_cast<double>(group));
    return std::max<std::size_t>(2, static_cast<std::size_t>(std::lround(raw)));
}

namespace detail {

inline double leaf(const Node& parent, std::string_view symbol)
{
    const Node* n = find_node(parent, symbol);
    if (n == nullptr) {
        throw std::logic_error("malformed genome: missing " + std::string(symbol));
    }
    return n->value;
}

inline const Node& child(const Node& parent, std::string_view symbol)
{
    const Node* n = find_node(parent, symbol);
    if (n == nullptr) {
        throw std::logic_error("malformed genome: missing " + std::string(symbol));
    }
    return *n;
}

inline std::size_t scaled_count(double frac, std::size_t whole) { return static_cast<std::size_t>(std::lround(frac * static_cast<double>(whole))); }

} // namespace detail

/// Reads the heuristic off the tree's leaves. `budget` sets the inner extent.
inline HeuristicConfig decode(const Node& tree, std::size_t budget = 2000)
{
    using detail::child;
    using detail::leaf;
    using detail::scaled_count;
    if (tree.symbol != sym::start) {
        throw std::logic_error("malformed genome: root is not <Start>");
    }
    HeuristicConfig cfg;
    cfg.group_size = static_cast<std::size_t>(leaf(tree, sym::group));

    const auto& mutation = child(tree, sym::mutation);
    cfg.mutation.kind = static_cast<MutationKind>(child(mutation, sym::mutate).choice);
    cfg.mutation.prob_mutate = leaf(mutation, sym::prob_mutate);

    cfg.topology.kind = static_cast<TopologyKind>(child(tree, sym::network).choice);

    const auto& baseline = child(tree, sym::baseline);
    cfg.velocity.baseline = baseline.choice == 0 ? Baseline::Inertia : Baseline::Constriction;
    cfg.velocity.c1 = leaf(baseline, sym::c1);
    cfg.velocity.c2 = leaf(baseline, sym::c2);
    cfg.velocity.omega = baseline.choice == 0 ? leaf(baseline, sym::omega) : 1.0;

    const auto& movement = child(tree, sym::movement);
    if (const Node* dd = find_node(movement, sym::dd)) {
        DdConfig d;
        d.c3 = leaf(*dd, sym::c3);
        d.sigma = leaf(*dd, sym::sigma);
        d.sigma_limit = leaf(*dd, sym::sigma_limit) * d.sigma;
        d.min_step = leaf(*dd, sym::min_step);
        d.r3_mode = child(*dd, sym::r3).choice == 0 ? R3Mode::Random : R3Mode::Unity;
        cfg.dd = d;
    }
    if (const Node* leh = find_node(movement, sym::leh)) {
        LehConfig l;
        l.dorm_threshold = static_cast<std::size_t>(leaf(*leh, sym::dorm));
        if (const Node* rel = find_node(*leh, sym::leh_relocation)) {
            l.relocation = Relocation::LehCenter;
            l.pop = static_cast<std::size_t>(leaf(*rel, sym::lpop));
            l.mut_prob = leaf(*rel, sym::lmutp);
            l.mut_scale = leaf(*rel, sym::lmuta);
            l.elites = std::min(l.pop - 1, static_cast<std::size_t>(std::floor(leaf(*rel, sym::lelites) * static_cast<double>(l.pop))));
            l.tournament = std::clamp<std::size_t>(scaled_count(leaf(*rel, sym::ltour), l.pop), 1, l.pop);
        } else {
            l.relocation = Relocation::Random;
        }
        cfg.leh = l;
    }

    const auto& inner = child(tree, sym::inner);
    cfg.inner.extent = inner_extent(leaf(inner, sym::in_ext), budget, cfg.group_size);
    const auto& form = child(inner, sym::form_inner);
    cfg.inner.form = static_cast<InnerForm>(form.choice);
    if (const Node* pso = find_node(form, sym::in_pso)) {
        cfg.inner.pso.swarm = std::clamp<std::size_t>(scaled_count(leaf(*pso, sym::in_swarm), cfg.inner.extent), 2, cfg.inner.extent);
        cfg.inner.pso.c1 = leaf(*pso, sym::in_c1);
        cfg.inner.pso.c2 = leaf(*pso, sym::in_c2);
        cfg.inner.pso.omega = leaf(*pso, sym::in_omega);
    }
    if (const Node* ga = find_node(form, sym::in_ga)) {
        auto& p = cfg.inner.ga;
        p.pop = std::clamp<std::size_t>(scaled_count(leaf(*ga, sym::in_pop), cfg.inner.extent), 2, cfg.inner.extent);
        p.mut_prob = leaf(*ga, sym::in_mutp);
        p.mut_scale = leaf(*ga, sym::in_muta);
        p.elites = std::min(p.pop - 1, static_cast<std::size_t>(std::floor(leaf(*ga, sym::in_elites) * static_cast<double>(p.pop))));
        p.tournament = std::clamp<std::size_t>(scaled_count(leaf(*ga, sym::in_tour), p.pop), 1, p.pop);
    }
    cfg.inner.use_history_for_dormancy = child(inner, sym::ndorm).choice == 1;
    cfg.inner.use_history_for_pbest = child(inner, sym::npbest).choice == 1;
    cfg.inner.use_stopping = child(inner, sym::stopping).choice == 1;
    return cfg;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json genome_to_json(const Node& node, const Grammar& grammar = default_grammar())
{
    nlohmann::json j;
    j["symbol"] = node.symbol;
    const auto& r = grammar.rule(node.symbol);
    if (r.kind == SymbolKind::NonTerminal) {
        if (r.productions.size() > 1) {
            j["production"] = r.productions.at(node.choice).label;
        }
        j["children"] = nlohmann::json::array();
        for (const auto& c : node.children) {
            j["children"].push_back(genome_to_json(c, grammar));
        }
    } else {
        j["value"] = node.value;
    }
    return j;
}

inline Node genome_from_json(const nlohmann::json& j, const Grammar& grammar = default_grammar())
{
    Node node;
    node.symbol = j.at("symbol").get<std::string>();
    const auto& r = grammar.rule(node.symbol);
    if (r.kind == SymbolKind::NonTerminal) {
        node.choice = r.productions.size() > 1 ? grammar.choice_index(node.symbol, j.at("production").get<std::string>()) : 0;
        for (const auto& c : j.at("children")) {
            node.children.push_back(genome_from_json(c, grammar));
        }
    } else {
        node.value = j.at("value").get<double>();
    }
    return node;
}

/// Stable identity of a genome: FNV-1a over its canonical serialization.
inline std::uint64_t genome_hash(const Node& node)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](std::string_view s) {
        for (unsigned char ch : s) {
            h ^= ch;
            h *= 0x100000001b3ULL;
        }
    };
    std::function<void(const Node&)> walk = [&](const Node& n) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "|%zu|%.17g(", n.choice, n.value);
        feed(n.symbol);
        feed(buf);
        for (const auto& c : n.children) {
            walk(c);
        }
        feed(")");
    };
    walk(node);
    return h;
}

// ---------------------------------------------------------------------------
// Fitness and evolution

struct GpConfig {
    std::size_t population_size = 40;
    std::size_t generations = 25;
    std::size_t tournament_size = 3;
    std::size_t elites = 2;
    double crossover_rate = 1.0;
    double mutation_probability = 0.2;
    std::size_t fitness_replicates = 20;
    std::size_t heuristic_budget = 2000;

    void validate() const
    {
        if (population_size == 0) {
            throw std::invalid_argument("gp: population must be non-empty");
        }
        if (elites > population_size) {
            throw std::invalid_argument("gp: more elites than population");
        }
        if (tournament_size == 0) {
            throw std::invalid_argument("gp: tournament size must be positive");
        }
        if (fitness_replicates == 0) {
            throw std::invalid_argument("gp: at least one fitness replicate required");
        }
    }
};

struct FitnessRecord {
    std::vector<double> problem_means;
    double fitness = std::numeric_limits<double>::infinity(); // lower is better
};

/// Seed of replicate r of a genome on problem k; depends on genome identity,
/// not on generation or population slot.
inline std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t genome_id, std::size_t problem, std::size_t replicate)
{
    return derive_seed(master, {genome_id, problem, replicate});
}

/// Mean final robust estimate of the decoded heuristic over
/// gp.fitness_replicates seeded runs on each problem.
inline std::vector<double> replicate_means(const Node& tree, std::span<const ProblemInstance> problems, const GpConfig& gp,
                                           std::uint64_t master_seed, const Executor& executor)
{
    const auto cfg = decode(tree, gp.heuristic_budget);
    const auto id = genome_hash(tree);
    const std::size_t reps = gp.fitness_replicates;
    std::vector<double> values(problems.size() * reps);
    executor.for_each_index(values.size(), [&](std::size_t i) {
        const std::size_t k = i / reps;
        const std::size_t r = i % reps;
        values[i] = run_heuristic(cfg, problems[k], gp.heuristic_budget, replicate_seed(master_seed, id, k, r)).best_value;
    });
    std::vector<double> means(problems.size());
    for (std::size_t k = 0; k < problems.size(); ++k) {
        means[k] = std::accumulate(values.begin() + static_cast<std::ptrdiff_t>(k * reps),
                                   values.begin() + static_cast<std::ptrdiff_t>((k + 1) * reps), 0.0) /
                   static_cast<double>(reps);
    }
    return means;
}

inline FitnessRecord fitness_single(const Node& tree, const ProblemInstance& problem, const GpConfig& gp,
                                    std::uint64_t master_seed, const Executor& executor)
{
    FitnessRecord rec;
    rec.problem_means = replicate_means(tree, std::span(&problem, 1), gp, master_seed, executor);
    rec.fitness = rec.problem_means.front();
    return rec;
}

/// Average ranks (1 = best) of `values` restricted to `alive`; ties share
/// the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> values, std::span<const std::size_t> alive)
{
    std::vector<std::size_t> order(alive.begin(), alive.end());
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size(), 0.0);
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    return ranks;
}

/// Multi-problem ordering, best first. scores[h][k] is heuristic h's mean on
/// problem k (lower is better). Repeatedly removes the heuristic with the
/// worst average per-problem rank among those remaining; ties go to the
/// larger mean score, then the larger index.
inline std::vector<std::size_t> elimination_ranking(const std::vector<std::vector<double>>& scores)
{
    const std::size_t h = scores.size();
    if (h == 0) {
        return {};
    }
    const std::size_t m = scores.front().size();
    std::vector<double> overall(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        if (scores[i].size() != m) {
            throw std::invalid_argument("elimination_ranking: ragged score matrix");
        }
        overall[i] = m == 0 ? 0.0 : std::accumulate(scores[i].begin(), scores[i].end(), 0.0) / static_cast<double>(m);
    }
    std::vector<std::size_t> alive(h);
    std::iota(alive.begin(), alive.end(), std::size_t{0});
    std::vector<std::size_t> worst_first;
    std::vector<double> column(h);
    while (!alive.empty()) {
        std::vector<double> combined(h, 0.0);
        for (std::size_t k = 0; k < m; ++k) {
            for (std::size_t i = 0; i < h; ++i) {
                column[i] = scores[i][k];
            }
            const auto ranks = average_ranks(column, alive);
            for (auto i : alive) {
                combined[i] += ranks[i];
            }
        }
        std::size_t worst = alive.front();
        for (auto i : alive) {
            const bool worse = combined[i] > combined[worst] ||
                               (combined[i] == combined[worst] &&
                                (overall[i] > overall[worst] || (overall[i] == overall[worst] && i > worst)));
            if (worse) {
                worst = i;
            }
        }
        worst_first.push_back(worst);
        alive.erase(std::find(alive.begin(), alive.end(), worst));
    }
    return {worst_first.rbegin(), worst_first.rend()};
}

struct ArchiveEntry {
    std::size_t generation = 0;
    std::size_t index = 0;
    Node genome;
    FitnessRecord fitness;
};

struct GpRunRecord {
    std::vector<ArchiveEntry> archive;
    Node best;
    FitnessRecord best_fitness;
    std::vector<double> best_fitness_per_generation;
    std::size_t heuristic_budget = 0;
    std::vector<std::string> problems;
};

/// Grammar-guided GP over heuristics. A single problem uses the replicate
/// mean as fitness; several problems use the elimination rank (0 = best)
/// within the generation.
inline GpRunRecord evolve(const GpConfig& gp, std::span<const ProblemInstance> problems, std::uint64_t master_seed,
                          const Executor& executor, const Grammar& grammar = default_grammar())
{
    gp.validate();
    if (problems.empty()) {
        throw std::invalid_argument("evolve: no problems given");
    }
    Rng rng(derive_seed(master_seed, {0x6770}));
    GpRunRecord record;
    record.heuristic_budget = gp.heuristic_budget;
    for (const auto& p : problems) {
        record.problems.push_back(p.name);
    }

    std::vector<Node> population;
    for (std::size_t i = 0; i < gp.population_size; ++i) {
        population.push_back(random_genome(grammar, rng));
    }

    std::unordered_map<std::uint64_t, std::vector<double>> cache;
    const Executor serial(1);

    for (std::size_t gen = 0;; ++gen) {
        // Evaluate unseen genomes; parallel across genomes and replicates.
        std::vector<std::uint64_t> ids(population.size());
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < population.size(); ++i) {
            ids[i] = genome_hash(population[i]);
            if (!cache.contains(ids[i]) &&
                std::none_of(pending.begin(), pending.end(), [&](auto k) { return ids[k] == ids[i]; })) {
                pending.push_back(i);
            }
        }
        std::vector<std::vector<double>> fresh(pending.size());
        executor.for_each_index(pending.size(), [&](std::size_t k) {
            fresh[k] = replicate_means(population[pending[k]], problems, gp, master_seed, serial);
        });
        for (std::size_t k = 0; k < pending.size(); ++k) {
            cache[ids[pending[k]]] = std::move(fresh[k]);
        }

        std::vector<FitnessRecord> fit(population.size());
        for (std::size_t i = 0; i < population.size(); ++i) {
            fit[i].problem_means = cache.at(ids[i]);
        }
        if (problems.size() == 1) {
            for (auto& f : fit) {
                f.fitness = f.problem_means.front();
            }
        } else {
            std::vector<std::vector<double>> scores;
            for (const auto& f : fit) {
                scores.push_back(f.problem_means);
            }
            const auto order = elimination_ranking(scores);
            for (std::size_t pos = 0; pos < order.size(); ++pos) {
                fit[order[pos]].fitness = static_cast<double>(pos);
            }
        }

        for (std::size_t i = 0; i < population.size(); ++i) {
            record.archive.push_back({gen, i, population[i], fit[i]});
        }
        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fit[a].fitness < fit[b].fitness; });
        record.best_fitness_per_generation.push_back(fit[order.front()].fitness);
        record.best = population[order.front()];
        record.best_fitness = fit[order.front()];

        if (gen == gp.generations) {
            break;
        }

        auto tournament = [&]() -> const Node& {
            std::size_t best = rng.index(population.size());
            for (std::size_t k = 1; k < gp.tournament_size; ++k) {
                const auto c = rng.index(population.size());
                if (fit[c].fitness < fit[best].fitness) {
                    best = c;
                }
            }
            return population[best];
        };

        std::vector<Node> next;
        for (std::size_t k = 0; k < gp.elites; ++k) {
            next.push_back(population[order[k]]);
        }
        while (next.size() < population.size()) {
            const Node& p1 = tournament();
            const Node& p2 = tournament();
            Node child = rng.bernoulli(gp.crossover_rate) ? crossover(p1, p2, rng) : p1;
            next.push_back(mutate_genome(child, gp.mutation_probability, grammar, rng));
        }
        population = std::move(next);
    }
    return record;
}

} // namespace rpso

#endif
