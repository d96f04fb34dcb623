#ifndef RPSO_HARNESS_HPP
#define RPSO_HARNESS_HPP

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gggp.hpp"
#include "parallel.hpp"
#include "problems.hpp"
#include "robust_eval.hpp"
#include "swarm.hpp"

namespace rpso {

inline constexpr const char* version = "0.1.0";

// ---------------------------------------------------------------------------
// Post-processing oracle

/// Worst nominal value over `samples` uniform draws from the gamma-ball
/// around x. Outside any ledger: costs no search budget.
inline double post_process_robust_value(std::span<const double> x, const ProblemInstance& p, std::size_t samples, Rng& rng)
{
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < samples; ++s) {
        worst = std::max(worst, p(sample_in_ball(x, p.gamma, rng)));
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Summary statistics

struct Summary {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Linear-interpolation quantile of sorted data (Hyndman-Fan type 7).
inline double quantile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty()) {
        throw std::invalid_argument("quantile of empty sample");
    }
    const double h = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline Summary summarize(std::vector<double> values)
{
    if (values.empty()) {
        return {};
    }
    std::sort(values.begin(), values.end());
    Summary s;
    s.count = values.size();
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    s.median = quantile_sorted(values, 0.5);
    s.q1 = quantile_sorted(values, 0.25);
    s.q3 = quantile_sorted(values, 0.75);
    s.min = values.front();
    s.max = values.back();
    return s;
}

// ---------------------------------------------------------------------------
// Wilcoxon rank-sum

struct RankSumTest {
    double statistic = 0.0; ///< rank sum of the first sample
    double z = 0.0;
    double p_value = 1.0; ///< two-sided
};

/// Normal approximation with tie and continuity corrections.
inline RankSumTest wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b)
{
    const std::size_t n1 = a.size();
    const std::size_t n2 = b.size();
    if (n1 == 0 || n2 == 0) {
        throw std::invalid_argument("wilcoxon_rank_sum: empty sample");
    }
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    std::vector<std::size_t> all(pooled.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto ranks = average_ranks(pooled, all);

    const double big_n = static_cast<double>(n1 + n2);
    double tie_term = 0.0;
    {
        auto sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t i = 0; i < sorted.size();) {
            std::size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) {
                ++j;
            }
            const auto t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
    }

    RankSumTest out;
    out.statistic = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(n1), 0.0);
    const double expected = static_cast<double>(n1) * (big_n + 1.0) / 2.0;
    const double variance = static_cast<double>(n1) * static_cast<double>(n2) / 12.0 *
                            ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if (!(variance > 0.0)) {
        return out;
    }
    const double dev = std::max(0.0, std::abs(out.statistic - expected) - 0.5);
    out.z = (out.statistic >= expected ? dev : -dev) / std::sqrt(variance);
    out.p_value = std::min(1.0, std::erfc(std::abs(out.z) / std::sqrt(2.0)));
    return out;
}

/// For each sample set: true when it has the lowest mean, or when a rank-sum
/// test against the lowest-mean set cannot reject equality at level alpha.
inline std::vector<bool> best_or_equivalent(const std::vector<std::vector<double>>& samples, double alpha = 0.05)
{
    std::vector<bool> out(samples.size(), false);
    if (samples.empty()) {
        return out;
    }
    std::size_t best = 0;
    std::vector<double> means;
    for (const auto& s : samples) {
        means.push_back(summarize(s).mean);
    }
    best = static_cast<std::size_t>(std::min_element(means.begin(), means.end()) - means.begin());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        out[i] = i == best || wilcoxon_rank_sum(samples[i], samples[best]).p_value >= alpha;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Champion evaluation

struct ProblemSamples {
    std::string problem;
    std::vector<RunResult> runs;

    std::vector<double> post_processed() const
    {
        std::vector<double> v;
        for (const auto& r : runs) {
            v.push_back(r.post_processed.value_or(r.best_value));
        }
        return v;
    }
};

struct EvaluationOptions {
    std::size_t runs = 200;
    std::size_t budget = 2000;
    std::size_t post_samples = 1'000'000;
};

/// Independent runs of one heuristic on each problem; every final point is
/// re-scored by the post-processing oracle.
inline std::vector<ProblemSamples> evaluate_champion(const HeuristicConfig& cfg, std::span<const ProblemInstance> problems,
                                                     const EvaluationOptions& opt, std::uint64_t seed,
                                                     const Executor& executor)
{
    std::vector<ProblemSamples> out(problems.size());
    std::vector<RunResult> flat(problems.size() * opt.runs);
    executor.for_each_index(flat.size(), [&](std::size_t i) {
        const std::size_t k = i / opt.runs;
        const std::size_t r = i % opt.runs;
        auto res = run_heuristic(cfg, problems[k], opt.budget, derive_seed(seed, {k, r, 0}));
        Rng post(derive_seed(seed, {k, r, 1}));
        res.post_processed = post_process_robust_value(res.best_point, problems[k], opt.post_samples, post);
        flat[i] = std::move(res);
    });
    for (std::size_t k = 0; k < problems.size(); ++k) {
        out[k].problem = problems[k].name;
        out[k].runs.assign(flat.begin() + static_cast<std::ptrdiff_t>(k * opt.runs),
                           flat.begin() + static_cast<std::ptrdiff_t>((k + 1) * opt.runs));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Component report

struct ComponentRow {
    std::string component;
    std::string category;
    std::string scope; ///< "all", "top_third" or "decile_01".."decile_10"
    std::size_t count = 0;
    std::size_t total = 0;

    double proportion() const { return total == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(total); }
};

struct ComponentDef {
    std::string name;
    std::vector<std::string> categories;
    std::function<std::string(const HeuristicConfig&)> classify;
};

namespace detail {

inline std::string size_bin(std::size_t v)
{
    if (v <= 10) {
        return "[2-10]";
    }
    if (v <= 20) {
        return "[11-20]";
    }
    if (v <= 30) {
        return "[21-30]";
    }
    if (v <= 40) {
        return "[31-40]";
    }
    return ">40";
}

} // namespace detail

inline const std::vector<ComponentDef>& component_definitions()
{
    static const std::vector<std::string> bins{"[2-10]", "[11-20]", "[21-30]", "[31-40]", ">40"};
    static const std::vector<ComponentDef> defs{
        {"Form of inner search",
         {"Random", "PSO", "GA"},
         [](const HeuristicConfig& c) {
             constexpr std::array<const char*, 3> names{"Random", "PSO", "GA"};
             return std::string(names[static_cast<std::size_t>(c.inner.form)]);
         }},
        {"Extent of inner search", bins, [](const HeuristicConfig& c) { return detail::size_bin(c.inner.extent); }},
        {"Form of baseline rPSO formula",
         {"Constriction", "Inertia"},
         [](const HeuristicConfig& c) {
             return std::string(c.velocity.baseline == Baseline::Inertia ? "Inertia" : "Constriction");
         }},
        {"Form of movement",
         {"rPSO", "+DD", "+LEH", "+DD+LEH"},
         [](const HeuristicConfig& c) {
             constexpr std::array<const char*, 4> names{"rPSO", "+DD", "+LEH", "+DD+LEH"};
             return std::string(names[static_cast<std::size_t>(c.movement())]);
         }},
        {"Form of network",
         {"Global", "Focal", "Ring (size=2)", "von Neumann", "Clan", "Cluster", "Hierarchy"},
         [](const HeuristicConfig& c) {
             constexpr std::array<const char*, 7> names{"Global", "Focal",   "Ring (size=2)", "von Neumann",
                                                        "Clan",   "Cluster", "Hierarchy"};
             return std::string(names[static_cast<std::size_t>(c.topology.kind)]);
         }},
        {"Group (swarm) size", bins, [](const HeuristicConfig& c) { return detail::size_bin(c.group_size); }},
        {"Inclusion of stopping condition",
         {"No", "Yes"},
         [](const HeuristicConfig& c) { return std::string(c.inner.use_stopping ? "Yes" : "No"); }},
        {"Use of existing info. for dormancy",
         {"No", "Yes", "Not applicable"},
         [](const HeuristicConfig& c) {
             if (!c.leh) {
                 return std::string("Not applicable");
             }
             return std::string(c.inner.use_history_for_dormancy ? "Yes" : "No");
         }},
        {"Use of existing info. for personal best",
         {"No", "Yes"},
         [](const HeuristicConfig& c) { return std::string(c.inner.use_history_for_pbest ? "Yes" : "No"); }},
        {"Form of mutation",
         {"None", "Random", "Gaussian"},
         [](const HeuristicConfig& c) {
             constexpr std::array<const char*, 3> names{"None", "Random", "Gaussian"};
             return std::string(names[static_cast<std::size_t>(c.mutation.kind)]);
         }},
        {"Form of relocation due to dormancy",
         {"LEH", "Random", "Not applicable"},
         [](const HeuristicConfig& c) {
             if (!c.leh) {
                 return std::string("Not applicable");
             }
             return std::string(c.leh->relocation == Relocation::LehCenter ? "LEH" : "Random");
         }},
        {"Form of r3 vector",
         {"Random", "Unity", "Not applicable"},
         [](const HeuristicConfig& c) {
             if (!c.dd) {
                 return std::string("Not applicable");
             }
             return std::string(c.dd->r3_mode == R3Mode::Random ? "Random" : "Unity");
         }},
    };
    return defs;
}

/// Component proportions over the whole archive, its best third, and each
/// fitness decile (archive sorted best to worst; empty deciles omitted).
inline std::vector<ComponentRow> component_report(const std::vector<ArchiveEntry>& archive, std::size_t budget)
{
    if (archive.empty()) {
        throw std::invalid_argument("component_report: empty archive");
    }
    std::vector<std::size_t> order(archive.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return archive[a].fitness.fitness < archive[b].fitness.fitness; });

    const auto& defs = component_definitions();
    std::vector<std::vector<std::string>> labels(archive.size());
    for (std::size_t i = 0; i < archive.size(); ++i) {
        const auto cfg = decode(archive[i].genome, budget);
        for (const auto& d : defs) {
            labels[i].push_back(d.classify(cfg));
        }
    }

    std::vector<ComponentRow> rows;
    auto emit = [&](const std::string& scope, std::size_t from, std::size_t to) {
        for (std::size_t c = 0; c < defs.size(); ++c) {
            for (const auto& cat : defs[c].categories) {
                ComponentRow row{defs[c].name, cat, scope, 0, to - from};
                for (std::size_t k = from; k < to; ++k) {
                    row.count += labels[order[k]][c] == cat ? 1 : 0;
                }
                rows.push_back(std::move(row));
            }
        }
    };
    const std::size_t n = archive.size();
    emit("all", 0, n);
    emit("top_third", 0, (n + 2) / 3);
    for (std::size_t d = 0; d < 10; ++d) {
        // position p of the sorted archive falls in decile floor(10 p / n)
        const std::size_t from = (d * n + 9) / 10;
        const std::size_t to = ((d + 1) * n + 9) / 10;
        if (to > from) {
            char scope[16];
            std::snprintf(scope, sizeof scope, "decile_%02zu", d + 1);
            emit(scope, from, to);
        }
    }
    return rows;
}

inline std::vector<ComponentRow> component_report(const GpRunRecord& record)
{
    return component_report(record.archive, record.heuristic_budget);
}

// ---------------------------------------------------------------------------
// JSON for configs and records

NLOHMANN_JSON_SERIALIZE_ENUM(Baseline, {{Baseline::Inertia, "Inertia"}, {Baseline::Constriction, "Constriction"}})
NLOHMANN_JSON_SERIALIZE_ENUM(TopologyKind, {{TopologyKind::Global, "Global"},
                                            {TopologyKind::Focal, "Focal"},
                                            {TopologyKind::Ring2, "Ring"},
                                            {TopologyKind::VonNeumann, "VonNeumann"},
                                            {TopologyKind::Clan, "Clan"},
                                            {TopologyKind::Cluster, "Cluster"},
                                            {TopologyKind::Hierarchical, "Hierarchical"}})
NLOHMANN_JSON_SERIALIZE_ENUM(MutationKind,
                             {{MutationKind::None, "None"}, {MutationKind::Uniform, "Uniform"}, {MutationKind::Gaussian, "Gaussian"}})
NLOHMANN_JSON_SERIALIZE_ENUM(InnerForm, {{InnerForm::RandomSampling, "Random"}, {InnerForm::InnerPSO, "PSO"}, {InnerForm::InnerGA, "GA"}})
NLOHMANN_JSON_SERIALIZE_ENUM(R3Mode, {{R3Mode::Random, "Random"}, {R3Mode::Unity, "Unity"}})
NLOHMANN_JSON_SERIALIZE_ENUM(Relocation, {{Relocation::LehCenter, "LEH"}, {Relocation::Random, "Random"}})

namespace detail {

template <typename E>
E enum_from(const nlohmann::json& j, const char* key, E fallback)
{
    if (!j.contains(key)) {
        return fallback;
    }
    // nlohmann maps unknown strings to the first enumerator; reject instead.
    const auto text = j.at(key).get<std::string>();
    const E value = j.at(key).get<E>();
    if (nlohmann::json(value).get<std::string>() != text) {
        throw std::invalid_argument(std::string("unknown value '") + text + "' for " + key);
    }
    return value;
}

} // namespace detail

inline nlohmann::json to_json(const HeuristicConfig& c)
{
    nlohmann::json j;
    j["group_size"] = c.group_size;
    j["velocity"] = {{"baseline", c.velocity.baseline}, {"c1", c.velocity.c1}, {"c2", c.velocity.c2}, {"omega", c.velocity.omega}};
    j["topology"] = c.topology.kind;
    j["mutation"] = {{"kind", c.mutation.kind}, {"prob_mutate", c.mutation.prob_mutate}};
    j["dd"] = nullptr;
    if (c.dd) {
        j["dd"] = {{"c3", c.dd->c3},           {"sigma", c.dd->sigma},     {"sigma_limit", c.dd->sigma_limit},
                   {"min_step", c.dd->min_step}, {"r3", c.dd->r3_mode},      {"epsilon", c.dd->epsilon}};
    }
    j["leh"] = nullptr;
    if (c.leh) {
        j["leh"] = {{"relocation", c.leh->relocation}, {"dorm_threshold", c.leh->dorm_threshold},
                    {"pop", c.leh->pop},               {"mut_prob", c.leh->mut_prob},
                    {"mut_scale", c.leh->mut_scale},   {"elites", c.leh->elites},
                    {"tournament", c.leh->tournament}, {"generations", c.leh->generations}};
    }
    j["inner"] = {{"form", c.inner.form},
                  {"extent", c.inner.extent},
                  {"stopping", c.inner.use_stopping},
                  {"history_dormancy", c.inner.use_history_for_dormancy},
                  {"history_pbest", c.inner.use_history_for_pbest},
                  {"pso", {{"swarm", c.inner.pso.swarm}, {"c1", c.inner.pso.c1}, {"c2", c.inner.pso.c2}, {"omega", c.inner.pso.omega}}},
                  {"ga",
                   {{"pop", c.inner.ga.pop},
                    {"mut_prob", c.inner.ga.mut_prob},
                    {"mut_scale", c.inner.ga.mut_scale},
                    {"elites", c.inner.ga.elites},
                    {"tournament", c.inner.ga.tournament}}}};
    return j;
}

/// Parses a heuristic config; absent keys keep their defaults. Throws on
/// unknown enumerators or an invalid result.
inline HeuristicConfig heuristic_from_json(const nlohmann::json& j)
{
    using detail::enum_from;
    HeuristicConfig c;
    c.group_size = j.value("group_size", c.group_size);
    if (j.contains("velocity")) {
        const auto& v = j["velocity"];
        c.velocity.baseline = enum_from(v, "baseline", c.velocity.baseline);
        c.velocity.c1 = v.value("c1", c.velocity.c1);
        c.velocity.c2 = v.value("c2", c.velocity.c2);
        c.velocity.omega = v.value("omega", c.velocity.omega);
    }
    c.topology.kind = enum_from(j, "topology", c.topology.kind);
    if (j.contains("mutation")) {
        const auto& m = j["mutation"];
        c.mutation.kind = enum_from(m, "kind", c.mutation.kind);
        c.mutation.prob_mutate = m.value("prob_mutate", c.mutation.prob_mutate);
    }
    if (j.contains("dd") && !j["dd"].is_null()) {
        const auto& d = j["dd"];
        DdConfig dd;
        dd.c3 = d.value("c3", dd.c3);
        dd.sigma = d.value("sigma", dd.sigma);
        dd.sigma_limit = d.value("sigma_limit", dd.sigma_limit);
        dd.min_step = d.value("min_step", dd.min_step);
        dd.r3_mode = enum_from(d, "r3", dd.r3_mode);
        dd.epsilon = d.value("epsilon", dd.epsilon);
        c.dd = dd;
    }
    if (j.contains("leh") && !j["leh"].is_null()) {
        const auto& l = j["leh"];
        LehConfig leh;
        leh.relocation = enum_from(l, "relocation", leh.relocation);
        leh.dorm_threshold = l.value("dorm_threshold", leh.dorm_threshold);
        leh.pop = l.value("pop", leh.pop);
        leh.mut_prob = l.value("mut_prob", leh.mut_prob);
        leh.mut_scale = l.value("mut_scale", leh.mut_scale);
        leh.elites = l.value("elites", leh.elites);
        leh.tournament = l.value("tournament", leh.tournament);
        leh.generations = l.value("generations", leh.generations);
        c.leh = leh;
    }
    if (j.contains("inner")) {
        const auto& in = j["inner"];
        c.inner.form = enum_from(in, "form", c.inner.form);
        c.inner.extent = in.value("extent", c.inner.extent);
        c.inner.use_stopping = in.value("stopping", c.inner.use_stopping);
        c.inner.use_history_for_dormancy = in.value("history_dormancy", c.inner.use_history_for_dormancy);
        c.inner.use_history_for_pbest = in.value("history_pbest", c.inner.use_history_for_pbest);
        if (in.contains("pso")) {
            const auto& p = in["pso"];
            c.inner.pso.swarm = p.value("swarm", c.inner.pso.swarm);
            c.inner.pso.c1 = p.value("c1", c.inner.pso.c1);
            c.inner.pso.c2 = p.value("c2", c.inner.pso.c2);
            c.inner.pso.omega = p.value("omega", c.inner.pso.omega);
        }
        if (in.contains("ga")) {
            const auto& g = in["ga"];
            c.inner.ga.pop = g.value("pop", c.inner.ga.pop);
            c.inner.ga.mut_prob = g.value("mut_prob", c.inner.ga.mut_prob);
            c.inner.ga.mut_scale = g.value("mut_scale", c.inner.ga.mut_scale);
            c.inner.ga.elites = g.value("elites", c.inner.ga.elites);
            c.inner.ga.tournament = g.value("tournament", c.inner.ga.tournament);
        }
    }
    c.validate();
    return c;
}

inline nlohmann::json to_json(const GpConfig& g)
{
    return {{"population_size", g.population_size},
            {"generations", g.generations},
            {"tournament_size", g.tournament_size},
            {"elites", g.elites},
            {"crossover_rate", g.crossover_rate},
            {"mutation_probability", g.mutation_probability},
            {"fitness_replicates", g.fitness_replicates},
            {"heuristic_budget", g.heuristic_budget}};
}

inline GpConfig gp_from_json(const nlohmann::json& j)
{
    GpConfig g;
    g.population_size = j.value("population_size", g.population_size);
    g.generations = j.value("generations", g.generations);
    g.tournament_size = j.value("tournament_size", g.tournament_size);
    g.elites = j.value("elites", g.elites);
    g.crossover_rate = j.value("crossover_rate", g.crossover_rate);
    g.mutation_probability = j.value("mutation_probability", g.mutation_probability);
    g.fitness_replicates = j.value("fitness_replicates", g.fitness_replicates);
    g.heuristic_budget = j.value("heuristic_budget", g.heuristic_budget);
    g.validate();
    return g;
}

inline nlohmann::json to_json(const GpRunRecord& r)
{
    nlohmann::json j;
    j["heuristic_budget"] = r.heuristic_budget;
    j["problems"] = r.problems;
    j["best"] = genome_to_json(r.best);
    j["best_fitness"] = r.best_fitness.fitness;
    j["best_fitness_per_generation"] = r.best_fitness_per_generation;
    j["archive"] = nlohmann::json::array();
    for (const auto& e : r.archive) {
        j["archive"].push_back({{"generation", e.generation},
                                {"index", e.index},
                                {"fitness", e.fitness.fitness},
                                {"problem_means", e.fitness.problem_means},
                                {"genome", genome_to_json(e.genome)}});
    }
    return j;
}

inline GpRunRecord gp_record_from_json(const nlohmann::json& j)
{
    GpRunRecord r;
    r.heuristic_budget = j.at("heuristic_budget").get<std::size_t>();
    r.problems = j.value("problems", std::vector<std::string>{});
    r.best = genome_from_json(j.at("best"));
    r.best_fitness.fitness = j.value("best_fitness", 0.0);
    r.best_fitness_per_generation = j.value("best_fitness_per_generation", std::vector<double>{});
    for (const auto& e : j.at("archive")) {
        ArchiveEntry a;
        a.generation = e.at("generation").get<std::size_t>();
        a.index = e.at("index").get<std::size_t>();
        a.fitness.fitness = e.at("fitness").get<double>();
        a.fitness.problem_means = e.value("problem_means", std::vector<double>{});
        a.genome = genome_from_json(e.at("genome"));
        r.archive.push_back(std::move(a));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct ExperimentConfig {
    std::string mode = "gp-individual";
    std::vector<std::string> problems{"sphere"}; ///< names, aliases, or "all"
    std::size_t dimension = 2;
    std::size_t budget = 2000;
    GpConfig gp;
    std::uint64_t seed = 1;
    std::size_t runs = 200;
    std::size_t post_samples = 1'000'000;
    std::size_t threads = 0;
    std::string output = "runs/experiment";

    std::vector<ProblemInstance> resolve_problems() const
    {
        if (problems.size() == 1 && problems.front() == "all") {
            return canonical_suite(dimension);
        }
        std::vector<ProblemInstance> out;
        for (const auto& name : problems) {
            out.push_back(make_problem(name, dimension));
        }
        return out;
    }

    void validate() const
    {
        static const std::array<std::string_view, 5> modes{"gp-individual", "gp-general", "run-heuristic",
                                                           "evaluate-champion", "component-report"};
        if (std::find(modes.begin(), modes.end(), mode) == modes.end()) {
            throw std::invalid_argument("unknown mode '" + mode + "'");
        }
        if (problems.empty()) {
            throw std::invalid_argument("no problems selected");
        }
        if (dimension == 0) {
            throw std::invalid_argument("dimension must be positive");
        }
        if (budget == 0) {
            throw std::invalid_argument("budget must be positive");
        }
        if (runs == 0) {
            throw std::invalid_argument("runs must be positive");
        }
        if (mode == "gp-individual" && resolve_problems().size() != 1) {
            throw std::invalid_argument("gp-individual needs exactly one problem");
        }
        resolve_problems();
        gp.validate();
        if (gp.heuristic_budget != budget) {
            throw std::invalid_argument("gp heuristic budget differs from experiment budget");
        }
    }
};

inline nlohmann::json to_json(const ExperimentConfig& e)
{
    return {{"mode", e.mode},       {"problems", e.problems}, {"dimension", e.dimension},
            {"budget", e.budget},   {"gp", to_json(e.gp)},    {"seed", e.seed},
            {"runs", e.runs},       {"post_samples", e.post_samples},
            {"threads", e.threads}, {"output", e.output}};
}

inline ExperimentConfig experiment_from_json(const nlohmann::json& j)
{
    if (!j.is_object()) {
        throw std::invalid_argument("experiment config must be a JSON object");
    }
    ExperimentConfig e;
    e.mode = j.value("mode", e.mode);
    if (j.contains("problems")) {
        e.problems = j["problems"].is_string() ? std::vector<std::string>{j["problems"].get<std::string>()}
                                                : j["problems"].get<std::vector<std::string>>();
    }
    e.dimension = j.value("dimension", e.dimension);
    e.budget = j.value("budget", e.budget);
    if (j.contains("gp")) {
        e.gp = gp_from_json(j["gp"]);
    }
    e.gp.heuristic_budget = e.budget;
    e.seed = j.value("seed", e.seed);
    e.runs = j.value("runs", e.runs);
    e.post_samples = j.value("post_samples", e.post_samples);
    e.threads = j.value("threads", e.threads);
    e.output = j.value("output", e.output);
    e.validate();
    return e;
}

// ---------------------------------------------------------------------------
// Files

/// Writes to a sibling temporary and renames, so readers never observe a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        out << content;
        if (!out.flush()) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

inline nlohmann::json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read " + path.string());
    }
    return nlohmann::json::parse(in);
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// Comment block prepended to every CSV: artifact version, seed and the
/// resolved configuration that produced the rows.
inline std::string csv_provenance(const nlohmann::json& config, std::uint64_t seed)
{
    std::ostringstream os;
    os << "# rpso " << version << "\n# seed: " << seed << "\n# config: " << config.dump() << "\n";
    return os.str();
}

inline std::string samples_csv(const std::vector<ProblemSamples>& sets)
{
    std::ostringstream os;
    os << "problem,run,seed,search_estimate,post_processed,evaluations\n";
    for (const auto& s : sets) {
        for (std::size_t r = 0; r < s.runs.size(); ++r) {
            const auto& run = s.runs[r];
            os << '"' << s.problem << "\"," << r << ',' << run.seed << ',' << format_double(run.best_value) << ','
               << format_double(run.post_processed.value_or(run.best_value)) << ',' << run.evaluations << '\n';
        }
    }
    return os.str();
}

inline std::string summary_csv(const std::vector<ProblemSamples>& sets)
{
    std::ostringstream os;
    os << "problem,runs,mean,median,q1,q3,min,max\n";
    for (const auto& s : sets) {
        const auto sm = summarize(s.post_processed());
        os << '"' << s.problem << "\"," << sm.count << ',' << format_double(sm.mean) << ',' << format_double(sm.median)
           << ',' << format_double(sm.q1) << ',' << format_double(sm.q3) << ',' << format_double(sm.min) << ','
           << format_double(sm.max) << '\n';
    }
    return os.str();
}

inline std::string component_csv(const std::vector<ComponentRow>& rows)
{
    std::ostringstream os;
    os << "component,category,scope,count,total,proportion\n";
    for (const auto& r : rows) {
        os << '"' << r.component << "\",\"" << r.category << "\"," << r.scope << ',' << r.count << ',' << r.total << ','
           << format_double(r.proportion()) << '\n';
    }
    return os.str();
}

} // namespace rpso

#endif
