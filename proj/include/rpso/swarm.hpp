#ifndef RPSO_SWARM_HPP
#define RPSO_SWARM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dd.hpp"
#include "leh.hpp"
#include "particle.hpp"
#include "robust_eval.hpp"

namespace rpso {

// ---------------------------------------------------------------------------
// Configuration

enum class Baseline { Inertia, Constriction };

/// chi = 2 / |2 - phi - sqrt(phi^2 - 4 phi)|, defined for phi > 4.
inline double constriction_coefficient(double phi)
{
    if (!(phi > 4.0)) {
        throw std::invalid_argument("constriction requires c1 + c2 > 4");
    }
    return 2.0 / std::abs(2.0 - phi - std::sqrt(phi * phi - 4.0 * phi));
}

struct VelocityConfig {
    Baseline baseline = Baseline::Inertia;
    double c1 = 1.5;
    double c2 = 1.5;
    double omega = 0.7; // Inertia only

    double chi() const { return constriction_coefficient(c1 + c2); }

    void validate() const
    {
        if (c1 < 0.0 || c2 < 0.0) {
            throw std::invalid_argument("velocity weights must be non-negative");
        }
        if (baseline == Baseline::Constriction) {
            (void)chi();
        }
    }
};

enum class TopologyKind { Global, Focal, Ring2, VonNeumann, Clan, Cluster, Hierarchical };

struct TopologyConfig {
    TopologyKind kind = TopologyKind::Global;
};

enum class MutationKind { None, Uniform, Gaussian };

struct MutationConfig {
    MutationKind kind = MutationKind::None;
    double prob_mutate = 0.0;

    void validate() const
    {
        if (prob_mutate < 0.0 || prob_mutate > 0.5) {
            throw std::invalid_argument("particle mutation probability must lie in [0, 0.5]");
        }
    }
};

enum class Movement { Baseline, DD, LEH, DDLEH };

/// Complete, executable description of one robust PSO heuristic.
struct HeuristicConfig {
    std::size_t group_size = 10;
    VelocityConfig velocity{};
    TopologyConfig topology{};
    MutationConfig mutation{};
    std::optional<DdConfig> dd;
    std::optional<LehConfig> leh;
    InnerConfig inner{};

    Movement movement() const noexcept
    {
        if (dd && leh) {
            return Movement::DDLEH;
        }
        if (dd) {
            return Movement::DD;
        }
        if (leh) {
            return Movement::LEH;
        }
        return Movement::Baseline;
    }

    void validate() const
    {
        if (group_size < 2 || group_size > 50) {
            throw std::invalid_argument("group size must lie in [2, 50]");
        }
        velocity.validate();
        mutation.validate();
        inner.validate();
        if (dd) {
            dd->validate();
        }
        if (leh) {
            leh->validate();
        }
    }
};

// ---------------------------------------------------------------------------
// Topologies

inline bool better_best(const Particle& a, const Particle& b) { return a.best_value < b.best_value; }

/// Neighbourhood structure over swarm indices, built once per run from
/// (kind, swarm size, rng).
class Topology {
public:
    static Topology build(TopologyKind kind, std::size_t size, Rng& rng)
    {
        if (size == 0) {
            throw std::invalid_argument("topology over an empty swarm");
        }
        Topology t;
        t.kind_ = kind;
        t.size_ = size;
        std::vector<std::size_t> perm(size);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm.begin(), perm.end());

        switch (kind) {
        case TopologyKind::Global:
            break;
        case TopologyKind::Focal:
            t.focal_ = rng.index(size);
            break;
        case TopologyKind::Ring2:
            t.neighbours_.assign(size, {});
            for (std::size_t k = 0; k < size; ++k) {
                const auto self = perm[k];
                t.neighbours_[self] = unique_of({self, perm[(k + size - 1) % size], perm[(k + 1) % size]});
            }
            break;
        case TopologyKind::VonNeumann:
            t.build_grid(perm);
            break;
        case TopologyKind::Clan:
        case TopologyKind::Cluster:
            t.build_groups(perm, rng);
            break;
        case TopologyKind::Hierarchical:
            t.slot_of_.assign(size, 0);
            t.at_slot_ = perm;
            for (std::size_t s = 0; s < size; ++s) {
                t.slot_of_[perm[s]] = s;
            }
            break;
        }
        return t;
    }

    TopologyKind kind() const noexcept { return kind_; }

    static std::size_t group_count(std::size_t size)
    {
        const auto g = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(size))));
        return std::min(size, std::max<std::size_t>(2, g));
    }

    /// Index of the particle whose personal best particle j should follow.
    std::size_t neighbourhood_best(std::span<const Particle> swarm, std::size_t j) const
    {
        switch (kind_) {
        case TopologyKind::Global:
            return argbest(swarm, all_indices());
        case TopologyKind::Focal:
            return focal_;
        case TopologyKind::Ring2:
        case TopologyKind::VonNeumann:
            return argbest(swarm, neighbours_[j]);
        case TopologyKind::Clan: {
            const auto clan_best = argbest(swarm, groups_[group_of_[j]]);
            if (clan_best != j) {
                return clan_best;
            }
            std::vector<std::size_t> leaders;
            for (const auto& g : groups_) {
                leaders.push_back(argbest(swarm, g));
            }
            return argbest(swarm, leaders);
        }
        case TopologyKind::Cluster: {
            auto candidates = groups_[group_of_[j]];
            candidates.insert(candidates.end(), inbound_[group_of_[j]].begin(), inbound_[group_of_[j]].end());
            return argbest(swarm, candidates);
        }
        case TopologyKind::Hierarchical: {
            const auto s = slot_of_[j];
            return s == 0 ? j : at_slot_[(s - 1) / 2];
        }
        }
        return j;
    }

    /// Per-iteration structural update: in the hierarchy a child whose
    /// personal best beats its parent's swaps places with it (top down).
    void update(std::span<const Particle> swarm)
    {
        if (kind_ != TopologyKind::Hierarchical) {
            return;
        }
        for (std::size_t s = 1; s < size_; ++s) {
            const auto parent_slot = (s - 1) / 2;
            if (better_best(swarm[at_slot_[s]], swarm[at_slot_[parent_slot]])) {
                std::swap(at_slot_[s], at_slot_[parent_slot]);
                slot_of_[at_slot_[s]] = s;
                slot_of_[at_slot_[parent_slot]] = parent_slot;
            }
        }
    }

    // Structure inspection, mainly for tests.
    const std::vector<std::size_t>& neighbours(std::size_t j) const { return neighbours_.at(j); }
    const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }
    const std::vector<std::vector<std::size_t>>& inbound_informants() const noexcept { return inbound_; }
    std::size_t slot_of(std::size_t j) const { return slot_of_.at(j); }
    std::size_t focal() const noexcept { return focal_; }

private:
    static std::vector<std::size_t> unique_of(std::vector<std::size_t> v)
    {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

    std::vector<std::size_t> all_indices() const
    {
        std::vector<std::size_t> v(size_);
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }

    static std::size_t argbest(std::span<const Particle> swarm, const std::vector<std::size_t>& idx)
    {
        std::size_t best = idx.front();
        for (auto k : idx) {
            if (better_best(swarm[k], swarm[best]) || (swarm[k].best_value == swarm[best].best_value && k < best)) {
                best = k;
            }
        }
        return best;
    }

    // Torus over a ceil(sqrt N)-wide grid; short last rows and columns wrap
    // over the occupied cells only.
    void build_grid(const std::vector<std::size_t>& perm)
    {
        const std::size_t n = size_;
        const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
        auto row_len = [&](std::size_t r) { return std::min(cols, n - r * cols); };
        auto col_len = [&](std::size_t c) { return (n - c + cols - 1) / cols; };
        neighbours_.assign(n, {});
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t r = k / cols;
            const std::size_t c = k % cols;
            const std::size_t rl = row_len(r);
            const std::size_t cl = col_len(c);
            const std::size_t east = r * cols + (c + 1) % rl;
            const std::size_t west = r * cols + (c + rl - 1) % rl;
            const std::size_t south = ((r + 1) % cl) * cols + c;
            const std::size_t north = ((r + cl - 1) % cl) * cols + c;
            neighbours_[perm[k]] = unique_of({perm[k], perm[east], perm[west], perm[north], perm[south]});
        }
    }

    // Round-robin assignment of the shuffled swarm to max(2, round(sqrt N))
    // groups. For clusters, each group also nominates up to (groups - 1)
    // informants, one linked to each other group.
    void build_groups(const std::vector<std::size_t>& perm, Rng& rng)
    {
        const std::size_t g = group_count(size_);
        groups_.assign(g, {});
        group_of_.assign(size_, 0);
        for (std::size_t k = 0; k < size_; ++k) {
            groups_[k % g].push_back(perm[k]);
            group_of_[perm[k]] = k % g;
        }
        inbound_.assign(g, {});
        if (kind_ != TopologyKind::Cluster) {
            return;
        }
        for (std::size_t a = 0; a < g; ++a) {
            auto members = groups_[a];
            rng.shuffle(members.begin(), members.end());
            std::size_t next = 0;
            for (std::size_t b = 0; b < g && next < members.size(); ++b) {
                if (b != a) {
                    inbound_[b].push_back(members[next++]);
                }
            }
        }
    }

    TopologyKind kind_ = TopologyKind::Global;
    std::size_t size_ = 0;
    std::size_t focal_ = 0;
    std::vector<std::vector<std::size_t>> neighbours_;
    std::vector<std::vector<std::size_t>> groups_;
    std::vector<std::size_t> group_of_;
    std::vector<std::vector<std::size_t>> inbound_;
    std::vector<std::size_t> slot_of_;
    std::vector<std::size_t> at_slot_;
};

inline std::size_t neighborhood_best(const Topology& topology, std::span<const Particle> swarm, std::size_t j)
{
    return topology.neighbourhood_best(swarm, j);
}

// ---------------------------------------------------------------------------
// Movement

/// New velocity under the configured baseline. `dd_term` is the additive
/// C3 r3 d component when descent directions are enabled.
inline Point step_velocity(const Particle& p, const VelocityConfig& cfg, std::span<const double> nbest,
                           const std::optional<Point>& dd_term, Rng& rng)
{
    const std::size_t n = p.position.size();
    Point v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double social = cfg.c1 * r1 * (p.best_position[i] - p.position[i]) + cfg.c2 * r2 * (nbest[i] - p.position[i]);
        if (dd_term) {
            social += (*dd_term)[i];
        }
        v[i] = cfg.baseline == Baseline::Inertia ? cfg.omega * p.velocity[i] + social : p.velocity[i] + social;
    }
    if (cfg.baseline == Baseline::Constriction) {
        const double chi = cfg.chi();
        for (auto& c : v) {
            c *= chi;
        }
    }
    return v;
}

/// x(t) = x(t-1) + v(t). No clipping: out-of-box positions are kept and
/// simply not evaluated.
inline Point step_position(const Particle& p)
{
    Point x = p.position;
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += p.velocity[i];
    }
    return x;
}

/// With probability prob_mutate the particle mutates; each dimension then
/// changes with probability q ~ U(0, 1/n), q drawn once per event.
inline Point mutate_position(std::span<const double> x, const MutationConfig& cfg, const BoxDomain& domain, Rng& rng)
{
    Point out(x.begin(), x.end());
    if (cfg.kind == MutationKind::None || !rng.bernoulli(cfg.prob_mutate)) {
        return out;
    }
    const double q = rng.uniform() / static_cast<double>(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!rng.bernoulli(q)) {
            continue;
        }
        if (cfg.kind == MutationKind::Uniform) {
            out[i] = rng.uniform(domain.lower[i], domain.upper[i]);
        } else {
            out[i] += rng.normal(0.0, 0.1 * domain.width(i));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Main loop

struct RunOptions {
    /// Consecutive whole-swarm iterations without an f-call before the run
    /// is declared stalled and ends with budget left over.
    std::size_t max_idle_iterations = 100;
};

struct RunResult {
    Point best_point;
    double best_value = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    std::size_t budget = 0;
    std::size_t iterations = 0;
    std::size_t appraisals = 0;
    std::size_t dormant_skips = 0;
    std::size_t early_stops = 0;
    std::size_t relocations = 0;
    bool stalled = false;
    std::uint64_t seed = 0;
    std::optional<double> post_processed;

    double evaluations_per_appraisal() const
    {
        return appraisals == 0 ? 0.0 : static_cast<double>(evaluations) / static_cast<double>(appraisals);
    }
};

/// Executes one robust PSO run until the budget is spent.
inline RunResult run_heuristic(const HeuristicConfig& cfg, const ProblemInstance& problem, std::size_t budget,
                               std::uint64_t seed, EvaluationLedger* ledger_out = nullptr, RunOptions opts = {})
{
    cfg.validate();
    const std::size_t n = problem.dimension;
    const auto& domain = problem.domain;
    const UncertaintySpec u(problem.gamma);

    EvaluationLedger local_ledger(problem, budget);
    EvaluationLedger& ledger = ledger_out ? *ledger_out : local_ledger;
    if (ledger_out) {
        ledger = EvaluationLedger(problem, budget);
    }

    Rng rng(derive_seed(seed, {0}));
    Rng relocation_rng(derive_seed(seed, {1}));
    Rng topology_rng(derive_seed(seed, {2}));

    RunResult result;
    result.seed = seed;
    result.budget = budget;

    std::vector<Particle> swarm(cfg.group_size);
    auto topology = Topology::build(cfg.topology.kind, cfg.group_size, topology_rng);

    auto swarm_best = [&]() {
        double tau = std::numeric_limits<double>::infinity();
        for (const auto& p : swarm) {
            tau = std::min(tau, p.best_value);
        }
        return tau;
    };

    auto appraise_particle = [&](Particle& p) {
        if (!domain.contains(p.position)) {
            ++p.idle_iterations;
            p.last_direction.reset();
            return;
        }
        const auto threshold = p.has_best() ? std::optional<double>(p.best_value) : std::nullopt;
        const auto a = appraise(p.position, cfg.inner, u, threshold, ledger, rng);
        ++result.appraisals;
        result.dormant_skips += a.dormant_skip ? 1 : 0;
        result.early_stops += a.terminated_early ? 1 : 0;
        p.idle_iterations = a.evaluations_used > 0 ? 0 : p.idle_iterations + 1;
        if (a.budget_exhausted) {
            // truncated search underestimates g; never let it become a best
            p.last_direction.reset();
            return;
        }
        if (a.estimate < p.best_value) {
            p.best_value = a.estimate;
            p.best_position = p.position;
        }
        if (cfg.dd) {
            p.last_direction = descent_direction_at(p.position, a.estimate, *cfg.dd, u.gamma, ledger);
        }
    };

    std::size_t idle_streak = 0;
    for (std::size_t t = 0; !ledger.exhausted(); ++t) {
        const std::size_t spent_before = ledger.total_spent();
        if (t > 0) {
            topology.update(swarm);
        }
        for (std::size_t j = 0; j < swarm.size() && !ledger.exhausted(); ++j) {
            auto& p = swarm[j];
            if (t == 0) {
                p.position = uniform_in_box(domain, rng);
                p.velocity = initial_velocity(n, rng);
                p.best_position = p.position;
            } else {
                const auto& nbest = swarm[topology.neighbourhood_best(swarm, j)].best_position;
                std::optional<Point> dd_term;
                if (cfg.dd && p.last_direction) {
                    dd_term = dd_velocity_component(*p.last_direction, cfg.dd->c3, cfg.dd->r3_mode, rng);
                }
                p.velocity = step_velocity(p, cfg.velocity, nbest, dd_term, rng);
                p.position = step_position(p);
                p.position = mutate_position(p.position, cfg.mutation, domain, rng);
                if (cfg.leh && check_dormancy_and_relocate(p, *cfg.leh, swarm_best(), ledger, u.gamma, relocation_rng)) {
                    ++result.relocations;
                }
            }
            appraise_particle(p);
        }
        result.iterations = t + 1;
        idle_streak = ledger.total_spent() == spent_before ? idle_streak + 1 : 0;
        if (idle_streak >= opts.max_idle_iterations) {
            result.stalled = true;
            break;
        }
    }

    const auto best = std::min_element(swarm.begin(), swarm.end(), better_best);
    result.best_point = best->has_best() ? best->best_position : best->position;
    result.best_value = best->best_value;
    result.evaluations = ledger.total_spent();
    return result;
}

} // namespace rpso

#endif
