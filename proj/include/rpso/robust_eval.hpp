#ifndef RPSO_ROBUST_EVAL_HPP
#define RPSO_ROBUST_EVAL_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "problems.hpp"
#include "rng.hpp"

namespace rpso {

inline double distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

struct HistoryRecord {
    Point point;
    double value = 0.0;
};

/// Budgeted gateway to the nominal objective. Every call to evaluate() that
/// succeeds appends one record to the history and spends one unit of budget.
class EvaluationLedger {
public:
    EvaluationLedger(ProblemInstance problem, std::size_t budget)
        : problem_(std::move(problem)), initial_(budget), remaining_(budget)
    {
        history_.reserve(budget);
    }

    /// Returns std::nullopt, and evaluates nothing, once the budget is spent.
    std::optional<double> evaluate(std::span<const double> x)
    {
        if (remaining_ == 0) {
            return std::nullopt;
        }
        const double value = problem_(x);
        history_.push_back({Point(x.begin(), x.end()), value});
        --remaining_;
        return value;
    }

    const ProblemInstance& problem() const noexcept { return problem_; }
    const std::vector<HistoryRecord>& history() const noexcept { return history_; }
    std::size_t initial_budget() const noexcept { return initial_; }
    std::size_t budget_remaining() const noexcept { return remaining_; }
    std::size_t total_spent() const noexcept { return history_.size(); }
    bool exhausted() const noexcept { return remaining_ == 0; }

private:
    ProblemInstance problem_;
    std::size_t initial_;
    std::size_t remaining_;
    std::vector<HistoryRecord> history_;
};

struct UncertaintySpec {
    double gamma = 1.0;

    explicit UncertaintySpec(double g = 1.0) : gamma(g)
    {
        if (!(gamma > 0.0)) {
            throw std::invalid_argument("uncertainty radius must be positive");
        }
    }
};

enum class InnerForm { RandomSampling, InnerPSO, InnerGA };

struct InnerPsoParams {
    std::size_t swarm = 5;
    double c1 = 1.5;
    double c2 = 1.5;
    double omega = 0.7;
};

struct InnerGaParams {
    std::size_t pop = 5;
    double mut_prob = 0.2;
    double mut_scale = 0.1; // fraction of gamma
    std::size_t elites = 1;
    std::size_t tournament = 2;
};

struct InnerConfig {
    InnerForm form = InnerForm::RandomSampling;
    std::size_t extent = 2;
    bool use_stopping = false;
    bool use_history_for_dormancy = false;
    bool use_history_for_pbest = false;
    InnerPsoParams pso{};
    InnerGaParams ga{};

    void validate() const
    {
        if (extent < 2) {
            throw std::invalid_argument("inner extent must be at least 2");
        }
        if (form == InnerForm::InnerPSO && (pso.swarm < 1 || pso.swarm > extent)) {
            throw std::invalid_argument("inner PSO swarm must lie in [1, extent]");
        }
        if (form == InnerForm::InnerGA) {
            if (ga.pop < 1 || ga.pop > extent) {
                throw std::invalid_argument("inner GA population must lie in [1, extent]");
            }
            if (ga.elites >= ga.pop) {
                throw std::invalid_argument("inner GA elites must be fewer than the population");
            }
            if (ga.tournament < 1 || ga.tournament > ga.pop) {
                throw std::invalid_argument("inner GA tournament must lie in [1, pop]");
            }
        }
    }
};

struct RobustAppraisal {
    double estimate = -std::numeric_limits<double>::infinity();
    std::size_t evaluations_used = 0;
    bool terminated_early = false;
    bool dormant_skip = false;
    /// The search wanted more evaluations than the ledger had left.
    bool budget_exhausted = false;
};

/// Uniform draw from the closed Euclidean ball of radius gamma around center.
inline Point sample_in_ball(std::span<const double> center, double gamma, Rng& rng)
{
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("sample_in_ball: gamma must be positive");
    }
    const std::size_t n = center.size();
    Point dir(n);
    double norm = 0.0;
    do {
        norm = 0.0;
        for (auto& d : dir) {
            d = rng.normal();
            norm += d * d;
        }
        norm = std::sqrt(norm);
    } while (norm == 0.0);
    const double radius = gamma * std::pow(rng.uniform(), 1.0 / static_cast<double>(n));
    Point q(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = center[i] + radius * dir[i] / norm;
    }
    return q;
}

/// Radial projection of q onto the gamma-ball around center (no-op inside).
inline void project_to_ball(std::span<double> q, std::span<const double> center, double gamma)
{
    const double r = distance(q, center);
    if (r > gamma) {
        const double s = gamma / r;
        for (std::size_t i = 0; i < q.size(); ++i) {
            q[i] = center[i] + (q[i] - center[i]) * s;
        }
    }
}

/// Worst recorded value within gamma of x, if any.
inline std::optional<double> worst_in_neighbourhood(const EvaluationLedger& ledger, std::span<const double> x, double gamma)
{
    std::optional<double> worst;
    for (const auto& rec : ledger.history()) {
        if (distance(rec.point, x) <= gamma && (!worst || rec.value > *worst)) {
            worst = rec.value;
        }
    }
    return worst;
}

namespace detail {

/// Shared bookkeeping for one inner maximisation: caps evaluations at the
/// extent, tracks the running maximum, and applies the stopping threshold.
class InnerProbe {
public:
    InnerProbe(std::size_t extent, std::optional<double> stop_above, EvaluationLedger& ledger)
        : extent_(extent), stop_above_(stop_above), ledger_(ledger)
    {
    }

    /// Evaluates q. Returns the value, or nullopt if the search must end
    /// before evaluating (extent reached, stopped, or budget gone).
    std::optional<double> operator()(std::span<const double> q)
    {
        if (!active()) {
            return std::nullopt;
        }
        auto v = ledger_.evaluate(q);
        if (!v) {
            result_.budget_exhausted = true;
            return std::nullopt;
        }
        ++result_.evaluations_used;
        result_.estimate = std::max(result_.estimate, *v);
        if (stop_above_ && *v > *stop_above_) {
            result_.terminated_early = true;
        }
        return v;
    }

    bool active() const
    {
        return !result_.terminated_early && !result_.budget_exhausted && result_.evaluations_used < extent_;
    }

    RobustAppraisal result() const { return result_; }

private:
    std::size_t extent_;
    std::optional<double> stop_above_;
    EvaluationLedger& ledger_;
    RobustAppraisal result_{};
};

} // namespace detail

inline RobustAppraisal inner_random(std::span<const double> x, std::size_t extent, double gamma,
                                    std::optional<double> stop_above, EvaluationLedger& ledger, Rng& rng)
{
    detail::InnerProbe probe(extent, stop_above, ledger);
    while (probe.active()) {
        probe(sample_in_ball(x, gamma, rng));
    }
    return probe.result();
}

/// Inertia-form PSO maximising f over the gamma-ball around x.
inline RobustAppraisal inner_pso(std::span<const double> x, std::size_t extent, const InnerPsoParams& cfg, double gamma,
                                 std::optional<double> stop_above, EvaluationLedger& ledger, Rng& rng)
{
    const std::size_t n = x.size();
    const std::size_t m = std::clamp<std::size_t>(cfg.swarm, 1, extent);
    detail::InnerProbe probe(extent, stop_above, ledger);

    std::vector<Point> pos;
    std::vector<Point> vel;
    std::vector<Point> best_pos;
    std::vector<double> best_val;
    for (std::size_t j = 0; j < m && probe.active(); ++j) {
        auto q = sample_in_ball(x, gamma, rng);
        auto v = probe(q);
        if (!v) {
            break;
        }
        Point vj(n);
        for (auto& c : vj) {
            c = rng.uniform(-0.1, 0.1) * gamma;
        }
        pos.push_back(q);
        vel.push_back(std::move(vj));
        best_pos.push_back(std::move(q));
        best_val.push_back(*v);
    }

    while (probe.active() && !pos.empty()) {
        for (std::size_t j = 0; j < pos.size() && probe.active(); ++j) {
            const auto lead = static_cast<std::size_t>(std::max_element(best_val.begin(), best_val.end()) - best_val.begin());
            for (std::size_t i = 0; i < n; ++i) {
                vel[j][i] = cfg.omega * vel[j][i] + cfg.c1 * rng.uniform() * (best_pos[j][i] - pos[j][i]) +
                            cfg.c2 * rng.uniform() * (best_pos[lead][i] - pos[j][i]);
                pos[j][i] += vel[j][i];
            }
            project_to_ball(pos[j], x, gamma);
            auto v = probe(pos[j]);
            if (v && *v > best_val[j]) {
                best_val[j] = *v;
                best_pos[j] = pos[j];
            }
        }
    }
    return probe.result();
}

/// Real-coded GA maximising f over the gamma-ball around x: tournament
/// selection, elitism, uniform crossover, per-gene Gaussian mutation.
inline RobustAppraisal inner_ga(std::span<const double> x, std::size_t extent, const InnerGaParams& cfg, double gamma,
                                std::optional<double> stop_above, EvaluationLedger& ledger, Rng& rng)
{
    const std::size_t n = x.size();
    const std::size_t pop = std::clamp<std::size_t>(cfg.pop, 1, extent);
    const std::size_t elites = std::min(cfg.elites, pop - 1);
    const std::size_t tour = std::clamp<std::size_t>(cfg.tournament, 1, pop);
    detail::InnerProbe probe(extent, stop_above, ledger);

    std::vector<Point> genes;
    std::vector<double> fit;
    for (std::size_t k = 0; k < pop && probe.active(); ++k) {
        auto q = sample_in_ball(x, gamma, rng);
        auto v = probe(q);
        if (!v) {
            break;
        }
        genes.push_back(std::move(q));
        fit.push_back(*v);
    }

    auto select = [&]() -> std::size_t {
        std::size_t best = rng.index(genes.size());
        for (std::size_t k = 1; k < std::min(tour, genes.size()); ++k) {
            const std::size_t c = rng.index(genes.size());
            if (fit[c] > fit[best]) {
                best = c;
            }
        }
        return best;
    };

    while (probe.active() && !genes.empty()) {
        std::vector<std::size_t> order(genes.size());
        for (std::size_t k = 0; k < order.size(); ++k) {
            order[k] = k;
        }
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fit[a] > fit[b]; });

        std::vector<Point> next_genes;
        std::vector<double> next_fit;
        for (std::size_t k = 0; k < std::min(elites, order.size()); ++k) {
            next_genes.push_back(genes[order[k]]);
            next_fit.push_back(fit[order[k]]);
        }
        while (next_genes.size() < pop && probe.active()) {
            const auto& a = genes[select()];
            const auto& b = genes[select()];
            Point child(n);
            for (std::size_t i = 0; i < n; ++i) {
                child[i] = rng.bernoulli(0.5) ? a[i] : b[i];
                if (rng.bernoulli(cfg.mut_prob)) {
                    child[i] += rng.normal(0.0, cfg.mut_scale * gamma);
                }
            }
            project_to_ball(child, x, gamma);
            auto v = probe(child);
            if (!v) {
                break;
            }
            next_genes.push_back(std::move(child));
            next_fit.push_back(*v);
        }
        genes = std::move(next_genes);
        fit = std::move(next_fit);
    }
    return probe.result();
}

/// Approximates the worst case g(x) over the gamma-ball around x.
///
/// `threshold` is the appraising particle's personal-best robust value. With
/// stopping enabled the search ends as soon as a sample exceeds it; with
/// dormancy history also enabled, a recorded neighbour above it skips the
/// search entirely. With personal-best history enabled the estimate is raised
/// to the worst recorded value within gamma.
inline RobustAppraisal appraise(std::span<const double> x, const InnerConfig& inner, const UncertaintySpec& u,
                                std::optional<double> threshold, EvaluationLedger& ledger, Rng& rng)
{
    const bool can_skip = inner.use_stopping && inner.use_history_for_dormancy && threshold.has_value();
    std::optional<double> historical;
    if (can_skip || inner.use_history_for_pbest) {
        historical = worst_in_neighbourhood(ledger, x, u.gamma);
    }
    if (can_skip && historical && *historical > *threshold) {
        RobustAppraisal skip;
        skip.estimate = *historical;
        skip.dormant_skip = true;
        return skip;
    }

    const auto stop_above = inner.use_stopping ? threshold : std::nullopt;
    RobustAppraisal result;
    switch (inner.form) {
    case InnerForm::RandomSampling:
        result = inner_random(x, inner.extent, u.gamma, stop_above, ledger, rng);
        break;
    case InnerForm::InnerPSO:
        result = inner_pso(x, inner.extent, inner.pso, u.gamma, stop_above, ledger, rng);
        break;
    case InnerForm::InnerGA:
        result = inner_ga(x, inner.extent, inner.ga, u.gamma, stop_above, ledger, rng);
        break;
    }
    if (inner.use_history_for_pbest && historical) {
        result.estimate = std::max(result.estimate, *historical);
    }
    return result;
}

} // namespace rpso

#endif
