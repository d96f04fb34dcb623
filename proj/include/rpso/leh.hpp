#ifndef RPSO_LEH_HPP
#define RPSO_LEH_HPP

#include <algorithm>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "particle.hpp"
#include "robust_eval.hpp"

namespace rpso {

enum class Relocation { LehCenter, Random };

struct LehConfig {
    Relocation relocation = Relocation::LehCenter;
    std::size_t dorm_threshold = 3;
    std::size_t pop = 200;
    double mut_prob = 0.5;
    double mut_scale = 0.1; // fraction of the box width per dimension
    std::size_t elites = 2;
    std::size_t tournament = 3;
    std::size_t generations = 30;

    void validate() const
    {
        if (dorm_threshold < 1) {
            throw std::invalid_argument("leh: dormancy threshold must be at least 1");
        }
        if (pop < 1 || elites >= pop) {
            throw std::invalid_argument("leh: elites must be fewer than the population");
        }
        if (tournament < 1 || tournament > pop) {
            throw std::invalid_argument("leh: tournament size must lie in [1, pop]");
        }
    }
};

/// Recorded points strictly worse than tau.
struct GlobalHighCostSet {
    std::vector<Point> points;
    double tau = 0.0;

    bool empty() const noexcept { return points.empty(); }
};

inline GlobalHighCostSet global_high_cost_set(const EvaluationLedger& ledger, double tau)
{
    GlobalHighCostSet out;
    out.tau = tau;
    for (const auto& rec : ledger.history()) {
        if (rec.value > tau) {
            out.points.push_back(rec.point);
        }
    }
    return out;
}

/// Distance from c to the nearest hcp; +inf for an empty set.
inline double clearance(std::span<const double> c, const GlobalHighCostSet& hcs)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& h : hcs.points) {
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            s += (c[i] - h[i]) * (c[i] - h[i]);
            if (s >= best * best) {
                break;
            }
        }
        best = std::min(best, std::sqrt(s));
    }
    return best;
}

struct EmptySphere {
    Point center;
    double radius = 0.0;
};

namespace detail {

// Exact nearest-hcp search: hcps sorted along the axis of widest spread,
// scanned outward from the query until the axis gap alone rules out the rest.
class SortedHcps {
public:
    SortedHcps(const GlobalHighCostSet& hcs, std::size_t n) : n_(n)
    {
        double widest = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto [lo, hi] = std::minmax_element(hcs.points.begin(), hcs.points.end(),
                                                      [i](const Point& a, const Point& b) { return a[i] < b[i]; });
            if ((*hi)[i] - (*lo)[i] > widest) {
                widest = (*hi)[i] - (*lo)[i];
                axis_ = i;
            }
        }
        std::vector<std::size_t> order(hcs.points.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return hcs.points[a][axis_] < hcs.points[b][axis_]; });
        keys_.reserve(order.size());
        flat_.reserve(order.size() * n);
        for (auto k : order) {
            keys_.push_back(hcs.points[k][axis_]);
            flat_.insert(flat_.end(), hcs.points[k].begin(), hcs.points[k].end());
        }
    }

    double clearance_sq(const double* c) const
    {
        double best = std::numeric_limits<double>::infinity();
        const auto mid = static_cast<std::size_t>(std::lower_bound(keys_.begin(), keys_.end(), c[axis_]) - keys_.begin());
        auto visit = [&](std::size_t k) {
            const double* h = &flat_[k * n_];
            double s = 0.0;
            for (std::size_t i = 0; i < n_ && s < best; ++i) {
                s += (c[i] - h[i]) * (c[i] - h[i]);
            }
            best = std::min(best, s);
        };
        for (std::size_t k = mid; k < keys_.size(); ++k) {
            const double gap = keys_[k] - c[axis_];
            if (gap * gap >= best) {
                break;
            }
            visit(k);
        }
        for (std::size_t k = mid; k-- > 0;) {
            const double gap = c[axis_] - keys_[k];
            if (gap * gap >= best) {
                break;
            }
            visit(k);
        }
        return best;
    }

private:
    std::size_t n_;
    std::size_t axis_ = 0;
    std::vector<double> keys_;
    std::vector<double> flat_;
};

} // namespace detail

/// GA approximation of the in-box point furthest from every hcp. Spends no
/// objective evaluations.
inline EmptySphere largest_empty_sphere(const GlobalHighCostSet& hcs, const BoxDomain& domain, const LehConfig& cfg, Rng& rng)
{
    if (hcs.empty()) {
        return {domain.center(), std::numeric_limits<double>::infinity()};
    }
    const std::size_t n = domain.dimension();
    const std::size_t pop = std::max<std::size_t>(cfg.pop, 1);
    const std::size_t elites = std::min(cfg.elites, pop - 1);
    const std::size_t tour = std::clamp<std::size_t>(cfg.tournament, 1, pop);

    const detail::SortedHcps index(hcs, n);

    // Fitness is kept squared; the ordering is the same.
    std::vector<double> genes(pop * n);
    std::vector<double> fit(pop);
    for (std::size_t k = 0; k < pop; ++k) {
        const auto x = uniform_in_box(domain, rng);
        std::copy(x.begin(), x.end(), genes.begin() + static_cast<std::ptrdiff_t>(k * n));
        fit[k] = index.clearance_sq(&genes[k * n]);
    }

    auto select = [&]() {
        std::size_t best = rng.index(pop);
        for (std::size_t k = 1; k < tour; ++k) {
            const std::size_t c = rng.index(pop);
            if (fit[c] > fit[best]) {
                best = c;
            }
        }
        return best;
    };

    std::vector<std::size_t> order(pop);
    std::vector<double> next(pop * n);
    std::vector<double> next_fit(pop);
    for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fit[a] > fit[b] || (fit[a] == fit[b] && a < b); });
        for (std::size_t k = 0; k < elites; ++k) {
            std::copy_n(&genes[order[k] * n], n, &next[k * n]);
            next_fit[k] = fit[order[k]];
        }
        for (std::size_t k = elites; k < pop; ++k) {
            const double* a = &genes[select() * n];
            const double* b = &genes[select() * n];
            double* child = &next[k * n];
            for (std::size_t i = 0; i < n; ++i) {
                child[i] = rng.bernoulli(0.5) ? a[i] : b[i];
                if (rng.bernoulli(cfg.mut_prob)) {
                    child[i] += rng.normal(0.0, cfg.mut_scale * domain.width(i));
                }
            }
            domain.clip(std::span<double>(child, n));
            next_fit[k] = index.clearance_sq(child);
        }
        genes.swap(next);
        fit.swap(next_fit);
    }
    const auto best = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
    return {Point(genes.begin() + static_cast<std::ptrdiff_t>(best * n), genes.begin() + static_cast<std::ptrdiff_t>((best + 1) * n)),
            std::sqrt(fit[best])};
}

/// LEH centre, or std::nullopt when no in-box point is at least gamma from
/// every hcp.
inline std::optional<Point> leh_center(const GlobalHighCostSet& hcs, const BoxDomain& domain, double gamma,
                                       const LehConfig& cfg, Rng& rng)
{
    auto sphere = largest_empty_sphere(hcs, domain, cfg, rng);
    if (sphere.radius < gamma) {
        return std::nullopt;
    }
    return std::move(sphere.center);
}

/// Relocates a particle that has gone dorm_threshold iterations without an
/// f-call. tau is the swarm's current best robust value. Returns the new
/// position if the particle moved.
inline std::optional<Point> check_dormancy_and_relocate(Particle& particle, const LehConfig& cfg, double tau,
                                                        const EvaluationLedger& ledger, double gamma, Rng& rng)
{
    if (particle.idle_iterations < cfg.dorm_threshold) {
        return std::nullopt;
    }
    const auto& domain = ledger.problem().domain;
    std::optional<Point> target;
    if (cfg.relocation == Relocation::LehCenter) {
        target = leh_center(global_high_cost_set(ledger, tau), domain, gamma, cfg, rng);
    }
    if (!target) {
        target = uniform_in_box(domain, rng);
    }
    particle.position = *target;
    particle.velocity = initial_velocity(domain.dimension(), rng);
    particle.idle_iterations = 0;
    particle.last_direction.reset();
    return target;
}

} // namespace rpso

#endif
