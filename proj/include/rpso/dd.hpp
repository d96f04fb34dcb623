#ifndef RPSO_DD_HPP
#define RPSO_DD_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "robust_eval.hpp"

namespace rpso {

enum class R3Mode { Random, Unity };

struct DdConfig {
    double c3 = 1.0;
    double sigma = 1.0;       // objective units
    double sigma_limit = 0.0; // sigma is halved down to this before giving up
    double min_step = 0.0;    // in units of gamma
    R3Mode r3_mode = R3Mode::Random;
    double epsilon = 1e-3;

    void validate() const
    {
        if (!(epsilon > 0.0)) {
            throw std::invalid_argument("dd: epsilon must be positive");
        }
        if (sigma_limit < 0.0 || sigma < sigma_limit) {
            throw std::invalid_argument("dd: require sigma >= sigma_limit >= 0");
        }
        if (min_step < 0.0) {
            throw std::invalid_argument("dd: min_step must be non-negative");
        }
    }
};

/// Recorded points near x whose value is within sigma of the worst-case
/// estimate at x.
struct HighCostSet {
    std::vector<Point> points;

    bool empty() const noexcept { return points.empty(); }
    std::size_t size() const noexcept { return points.size(); }
};

struct DescentDirection {
    Point d;     // unit norm
    double beta; // max over hcps of d . u_h, always <= -epsilon
};

inline HighCostSet high_cost_set(std::span<const double> x, double g_est, double sigma, double gamma,
                                 const EvaluationLedger& ledger)
{
    HighCostSet out;
    for (const auto& rec : ledger.history()) {
        if (rec.value < g_est - sigma) {
            continue;
        }
        const double r = distance(rec.point, x);
        if (r > 0.0 && r <= gamma) {
            out.points.push_back(rec.point);
        }
    }
    return out;
}

/// Minimum-norm point of the convex hull of the columns of `points`
/// (Wolfe's algorithm). Returns the point and its barycentric weights.
struct MinNormResult {
    Eigen::VectorXd point;
    Eigen::VectorXd weights;
    std::size_t iterations = 0;
};

inline MinNormResult min_norm_point(const Eigen::MatrixXd& points, double tol = 1e-10)
{
    const auto m = points.cols();
    if (m == 0) {
        throw std::invalid_argument("min_norm_point: empty point set");
    }
    double scale = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        scale = std::max(scale, points.col(i).squaredNorm());
    }
    scale = std::max(scale, 1e-300);
    constexpr double weight_tol = 1e-12;

    // Affine minimiser of ||P_S a|| subject to sum(a) = 1, by least squares
    // on the edge vectors relative to the first member.
    auto affine_min = [&](const std::vector<Eigen::Index>& s) {
        Eigen::VectorXd a(static_cast<Eigen::Index>(s.size()));
        if (s.size() == 1) {
            a(0) = 1.0;
            return a;
        }
        const Eigen::VectorXd p0 = points.col(s[0]);
        Eigen::MatrixXd edges(points.rows(), static_cast<Eigen::Index>(s.size() - 1));
        for (std::size_t k = 1; k < s.size(); ++k) {
            edges.col(static_cast<Eigen::Index>(k - 1)) = points.col(s[k]) - p0;
        }
        const Eigen::VectorXd b = edges.completeOrthogonalDecomposition().solve(-p0);
        a(0) = 1.0 - b.sum();
        a.tail(b.size()) = b;
        return a;
    };

    Eigen::Index start = 0;
    for (Eigen::Index i = 1; i < m; ++i) {
        if (points.col(i).squaredNorm() < points.col(start).squaredNorm()) {
            start = i;
        }
    }
    std::vector<Eigen::Index> support{start};
    std::vector<double> lambda{1.0};
    Eigen::VectorXd x = points.col(start);

    auto combine = [&]() {
        Eigen::VectorXd y = Eigen::VectorXd::Zero(points.rows());
        for (std::size_t k = 0; k < support.size(); ++k) {
            y += lambda[k] * points.col(support[k]);
        }
        return y;
    };

    const std::size_t cap = 100 * static_cast<std::size_t>(m);
    std::size_t iter = 0;
    for (; iter < cap; ++iter) {
        Eigen::Index j = 0;
        (points.transpose() * x).minCoeff(&j);
        if (x.squaredNorm() - x.dot(points.col(j)) <= tol * scale) {
            break;
        }
        if (std::find(support.begin(), support.end(), j) != support.end()) {
            break;
        }
        support.push_back(j);
        lambda.push_back(0.0);

        for (std::size_t minor = 0; minor <= support.size() + 1; ++minor) {
            const Eigen::VectorXd alpha = affine_min(support);
            if (alpha.minCoeff() > weight_tol) {
                for (std::size_t k = 0; k < support.size(); ++k) {
                    lambda[k] = alpha(static_cast<Eigen::Index>(k));
                }
                x = combine();
                break;
            }
            double theta = 1.0;
            for (std::size_t k = 0; k < support.size(); ++k) {
                const double ak = alpha(static_cast<Eigen::Index>(k));
                if (ak <= weight_tol && lambda[k] - ak > 0.0) {
                    theta = std::min(theta, lambda[k] / (lambda[k] - ak));
                }
            }
            for (std::size_t k = 0; k < support.size(); ++k) {
                lambda[k] = (1.0 - theta) * lambda[k] + theta * alpha(static_cast<Eigen::Index>(k));
            }
            std::vector<Eigen::Index> kept;
            std::vector<double> kept_lambda;
            for (std::size_t k = 0; k < support.size(); ++k) {
                if (lambda[k] > weight_tol) {
                    kept.push_back(support[k]);
                    kept_lambda.push_back(lambda[k]);
                }
            }
            if (kept.empty()) {
                kept.push_back(support.back());
                kept_lambda.push_back(1.0);
            }
            const double total = std::accumulate(kept_lambda.begin(), kept_lambda.end(), 0.0);
            for (auto& l : kept_lambda) {
                l /= total;
            }
            support = std::move(kept);
            lambda = std::move(kept_lambda);
            x = combine();
        }
    }

    MinNormResult out;
    out.point = x;
    out.weights = Eigen::VectorXd::Zero(m);
    for (std::size_t k = 0; k < support.size(); ++k) {
        out.weights(support[k]) = lambda[k];
    }
    out.iterations = iter;
    return out;
}

/// Unit direction maximising the smallest angle to every hcp, i.e. the
/// optimum of  min beta  s.t. ||d|| <= 1, d . u_h <= beta, beta <= -epsilon.
///
/// The optimum is d = -p/||p||, beta = -||p|| where p is the min-norm point
/// of conv{u_h}. Returns std::nullopt (robust local minimum) when ||p|| < epsilon.
inline std::optional<DescentDirection> solve_direction(std::span<const double> x, const HighCostSet& hcs, double epsilon)
{
    if (hcs.empty()) {
        throw std::invalid_argument("solve_direction: high-cost set is empty");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd units(n, static_cast<Eigen::Index>(hcs.size()));
    for (std::size_t k = 0; k < hcs.size(); ++k) {
        const double r = distance(hcs.points[k], x);
        for (Eigen::Index i = 0; i < n; ++i) {
            units(i, static_cast<Eigen::Index>(k)) = (hcs.points[k][static_cast<std::size_t>(i)] - x[static_cast<std::size_t>(i)]) / r;
        }
    }
    const auto mn = min_norm_point(units);
    const double norm = mn.point.norm();
    if (norm < epsilon) {
        return std::nullopt;
    }
    DescentDirection out;
    out.d.resize(x.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        out.d[static_cast<std::size_t>(i)] = -mn.point(i) / norm;
    }
    out.beta = -norm;
    return out;
}

/// Smallest step along d that leaves every hcp on or outside the gamma-ball
/// of the new point.
inline double step_length(std::span<const double> x, std::span<const double> d, const HighCostSet& hcs, double gamma)
{
    double rho = std::numeric_limits<double>::infinity();
    for (const auto& h : hcs.points) {
        double proj = 0.0;
        double sq = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double diff = h[i] - x[i];
            proj += d[i] * diff;
            sq += diff * diff;
        }
        double disc = proj * proj - sq + gamma * gamma;
        assert(disc > -1e-9 * gamma * gamma && "hcp outside the uncertainty neighbourhood");
        disc = std::max(disc, 0.0);
        rho = std::min(rho, proj + std::sqrt(disc));
    }
    return rho;
}

inline Point dd_velocity_component(std::span<const double> d, double c3, R3Mode mode, Rng& rng)
{
    Point out(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double r3 = mode == R3Mode::Unity ? 1.0 : rng.uniform();
        out[i] = c3 * r3 * d[i];
    }
    return out;
}

/// Direction used for the velocity term at x after its appraisal. sigma is
/// halved on each infeasible solve until it drops below sigma_limit; a
/// direction whose step length is shorter than min_step * gamma is dropped.
inline std::optional<Point> descent_direction_at(std::span<const double> x, double g_est, const DdConfig& cfg, double gamma,
                                                 const EvaluationLedger& ledger)
{
    constexpr int max_halvings = 40;
    double sigma = cfg.sigma;
    for (int k = 0; k <= max_halvings && sigma >= cfg.sigma_limit; ++k, sigma *= 0.5) {
        const auto hcs = high_cost_set(x, g_est, sigma, gamma, ledger);
        if (hcs.empty()) {
            return std::nullopt;
        }
        auto dir = solve_direction(x, hcs, cfg.epsilon);
        if (!dir) {
            continue;
        }
        if (step_length(x, dir->d, hcs, gamma) < cfg.min_step * gamma) {
            return std::nullopt;
        }
        return std::move(dir->d);
    }
    return std::nullopt;
}

} // namespace rpso

#endif
