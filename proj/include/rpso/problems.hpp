#ifndef RPSO_PROBLEMS_HPP
#define RPSO_PROBLEMS_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rpso {

using Point = std::vector<double>;

struct BoxDomain {
    std::vector<double> lower;
    std::vector<double> upper;

    BoxDomain() = default;
    BoxDomain(std::vector<double> lo, std::vector<double> hi) : lower(std::move(lo)), upper(std::move(hi))
    {
        if (lower.size() != upper.size()) {
            throw std::invalid_argument("BoxDomain: bound vectors differ in length");
        }
        for (std::size_t i = 0; i < lower.size(); ++i) {
            if (!(lower[i] < upper[i])) {
                throw std::invalid_argument("BoxDomain: lower bound must be below upper bound");
            }
        }
    }

    static BoxDomain cube(std::size_t n, double lo, double hi)
    {
        return {std::vector<double>(n, lo), std::vector<double>(n, hi)};
    }

    std::size_t dimension() const noexcept { return lower.size(); }

    double width(std::size_t i) const { return upper[i] - lower[i]; }

    bool contains(std::span<const double> x) const noexcept
    {
        if (x.size() != lower.size()) {
            return false;
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < lower[i] || x[i] > upper[i]) {
                return false;
            }
        }
        return true;
    }

    Point center() const
    {
        Point c(lower.size());
        for (std::size_t i = 0; i < c.size(); ++i) {
            c[i] = 0.5 * (lower[i] + upper[i]);
        }
        return c;
    }

    void clip(std::span<double> x) const
    {
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = std::clamp(x[i], lower[i], upper[i]);
        }
    }
};

enum class ProblemKind {
    Rastrigin,
    MultipeakF1,
    MultipeakF2,
    BrankesMultipeak,
    Pickelhaube,
    HeavisideSphere,
    Sawtooth,
    Ackley,
    Sphere,
    Rosenbrock,
};

namespace detail {

struct ProblemSpec {
    ProblemKind kind;
    std::string_view name;
    std::string_view alias;
    double lower;
    double upper;
    double gamma;
};

inline constexpr std::array<ProblemSpec, 10> problem_table{{
    {ProblemKind::Rastrigin, "Rastrigin", "rastrigin", 14.88, 25.12, 0.5},
    {ProblemKind::MultipeakF1, "Multipeak F1", "multipeak-f1", -5.0, -4.0, 0.0625},
    {ProblemKind::MultipeakF2, "Multipeak F2", "multipeak-f2", 10.0, 20.0, 0.5},
    {ProblemKind::BrankesMultipeak, "Branke's Multipeak", "brankes-multipeak", -7.0, -3.0, 0.5},
    {ProblemKind::Pickelhaube, "Pickelhaube", "pickelhaube", -40.0, -20.0, 1.0},
    {ProblemKind::HeavisideSphere, "Heaviside Sphere", "heaviside-sphere", -30.0, -10.0, 1.0},
    {ProblemKind::Sawtooth, "Sawtooth", "sawtooth", -6.0, -4.0, 0.2},
    {ProblemKind::Ackley, "Ackley", "ackley", 17.232, 82.768, 3.0},
    {ProblemKind::Sphere, "Sphere", "sphere", 15.0, 25.0, 1.0},
    {ProblemKind::Rosenbrock, "Rosenbrock", "rosenbrock", 7.952, 12.048, 0.25},
}};

inline std::string normalize_name(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '\'') {
            continue;
        }
        if (c == ' ' || c == '_') {
            out.push_back('-');
        } else {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    return out;
}

inline const ProblemSpec& spec_for(ProblemKind kind)
{
    for (const auto& s : problem_table) {
        if (s.kind == kind) {
            return s;
        }
    }
    throw std::logic_error("unregistered problem kind");
}

// Branke's multipeak constants
inline constexpr double branke_b1 = 2.0;
inline constexpr double branke_b2 = 2.0;
inline constexpr double branke_c1 = 1.0;
inline constexpr double branke_c2 = 1.3;

// Pickelhaube constants
inline constexpr double pickel_c1 = 625.0 / 624.0;
inline constexpr double pickel_c2 = 1.5975;
inline constexpr double pickel_d2 = 1.1513;

inline double multipeak_f1_term(double xi)
{
    const double y = xi + 5.0;
    const double envelope = std::exp(-2.0 * std::numbers::ln2 * std::pow((y - 0.1) / 0.8, 2));
    const double s = std::sin(5.0 * std::numbers::pi * y);
    if (0.4 < y && y <= 0.6) {
        return envelope * std::sqrt(std::abs(s));
    }
    return envelope * std::pow(s, 6);
}

inline double multipeak_f2_term(double xi)
{
    const double y = xi - 10.0;
    return 2.0 * std::sin(10.0 * std::exp(-0.2 * y) * y) * std::exp(-0.25 * y);
}

inline double branke_term(double xi)
{
    const double y = xi + 5.0;
    if (-branke_b1 <= y && y < 0.0) {
        const double t = y + branke_b1 / 2.0;
        return branke_c1 * (1.0 - 4.0 * t * t / (branke_b1 * branke_b1));
    }
    if (0.0 <= y && y <= branke_b2) {
        return branke_c2 * std::pow(16.0, -2.0 * std::abs(branke_b2 - 2.0 * y) / branke_b2);
    }
    return 0.0;
}

inline double sawtooth_term(double xi)
{
    const double y = xi + 5.0;
    if (-0.8 <= y && y < 0.2) {
        return y + 0.8;
    }
    return 0.0;
}

inline double shifted_norm(std::span<const double> x, double shift)
{
    double s = 0.0;
    for (double xi : x) {
        s += (xi + shift) * (xi + shift);
    }
    return std::sqrt(s);
}

} // namespace detail

/// One of the ten robust benchmark functions, with its box and uncertainty radius.
struct ProblemInstance {
    ProblemKind kind = ProblemKind::Sphere;
    std::string name;
    std::size_t dimension = 0;
    BoxDomain domain;
    double gamma = 1.0;

    /// Nominal objective. Defined on all of R^n: points outside the box are
    /// evaluated as-is, since neighbourhoods of boundary points leave the box.
    double operator()(std::span<const double> x) const
    {
        if (x.size() != dimension) {
            throw std::invalid_argument("nominal_eval: point has dimension " + std::to_string(x.size()) +
                                        ", problem expects " + std::to_string(dimension));
        }
        const auto n = static_cast<double>(dimension);
        constexpr double pi = std::numbers::pi;
        switch (kind) {
        case ProblemKind::Rastrigin: {
            double s = 10.0 * n;
            for (double xi : x) {
                const double y = xi - 20.0;
                s += y * y - 10.0 * std::cos(2.0 * pi * y);
            }
            return s;
        }
        case ProblemKind::MultipeakF1: {
            double s = 0.0;
            for (double xi : x) {
                s += detail::multipeak_f1_term(xi);
            }
            return -s / n;
        }
        case ProblemKind::MultipeakF2: {
            double s = 0.0;
            for (double xi : x) {
                s += detail::multipeak_f2_term(xi);
            }
            return s / n;
        }
        case ProblemKind::BrankesMultipeak: {
            double s = 0.0;
            for (double xi : x) {
                s += detail::branke_term(xi);
            }
            return std::max(detail::branke_c1, detail::branke_c2) - s / n;
        }
        case ProblemKind::Pickelhaube: {
            const double scale = 5.0 / (5.0 - std::sqrt(5.0));
            const double root_n = 5.0 * std::sqrt(n);
            const double g0 = 0.1 * std::exp(-0.5 * detail::shifted_norm(x, 30.0));
            const double r1 = detail::shifted_norm(x, 35.0) / root_n;
            const double r2 = detail::shifted_norm(x, 25.0) / root_n;
            const double g1a = scale * (1.0 - std::sqrt(r1));
            const double g1b = detail::pickel_c1 * (1.0 - std::pow(r1, 4));
            const double g2 = detail::pickel_c2 * (1.0 - std::pow(r2, detail::pickel_d2));
            return scale - std::max({g0, g1a, g1b, g2});
        }
        case ProblemKind::HeavisideSphere: {
            // g(x_i) is 0 only when x_i + 20 > 0 strictly.
            double product = 1.0;
            double quad = 0.0;
            for (double xi : x) {
                const double y = xi + 20.0;
                product *= (0.0 < y) ? 0.0 : 1.0;
                quad += (y / 10.0) * (y / 10.0);
            }
            return (1.0 - product) + quad;
        }
        case ProblemKind::Sawtooth: {
            double s = 0.0;
            for (double xi : x) {
                s += detail::sawtooth_term(xi);
            }
            return 1.0 - s / n;
        }
        case ProblemKind::Ackley: {
            double sq = 0.0;
            double cs = 0.0;
            for (double xi : x) {
                const double y = xi - 50.0;
                sq += y * y;
                cs += std::cos(2.0 * pi * y);
            }
            return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
        }
        case ProblemKind::Sphere: {
            double s = 0.0;
            for (double xi : x) {
                s += (xi - 20.0) * (xi - 20.0);
            }
            return s;
        }
        case ProblemKind::Rosenbrock: {
            double s = 0.0;
            for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                const double a = x[i] - 10.0;
                const double b = x[i + 1] - 10.0;
                s += 100.0 * (b - a * a) * (b - a * a) + (a - 1.0) * (a - 1.0);
            }
            return s;
        }
        }
        throw std::logic_error("unhandled problem kind");
    }
};

inline ProblemInstance make_problem(ProblemKind kind, std::size_t n)
{
    if (n == 0) {
        throw std::invalid_argument("problem dimension must be positive");
    }
    const auto& s = detail::spec_for(kind);
    return ProblemInstance{kind, std::string(s.name), n, BoxDomain::cube(n, s.lower, s.upper), s.gamma};
}

/// Looks a problem up by its display name or lowercase-hyphenated alias.
inline ProblemInstance make_problem(std::string_view name, std::size_t n)
{
    const auto key = detail::normalize_name(name);
    for (const auto& s : detail::problem_table) {
        if (key == s.alias || key == detail::normalize_name(s.name)) {
            return make_problem(s.kind, n);
        }
    }
    throw std::invalid_argument("unknown problem: " + std::string(name));
}

inline double nominal_eval(const ProblemInstance& p, std::span<const double> x) { return p(x); }

inline std::vector<ProblemInstance> canonical_suite(std::size_t n)
{
    std::vector<ProblemInstance> suite;
    suite.reserve(detail::problem_table.size());
    for (const auto& s : detail::problem_table) {
        suite.push_back(make_problem(s.kind, n));
    }
    return suite;
}

inline std::string_view problem_alias(ProblemKind kind) { return detail::spec_for(kind).alias; }

} // namespace rpso

#endif
