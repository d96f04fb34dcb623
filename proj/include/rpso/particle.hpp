#ifndef RPSO_PARTICLE_HPP
#define RPSO_PARTICLE_HPP

#include <cmath>
#include <limits>
#include <optional>

#include "problems.hpp"
#include "rng.hpp"

namespace rpso {

struct Particle {
    Point position;
    Point velocity;
    Point best_position;
    double best_value = std::numeric_limits<double>::infinity();
    std::size_t idle_iterations = 0; ///< consecutive iterations without an f-call
    std::optional<Point> last_direction;

    bool has_best() const noexcept { return std::isfinite(best_value); }
};

/// v(0) ~ U(0, 0.1)^n
inline Point initial_velocity(std::size_t n, Rng& rng)
{
    Point v(n);
    for (auto& c : v) {
        c = rng.uniform(0.0, 0.1);
    }
    return v;
}

inline Point uniform_in_box(const BoxDomain& box, Rng& rng)
{
    Point x(box.dimension());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = rng.uniform(box.lower[i], box.upper[i]);
    }
    return x;
}

} // namespace rpso

#endif
