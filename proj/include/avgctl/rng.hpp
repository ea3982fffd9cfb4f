#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>

namespace avgctl::rng {

// Distribution helpers written out explicitly: std::uniform_real_distribution
// is implementation-defined, and run artifacts must be reproducible from the
// scenario seed alone.

inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

inline double normal(std::mt19937_64& gen) {
    // Box-Muller, no caching so the stream position is predictable.
    double u1 = uniform01(gen);
    double u2 = uniform01(gen);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

inline Eigen::VectorXd in_box(std::mt19937_64& gen, const Eigen::VectorXd&lo,
                              const Eigen::VectorXd& hi) {
    Eigen::VectorXd x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x(i) = uniform(gen, lo(i), hi(i));
    return x;
}

inline Eigen::VectorXd unit_vector(std::mt19937_64& gen, int n) {
    Eigen::VectorXd v(n);
    double nrm = 0.0;
    do {
        for (int i = 0; i < n; ++i) v(i) = normal(gen);
        nrm = v.norm();
    } while (nrm < 1e-12);
    return v / nrm;
}

inline Eigen::VectorXd in_ball(std::mt19937_64& gen, int n, double radius) {
    Eigen::VectorXd dir = unit_vector(gen, n);
    double r = radius * std::pow(uniform01(gen), 1.0 / static_cast<double>(n));
    return r * dir;
}

}  // namespace avgctl::rng
