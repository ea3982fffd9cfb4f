#pragma once

#include <cmath>
#include <utility>

#include "avgctl/linops.hpp"

namespace avgctl {

// Classical RK4 with a fixed step; the final step is shortened to land on t1
// exactly. The observer sees every accepted node including the initial one.
template <class Deriv, class Observer>
Vector rk4_observed(Deriv&& f, Vector x, double t0, double t1, double h, Observer&& observe) {
    if (!(h > 0.0)) throw DomainError("rk4: step must be > 0");
    double t = t0;
    observe(t, x);
    while (t < t1 - 1e-15 * std::max(1.0, std::abs(t1))) {
        double step = std::min(h, t1 - t);
        Vector k1 = f(t, x);
        Vector k2 = f(t + 0.5 * step, Vector(x + 0.5 * step * k1));
        Vector k3 = f(t + 0.5 * step, Vector(x + 0.5 * step * k2));
        Vector k4 = f(t + step, Vector(x + step * k3));
        x += (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += step;
        observe(t, x);
    }
    return x;
}

template <class Deriv>
Vector rk4(Deriv&& f, Vector x, double t0, double t1, double h) {
    return rk4_observed(std::forward<Deriv>(f), std::move(x), t0, t1, h,
                        [](double, const Vector&) {});
}

}  // namespace avgctl
