#pragma once

#include <vector>

#include "avgctl/steer.hpp"

namespace avgctl {

// One piece of a compiled control, expressed in fast time. Hold keeps u
// constant; Steer evaluates the stored minimum-energy segment.
struct ControlSegment {
    enum class Kind { Hold, Steer };
    Kind kind = Kind::Hold;
    double start = 0.0;     // fast-time start within the program
    double duration = 0.0;  // fast-time length
    Vector u;               // Hold value
    SteerSegment steer;     // valid when kind == Steer

    Vector control_at(double sigma_local) const {
        if (kind == Kind::Hold) return u;
        return eval_steer_control(steer, sigma_local);
    }
};

// Real-time control u_eps(t) = segment(sigma = (t - t_start)/eps).
// Segments tile [0, T] in real time; real duration = eps * duration.
struct ControlProgram {
    double epsilon = 1.0;
    std::vector<ControlSegment> segments;  // starts are fast-time, contiguous

    double fast_length() const {
        if (segments.empty()) return 0.0;
        return segments.back().start + segments.back().duration;
    }
    double real_length() const { return epsilon * fast_length(); }
};

}  // namespace avgctl
