#pragma once

// Central finite-difference gradient check harness (double precision).

#include <cmath>
#include <functional>

namespace gradcheck {

// d(eval)/d(*theta) by central differences; restores *theta.
template <class F>
double central_diff(double* theta, F&& eval, double h = 3e-6) {
    const double orig = *theta;
    const double step = h * std::max(1.0, std::abs(orig));
    *theta = orig + step;
    const double lp = eval();
    *theta = orig - step;
    const double lm = eval();
    *theta = orig;
    return (lp - lm) / (2.0 * step);
}

// Relative tolerance 1e-6 with an absolute floor shielding the comparison
// from finite-difference roundoff on near-zero gradients.
inline bool close(double analytic, double numeric, double rel = 1e-6,
                  double abs_floor = 1e-9) {
    const double diff = std::abs(analytic - numeric);
    if (diff <= abs_floor) return true;
    return diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace gradcheck
