#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "../errors.hpp"

namespace convgreen::detail {

using cplx = std::complex<double>;

// Romberg integration of a smooth complex integrand over [a, b]:
// trapezoid doubling accelerated by Richardson extrapolation.
template <class F>
inline cplx romberg_segment(F&& f, double a, double b,
                            double tol = 1e-9,
                            int min_levels = 4,
                            int max_levels = 22) {
    if (!(b > a)) {
        if (b == a) return cplx(0.0, 0.0);
        return -romberg_segment(f, b, a, tol, min_levels, max_levels);
    }
    std::vector<cplx> prev, curr;
    double h = b - a;
    cplx t = 0.5 * h * (f(a) + f(b));
    prev.push_back(t);
    for (int level = 1; level <= max_levels; ++level) {
        // Refine the trapezoid sum with the new midpoints.
        const long m = 1L << (level - 1);
        cplx add(0.0, 0.0);
        for (long i = 0; i < m; ++i)
            add += f(a + (2.0 * i + 1.0) * h / (2.0 * m));
        t = 0.5 * t + 0.5 * (h / m) * add;

        curr.assign(1, t);
        double p4 = 4.0;
        for (std::size_t k = 0; k < prev.size(); ++k) {
            curr.push_back(curr[k] + (curr[k] - prev[k]) / (p4 - 1.0));
            p4 *= 4.0;
        }
        if (level >= min_levels) {
            const double diff = std::abs(curr.back() - prev.back());
            if (diff <= tol * (1.0 + std::abs(curr.back()))) return curr.back();
        }
        prev.swap(curr);
    }
    throw QuadratureStalled("romberg_segment: no convergence within the refinement cap");
}

// Trapezoid rule over one period [0, 2*pi); spectrally accurate for smooth
// periodic integrands.
template <class F>
inline cplx periodic_trapezoid(F&& f, int n_points) {
    if (n_points < 1) throw ParameterOutOfRange("periodic_trapezoid: need at least one point");
    const double two_pi = 2.0 * 3.14159265358979323846;
    cplx acc(0.0, 0.0);
    for (int k = 0; k < n_points; ++k)
        acc += f(two_pi * k / n_points);
    return acc * (two_pi / n_points);
}

} // namespace convgreen::detail
