#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "../errors.hpp"

namespace convgreen::detail {

using cplx = std::complex<double>;

// Horner evaluation of sum_k c[k] x^k together with the derivative.
inline void horner(const std::vector<cplx>& c, cplx x, cplx& value, cplx& deriv) {
    cplx v(0.0, 0.0), d(0.0, 0.0);
    for (std::size_t i = c.size(); i-- > 0;) {
        d = d * x + v;
        v = v * x + c[i];
    }
    value = v;
    deriv = d;
}

inline cplx horner_value(const std::vector<cplx>& c, cplx x) {
    cplx v(0.0, 0.0);
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

// Strip trailing (near-)zero leading coefficients relative to the largest one.
inline std::vector<cplx> trim_leading(std::vector<cplx> c, double rel_tol = 1e-14) {
    double big = 0.0;
    for (const cplx& v : c) big = std::max(big, std::abs(v));
    while (c.size() > 1 && std::abs(c.back()) <= rel_tol * big) c.pop_back();
    return c;
}

// All complex roots of a polynomial with coefficients c[0] + c[1] x + ...,
// by simultaneous Aberth--Ehrlich iteration with a Newton polish.  The
// polynomial must have a nonzero leading coefficient (trim first).
inline std::vector<cplx> aberth_roots(const std::vector<cplx>& coeffs,
                                      int max_iter = 200,
                                      double tol = 1e-14) {
    std::vector<cplx> c = trim_leading(coeffs);
    const int d = static_cast<int>(c.size()) - 1;
    if (d <= 0) return {};
    if (std::abs(c.back()) == 0.0)
        throw LeadingCoefficientZero("aberth_roots: zero leading coefficient");
    if (d == 1) return {-c[0] / c[1]};

    // Factor out roots at the origin exactly.
    int zeros_at_origin = 0;
    while (zeros_at_origin < d && std::abs(c[static_cast<std::size_t>(zeros_at_origin)]) == 0.0)
        ++zeros_at_origin;
    if (zeros_at_origin > 0) {
        std::vector<cplx> shifted(c.begin() + zeros_at_origin, c.end());
        std::vector<cplx> roots = aberth_roots(shifted, max_iter, tol);
        roots.insert(roots.end(), static_cast<std::size_t>(zeros_at_origin), cplx(0.0, 0.0));
        return roots;
    }

    // Initial guesses: a circle of radius |c0/cd|^(1/d) with an angular
    // stagger so no guess starts on a symmetry axis.
    const double radius = std::pow(std::abs(c[0] / c.back()), 1.0 / d);
    std::vector<cplx> x(static_cast<std::size_t>(d));
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (int k = 0; k < d; ++k) {
        const double ang = two_pi * (k + 0.35) / d + 0.2;
        x[static_cast<std::size_t>(k)] = radius * cplx(std::cos(ang), std::sin(ang));
    }

    double prev_move = std::numeric_limits<double>::infinity();
    int stagnant = 0;
    for (int it = 0; it < max_iter; ++it) {
        double move = 0.0;
        for (int k = 0; k < d; ++k) {
            cplx v, dv;
            horner(c, x[static_cast<std::size_t>(k)], v, dv);
            if (std::abs(v) == 0.0) continue;
            cplx ratio = (std::abs(dv) > 0.0) ? v / dv : cplx(1.0, 0.0);
            cplx sum(0.0, 0.0);
            for (int m = 0; m < d; ++m) {
                if (m == k) continue;
                cplx diff = x[static_cast<std::size_t>(k)] - x[static_cast<std::size_t>(m)];
                if (std::abs(diff) < 1e-300) diff = cplx(1e-300, 0.0);
                sum += 1.0 / diff;
            }
            cplx denom = 1.0 - ratio * sum;
            cplx step = (std::abs(denom) > 1e-300) ? ratio / denom : ratio;
            x[static_cast<std::size_t>(k)] -= step;
            move = std::max(move, std::abs(step));
        }
        const double scale = radius > 0.0 ? radius : 1.0;
        if (move <= tol * scale) break;
        // Detect stagnation (e.g. two iterates orbiting) and kick once with a
        // deterministic perturbation.
        if (move >= 0.99 * prev_move) {
            if (++stagnant == 25) {
                for (int k = 0; k < d; ++k)
                    x[static_cast<std::size_t>(k)] *= cplx(1.0 + 1e-3 * (k + 1), 1e-3);
                stagnant = 0;
            }
        } else {
            stagnant = 0;
        }
        prev_move = move;
        if (it + 1 == max_iter)
            throw RootFindingDiverged("aberth_roots: no convergence within iteration cap");
    }

    // Newton polish each root individually.
    for (cplx& root : x) {
        for (int it = 0; it < 8; ++it) {
            cplx v, dv;
            horner(c, root, v, dv);
            if (std::abs(dv) == 0.0) break;
            cplx step = v / dv;
            root -= step;
            if (std::abs(step) <= 1e-16 * (1.0 + std::abs(root))) break;
        }
    }
    return x;
}

} // namespace convgreen::detail
