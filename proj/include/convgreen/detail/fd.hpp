#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "../errors.hpp"

namespace convgreen::detail {

using cplx = std::complex<double>;

// Finite-difference weights for the m-th derivative at x0 from arbitrary
// nodes (Fornberg's recursion).  Returns one weight per node.
inline std::vector<double> fornberg_weights(int m, const std::vector<double>& nodes, double x0) {
    const int n = static_cast<int>(nodes.size()) - 1;
    if (n < m) throw ParameterOutOfRange("fornberg_weights: not enough nodes for the derivative order");
    std::vector<std::vector<double>> C(static_cast<std::size_t>(n + 1),
                                       std::vector<double>(static_cast<std::size_t>(m + 1), 0.0));
    C[0][0] = 1.0;
    double c1 = 1.0;
    double c4 = nodes[0] - x0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = nodes[static_cast<std::size_t>(i)] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = nodes[static_cast<std::size_t>(i)] - nodes[static_cast<std::size_t>(j)];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    C[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
                        c1 * (k * C[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k - 1)] -
                              c5 * C[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(k)]) / c2;
                C[static_cast<std::size_t>(i)][0] = -c1 * c5 * C[static_cast<std::size_t>(i - 1)][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                C[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] =
                    (c4 * C[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)] -
                     k * C[static_cast<std::size_t>(j)][static_cast<std::size_t>(k - 1)]) / c3;
            C[static_cast<std::size_t>(j)][0] = c4 * C[static_cast<std::size_t>(j)][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i)
        w[static_cast<std::size_t>(i)] = C[static_cast<std::size_t>(i)][static_cast<std::size_t>(m)];
    return w;
}

struct DerivativeEstimate {
    cplx value{0.0, 0.0};
    double error = 0.0; // last Richardson correction, a realistic error gauge
};

// m-th derivative of a smooth complex function at x0 via symmetric central
// differences refined by Richardson extrapolation.  The half-width s fixes a
// (2s+1)-point stencil whose plain error order is q0; each halving of the
// step folds away one further even power.
template <class F>
inline DerivativeEstimate fd_derivative(F&& f, int m, double x0,
                                        double base_step = 1e-2,
                                        int levels = 4,
                                        int half_width = -1) {
    if (m < 1) throw ParameterOutOfRange("fd_derivative: derivative order must be positive");
    const int s = (half_width > 0) ? half_width : std::min(8, (m + 1) / 2 + 3);
    if (2 * s < m) throw ParameterOutOfRange("fd_derivative: stencil too short for the derivative order");

    std::vector<double> offsets(static_cast<std::size_t>(2 * s + 1));
    for (int j = -s; j <= s; ++j) offsets[static_cast<std::size_t>(j + s)] = static_cast<double>(j);
    const std::vector<double> w = fornberg_weights(m, offsets, 0.0);

    // Plain error order of the symmetric stencil: exact through degree 2s,
    // and odd error terms cancel by symmetry.
    int q0 = 2 * s - m + 1;
    if (q0 % 2 != 0) ++q0;

    std::vector<cplx> row(static_cast<std::size_t>(levels));
    for (int k = 0; k < levels; ++k) {
        const double h = base_step / static_cast<double>(1 << k);
        cplx acc(0.0, 0.0);
        for (int j = -s; j <= s; ++j)
            acc += w[static_cast<std::size_t>(j + s)] * f(x0 + j * h);
        row[static_cast<std::size_t>(k)] = acc / std::pow(h, m);
    }

    DerivativeEstimate out;
    out.error = std::numeric_limits<double>::infinity();
    // Triangular Richardson table; error orders q0, q0+2, q0+4, ...
    for (int fold = 0; fold < levels - 1; ++fold) {
        const double factor = std::pow(2.0, q0 + 2 * fold);
        double corr = 0.0;
        for (int k = 0; k < levels - 1 - fold; ++k) {
            const cplx next = row[static_cast<std::size_t>(k + 1)] +
                              (row[static_cast<std::size_t>(k + 1)] - row[static_cast<std::size_t>(k)]) / (factor - 1.0);
            corr = std::max(corr, std::abs(next - row[static_cast<std::size_t>(k + 1)]));
            row[static_cast<std::size_t>(k)] = next;
        }
        out.error = corr;
    }
    out.value = row[0];
    return out;
}

} // namespace convgreen::detail
