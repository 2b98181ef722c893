#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "../errors.hpp"

namespace convgreen::detail {

using cplx = std::complex<double>;

// Complex banded LU with partial pivoting, in the conventional banded
// storage layout: the factor matrix has kl extra superdiagonals for the
// pivoting fill-in, so entry (i, j) of the full matrix lives at
// ab[(kl + ku + i - j) + j * ldab] with ldab = 2*kl + ku + 1.
struct BandedLU {
    int n = 0;
    int kl = 0;
    int ku = 0;
    int ldab = 0;
    std::vector<cplx> ab;
    std::vector<int> ipiv;

    cplx& at(int i, int j) { return ab[static_cast<std::size_t>((kl + ku + i - j) + j * ldab)]; }
    cplx get(int i, int j) const { return ab[static_cast<std::size_t>((kl + ku + i - j) + j * ldab)]; }
};

// Factor a banded matrix given by a callback entry(i, j) valid for
// |i - j| <= max(kl, ku); entries outside the band are zero.
template <class Entry>
inline BandedLU banded_factor(int n, int kl, int ku, Entry&& entry) {
    BandedLU f;
    f.n = n;
    f.kl = kl;
    f.ku = ku;
    f.ldab = 2 * kl + ku + 1;
    f.ab.assign(static_cast<std::size_t>(f.ldab) * static_cast<std::size_t>(n), cplx(0.0, 0.0));
    f.ipiv.assign(static_cast<std::size_t>(n), 0);

    for (int j = 0; j < n; ++j)
        for (int i = std::max(0, j - ku); i <= std::min(n - 1, j + kl); ++i)
            f.at(i, j) = entry(i, j);

    // Row-wise elimination restricted to the band.
    for (int k = 0; k < n; ++k) {
        // Pivot search down the column within the band.
        int piv = k;
        double best = std::abs(f.at(k, k));
        for (int i = k + 1; i <= std::min(n - 1, k + kl); ++i) {
            const double v = std::abs(f.at(i, k));
            if (v > best) { best = v; piv = i; }
        }
        f.ipiv[static_cast<std::size_t>(k)] = piv;
        if (best == 0.0)
            throw SolverSingular("banded_factor: zero pivot column " + std::to_string(k));
        if (piv != k) {
            // Swap rows k and piv over the columns they can touch.
            for (int j = k; j <= std::min(n - 1, k + kl + ku); ++j)
                std::swap(f.at(k, j), f.at(piv, j));
        }
        const cplx pivot = f.at(k, k);
        for (int i = k + 1; i <= std::min(n - 1, k + kl); ++i) {
            const cplx m = f.at(i, k) / pivot;
            f.at(i, k) = m; // store the multiplier in place
            for (int j = k + 1; j <= std::min(n - 1, k + kl + ku); ++j)
                f.at(i, j) -= m * f.at(k, j);
        }
    }
    return f;
}

inline void banded_solve(const BandedLU& f, std::vector<cplx>& b) {
    const int n = f.n;
    if (static_cast<int>(b.size()) != n)
        throw ParameterOutOfRange("banded_solve: right-hand side length mismatch");
    // Forward substitution with the recorded row swaps.
    for (int k = 0; k < n; ++k) {
        const int piv = f.ipiv[static_cast<std::size_t>(k)];
        if (piv != k) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(piv)]);
        for (int i = k + 1; i <= std::min(n - 1, k + f.kl); ++i)
            b[static_cast<std::size_t>(i)] -= f.get(i, k) * b[static_cast<std::size_t>(k)];
    }
    // Back substitution.
    for (int k = n - 1; k >= 0; --k) {
        for (int j = k + 1; j <= std::min(n - 1, k + f.kl + f.ku); ++j)
            b[static_cast<std::size_t>(k)] -= f.get(k, j) * b[static_cast<std::size_t>(j)];
        b[static_cast<std::size_t>(k)] /= f.get(k, k);
    }
}

} // namespace convgreen::detail
