#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "assumptions.hpp"
#include "detail/rootfinding.hpp"
#include "errors.hpp"
#include "operators.hpp"

namespace convgreen {

enum class RootClass { stable, on_circle, unstable };

// The dispersion roots at one z, classified by modulus against the unit
// circle with a small tolerance band.
struct SpectralSplit {
    cplx z{0.0, 0.0};
    std::vector<std::pair<cplx, RootClass>> roots;
    int n_stable = 0;
    int n_circle = 0;
    int n_unstable = 0;
};

// Coefficients c_0..c_{p+r} (low to high) of kappa^r * sum_l A_l(z) kappa^l,
// the polynomial whose roots are the dispersion roots at z.
inline std::vector<cplx> dispersion_poly(const SchemePair& pair, cplx z, double lead_tol = 1e-12) {
    const int d = pair.r() + pair.p();
    std::vector<cplx> c(static_cast<std::size_t>(d + 1));
    for (int i = 0; i <= d; ++i) c[static_cast<std::size_t>(i)] = coeff_A(pair, i - pair.r(), z);
    const double scale = pair_scale(pair) * (1.0 + std::abs(z));
    if (std::abs(c.back()) < lead_tol * scale)
        throw LeadingCoefficientZero("dispersion_poly: A_p(z) vanishes at this z");
    return c;
}

inline SpectralSplit dispersion_roots(const SchemePair& pair, cplx z, double circle_tol = 1e-8) {
    SpectralSplit out;
    out.z = z;
    for (const cplx& root : detail::aberth_roots(dispersion_poly(pair, z))) {
        const double m = std::abs(root);
        RootClass cls;
        if (m < 1.0 - circle_tol) { cls = RootClass::stable; ++out.n_stable; }
        else if (m > 1.0 + circle_tol) { cls = RootClass::unstable; ++out.n_unstable; }
        else { cls = RootClass::on_circle; ++out.n_circle; }
        out.roots.emplace_back(root, cls);
    }
    std::sort(out.roots.begin(), out.roots.end(),
              [](const auto& a, const auto& b) { return std::abs(a.first) < std::abs(b.first); });
    return out;
}

// Away from the modulus-one values of F, the split must be exactly
// (r stable, 0 on the circle, p unstable); this sweeps a batch of z samples
// and records every violation.
struct SplittingReport {
    int checked = 0;
    int skipped = 0;
    struct Violation {
        cplx z;
        int n_stable, n_circle, n_unstable;
    };
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

inline SplittingReport verify_splitting(const SchemePair& pair,
                                        const std::vector<cplx>& z_samples,
                                        const std::vector<cplx>& exclude_z = {},
                                        double margin = 1e-3,
                                        double circle_tol = 1e-8) {
    SplittingReport rep;
    for (const cplx& z : z_samples) {
        bool near_excluded = std::abs(z) < 1.0;
        for (const cplx& ze : exclude_z) near_excluded = near_excluded || std::abs(z - ze) < margin;
        if (near_excluded) { ++rep.skipped; continue; }
        const SpectralSplit s = dispersion_roots(pair, z, circle_tol);
        ++rep.checked;
        if (s.n_stable != pair.r() || s.n_circle != 0 || s.n_unstable != pair.p())
            rep.violations.push_back({z, s.n_stable, s.n_circle, s.n_unstable});
    }
    return rep;
}

// The companion matrix of the dispersion polynomial: first row
// -A_{p-1}/A_p, ..., -A_{-r}/A_p, ones on the subdiagonal.  Its eigenvalues
// are the dispersion roots.
struct CompanionMatrix {
    cplx z{0.0, 0.0};
    int dim = 0;
    std::vector<cplx> entries; // row-major dim x dim

    cplx at(int i, int j) const { return entries[static_cast<std::size_t>(i * dim + j)]; }
    cplx& at(int i, int j) { return entries[static_cast<std::size_t>(i * dim + j)]; }
};

inline CompanionMatrix companion(const SchemePair& pair, cplx z) {
    const std::vector<cplx> c = dispersion_poly(pair, z); // throws if A_p(z) = 0
    CompanionMatrix M;
    M.z = z;
    M.dim = pair.r() + pair.p();
    M.entries.assign(static_cast<std::size_t>(M.dim) * static_cast<std::size_t>(M.dim), cplx(0.0, 0.0));
    const cplx lead = c.back();
    for (int j = 0; j < M.dim; ++j)
        M.at(0, j) = -c[static_cast<std::size_t>(M.dim - 1 - j)] / lead;
    for (int i = 1; i < M.dim; ++i) M.at(i, i - 1) = cplx(1.0, 0.0);
    return M;
}

// Holomorphic continuation of the dispersion root that equals t.kappa at
// z = t.z: predictor-corrector marching along the straight segment from
// t.z to z, correcting with Newton on F(kappa) - z = 0.
inline cplx continue_branch(const SchemePair& pair, const TangencyPoint& t, cplx z,
                            double branch_radius = 0.2,
                            double residual_tol = 1e-12,
                            double pole_tol = 1e-12) {
    if (std::abs(z - t.z) > branch_radius)
        throw ParameterOutOfRange("continue_branch: z outside the branch radius");

    auto newton = [&](cplx kappa, cplx target, int iters) -> std::pair<bool, cplx> {
        for (int it = 0; it < iters; ++it) {
            const cplx f = eval_F(pair, kappa, pole_tol) - target;
            if (std::abs(f) < residual_tol * (1.0 + std::abs(target))) return {true, kappa};
            const cplx df = eval_F_derivative(pair, kappa, pole_tol);
            if (std::abs(df) < 1e-300) return {false, kappa};
            kappa -= f / df;
        }
        const cplx f = eval_F(pair, kappa, pole_tol) - target;
        return {std::abs(f) < residual_tol * (1.0 + std::abs(target)), kappa};
    };

    cplx kappa = t.kappa;
    double s = 0.0;
    double ds = 1.0;
    int halvings = 0;
    while (s < 1.0) {
        const double s_next = std::min(1.0, s + ds);
        const cplx z_cur = t.z + s * (z - t.z);
        const cplx z_next = t.z + s_next * (z - t.z);
        // Euler predictor along dkappa/dz = 1/F'(kappa).
        cplx kappa_pred = kappa;
        const cplx df = eval_F_derivative(pair, kappa, pole_tol);
        if (std::abs(df) > 1e-300) kappa_pred += (z_next - z_cur) / df;
        auto [converged, kappa_new] = newton(kappa_pred, z_next, 30);
        const double step_size = std::abs(kappa_pred - kappa) + 1e-8 * (1.0 + std::abs(kappa));
        if (!converged || std::abs(kappa_new - kappa_pred) > std::max(0.5 * step_size, 1e-6)) {
            ds *= 0.5;
            if (++halvings > 40)
                throw BranchLost("continue_branch: continuation step collapsed before reaching z");
            continue;
        }
        kappa = kappa_new;
        s = s_next;
    }
    return kappa;
}

} // namespace convgreen
