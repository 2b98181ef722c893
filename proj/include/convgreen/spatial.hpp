#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "assumptions.hpp"
#include "detail/banded.hpp"
#include "detail/rootfinding.hpp"
#include "errors.hpp"
#include "green_profile.hpp"
#include "operators.hpp"
#include "spectral.hpp"

namespace convgreen {

struct SpatialConfig {
    double pole_tol = 1e-12;
    double circle_tol = 1e-8;      // root classification band around |kappa| = 1
    double near_tol = 1e-6;        // required distance from z to the spectrum curve
    int curve_samples = 1 << 11;   // sampling of the curve for the distance precheck
    double cert_tol = 1e-12;       // sup-difference threshold for the doubling certificate
    double residual_tol = 1e-9;    // post-solve residual gate
    int max_half_width = 1 << 16;  // cap on the truncation half-width
    double root_sep_tol = 1e-7;    // minimal root separation for the modal route
    double window_floor = 1e-16;   // magnitude cut for auto-sized modal windows
    int window_cap = 1 << 17;      // hard cap on auto-sized windows
};

// Distance from z to the image of the unit circle under F (where the
// resolvent ceases to exist).  A coarse scan finds the nearest sample; a
// golden-section pass then shrinks the bracket so the result resolves
// distances far below the sample spacing.
inline double spectrum_distance(const SchemePair& pair, cplx z, const SpatialConfig& cfg = {}) {
    const double two_pi = 2.0 * std::numbers::pi;
    auto gap = [&](double xi) { return std::abs(z - eval_F(pair, std::polar(1.0, xi), cfg.pole_tol)); };
    double dist = std::numeric_limits<double>::infinity();
    int best = 0;
    for (int k = 0; k < cfg.curve_samples; ++k) {
        const double d = gap(two_pi * k / cfg.curve_samples);
        if (d < dist) {
            dist = d;
            best = k;
        }
    }
    const double h = two_pi / cfg.curve_samples;
    double lo = two_pi * best / cfg.curve_samples - h;
    double hi = lo + 2.0 * h;
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - inv_phi * (hi - lo), x2 = lo + inv_phi * (hi - lo);
    double f1 = gap(x1), f2 = gap(x2);
    for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = gap(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = gap(x2);
        }
    }
    return std::min({dist, f1, f2});
}

// Residual of the defining recurrence sum_l A_l(z) G(j+l) = (Q1 delta)_j,
// with G extended by zero outside its window; the sup is taken over every
// row that touches the window.
inline double resolvent_residual(const SchemePair& pair, cplx z, const GreenProfile& g) {
    double worst = 0.0;
    for (long j = g.j_min - pair.p(); j <= g.j_max + pair.r(); ++j) {
        cplx acc(0.0, 0.0);
        for (int l = -pair.r(); l <= pair.p(); ++l)
            acc += coeff_A(pair, l, z) * g.at(j + l);
        const cplx rhs = (j >= -pair.p() && j <= pair.r()) ? pair.q1.coeff(static_cast<int>(-j)) : cplx(0.0, 0.0);
        worst = std::max(worst, std::abs(acc - rhs));
    }
    return worst;
}

namespace detail_spatial {

inline GreenProfile solve_window(const SchemePair& pair, cplx z, long J) {
    const int n = static_cast<int>(2 * J + 1);
    const int kl = pair.r(), ku = pair.p();
    detail::BandedLU lu = detail::banded_factor(n, kl, ku, [&](int i, int i2) {
        return coeff_A(pair, i2 - i, z);
    });
    std::vector<cplx> b(static_cast<std::size_t>(n), cplx(0.0, 0.0));
    for (long j = -pair.p(); j <= pair.r(); ++j)
        b[static_cast<std::size_t>(j + J)] = pair.q1.coeff(static_cast<int>(-j));
    detail::banded_solve(lu, b);
    GreenProfile g = make_profile(-J, J);
    g.values = std::move(b);
    return g;
}

} // namespace detail_spatial

// G_z on [-half_width, half_width] from a truncated banded solve with zero
// exterior values.  The window is internally doubled until two successive
// solves agree in sup norm, so the returned values carry a convergence
// certificate.
inline GreenProfile green_truncated(const SchemePair& pair, cplx z, long half_width = 64,
                                    const SpatialConfig& cfg = {}) {
    const long J_req = std::max<long>(half_width, 10L * (pair.r() + pair.p()));
    if (spectrum_distance(pair, z, cfg) < cfg.near_tol)
        throw NearSpectrum("green_truncated: z is too close to the spectrum curve");

    long J = J_req;
    GreenProfile prev;
    try {
        prev = detail_spatial::solve_window(pair, z, J);
    } catch (const SolverSingular&) {
        throw NearSpectrum("green_truncated: truncated system singular at this z");
    }
    for (;;) {
        const long J2 = 2 * J;
        if (J2 > cfg.max_half_width)
            throw NotConverged("green_truncated: window doubling cap reached without certification");
        GreenProfile next;
        try {
            next = detail_spatial::solve_window(pair, z, J2);
        } catch (const SolverSingular&) {
            throw NearSpectrum("green_truncated: truncated system singular at this z");
        }
        double diff = 0.0;
        for (long j = -J; j <= J; ++j) diff = std::max(diff, std::abs(next.at(j) - prev.at(j)));
        if (next.max_abs() > 1e14)
            throw NearSpectrum("green_truncated: solution blows up; z is effectively on the spectrum");
        if (diff < cfg.cert_tol) {
            GreenProfile out = make_profile(-J_req, J_req,
                                            ProfileMeta{"truncated", pair.name, z, {}});
            for (long j = -J_req; j <= J_req; ++j) out.ref(j) = next.at(j);
            if (resolvent_residual(pair, z, next) > cfg.residual_tol)
                throw NearSpectrum("green_truncated: residual above tolerance; z too close to the spectrum");
            return out;
        }
        prev = std::move(next);
        J = J2;
    }
}

// The eigenmode data behind the closed-form (modal) route: dispersion roots
// split into the r stable and p unstable families, with residue weights
// 1/P'(kappa_m) of the dispersion polynomial P.
struct ModalData {
    cplx z{0.0, 0.0};
    int r = 0, p = 0;
    std::vector<cplx> stable, unstable;          // roots
    std::vector<cplx> w_stable, w_unstable;      // 1/P'(root)

    // Lattice fundamental solution of sum_l A_l(z) H(q+l) = delta_{q,0}.
    // The two formulas agree on the overlap 1-r <= q <= p-1 because the
    // full residue sum of kappa^{q+r-1}/P vanishes there.
    cplx fundamental(long q) const {
        if (q >= 1 - r) return stable_mode_sum(q);
        return unstable_mode_sum(q);
    }

    cplx stable_mode_sum(long q) const {
        cplx acc(0.0, 0.0);
        for (std::size_t m = 0; m < stable.size(); ++m)
            acc += w_stable[m] * power(stable[m], q + r - 1);
        return acc;
    }

    cplx unstable_mode_sum(long q) const {
        cplx acc(0.0, 0.0);
        for (std::size_t m = 0; m < unstable.size(); ++m)
            acc -= w_unstable[m] * power(unstable[m], q + r - 1);
        return acc;
    }

    static cplx power(cplx base, long e) {
        if (e == 0) return cplx(1.0, 0.0);
        if (base == cplx(0.0, 0.0)) return e > 0 ? cplx(0.0, 0.0) : cplx(0.0, 0.0);
        return std::pow(base, cplx(static_cast<double>(e), 0.0));
    }
};

inline ModalData modal_data(const SchemePair& pair, cplx z, const SpatialConfig& cfg = {}) {
    const SpectralSplit split = dispersion_roots(pair, z, cfg.circle_tol);
    if (split.n_stable != pair.r() || split.n_circle != 0 || split.n_unstable != pair.p())
        throw SplitMismatch("modal_data: root counts differ from (r, 0, p) at this z");

    double scale = 0.0;
    for (const auto& [root, cls] : split.roots) scale = std::max(scale, std::abs(root));
    for (std::size_t i = 0; i < split.roots.size(); ++i)
        for (std::size_t k = i + 1; k < split.roots.size(); ++k)
            if (std::abs(split.roots[i].first - split.roots[k].first) < cfg.root_sep_tol * std::max(1.0, scale))
                throw DegenerateRoots("modal_data: clustered dispersion roots; residue weights ill-conditioned");

    const std::vector<cplx> P = dispersion_poly(pair, z);
    ModalData md;
    md.z = z;
    md.r = pair.r();
    md.p = pair.p();
    for (const auto& [root, cls] : split.roots) {
        cplx value, deriv;
        detail::horner(P, root, value, deriv);
        if (std::abs(deriv) == 0.0)
            throw DegenerateRoots("modal_data: vanishing derivative at a dispersion root");
        if (cls == RootClass::stable) {
            md.stable.push_back(root);
            md.w_stable.push_back(1.0 / deriv);
        } else {
            md.unstable.push_back(root);
            md.w_unstable.push_back(1.0 / deriv);
        }
    }
    return md;
}

// G_z(j) = sum_q (Q1 delta)_q H(j - q): the fundamental solution convolved
// with the finitely supported right-hand side.
inline cplx modal_value(const SchemePair& pair, const ModalData& md, long j) {
    cplx acc(0.0, 0.0);
    for (long q = -pair.p(); q <= pair.r(); ++q) {
        const cplx s = pair.q1.coeff(static_cast<int>(-q));
        if (s != cplx(0.0, 0.0)) acc += s * md.fundamental(j - q);
    }
    return acc;
}

// Pure-mode sums: for j >= r+1 the profile is exactly the stable sum, for
// j <= -p-1 exactly the unstable sum (structural support of the two
// spectral components).
inline cplx modal_stable_part(const SchemePair& pair, const ModalData& md, long j) {
    cplx acc(0.0, 0.0);
    for (long q = -pair.p(); q <= pair.r(); ++q) {
        const cplx s = pair.q1.coeff(static_cast<int>(-q));
        if (s != cplx(0.0, 0.0)) acc += s * md.stable_mode_sum(j - q);
    }
    return acc;
}

inline cplx modal_unstable_part(const SchemePair& pair, const ModalData& md, long j) {
    cplx acc(0.0, 0.0);
    for (long q = -pair.p(); q <= pair.r(); ++q) {
        const cplx s = pair.q1.coeff(static_cast<int>(-q));
        if (s != cplx(0.0, 0.0)) acc += s * md.unstable_mode_sum(j - q);
    }
    return acc;
}

// Closed-form spatial Green's function from the eigenmode expansion.  When
// the roots cluster (residue weights unreliable) this falls back to the
// certified truncated solve and tags the profile accordingly.
inline GreenProfile green_modal(const SchemePair& pair, cplx z,
                                std::optional<long> jmin = {}, std::optional<long> jmax = {},
                                const SpatialConfig& cfg = {}) {
    ModalData md;
    try {
        md = modal_data(pair, z, cfg);
    } catch (const DegenerateRoots&) {
        const long J = std::max({std::llabs(jmin.value_or(0)), std::llabs(jmax.value_or(0)), 64LL});
        GreenProfile g = green_truncated(pair, z, J, cfg);
        g.meta.source = "truncated:degenerate-roots-fallback";
        if (jmin && jmax) {
            GreenProfile out = make_profile(*jmin, *jmax, g.meta);
            for (long j = *jmin; j <= *jmax; ++j) out.ref(j) = g.at(j);
            return out;
        }
        return g;
    }

    long lo, hi;
    if (jmin && jmax) {
        lo = *jmin;
        hi = *jmax;
    } else {
        // Size the window from the extreme mode moduli so the boundary
        // values sit at the configured floor.
        const double logfloor = std::log(cfg.window_floor);
        double rate_s = 0.0;
        for (const cplx& k : md.stable) rate_s = std::max(rate_s, std::abs(k));
        double rate_u = std::numeric_limits<double>::infinity();
        for (const cplx& k : md.unstable) rate_u = std::min(rate_u, std::abs(k));
        hi = pair.p() + pair.r() + 2;
        if (!md.stable.empty() && rate_s > 0.0)
            hi += static_cast<long>(std::min<double>(cfg.window_cap, logfloor / std::log(rate_s)));
        lo = -(pair.p() + pair.r() + 2);
        if (!md.unstable.empty() && std::isfinite(rate_u))
            lo -= static_cast<long>(std::min<double>(cfg.window_cap, -logfloor / std::log(rate_u)));
    }
    GreenProfile g = make_profile(lo, hi, ProfileMeta{"modal", pair.name, z, {}});
    for (long j = lo; j <= hi; ++j) g.ref(j) = modal_value(pair, md, j);
    return g;
}

// Augmented one-step form of the resolvent recurrence: the state W_j packs
// p + r consecutive profile values so that W_{j+1} = M(z) W_j plus a source
// term supported on the stencil of Q1 delta.
struct AugmentedState {
    long j = 0;
    std::vector<cplx> w;
};

inline AugmentedState augmented_state(const GreenProfile& g, const SchemePair& pair, long j) {
    AugmentedState s;
    s.j = j;
    const int d = pair.r() + pair.p();
    s.w.resize(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) s.w[static_cast<std::size_t>(k)] = g.at(j + pair.p() - 1 - k);
    return s;
}

struct DecayRates {
    double left_rate = 0.0;   // slope of log|G| vs |j| on the left side (negative)
    double right_rate = 0.0;  // slope of log|G| vs j on the right side (negative)
};

// Least-squares decay exponents of a profile, measured on the outermost
// usable points of each side.
inline DecayRates decay_rates(const GreenProfile& g, int points_per_side = 12, double floor_mag = 1e-14) {
    auto fit_side = [&](bool right) {
        std::vector<long> idx;
        if (right) {
            for (long j = 1; j <= g.j_max; ++j)
                if (std::abs(g.at(j)) > floor_mag) idx.push_back(j);
        } else {
            for (long j = g.j_min; j <= -1; ++j)
                if (std::abs(g.at(j)) > floor_mag) idx.push_back(j);
        }
        if (idx.empty()) throw Underflow("decay_rates: no values above the magnitude floor");
        // Keep the outermost stretch.
        if (static_cast<int>(idx.size()) > points_per_side) {
            if (right) idx.erase(idx.begin(), idx.end() - points_per_side);
            else idx.erase(idx.begin() + points_per_side, idx.end());
        }
        if (static_cast<int>(idx.size()) < 8)
            throw WindowTooShort("decay_rates: fewer than 8 usable points on one side");
        // Least squares of log|G| against j.
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (long j : idx) {
            const double x = static_cast<double>(j);
            const double y = std::log(std::abs(g.at(j)));
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        const double m = static_cast<double>(idx.size());
        return (m * sxy - sx * sy) / (m * sxx - sx * sx);
    };
    DecayRates out;
    out.right_rate = fit_side(true);
    out.left_rate = -fit_side(false);
    return out;
}

// ---------------------------------------------------------------------------
// Pointwise exponential bounds on G_z across the resolvent set: a sweep far
// from the curve (a), branch tracking next to each modulus-one point (b),
// and the large-|z| regime for implicit pairs (c).

struct SpatialBoundsReport {
    struct ClauseA {
        bool pass = false;
        double C = 0.0, c = 0.0;
        int samples = 0;
    } clause_a;

    struct BranchTrack {
        int tangency = 0;
        double eps = 0.0;
        std::string side;        // "right" or "left"
        double predicted = 0.0;  // log |kappa_branch(z)| based rate
        double measured = 0.0;
        double opposite = 0.0;   // measured rate on the other side (0 if untested)
        bool pass = false;
    };
    std::vector<BranchTrack> clause_b;
    bool clause_b_pass = false;

    struct ClauseC {
        bool applicable = false;
        bool pass = true;
        double rate_near = 0.0;  // |z| = 10
        double rate_far = 0.0;   // |z| = 1000
    } clause_c;

    bool all_pass() const {
        return clause_a.pass && clause_b_pass && (!clause_c.applicable || clause_c.pass);
    }
};

inline SpatialBoundsReport verify_spatial_bounds(const SchemePair& pair,
                                                 const std::vector<TangencyPoint>& tangencies,
                                                 const SpatialConfig& cfg = {}) {
    SpatialBoundsReport rep;
    const double two_pi = 2.0 * std::numbers::pi;

    // (a) one uniform exponential envelope across circles of |z|.
    {
        std::vector<GreenProfile> profs;
        for (double radius : {1.0 + 1e-3, 1.1, 2.0, 10.0}) {
            for (int a = 0; a < 16; ++a) {
                const cplx z = std::polar(radius, two_pi * a / 16);
                bool near_tangency = false;
                for (const TangencyPoint& t : tangencies)
                    near_tangency = near_tangency || std::abs(z - t.z) < 0.05;
                if (near_tangency) continue;
                const long J = (radius < 1.05) ? 8192 : 256;
                profs.push_back(green_truncated(pair, z, J, cfg));
            }
        }
        double c_min = std::numeric_limits<double>::infinity();
        for (const GreenProfile& g : profs) {
            const DecayRates rates = decay_rates(g, 32);
            c_min = std::min({c_min, -rates.right_rate, -rates.left_rate});
        }
        const double c = 0.9 * c_min;
        // Work in the log domain: exp(c |j|) overflows on wide windows even
        // though the product |G| exp(c |j|) itself stays bounded.  Entries
        // below the smallest normal magnitude are underflow dust from the
        // truncated solve (the far tail saturates at a subnormal plateau),
        // so the envelope is certified over the representable range only.
        double logC = -std::numeric_limits<double>::infinity();
        for (const GreenProfile& g : profs)
            for (long j = g.j_min; j <= g.j_max; ++j) {
                const double mag = std::abs(g.at(j));
                if (mag >= std::numeric_limits<double>::min())
                    logC = std::max(logC, std::log(mag) + c * std::labs(j));
            }
        const double C = std::exp(logC);
        rep.clause_a = {c > 0.0 && C < 1e9, C, c, static_cast<int>(profs.size())};
    }

    // (b) branch tracking near each modulus-one point.
    rep.clause_b_pass = true;
    for (std::size_t k = 0; k < tangencies.size(); ++k) {
        const TangencyPoint& t = tangencies[k];
        for (double eps : {1e-1, 1e-2, 1e-3}) {
            const cplx z = t.z * (1.0 + eps);
            const cplx kb = continue_branch(pair, t, z);
            const double predicted = (t.alpha > 0.0) ? std::log(std::abs(kb)) : -std::log(std::abs(kb));
            const long J = std::clamp<long>(static_cast<long>(std::ceil(40.0 / std::max(1e-4, std::fabs(predicted)))),
                                            256, 1L << 15);
            const GreenProfile g = green_truncated(pair, z, J, cfg);
            const DecayRates rates = decay_rates(g, 64);
            SpatialBoundsReport::BranchTrack bt;
            bt.tangency = static_cast<int>(k);
            bt.eps = eps;
            bt.side = (t.alpha > 0.0) ? "right" : "left";
            bt.predicted = predicted;
            bt.measured = (t.alpha > 0.0) ? rates.right_rate : rates.left_rate;
            const double ratio = bt.measured / bt.predicted;
            bt.pass = ratio > 0.5 && ratio < 2.0;
            if (t.group.size() <= 1) {
                // Opposite side must keep a uniform strictly positive rate.
                bt.opposite = (t.alpha > 0.0) ? rates.left_rate : rates.right_rate;
                bt.pass = bt.pass && (-bt.opposite > 0.05);
            }
            rep.clause_b_pass = rep.clause_b_pass && bt.pass;
            rep.clause_b.push_back(bt);
        }
    }

    // (c) implicit pairs: the decay rate must not collapse as |z| grows.
    if (!pair.q1.is_identity()) {
        rep.clause_c.applicable = true;
        const DecayRates near_rates = decay_rates(green_truncated(pair, cplx(10.0, 0.0), 64, cfg));
        const DecayRates far_rates = decay_rates(green_truncated(pair, cplx(1000.0, 0.0), 64, cfg));
        rep.clause_c.rate_near = std::min(-near_rates.left_rate, -near_rates.right_rate);
        rep.clause_c.rate_far = std::min(-far_rates.left_rate, -far_rates.right_rate);
        rep.clause_c.pass = rep.clause_c.rate_far >= 0.5 * rep.clause_c.rate_near;
    }
    return rep;
}

// Far-field envelope data: the asymptotic spatial decay rate at large |z|
// and a constant such that |G^n_j| <= C e^{-(c/2)|j|} far outside the wave
// cone, via the Cauchy integral over a circle of radius R0.
struct FarFieldFit {
    double c = 0.0;      // asymptotic spatial rate (from |z| = 1024)
    double C = 0.0;      // envelope constant
    double R0 = 0.0;     // radius realizing the envelope
    int L = 0;           // wave-cone multiple beyond which the far-field rule applies
};

inline FarFieldFit far_field_fit(const SchemePair& pair, const SpatialConfig& cfg = {}) {
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<double> radii;
    for (double R = 2.0; R <= 1024.0; R *= 2.0) radii.push_back(R);

    auto sweep = [&](double R) {
        double rate = std::numeric_limits<double>::infinity();
        double C = 0.0;
        for (int a = 0; a < 8; ++a) {
            const cplx z = std::polar(R, two_pi * a / 8);
            const GreenProfile g = green_truncated(pair, z, 64, cfg);
            const DecayRates rates = decay_rates(g);
            rate = std::min({rate, -rates.left_rate, -rates.right_rate});
            for (long j = g.j_min; j <= g.j_max; ++j)
                C = std::max(C, std::abs(g.at(j)));
        }
        return std::pair<double, double>(rate, C);
    };

    FarFieldFit fit;
    const auto [c_inf, C_last] = sweep(radii.back());
    fit.c = c_inf;

    // Smallest radius whose measured rate beats the Cauchy growth penalty
    // (n+1) log R <= 2 n log R for the |j| > 10 n regime.
    for (double R : radii) {
        const auto [rate, C] = sweep(R);
        if (rate - 0.2 * std::log(R) >= 0.5 * c_inf + 0.05) {
            fit.R0 = R;
            // |G^n_j| <= R^{n+1} max_{|z|=R} |G_z(j)|; fold the per-point
            // decay into the constant with a safety factor.
            double Cenv = 0.0;
            for (int a = 0; a < 8; ++a) {
                const cplx z = std::polar(R, two_pi * a / 8);
                const GreenProfile g = green_truncated(pair, z, 64, cfg);
                for (long j = g.j_min; j <= g.j_max; ++j)
                    Cenv = std::max(Cenv, std::abs(g.at(j)) * std::exp(rate * std::labs(j)));
            }
            fit.C = 2.0 * R * Cenv;
            break;
        }
    }
    if (fit.R0 == 0.0)
        throw NoValidEnvelope("far_field_fit: no sweep radius beats the Cauchy growth penalty");

    const double lnR = std::max(std::numbers::pi / 2.0, std::log(fit.R0));
    fit.L = std::max({pair.p(), pair.r(), static_cast<int>(std::ceil(2.0 * lnR / fit.c))}) + 1;
    return fit;
}

} // namespace convgreen
