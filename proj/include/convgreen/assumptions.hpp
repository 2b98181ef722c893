#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "detail/fd.hpp"
#include "detail/rootfinding.hpp"
#include "errors.hpp"
#include "operators.hpp"

namespace convgreen {

// Local data of one modulus-one point of the amplification factor:
//   F(kappa e^{i xi}) = z * exp(-i alpha xi - beta xi^{2 mu} + O(xi^{2 mu + 1})).
struct TangencyPoint {
    cplx kappa{1.0, 0.0};  // the point on the unit circle
    double xi = 0.0;       // its angle in [0, 2*pi)
    cplx z{1.0, 0.0};      // F(kappa), also on the unit circle
    double theta = 0.0;    // z = e^{i theta}, theta in (-pi, pi]
    double alpha = 0.0;    // drift (nonzero)
    int mu = 1;            // half the dissipation order
    double beta = 0.0;     // dissipation strength (positive)
    std::vector<int> group; // indices sharing the same z (one or two entries)
};

struct AssumptionFailure {
    std::string code;      // machine-readable, e.g. "Q1_SINGULAR"
    std::string location;  // where on the circle / which tangency
    std::string detail;    // human-readable explanation
};

struct AssumptionReport {
    bool q1_invertible = false;
    bool index_zero = false;
    bool endpoints_ok = false;
    bool support_ok = false;
    bool tangencies_ok = false;
    bool grouping_ok = false;
    double q1_min_modulus = 0.0;
    std::optional<int> q1_winding;
    std::vector<TangencyPoint> tangencies;
    std::vector<AssumptionFailure> failures;

    bool all_ok() const { return failures.empty(); }
};

struct AnalysisConfig {
    double pole_tol = 1e-12;        // relative |Q1-hat| floor when evaluating F
    int q1_grid = 1 << 12;          // circle grid for the invertibility scan
    double q1_min_modulus = 1e-8;   // relative floor for min |Q1-hat| on the circle
    int modulus_grid = 1 << 14;     // circle grid for the |F| <= 1 scan
    double tangency_tol = 1e-9;     // tolerance on 1 - |F|^2 for the global bounds
    double coarse_cut = 1e-3;       // grid minima below this become candidates
    double refine_target = 1e-13;   // required residual of 1 - |F|^2 at a refined point
    double circle_band = 0.02;      // how close numerator roots must be to the circle
    double cluster_radius = 0.05;   // angular radius when pooling multiple roots
    double dedup_tol = 1e-11;       // candidates closer than this are the same point
    double expansion_tol = 1e-6;    // vanishing threshold for Taylor real parts
    double fd_base_step = 1e-2;     // base step of the derivative extraction
    int fd_levels = 4;              // Richardson levels at low derivative orders
    int max_mu = 4;                 // dissipation order search cap (orders up to 2*max_mu)
    double group_tol = 1e-7;        // equality threshold on z when grouping
};

struct Q1Check {
    bool modulus_ok = false;
    bool winding_ok = false;
    double min_modulus = 0.0;
    std::optional<int> winding;

    bool ok() const { return modulus_ok && winding_ok; }
};

// The operator Q1 must be invertible on square-summable sequences: its
// symbol stays away from zero on the unit circle and winds zero times
// around the origin.
inline Q1Check check_q1_invertible(const SchemePair& pair, const AnalysisConfig& cfg = {}) {
    Q1Check out;
    const double scale = symbol_scale(pair.q1);
    const double two_pi = 2.0 * std::numbers::pi;
    double min_mod = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.q1_grid; ++k)
        min_mod = std::min(min_mod, std::abs(eval_q_symbol(pair.q1, std::polar(1.0, two_pi * k / cfg.q1_grid))));
    out.min_modulus = min_mod;
    out.modulus_ok = min_mod > cfg.q1_min_modulus * scale;

    // Root-level confirmation: no zero of kappa^r * Q1-hat may sit on (or
    // hug) the unit circle.
    if (out.modulus_ok && !pair.q1.is_identity()) {
        try {
            for (const cplx& root : detail::aberth_roots(pair.q1.coeffs))
                if (std::abs(std::abs(root) - 1.0) < cfg.q1_min_modulus) out.modulus_ok = false;
        } catch (const Error&) {
            out.modulus_ok = false;
        }
    }

    if (out.modulus_ok) {
        try {
            out.winding = winding_number(pair.q1, cfg.q1_grid, cfg.q1_min_modulus);
            out.winding_ok = (*out.winding == 0);
        } catch (const Error&) {
            out.winding_ok = false;
        }
    }
    return out;
}

// The endpoint coefficient functions A_{-r}(z) = z a_{-r,1} - a_{-r,0} and
// A_p(z) must not vanish for |z| >= 1: either the a_{.,1} part is zero and
// the a_{.,0} part is not (constant function), or the unique root
// a_{.,0}/a_{.,1} lies strictly inside the unit disk.
inline bool check_endpoints(const SchemePair& pair, double tol = 1e-12) {
    for (const int l : {-pair.r(), pair.p()}) {
        const cplx a1 = pair.q1.coeff(l);
        const cplx a0 = pair.q0.coeff(l);
        if (a1 == cplx(0.0, 0.0)) {
            if (a0 == cplx(0.0, 0.0)) return false; // offset carries nothing at all
        } else {
            if (!(std::abs(a0 / a1) < 1.0 - tol)) return false;
        }
    }
    return true;
}

// Either Q1 is the identity, or it spans the full stencil on both sides.
inline bool check_support(const SchemePair& pair) {
    if (pair.q1.is_identity()) return true;
    return pair.q1.coeff(-pair.r()) != cplx(0.0, 0.0) && pair.q1.coeff(pair.p()) != cplx(0.0, 0.0);
}

namespace detail_assump {

// Laurent coefficients of |Q-hat(e^{i xi})|^2 = sum_d b_d e^{i d xi},
// b_d = sum_l a_l conj(a_{l-d}).
inline std::vector<cplx> modulus_squared_coeffs(const ConvolutionOperator& op) {
    const int D = op.r + op.p;
    std::vector<cplx> b(static_cast<std::size_t>(2 * D + 1), cplx(0.0, 0.0));
    for (int d = -D; d <= D; ++d) {
        cplx acc(0.0, 0.0);
        for (int l = -op.r; l <= op.p; ++l)
            acc += op.coeff(l) * std::conj(op.coeff(l - d));
        b[static_cast<std::size_t>(d + D)] = acc;
    }
    return b;
}

// Coefficients (low to high) of t^D * N(t) where
// N(e^{i xi}) = |Q1-hat|^2 - |Q0-hat|^2; its circle zeros are exactly the
// modulus-one points of F, with multiplicity 2*mu.
inline std::vector<cplx> tangency_polynomial(const SchemePair& pair) {
    std::vector<cplx> b1 = modulus_squared_coeffs(pair.q1);
    std::vector<cplx> b0 = modulus_squared_coeffs(pair.q0);
    std::vector<cplx> n(b1.size());
    for (std::size_t i = 0; i < n.size(); ++i) n[i] = b1[i] - b0[i];
    return n;
}

inline std::vector<cplx> poly_derivative(const std::vector<cplx>& c) {
    std::vector<cplx> d(c.size() > 1 ? c.size() - 1 : 0);
    for (std::size_t k = 1; k < c.size(); ++k)
        d[k - 1] = static_cast<double>(k) * c[k];
    return d;
}

inline double angle_in_turn(double xi);
inline double angular_distance(double a, double b);

// Sharpen a candidate circle zero of the polynomial to machine precision.
// A zero of multiplicity m is exactly a simple root of the (m-1)-th
// derivative, so Newton is run against successive derivatives, highest
// plausible multiplicity first.  A landing point is accepted only if it
// stays on the circle near the starting angle and every lower derivative
// down to the polynomial itself vanishes there (which certifies the
// multiplicity).  Returns true when xi_star was replaced.
inline bool polish_circle_zero(const std::vector<cplx>& tpoly, double& xi_star,
                               double circle_band, double cluster_radius, int max_mult) {
    const int deg = static_cast<int>(tpoly.size()) - 1;
    if (deg < 2) return false;
    const int top = std::min(max_mult, deg);
    std::vector<std::vector<cplx>> ladder{tpoly};
    while (static_cast<int>(ladder.size()) < top) ladder.push_back(poly_derivative(ladder.back()));
    std::vector<double> scale(ladder.size());
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        double s = 0.0;
        for (const cplx& c : ladder[k]) s += std::abs(c);
        scale[k] = s;
    }
    const double noise = 64.0 * deg * std::numeric_limits<double>::epsilon();
    for (int m = top; m >= 2; --m) {
        const std::vector<cplx>& dpoly = ladder[static_cast<std::size_t>(m - 1)];
        if (dpoly.size() < 2) continue;
        // Keep the iterate with the smallest residual: the Newton step
        // bottoms out at the evaluation noise, not at machine epsilon.
        cplx root = std::polar(1.0, xi_star), best = root;
        double best_v = std::numeric_limits<double>::infinity();
        for (int it = 0; it < 50; ++it) {
            cplx v, dv;
            detail::horner(dpoly, root, v, dv);
            if (std::abs(v) < best_v) {
                best_v = std::abs(v);
                best = root;
            }
            if (std::abs(dv) == 0.0) break;
            const cplx step = v / dv;
            root -= step;
            if (std::abs(step) <= 1e-16 * (1.0 + std::abs(root))) break;
        }
        const double xi_pol = std::arg(best);
        if (std::fabs(std::abs(best) - 1.0) >= circle_band) continue;
        if (angular_distance(xi_pol, xi_star) >= cluster_radius) continue;
        bool vanishes = best_v <= noise * scale[static_cast<std::size_t>(m - 1)];
        for (int k = 0; k + 1 < m && vanishes; ++k) {
            cplx v, dv;
            detail::horner(ladder[static_cast<std::size_t>(k)], best, v, dv);
            vanishes = std::abs(v) <= noise * scale[static_cast<std::size_t>(k)];
        }
        if (!vanishes) continue;
        xi_star = xi_pol;
        return true;
    }
    return false;
}

inline double angle_in_turn(double xi) {
    const double two_pi = 2.0 * std::numbers::pi;
    double a = std::fmod(xi, two_pi);
    if (a < 0.0) a += two_pi;
    return a;
}

inline double angular_distance(double a, double b) {
    const double two_pi = 2.0 * std::numbers::pi;
    double d = std::fabs(angle_in_turn(a) - angle_in_turn(b));
    return std::min(d, two_pi - d);
}

} // namespace detail_assump

// All points on the unit circle where |F| reaches one.  The scan also
// certifies |F| <= 1 globally (within tolerance) and that the modulus is
// not constant.  Candidates come from grid minima of 1 - |F|^2; each is
// sharpened to machine precision using the circle-zero cluster of the
// polynomial |Q1-hat|^2 - |Q0-hat|^2, whose centroid locates even multiple
// roots far better than any pointwise search.
inline std::vector<cplx> find_tangencies(const SchemePair& pair, const AnalysisConfig& cfg = {}) {
    const double two_pi = 2.0 * std::numbers::pi;
    const int N = cfg.modulus_grid;
    std::vector<double> g(static_cast<std::size_t>(N));
    double gmin = std::numeric_limits<double>::infinity();
    double gmax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < N; ++k) {
        const cplx F = eval_F(pair, std::polar(1.0, two_pi * k / N), cfg.pole_tol);
        g[static_cast<std::size_t>(k)] = 1.0 - std::norm(F);
        gmin = std::min(gmin, g[static_cast<std::size_t>(k)]);
        gmax = std::max(gmax, g[static_cast<std::size_t>(k)]);
    }
    if (gmax - gmin < cfg.tangency_tol)
        throw ConstantModulus("find_tangencies: |F| is constant on the unit circle");
    if (gmin < -cfg.tangency_tol)
        throw ModulusExceedsOne("find_tangencies: |F| exceeds one on the unit circle");

    // Grid local minima below the coarse cut are tangency candidates.
    std::vector<double> candidates;
    for (int k = 0; k < N; ++k) {
        const double gm = g[static_cast<std::size_t>((k + N - 1) % N)];
        const double gc = g[static_cast<std::size_t>(k)];
        const double gp = g[static_cast<std::size_t>((k + 1) % N)];
        if (gc <= gm && gc <= gp && gc < cfg.coarse_cut)
            candidates.push_back(two_pi * k / N);
    }

    // Circle-zero clusters of the modulus-difference polynomial.
    std::vector<cplx> circle_roots;
    std::vector<cplx> tpoly;
    try {
        tpoly = detail_assump::tangency_polynomial(pair);
        for (const cplx& t : detail::aberth_roots(tpoly))
            if (std::abs(std::abs(t) - 1.0) < cfg.circle_band) circle_roots.push_back(t);
    } catch (const Error&) {
        circle_roots.clear(); // fall back to bisection refinement below
    }

    auto g_exact = [&](double xi) {
        return 1.0 - std::norm(eval_F(pair, std::polar(1.0, xi), cfg.pole_tol));
    };
    auto dg_exact = [&](double xi) {
        // d/dxi of -|F(e^{i xi})|^2 = -2 Re( conj(F) F'(kappa) i kappa ).
        const cplx kappa = std::polar(1.0, xi);
        const cplx F = eval_F(pair, kappa, cfg.pole_tol);
        const cplx dF = eval_F_derivative(pair, kappa, cfg.pole_tol);
        return -2.0 * std::real(std::conj(F) * dF * cplx(0.0, 1.0) * kappa);
    };

    std::vector<double> refined;
    for (double xi0 : candidates) {
        // Prefer the root-cluster centroid near this candidate.
        cplx acc(0.0, 0.0);
        int count = 0;
        for (const cplx& t : circle_roots) {
            if (detail_assump::angular_distance(std::arg(t), xi0) < cfg.cluster_radius) {
                acc += t / std::abs(t);
                ++count;
            }
        }
        double xi_star;
        if (count > 0) {
            xi_star = std::arg(acc / static_cast<double>(count));
        } else {
            // Bisection on the derivative of 1 - |F|^2 across the grid cell.
            double lo = xi0 - two_pi / N, hi = xi0 + two_pi / N;
            double flo = dg_exact(lo), fhi = dg_exact(hi);
            if (flo > 0.0 || fhi < 0.0) {
                // No clean sign change: fall back to the grid point itself.
                xi_star = xi0;
            } else {
                for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = dg_exact(mid);
                    if (fm <= 0.0) { lo = mid; flo = fm; }
                    else { hi = mid; fhi = fm; }
                }
                xi_star = 0.5 * (lo + hi);
            }
        }
        // Both routes stall before machine precision (the cluster mean
        // carries the correlated polish bias of a multiple root; bisection
        // is noise-limited near an even-order minimum), so sharpen against
        // the derivative ladder of the tangency polynomial.
        if (tpoly.size() >= 3)
            detail_assump::polish_circle_zero(tpoly, xi_star, cfg.circle_band, cfg.cluster_radius,
                                              2 * cfg.max_mu);
        // Keep a point that lands a hair below the 2 pi seam on the zero side
        // so the sorted order of the tangencies does not depend on roundoff.
        double xi_turn = detail_assump::angle_in_turn(xi_star);
        if (two_pi - xi_turn < 1e-9) xi_turn -= two_pi;
        refined.push_back(xi_turn);
    }

    // Deduplicate (several grid minima may refine to one point), sort, and
    // run the coalescence check on what remains.
    std::sort(refined.begin(), refined.end());
    std::vector<double> unique_xi;
    for (double xi : refined) {
        if (!unique_xi.empty() && detail_assump::angular_distance(unique_xi.back(), xi) < cfg.dedup_tol) continue;
        if (!unique_xi.empty() && detail_assump::angular_distance(unique_xi.front(), xi) < cfg.dedup_tol) continue;
        unique_xi.push_back(xi);
    }
    for (std::size_t i = 0; i + 1 < unique_xi.size(); ++i)
        if (detail_assump::angular_distance(unique_xi[i], unique_xi[i + 1]) < 10.0 * cfg.tangency_tol)
            throw CoalescedTangencies("find_tangencies: two modulus-one points are too close to separate");
    if (unique_xi.size() >= 2 &&
        detail_assump::angular_distance(unique_xi.front(), unique_xi.back()) < 10.0 * cfg.tangency_tol)
        throw CoalescedTangencies("find_tangencies: two modulus-one points are too close to separate");

    std::vector<cplx> out;
    for (double xi : unique_xi) {
        if (std::fabs(g_exact(xi)) > cfg.refine_target)
            continue; // a strict local minimum of the modulus gap, not a tangency
        out.push_back(std::polar(1.0, xi));
    }
    return out;
}

namespace detail_assump {

// One Taylor coefficient c_m of xi |-> Log( F(kappa e^{i xi}) / F(kappa) ),
// via central finite differences and Richardson extrapolation.  Step and
// level counts shrink/grow with the order so the h^{-m} roundoff
// amplification stays below the decision tolerances.
inline detail::DerivativeEstimate taylor_coefficient(const SchemePair& pair, cplx kappa, int m,
                                                     const AnalysisConfig& cfg, double alpha_scale) {
    const cplx F0 = eval_F(pair, kappa, cfg.pole_tol);
    auto hfun = [&](double xi) {
        return std::log(eval_F(pair, kappa * std::polar(1.0, xi), cfg.pole_tol) / F0);
    };
    const int s = std::min(8, m + 2);
    // Dividing an eps-level cancellation error by h^m forbids small steps at
    // high orders, while the wide symmetric stencil keeps truncation at
    // O(h^{2s-m+2}) — so the step grows and the refinement shortens with m.
    double step;
    int levels;
    if (m <= 2) { step = cfg.fd_base_step; levels = cfg.fd_levels; }
    else if (m <= 4) { step = 8.0 * cfg.fd_base_step; levels = 2; }
    else if (m <= 6) { step = 12.0 * cfg.fd_base_step; levels = 2; }
    else { step = 16.0 * cfg.fd_base_step; levels = 2; }
    // Keep the widest stencil point well inside the principal branch.
    step = std::min(step, 2.8 / (s * (1.0 + alpha_scale)));
    detail::DerivativeEstimate d = detail::fd_derivative(hfun, m, 0.0, step, levels, s);
    double fact = 1.0;
    for (int i = 2; i <= m; ++i) fact *= i;
    d.value /= fact;
    d.error /= fact;
    return d;
}

} // namespace detail_assump

// Extract (alpha, mu, beta) at one tangency point from the Taylor expansion
// of the logarithm of the normalized amplification factor.  The group field
// is left empty; group_tangencies fills it.
inline TangencyPoint local_expansion(const SchemePair& pair, cplx kappa, const AnalysisConfig& cfg = {}) {
    TangencyPoint t;
    t.kappa = kappa / std::abs(kappa);
    t.xi = detail_assump::angle_in_turn(std::arg(t.kappa));
    t.z = eval_F(pair, t.kappa, cfg.pole_tol);
    t.theta = std::arg(t.z);

    const cplx c1 = detail_assump::taylor_coefficient(pair, t.kappa, 1, cfg, 0.0).value;
    if (std::fabs(c1.real()) > cfg.expansion_tol)
        throw ExpansionShapeViolated("local_expansion: first coefficient is not purely imaginary at " +
                                     std::to_string(t.xi));
    if (std::fabs(c1.imag()) < cfg.expansion_tol)
        throw ZeroDrift("local_expansion: drift vanishes at xi = " + std::to_string(t.xi));
    t.alpha = -c1.imag();

    // Walk the orders: real parts must stay zero until the first strictly
    // negative one, which must sit at an even order.
    const double alpha_scale = std::fabs(t.alpha);
    for (int m = 2; m <= 2 * cfg.max_mu; ++m) {
        const cplx cm = detail_assump::taylor_coefficient(pair, t.kappa, m, cfg, alpha_scale).value;
        if (std::fabs(cm.real()) <= cfg.expansion_tol) continue;
        if (m % 2 != 0)
            throw ExpansionShapeViolated("local_expansion: leading real part at odd order " +
                                         std::to_string(m) + " at xi = " + std::to_string(t.xi));
        if (cm.real() > 0.0)
            throw ModulusExceedsOne("local_expansion: positive real part at order " + std::to_string(m));
        t.mu = m / 2;
        t.beta = -cm.real();
        return t;
    }
    throw NotDissipative("local_expansion: no dissipative even order up to " +
                         std::to_string(2 * cfg.max_mu) + " at xi = " + std::to_string(t.xi));
}

// Partition the tangencies by their z value and enforce the grouping rule:
// at most two per value, and a pair must carry drifts of opposite signs.
inline std::vector<TangencyPoint> group_tangencies(std::vector<TangencyPoint> points,
                                                   const AnalysisConfig& cfg = {}) {
    const int K = static_cast<int>(points.size());
    std::vector<int> cls(static_cast<std::size_t>(K), -1);
    int n_classes = 0;
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < i; ++j) {
            if (std::abs(points[static_cast<std::size_t>(i)].z - points[static_cast<std::size_t>(j)].z) < cfg.group_tol) {
                cls[static_cast<std::size_t>(i)] = cls[static_cast<std::size_t>(j)];
                break;
            }
        }
        if (cls[static_cast<std::size_t>(i)] < 0) cls[static_cast<std::size_t>(i)] = n_classes++;
    }
    for (int c = 0; c < n_classes; ++c) {
        std::vector<int> members;
        for (int i = 0; i < K; ++i)
            if (cls[static_cast<std::size_t>(i)] == c) members.push_back(i);
        if (members.size() > 2)
            throw Hyp4Violation("group_tangencies: a modulus-one value is shared by more than two points");
        if (members.size() == 2) {
            const double prod = points[static_cast<std::size_t>(members[0])].alpha *
                                points[static_cast<std::size_t>(members[1])].alpha;
            if (!(prod < 0.0))
                throw Hyp4Violation("group_tangencies: paired tangencies must have drifts of opposite signs");
        }
        for (int i : members)
            points[static_cast<std::size_t>(i)].group = members;
    }
    return points;
}

// Run the whole assumption pipeline and collect failures instead of
// throwing, so a report can show everything that is wrong at once.
inline AssumptionReport analyze(const SchemePair& pair, const AnalysisConfig& cfg = {}) {
    AssumptionReport rep;

    const Q1Check q1 = check_q1_invertible(pair, cfg);
    rep.q1_invertible = q1.modulus_ok;
    rep.index_zero = q1.winding_ok;
    rep.q1_min_modulus = q1.min_modulus;
    rep.q1_winding = q1.winding;
    if (!q1.modulus_ok)
        rep.failures.push_back({"Q1_SINGULAR", "unit circle",
                                "min |Q1-hat| = " + std::to_string(q1.min_modulus)});
    if (q1.modulus_ok && !q1.winding_ok)
        rep.failures.push_back({"INDEX_NONZERO", "unit circle",
                                q1.winding ? "winding = " + std::to_string(*q1.winding)
                                           : "winding ambiguous"});

    rep.endpoints_ok = check_endpoints(pair);
    if (!rep.endpoints_ok)
        rep.failures.push_back({"ENDPOINT_ROOT_OUTSIDE", "stencil endpoints",
                                "A_{-r} or A_p has a root with |z| >= 1"});

    rep.support_ok = check_support(pair);
    if (!rep.support_ok)
        rep.failures.push_back({"SUPPORT_FAIL", "stencil endpoints",
                                "Q1 is neither the identity nor full-width"});

    if (!q1.ok()) return rep;

    std::vector<cplx> kappas;
    try {
        kappas = find_tangencies(pair, cfg);
        rep.tangencies_ok = true;
    } catch (const ConstantModulus& e) {
        rep.failures.push_back({"CONSTANT_MODULUS", "unit circle", e.what()});
    } catch (const ModulusExceedsOne& e) {
        rep.failures.push_back({"MODULUS_GT_ONE", "unit circle", e.what()});
    } catch (const CoalescedTangencies& e) {
        rep.failures.push_back({"COALESCED_TANGENCIES", "unit circle", e.what()});
    }
    if (!rep.tangencies_ok) return rep;

    for (const cplx& kappa : kappas) {
        try {
            rep.tangencies.push_back(local_expansion(pair, kappa, cfg));
        } catch (const ZeroDrift& e) {
            rep.tangencies_ok = false;
            rep.failures.push_back({"ZERO_DRIFT", "kappa = " + std::to_string(kappa.real()) + (kappa.imag() < 0 ? " - " : " + ") + std::to_string(std::fabs(kappa.imag())) + "i", e.what()});
        } catch (const NotDissipative& e) {
            rep.tangencies_ok = false;
            rep.failures.push_back({"NOT_DISSIPATIVE", "tangency", e.what()});
        } catch (const ExpansionShapeViolated& e) {
            rep.tangencies_ok = false;
            rep.failures.push_back({"EXPANSION_SHAPE", "tangency", e.what()});
        } catch (const ModulusExceedsOne& e) {
            rep.tangencies_ok = false;
            rep.failures.push_back({"MODULUS_GT_ONE", "tangency", e.what()});
        }
    }
    if (!rep.tangencies_ok) return rep;

    try {
        // Group on a copy so a violation still leaves the ungrouped tangency
        // data in the report for diagnostics.
        std::vector<TangencyPoint> grouped = group_tangencies(rep.tangencies, cfg);
        rep.tangencies = std::move(grouped);
        rep.grouping_ok = true;
    } catch (const Hyp4Violation& e) {
        rep.failures.push_back({"HYP4_VIOLATION", "tangency grouping", e.what()});
    }
    return rep;
}

} // namespace convgreen
