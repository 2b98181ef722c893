// Time-step Green's function: direct iteration, the deformed-contour route,
// and the envelope fit behind the uniform bound verdict.

#include <catch2/catch_amalgamated.hpp>

#include <convgreen/convgreen.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "oracles.hpp"

using namespace convgreen;
using Catch::Matchers::WithinAbs;

namespace {

// n-fold self-convolution of the closed-form implicit one-step kernel,
// truncated where the geometric tails are far below double precision.
double implicit_n_step_oracle(long n, long j, double lambda, long tail = 260) {
    std::vector<double> cur(static_cast<std::size_t>(2 * tail + 1), 0.0);
    for (long q = -tail; q <= tail; ++q)
        cur[static_cast<std::size_t>(q + tail)] = oracle::implicit_step_value(q, lambda);
    std::vector<double> acc(cur);
    for (long m = 1; m < n; ++m) {
        std::vector<double> next(acc.size(), 0.0);
        for (long a = -tail; a <= tail; ++a) {
            if (acc[static_cast<std::size_t>(a + tail)] == 0.0) continue;
            for (long b = std::max(-tail, -tail - a); b <= std::min(tail, tail - a); ++b)
                next[static_cast<std::size_t>(a + b + tail)] +=
                    acc[static_cast<std::size_t>(a + tail)] * cur[static_cast<std::size_t>(b + tail)];
        }
        acc = std::move(next);
    }
    if (j < -tail || j > tail) return 0.0;
    return acc[static_cast<std::size_t>(j + tail)];
}

ContourParams contour_params_for(const SchemePair& pair) {
    ContourParams cp;
    if (!pair.q1.is_identity()) {
        const FarFieldFit far = far_field_fit(pair);
        cp.far_c = far.c;
        cp.far_L = far.L;
    }
    return cp;
}

} // namespace

TEST_CASE("iteration window size follows the policy", "[temporal]") {
    WindowPolicy pol; // drift defaults to max(p, r) = 1, mu_min = 1
    CHECK(iteration_half_width(lax_friedrichs(0.5), 100, pol) == 100 + 100 + 50);
    pol.drift_bound = 0.5;
    CHECK(iteration_half_width(lax_friedrichs(0.5), 100, pol) == 50 + 100 + 50);
    pol.mu_min = 2;
    // spread = 10 * 100^{1/4}
    CHECK(iteration_half_width(lax_friedrichs(0.5), 100, pol) ==
          50 + static_cast<long>(std::ceil(10.0 * std::pow(100.0, 0.25))) + 50);

    pol.cap = 100;
    CHECK_THROWS_AS(iteration_half_width(lax_friedrichs(0.5), 1000000, pol), WindowOverflow);
}

TEST_CASE("iterated profile: base cases and exact small-n values", "[temporal][oracle]") {
    CHECK_THROWS_AS(power_profile(lax_friedrichs(0.5), -1), ParameterOutOfRange);

    const GreenProfile g0 = power_profile(lax_friedrichs(0.5), 0);
    CHECK(std::abs(g0.at(0) - cplx(1.0, 0.0)) == 0.0);
    CHECK(g0.l1_norm() == 1.0);

    const GreenProfile g2 = power_profile(lax_friedrichs(0.5), 2);
    CHECK_THAT(std::abs(g2.at(-2) - cplx(0.0625, 0.0)), WithinAbs(0.0, 1e-14));
    CHECK_THAT(std::abs(g2.at(0) - cplx(0.375, 0.0)), WithinAbs(0.0, 1e-14));
    CHECK_THAT(std::abs(g2.at(2) - cplx(0.5625, 0.0)), WithinAbs(0.0, 1e-14));
    CHECK(std::abs(g2.at(1)) == 0.0); // odd offsets vanish by parity
    REQUIRE(g2.meta.n.has_value());
    CHECK(*g2.meta.n == 2);
}

TEST_CASE("explicit iterates match the binomial closed form", "[temporal][oracle]") {
    for (long n : {1L, 3L, 10L, 25L, 40L}) {
        const GreenProfile g = power_profile(lax_friedrichs(0.5), n);
        for (long j = -n; j <= n; ++j) {
            CAPTURE(n, j);
            CHECK_THAT(std::abs(g.at(j)) - oracle::lf_value(n, j, 0.5), WithinAbs(0.0, 1e-14));
        }
    }
}

TEST_CASE("implicit one-step kernel matches its closed form", "[temporal][oracle]") {
    const GreenProfile g = power_profile(implicit_centered(0.5), 1);
    CHECK_THAT(std::abs(g.at(1)), WithinAbs(0.211145618, 1e-10));
    for (long j = -40; j <= 40; ++j) {
        CAPTURE(j);
        CHECK_THAT(std::abs(g.at(j) - cplx(oracle::implicit_step_value(j, 0.5), 0.0)),
                   WithinAbs(0.0, 1e-12));
    }
}

TEST_CASE("implicit iterates match the convolution-power oracle", "[temporal][oracle]") {
    for (long n : {2L, 3L, 5L, 8L}) {
        const GreenProfile g = power_profile(implicit_centered(0.5), n);
        for (long j = -30; j <= 30; ++j) {
            CAPTURE(n, j);
            CHECK_THAT(std::abs(g.at(j) - cplx(implicit_n_step_oracle(n, j, 0.5), 0.0)),
                       WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("iterates conserve mass and contract in the mean square", "[temporal]") {
    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.5)}) {
        PowerIterator it(pair, 64);
        double prev_l2 = it.profile().l2_norm();
        for (long n = 1; n <= 64; ++n) {
            it.step();
            const double l2 = it.profile().l2_norm();
            CAPTURE(pair.name, n);
            CHECK(std::abs(it.profile().sum() - cplx(1.0, 0.0)) < 1e-10);
            CHECK(l2 <= prev_l2 + 1e-12);
            prev_l2 = l2;
        }
    }
}

TEST_CASE("squared norms match the circle-average oracle", "[temporal][oracle]") {
    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.5)}) {
        for (long n : {1L, 2L, 4L, 8L, 16L}) {
            const GreenProfile g = power_profile(pair, n);
            const double lhs = g.l2_norm() * g.l2_norm();
            const double rhs = oracle::parseval_l2_squared(pair, n);
            CAPTURE(pair.name, n);
            CHECK_THAT(lhs - rhs, WithinAbs(0.0, 1e-8));
        }
    }
}

TEST_CASE("implicit window certification fails when the window is too tight", "[temporal]") {
    WindowPolicy tight;
    tight.safety = 0.01;
    tight.margin = 0;
    tight.drift_bound = 0.5;
    CHECK_THROWS_AS(power_profile(implicit_centered(0.5), 8, tight), NotConverged);
}

TEST_CASE("apex selector follows the space-time ray", "[temporal]") {
    TangencyPoint t;
    t.alpha = 0.5;
    t.mu = 1;
    t.beta = 0.375;

    const DriftSelector on_ray = drift_selector(t, 50.0, 100.0, 0.05, 0.3);
    CHECK_THAT(on_ray.zeta, WithinAbs(0.0, 1e-15));
    CHECK_THAT(on_ray.tau_p, WithinAbs(0.0, 1e-15));

    const DriftSelector ahead = drift_selector(t, 75.0, 100.0, 0.05, 0.3);
    CHECK_THAT(ahead.zeta, WithinAbs(0.125, 1e-15));
    CHECK_THAT(ahead.gamma, WithinAbs(1.125, 1e-15));
    CHECK_THAT(ahead.rho, WithinAbs(0.125 / 1.125, 1e-12));
    CHECK_THAT(ahead.tau_p, WithinAbs(0.125 / 1.125, 1e-12));

    // Behind the ray the apex clamps at -eta/2.
    const DriftSelector behind = drift_selector(t, -60.0, 100.0, 0.05, 0.3);
    CHECK(behind.rho < 0.0);
    CHECK_THAT(behind.tau_p, WithinAbs(-0.025, 1e-15));

    // Negative drift mirrors onto the positive formulas.
    TangencyPoint tm = t;
    tm.alpha = -0.5;
    const DriftSelector mirrored = drift_selector(tm, -75.0, 100.0, 0.05, 0.3);
    CHECK_THAT(mirrored.zeta, WithinAbs(0.125, 1e-15));
    CHECK_THAT(mirrored.tau_p, WithinAbs(0.125 / 1.125, 1e-12));
}

TEST_CASE("assembled contours are closed strip loops", "[temporal]") {
    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.5)}) {
        const AssumptionReport rep = analyze(pair);
        REQUIRE(rep.all_ok());
        for (long j : {0L, 5L, -7L}) {
            const ContourSpec spec = build_contour(pair, rep.tangencies, j, 10);
            REQUIRE(!spec.segments.empty());
            CAPTURE(pair.name, j);
            for (std::size_t k = 0; k + 1 < spec.segments.size(); ++k)
                CHECK(std::abs(spec.segments[k].point(1.0) - spec.segments[k + 1].point(0.0)) < 1e-9);
            const cplx wrap = spec.segments.back().point(1.0) -
                              (spec.segments.front().point(0.0) + cplx(0.0, 2.0 * std::numbers::pi));
            CHECK(std::abs(wrap) < 1e-9);
            for (double apex : spec.apexes) CHECK(apex >= 5e-3 - 1e-15);
        }
    }
    CHECK_THROWS_AS(build_contour(lax_friedrichs(0.5), analyze(lax_friedrichs(0.5)).tangencies, 0, 0),
                    ParameterOutOfRange);
}

TEST_CASE("far outside the wave cone the contour is a vertical line", "[temporal]") {
    const SchemePair pair = implicit_centered(0.5);
    const AssumptionReport rep = analyze(pair);
    ContourParams cp;
    cp.far_c = 1.44;
    cp.far_L = 4;
    const ContourSpec spec = build_contour(pair, rep.tangencies, 100, 1, cp);
    CHECK(spec.far_field);
    REQUIRE(spec.segments.size() == 1);
    CHECK(spec.segments[0].kind == ContourSegment::Kind::straight);
    CHECK_THAT(spec.segments[0].a.real(), WithinAbs(1.44 * 100.0 / 2.0, 1e-12));
    CHECK_THAT(spec.segments[0].b.real(), WithinAbs(1.44 * 100.0 / 2.0, 1e-12));
}

TEST_CASE("contour route reproduces exact small-n values", "[temporal][oracle]") {
    const SchemePair pair = lax_friedrichs(0.5);
    const AssumptionReport rep = analyze(pair);
    REQUIRE(rep.all_ok());
    ContourParams cp;

    auto eval = [&](long n, long j) {
        const ContourSpec spec = build_contour(pair, rep.tangencies, j, n, cp);
        return contour_value(pair, spec, n, j, cp);
    };
    CHECK_THAT(std::abs(eval(1, 1) - cplx(0.75, 0.0)), WithinAbs(0.0, 1e-8));
    CHECK_THAT(std::abs(eval(4, 2) - cplx(0.421875, 0.0)), WithinAbs(0.0, 1e-8));
    CHECK_THAT(std::abs(eval(4, 7)), WithinAbs(0.0, 1e-10)); // outside the support
}

TEST_CASE("contour and iteration agree across the window", "[temporal][slow]") {
    // Explicit pair: every point of the support.
    {
        const SchemePair pair = lax_friedrichs(0.5);
        const AssumptionReport rep = analyze(pair);
        const ContourParams cp;
        for (long n : {1L, 4L, 16L}) {
            const GreenProfile gi = power_profile(pair, n);
            for (long j = -n; j <= n; ++j) {
                const ContourSpec spec = build_contour(pair, rep.tangencies, j, n, cp);
                const cplx cv = contour_value(pair, spec, n, j, cp);
                CAPTURE(n, j);
                CHECK(std::abs(cv - gi.at(j)) <= 1e-6 * (1.0 + std::abs(gi.at(j))));
            }
        }
    }
    // Implicit pair: the full iteration window, including the far field.
    {
        const SchemePair pair = implicit_centered(0.5);
        const AssumptionReport rep = analyze(pair);
        const ContourParams cp = contour_params_for(pair);
        WindowPolicy pol;
        pol.drift_bound = 0.5;
        const long n = 4;
        const GreenProfile gi = power_profile(pair, n, pol);
        for (long j = gi.j_min; j <= gi.j_max; ++j) {
            const ContourSpec spec = build_contour(pair, rep.tangencies, j, n, cp);
            const cplx cv = contour_value(pair, spec, n, j, cp);
            CAPTURE(j);
            CHECK(std::abs(cv - gi.at(j)) <= 1e-6 * (1.0 + std::abs(gi.at(j))));
        }
    }
}

TEST_CASE("envelope primitives", "[temporal]") {
    TangencyPoint t;
    t.alpha = 0.5;
    t.mu = 1;
    t.beta = 0.375;

    // mu = 1: rate = 1 / (4 beta); mu = 2: rate = 3 * 4^{-4/3} beta^{-1/3}.
    CHECK_THAT(sharp_envelope_rate(t), WithinAbs(1.0 / (4.0 * 0.375), 1e-12));
    TangencyPoint t2 = t;
    t2.mu = 2;
    t2.beta = 0.0234375;
    CHECK_THAT(sharp_envelope_rate(t2),
               WithinAbs(3.0 * std::pow(4.0, -4.0 / 3.0) * std::pow(0.0234375, -1.0 / 3.0), 1e-12));

    // One tangency: the log-envelope is the single term itself.
    const std::vector<TangencyPoint> single{t};
    const double n = 64.0;
    const double sigma = std::sqrt(n);
    for (double j : {0.0, 16.0, 40.0}) {
        const double x = std::pow(std::fabs(j - 0.5 * n) / sigma, 2.0);
        CHECK_THAT(log_envelope(single, 0.5, j, n), WithinAbs(-std::log(sigma) - 0.5 * x, 1e-12));
    }
    CHECK(envelope_sector(single, 0.5, 10.0, n) == 0);

    // Two drifts: the dominant term switches sides with j.
    TangencyPoint tneg = t;
    tneg.alpha = -0.5;
    const std::vector<TangencyPoint> both{t, tneg};
    CHECK(envelope_sector(both, 0.5, 30.0, n) == 0);
    CHECK(envelope_sector(both, 0.5, -30.0, n) == 1);
    CHECK(log_envelope(both, 0.5, 32.0, n) >= log_envelope(single, 0.5, 32.0, n));
}

TEST_CASE("envelope fit: guards and degenerate profiles", "[temporal]") {
    TangencyPoint t;
    t.alpha = 0.5;
    t.mu = 1;
    t.beta = 0.375;
    const std::vector<TangencyPoint> single{t};

    CHECK_THROWS_AS(fit_envelope({}, single), ParameterOutOfRange);
    GreenProfile dummy = make_profile(0, 0, ProfileMeta{"power", "x", {}, 1L});
    CHECK_THROWS_AS(fit_envelope({dummy}, {}), ParameterOutOfRange);
    CHECK_THROWS_AS(fit_envelope({dummy}, single, 1e3, 0.0), ParameterOutOfRange);

    // All-zero profile: nothing to bound, the constant collapses to zero.
    GreenProfile zeros = make_profile(-5, 5, ProfileMeta{"power", "x", {}, 1L});
    const EnvelopeFit fz = fit_envelope({zeros}, single);
    CHECK(fz.C == 0.0);
    CHECK(fz.c > 0.0);

    // A unit delta needs C >= 1 since the envelope never exceeds one.
    GreenProfile delta = make_profile(0, 0, ProfileMeta{"power", "x", {}, 1L});
    delta.ref(0) = cplx(1.0, 0.0);
    const EnvelopeFit fd = fit_envelope({delta}, single);
    CHECK(fd.C >= 1.0);
}

TEST_CASE("envelope fit on real profiles keeps a healthy rate", "[temporal]") {
    const SchemePair pair = lax_friedrichs(0.5);
    const AssumptionReport rep = analyze(pair);
    REQUIRE(rep.all_ok());
    const std::vector<GreenProfile> profs{power_profile(pair, 16), power_profile(pair, 64)};
    const EnvelopeFit fit = fit_envelope(profs, rep.tangencies);
    CHECK(fit.c >= 0.4);
    CHECK(fit.C > 0.0);
    CHECK(fit.C <= 1e3);
    CHECK(fit.n_list == std::vector<long>{16, 64});
    REQUIRE(fit.sector_residual.size() == rep.tangencies.size());
    for (double r : fit.sector_residual) CHECK(r <= 1.0 + 1e-12);
}

TEST_CASE("uniform bound verdict on shorter ladders", "[temporal][slow]") {
    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.5)}) {
        const AssumptionReport rep = analyze(pair);
        REQUIRE(rep.all_ok());
        WindowPolicy pol;
        pol.drift_bound = 0.5;
        const EnvelopeVerification t1 = verify_theorem1(pair, rep.tangencies, 16, {32, 64}, pol);
        CAPTURE(pair.name);
        CHECK(t1.pass);
        CHECK(t1.fit.c > 0.0);
        REQUIRE(t1.tests.size() == 2);
        for (const auto& res : t1.tests) {
            CHECK(res.max_ratio <= 1.0);
            CHECK(res.max_ratio > 0.0);
            CHECK(res.noise_floor >= 0.0);
        }
    }
}
