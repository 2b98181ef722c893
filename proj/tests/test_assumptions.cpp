// Admissibility pipeline: operator invertibility, endpoint/support shape,
// modulus-one point location, local drift/dissipation extraction, grouping.

#include <catch2/catch_amalgamated.hpp>

#include <convgreen/convgreen.hpp>

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "oracles.hpp"

using namespace convgreen;
using Catch::Matchers::WithinAbs;

namespace {

// F(kappa) = kappa exactly: constant modulus one on the circle.
SchemePair pure_shift_pair() {
    return SchemePair(ConvolutionOperator::shift(1), ConvolutionOperator::identity(), "shift");
}

// F(e^{i xi}) = 1.2 cos(xi): modulus exceeds one near xi = 0.
SchemePair amplifying_pair() {
    ConvolutionOperator q0{1, 1, {cplx(0.6), cplx(0.0), cplx(0.6)}};
    return SchemePair(q0, ConvolutionOperator::identity(), "amplifying");
}

// F(e^{i xi}) = (1 + cos(xi)) / 2: touches one at xi = 0 with zero drift.
SchemePair driftless_pair() {
    ConvolutionOperator q0{1, 1, {cplx(0.25), cplx(0.5), cplx(0.25)}};
    return SchemePair(q0, ConvolutionOperator::identity(), "driftless");
}

// F(e^{i xi}) = e^{i xi} (1 + d (1 - cos xi)): modulus-one point at xi = 0
// but |F| > 1 everywhere else (positive even-order coefficient).
SchemePair outward_tangent_pair(double d = 0.1) {
    ConvolutionOperator q0{0, 2, {cplx(-d / 2.0), cplx(1.0 + d), cplx(-d / 2.0)}};
    return SchemePair(q0, ConvolutionOperator::identity(), "outward");
}

// F(e^{i xi}) = e^{-2 i xi} (1 - d (1 - cos 2 xi)^2): two modulus-one points
// (xi = 0 and pi) sharing z = 1 with equal drifts alpha = 2 --- the grouping
// rule requires opposite signs, so analysis must reject the pair.
SchemePair same_drift_pair(double d = 0.1) {
    ConvolutionOperator q0{6, 2,
                           {cplx(-d / 4.0), cplx(0.0), cplx(d), cplx(0.0), cplx(1.0 - 1.5 * d),
                            cplx(0.0), cplx(d), cplx(0.0), cplx(-d / 4.0)}};
    return SchemePair(q0, ConvolutionOperator::identity(), "same-drift");
}

bool has_failure(const AssumptionReport& rep, const std::string& code) {
    for (const AssumptionFailure& f : rep.failures)
        if (f.code == code) return true;
    return false;
}

} // namespace

TEST_CASE("operator invertibility check accepts the built-in pairs", "[assumptions]") {
    for (double lambda : {0.25, 0.5, 1.0, 2.0}) {
        const Q1Check chk = check_q1_invertible(implicit_centered(lambda));
        CAPTURE(lambda);
        CHECK(chk.ok());
        CHECK_THAT(chk.min_modulus, WithinAbs(1.0, 1e-9)); // |1 + i lambda sin| >= 1
        REQUIRE(chk.winding.has_value());
        CHECK(*chk.winding == 0);
    }
    const Q1Check idc = check_q1_invertible(lax_friedrichs(0.5));
    CHECK(idc.ok());
    CHECK_THAT(idc.min_modulus, WithinAbs(1.0, 1e-12));
}

TEST_CASE("vanishing implicit symbol is flagged as singular", "[assumptions]") {
    // Q1-hat = kappa - 1/kappa vanishes at kappa = +-1.
    ConvolutionOperator q1{1, 1, {cplx(-1.0), cplx(0.0), cplx(1.0)}};
    SchemePair pair(ConvolutionOperator::identity(), q1, "singular-q1");
    const Q1Check chk = check_q1_invertible(pair);
    CHECK_FALSE(chk.modulus_ok);
    const AssumptionReport rep = analyze(pair);
    CHECK_FALSE(rep.all_ok());
    CHECK(has_failure(rep, "Q1_SINGULAR"));
}

TEST_CASE("nonzero winding of the implicit symbol is rejected", "[assumptions]") {
    SchemePair pair(ConvolutionOperator::identity(), ConvolutionOperator::shift(1), "winding-q1");
    const AssumptionReport rep = analyze(pair);
    CHECK_FALSE(rep.all_ok());
    CHECK(has_failure(rep, "INDEX_NONZERO"));
    REQUIRE(rep.q1_winding.has_value());
    CHECK(*rep.q1_winding == 1);
}

TEST_CASE("endpoint coefficient with an outer root is rejected", "[assumptions]") {
    // a_{p,1} = 0.25, a_{p,0} = 0.5: A_p(z) vanishes at z = 2 outside the disk.
    ConvolutionOperator q1{1, 1, {cplx(0.25), cplx(1.0), cplx(0.25)}};
    ConvolutionOperator q0{1, 1, {cplx(0.1), cplx(0.4), cplx(0.5)}};
    SchemePair pair(q0, q1, "outer-endpoint-root");
    CHECK_FALSE(check_endpoints(pair));
    const AssumptionReport rep = analyze(pair);
    CHECK(has_failure(rep, "ENDPOINT_ROOT_OUTSIDE"));
}

TEST_CASE("one-sided implicit stencil is rejected", "[assumptions]") {
    // Q1 = I + 0.25 S is neither the identity nor full-width on [-1, 1].
    ConvolutionOperator q1{1, 1, {cplx(0.0), cplx(1.0), cplx(0.25)}};
    ConvolutionOperator q0{1, 1, {cplx(0.75), cplx(0.15), cplx(0.1)}};
    SchemePair pair(q0, q1, "one-sided-q1");
    CHECK_FALSE(check_support(pair));
    const AssumptionReport rep = analyze(pair);
    CHECK(has_failure(rep, "SUPPORT_FAIL"));
}

TEST_CASE("constant-modulus amplification is rejected", "[assumptions]") {
    CHECK_THROWS_AS(find_tangencies(pure_shift_pair()), ConstantModulus);
    const AssumptionReport rep = analyze(pure_shift_pair());
    CHECK(has_failure(rep, "CONSTANT_MODULUS"));
}

TEST_CASE("amplification above one is rejected", "[assumptions]") {
    CHECK_THROWS_AS(find_tangencies(amplifying_pair()), ModulusExceedsOne);
    const AssumptionReport rep = analyze(amplifying_pair());
    CHECK(has_failure(rep, "MODULUS_GT_ONE"));
}

TEST_CASE("zero drift at a modulus-one point is rejected", "[assumptions]") {
    const std::vector<cplx> kappas = find_tangencies(driftless_pair());
    REQUIRE(kappas.size() == 1);
    CHECK_THAT(kappas[0].real(), WithinAbs(1.0, 1e-9));
    CHECK_THROWS_AS(local_expansion(driftless_pair(), kappas[0]), ZeroDrift);
    const AssumptionReport rep = analyze(driftless_pair());
    CHECK(has_failure(rep, "ZERO_DRIFT"));
}

TEST_CASE("positive even-order coefficient is reported as amplification", "[assumptions]") {
    const SchemePair pair = outward_tangent_pair();
    CHECK_THROWS_AS(local_expansion(pair, cplx(1.0, 0.0)), ModulusExceedsOne);
}

TEST_CASE("expansion at a non-critical point is rejected", "[assumptions]") {
    // log|F| has a nonzero first derivative away from the modulus-one points.
    const SchemePair pair = lax_friedrichs(0.5);
    CHECK_THROWS_AS(local_expansion(pair, std::polar(1.0, 0.3)), ExpansionShapeViolated);
}

TEST_CASE("dissipation order beyond the search cap is rejected", "[assumptions]") {
    AnalysisConfig cfg;
    cfg.max_mu = 1; // the corrected transport pair has mu = 2
    CHECK_THROWS_AS(local_expansion(lax_wendroff(0.5), cplx(1.0, 0.0), cfg), NotDissipative);
    const AssumptionReport rep = analyze(lax_wendroff(0.5), cfg);
    CHECK(has_failure(rep, "NOT_DISSIPATIVE"));
}

TEST_CASE("shared value with equal drift signs is rejected", "[assumptions]") {
    const AssumptionReport rep = analyze(same_drift_pair());
    CHECK_FALSE(rep.all_ok());
    CHECK_FALSE(rep.grouping_ok);
    CHECK(has_failure(rep, "HYP4_VIOLATION"));
    // The local data itself is extracted before grouping fails.
    REQUIRE(rep.tangencies.size() == 2);
    for (const TangencyPoint& t : rep.tangencies) {
        CHECK_THAT(t.alpha, WithinAbs(2.0, 1e-7));
        CHECK(t.mu == 2);
        CHECK_THAT(t.beta, WithinAbs(0.4, 1e-6)); // 4 d with d = 0.1
        CHECK_THAT(std::abs(t.z - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
    }
}

TEST_CASE("grouping pairs opposite drifts and leaves singletons alone", "[assumptions]") {
    const AssumptionReport lf = analyze(lax_friedrichs(0.5));
    REQUIRE(lf.all_ok());
    REQUIRE(lf.tangencies.size() == 2);
    CHECK(lf.tangencies[0].group == std::vector<int>{0});
    CHECK(lf.tangencies[1].group == std::vector<int>{1});

    const AssumptionReport imp = analyze(implicit_centered(0.5));
    REQUIRE(imp.all_ok());
    REQUIRE(imp.tangencies.size() == 2);
    CHECK(imp.tangencies[0].group == (std::vector<int>{0, 1}));
    CHECK(imp.tangencies[1].group == (std::vector<int>{0, 1}));
    CHECK(imp.tangencies[0].alpha * imp.tangencies[1].alpha < 0.0);
}

TEST_CASE("averaged transport pair: locations, values, and local data", "[assumptions]") {
    const AssumptionReport rep = analyze(lax_friedrichs(0.5));
    REQUIRE(rep.all_ok());
    REQUIRE(rep.tangencies.size() == 2);

    const TangencyPoint& t0 = rep.tangencies[0]; // xi = 0
    CHECK_THAT(std::abs(t0.kappa - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(std::abs(t0.z - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(t0.theta, WithinAbs(0.0, 1e-9));
    CHECK_THAT(t0.alpha, WithinAbs(0.5, 1e-7));
    CHECK(t0.mu == 1);
    CHECK_THAT(t0.beta, WithinAbs(0.375, 1e-6));

    const TangencyPoint& t1 = rep.tangencies[1]; // xi = pi
    CHECK_THAT(std::abs(t1.kappa - cplx(-1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(std::abs(t1.z - cplx(-1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(t1.alpha, WithinAbs(0.5, 1e-7));
    CHECK(t1.mu == 1);
    CHECK_THAT(t1.beta, WithinAbs(0.375, 1e-6));
}

TEST_CASE("implicit transport pair: opposite drifts at a shared value", "[assumptions]") {
    const AssumptionReport rep = analyze(implicit_centered(0.5));
    REQUIRE(rep.all_ok());
    REQUIRE(rep.tangencies.size() == 2);

    const TangencyPoint& t0 = rep.tangencies[0]; // kappa = 1
    CHECK_THAT(std::abs(t0.kappa - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(t0.alpha, WithinAbs(0.5, 1e-7));
    CHECK(t0.mu == 1);
    CHECK_THAT(t0.beta, WithinAbs(0.125, 1e-6));

    const TangencyPoint& t1 = rep.tangencies[1]; // kappa = -1
    CHECK_THAT(std::abs(t1.kappa - cplx(-1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(t1.alpha, WithinAbs(-0.5, 1e-7));
    CHECK(t1.mu == 1);
    CHECK_THAT(t1.beta, WithinAbs(0.125, 1e-6));
    CHECK_THAT(std::abs(t0.z - t1.z), WithinAbs(0.0, 1e-9));
}

TEST_CASE("corrected transport pair: fourth-order dissipation", "[assumptions]") {
    const AssumptionReport rep = analyze(lax_wendroff(0.5));
    REQUIRE(rep.all_ok());
    REQUIRE(rep.tangencies.size() == 1);
    const TangencyPoint& t = rep.tangencies[0];
    CHECK_THAT(std::abs(t.kappa - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
    CHECK_THAT(t.alpha, WithinAbs(0.5, 1e-7));
    CHECK(t.mu == 2);
    CHECK_THAT(t.beta, WithinAbs(0.25 * 0.75 / 8.0, 1e-8)); // lambda^2 (1 - lambda^2) / 8
}

TEST_CASE("local data matches independent series arithmetic", "[assumptions][oracle]") {
    struct Case {
        SchemePair pair;
        cplx kappa;
    };
    std::vector<Case> cases;
    for (double l : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        cases.push_back({lax_friedrichs(l), cplx(1.0, 0.0)});
        cases.push_back({lax_friedrichs(l), cplx(-1.0, 0.0)});
        cases.push_back({lax_wendroff(l), cplx(1.0, 0.0)});
    }
    for (double l : {0.25, 0.5, 1.0, 2.0}) {
        cases.push_back({implicit_centered(l), cplx(1.0, 0.0)});
        cases.push_back({implicit_centered(l), cplx(-1.0, 0.0)});
    }
    for (const Case& c : cases) {
        CAPTURE(c.pair.name, c.kappa.real());
        const TangencyPoint t = local_expansion(c.pair, c.kappa);
        const oracle::TangencyOracle o = oracle::expansion_at(c.pair, c.kappa);
        REQUIRE(o.mu > 0);
        CHECK(t.mu == o.mu);
        CHECK_THAT(t.alpha, WithinAbs(o.alpha, 1e-9));
        CHECK_THAT(t.beta, WithinAbs(o.beta, 1e-8));
    }
}

TEST_CASE("local data is stable under halving the derivative step", "[assumptions]") {
    AnalysisConfig fine;
    fine.fd_base_step = 0.5e-2;
    for (const SchemePair& pair :
         {lax_friedrichs(0.5), implicit_centered(0.5), lax_wendroff(0.5)}) {
        const TangencyPoint a = local_expansion(pair, cplx(1.0, 0.0));
        const TangencyPoint b = local_expansion(pair, cplx(1.0, 0.0), fine);
        CAPTURE(pair.name);
        CHECK(a.mu == b.mu);
        CHECK_THAT(a.alpha - b.alpha, WithinAbs(0.0, 1e-7));
        CHECK_THAT(a.beta - b.beta, WithinAbs(0.0, 1e-7));
    }
}

TEST_CASE("modulus-one point location from the root-cluster route", "[assumptions]") {
    // lambda sweep: the averaged pair always touches at exactly kappa = +-1.
    for (double l : {0.2, 0.5, 0.8}) {
        const std::vector<cplx> ks = find_tangencies(lax_friedrichs(l));
        REQUIRE(ks.size() == 2);
        CHECK_THAT(std::abs(ks[0] - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
        CHECK_THAT(std::abs(ks[1] - cplx(-1.0, 0.0)), WithinAbs(0.0, 1e-9));
    }
    const std::vector<cplx> kw = find_tangencies(lax_wendroff(0.5));
    REQUIRE(kw.size() == 1);
    CHECK_THAT(std::abs(kw[0] - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-9));
}

TEST_CASE("analysis report carries the scan diagnostics", "[assumptions]") {
    const AssumptionReport rep = analyze(implicit_centered(0.5));
    CHECK(rep.q1_invertible);
    CHECK(rep.index_zero);
    CHECK(rep.endpoints_ok);
    CHECK(rep.support_ok);
    CHECK(rep.tangencies_ok);
    CHECK(rep.grouping_ok);
    CHECK(rep.q1_min_modulus > 0.9);
    REQUIRE(rep.q1_winding.has_value());
    CHECK(*rep.q1_winding == 0);
    CHECK(rep.failures.empty());
}
