// Dispersion polynomial, root splitting, companion matrix, and holomorphic
// branch continuation from the modulus-one points.

#include <catch2/catch_amalgamated.hpp>

#include <convgreen/convgreen.hpp>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"

using namespace convgreen;
using Catch::Matchers::WithinAbs;

namespace {

// Sorted-by-modulus root list from the quadratic-formula oracle.
std::vector<cplx> sorted_oracle_roots(std::array<cplx, 2> roots) {
    std::vector<cplx> v(roots.begin(), roots.end());
    std::sort(v.begin(), v.end(), [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
    return v;
}

} // namespace

TEST_CASE("dispersion polynomial coefficients at z = 2", "[spectral]") {
    const std::vector<cplx> lf = dispersion_poly(lax_friedrichs(0.5), cplx(2.0, 0.0));
    REQUIRE(lf.size() == 3);
    CHECK_THAT(std::abs(lf[0] - cplx(-0.75, 0.0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(lf[1] - cplx(2.0, 0.0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(lf[2] - cplx(-0.25, 0.0)), WithinAbs(0.0, 1e-15));

    const std::vector<cplx> imp = dispersion_poly(implicit_centered(0.5), cplx(2.0, 0.0));
    REQUIRE(imp.size() == 3);
    CHECK_THAT(std::abs(imp[0] - cplx(-0.5, 0.0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(imp[1] - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(imp[2] - cplx(0.5, 0.0)), WithinAbs(0.0, 1e-15));
}

TEST_CASE("vanishing leading coefficient is rejected", "[spectral]") {
    // For the implicit pair A_p(z) = (lambda/2) z vanishes only at z = 0.
    CHECK_THROWS_AS(dispersion_poly(implicit_centered(0.5), cplx(0.0, 0.0)), LeadingCoefficientZero);

    // A custom pair whose A_p root sits inside the disk at z = 0.2.
    ConvolutionOperator q1{1, 1, {cplx(0.25), cplx(1.0), cplx(0.25)}};
    ConvolutionOperator q0{1, 1, {cplx(0.1), cplx(0.4), cplx(0.05)}};
    SchemePair pair(q0, q1, "inner-endpoint-root");
    CHECK_THROWS_AS(dispersion_poly(pair, cplx(0.2, 0.0)), LeadingCoefficientZero);
    CHECK_NOTHROW(dispersion_poly(pair, cplx(2.0, 0.0)));
}

TEST_CASE("root splitting at z = 2 matches the quadratic formula", "[spectral][oracle]") {
    const double s13 = std::sqrt(13.0);

    const SpectralSplit lf = dispersion_roots(lax_friedrichs(0.5), cplx(2.0, 0.0));
    REQUIRE(lf.roots.size() == 2);
    CHECK(lf.n_stable == 1);
    CHECK(lf.n_circle == 0);
    CHECK(lf.n_unstable == 1);
    CHECK(lf.roots[0].second == RootClass::stable);
    CHECK(lf.roots[1].second == RootClass::unstable);
    CHECK_THAT(std::abs(lf.roots[0].first - cplx(4.0 - s13, 0.0)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(lf.roots[1].first - cplx(4.0 + s13, 0.0)), WithinAbs(0.0, 1e-12));

    const SpectralSplit imp = dispersion_roots(implicit_centered(0.5), cplx(2.0, 0.0));
    REQUIRE(imp.roots.size() == 2);
    CHECK(imp.n_stable == 1);
    CHECK(imp.n_unstable == 1);
    CHECK_THAT(std::abs(imp.roots[0].first - cplx(std::sqrt(2.0) - 1.0, 0.0)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(imp.roots[1].first - cplx(-std::sqrt(2.0) - 1.0, 0.0)), WithinAbs(0.0, 1e-12));
}

TEST_CASE("a modulus-one value places a root on the circle", "[spectral]") {
    const SpectralSplit s = dispersion_roots(lax_friedrichs(0.5), cplx(1.0, 0.0));
    CHECK(s.n_stable == 0);
    CHECK(s.n_circle == 1);
    CHECK(s.n_unstable == 1);
    CHECK_THAT(std::abs(s.roots[0].first - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-10));
    CHECK_THAT(std::abs(s.roots[1].first - cplx(3.0, 0.0)), WithinAbs(0.0, 1e-10));
}

TEST_CASE("roots agree with the closed-form solver across the annulus", "[spectral][oracle]") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> rad(1.05, 10.0), ang(0.0, 2.0 * std::numbers::pi);
    for (int i = 0; i < 200; ++i) {
        const cplx z = std::polar(rad(gen), ang(gen));
        {
            const SpectralSplit s = dispersion_roots(lax_friedrichs(0.5), z);
            const std::vector<cplx> expect = sorted_oracle_roots(oracle::lf_roots(z, 0.5));
            REQUIRE(s.roots.size() == 2);
            CHECK(std::abs(s.roots[0].first - expect[0]) < 1e-10 * (1.0 + std::abs(expect[0])));
            CHECK(std::abs(s.roots[1].first - expect[1]) < 1e-10 * (1.0 + std::abs(expect[1])));
        }
        {
            const SpectralSplit s = dispersion_roots(implicit_centered(0.5), z);
            const std::vector<cplx> expect = sorted_oracle_roots(oracle::implicit_roots(z, 0.5));
            REQUIRE(s.roots.size() == 2);
            CHECK(std::abs(s.roots[0].first - expect[0]) < 1e-10 * (1.0 + std::abs(expect[0])));
            CHECK(std::abs(s.roots[1].first - expect[1]) < 1e-10 * (1.0 + std::abs(expect[1])));
        }
    }
}

TEST_CASE("root product satisfies the constant-over-leading identity", "[spectral]") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> rad(1.05, 10.0), ang(0.0, 2.0 * std::numbers::pi);
    for (const SchemePair& pair :
         {lax_friedrichs(0.5), implicit_centered(0.5), lax_wendroff(0.3), implicit_centered(2.0)}) {
        for (int i = 0; i < 50; ++i) {
            const cplx z = std::polar(rad(gen), ang(gen));
            const std::vector<cplx> c = dispersion_poly(pair, z);
            cplx prod(1.0, 0.0);
            for (const auto& [root, cls] : dispersion_roots(pair, z).roots) prod *= root;
            const int d = pair.r() + pair.p();
            const cplx expect = (d % 2 == 0 ? 1.0 : -1.0) * c.front() / c.back();
            CAPTURE(pair.name, z.real(), z.imag());
            CHECK(std::abs(prod - expect) < 1e-10 * (1.0 + std::abs(expect)));
        }
    }
}

TEST_CASE("splitting sweep finds no violations away from the curve", "[spectral]") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> rad(1.01, 10.0), ang(0.0, 2.0 * std::numbers::pi);
    std::vector<cplx> zs;
    for (int i = 0; i < 500; ++i) zs.push_back(std::polar(rad(gen), ang(gen)));
    zs.push_back(cplx(0.5, 0.0)); // inside the disk: must be skipped, not checked

    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.5)}) {
        const SplittingReport rep = verify_splitting(pair, zs);
        CAPTURE(pair.name);
        CHECK(rep.ok());
        CHECK(rep.checked == 500);
        CHECK(rep.skipped == 1);
    }
}

TEST_CASE("splitting sweep skips excluded neighborhoods", "[spectral]") {
    const std::vector<cplx> zs{cplx(1.0005, 0.0), cplx(2.0, 0.0)};
    const SplittingReport rep =
        verify_splitting(lax_friedrichs(0.5), zs, {cplx(1.0, 0.0)}, 1e-2);
    CHECK(rep.checked == 1);
    CHECK(rep.skipped == 1);
    CHECK(rep.ok());
}

TEST_CASE("companion matrix entries and eigenvalues", "[spectral][oracle]") {
    const CompanionMatrix M = companion(lax_friedrichs(0.5), cplx(2.0, 0.0));
    REQUIRE(M.dim == 2);
    CHECK_THAT(std::abs(M.at(0, 0) - cplx(8.0, 0.0)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(M.at(0, 1) - cplx(-3.0, 0.0)), WithinAbs(0.0, 1e-12));
    CHECK_THAT(std::abs(M.at(1, 0) - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-15));
    CHECK_THAT(std::abs(M.at(1, 1)), WithinAbs(0.0, 1e-15));

    // Eigenvalues (independent solver) must reproduce the dispersion roots.
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> rad(1.05, 10.0), ang(0.0, 2.0 * std::numbers::pi);
    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.75), lax_wendroff(0.4)}) {
        for (int i = 0; i < 20; ++i) {
            const cplx z = std::polar(rad(gen), ang(gen));
            const CompanionMatrix C = companion(pair, z);
            Eigen::MatrixXcd A(C.dim, C.dim);
            for (int r = 0; r < C.dim; ++r)
                for (int c = 0; c < C.dim; ++c) A(r, c) = C.at(r, c);
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(A, false);
            std::vector<cplx> eig;
            for (int k = 0; k < C.dim; ++k) eig.push_back(es.eigenvalues()(k));
            std::sort(eig.begin(), eig.end(),
                      [](const cplx& a, const cplx& b) { return std::abs(a) < std::abs(b); });
            const SpectralSplit s = dispersion_roots(pair, z);
            REQUIRE(eig.size() == s.roots.size());
            for (std::size_t k = 0; k < eig.size(); ++k) {
                CAPTURE(pair.name, z.real(), z.imag(), k);
                CHECK(std::abs(eig[k] - s.roots[k].first) < 1e-9 * (1.0 + std::abs(eig[k])));
            }
        }
    }
}

TEST_CASE("implicit companion matrix has a large-z limit", "[spectral]") {
    // First row tends to (-a_{0,1}, -a_{-1,1}) / a_{1,1} = (-4, 1) at lambda = 1/2.
    const CompanionMatrix M = companion(implicit_centered(0.5), cplx(1e9, 0.0));
    REQUIRE(M.dim == 2);
    CHECK_THAT(std::abs(M.at(0, 0) - cplx(-4.0, 0.0)), WithinAbs(0.0, 1e-6));
    CHECK_THAT(std::abs(M.at(0, 1) - cplx(1.0, 0.0)), WithinAbs(0.0, 1e-6));
}

TEST_CASE("branch continuation starts at the tangency and tracks F", "[spectral]") {
    const AssumptionReport rep = analyze(lax_friedrichs(0.5));
    REQUIRE(rep.all_ok());
    const TangencyPoint& t = rep.tangencies[0]; // kappa = 1, alpha = 1/2

    // At the base point the branch is the tangency itself.
    CHECK_THAT(std::abs(continue_branch(lax_friedrichs(0.5), t, t.z) - t.kappa), WithinAbs(0.0, 1e-9));

    // F(kappa) = 3/(4 kappa) + kappa/4 at lambda = 1/2, so F(kappa) = z is the
    // quadratic kappa^2 - 4 z kappa + 3 = 0 with inner root 2 z - sqrt(4 z^2 - 3).
    const double eps = 1e-3;
    const cplx z = cplx(1.0 + eps, 0.0);
    const cplx kb = continue_branch(lax_friedrichs(0.5), t, z);
    const cplx exact = 2.0 * z - std::sqrt(4.0 * z * z - 3.0);
    CHECK_THAT(std::abs(kb - exact), WithinAbs(0.0, 1e-10));

    // The defining equation holds to solver accuracy.
    CHECK(std::abs(eval_F(lax_friedrichs(0.5), kb) - z) < 1e-12 * (1.0 + std::abs(z)));
}

TEST_CASE("branch side is set by the drift sign", "[spectral]") {
    // Positive drift: the branch dives inside the unit disk as |z| grows;
    // negative drift: it exits.
    for (const SchemePair& pair : {lax_friedrichs(0.5), implicit_centered(0.5)}) {
        const AssumptionReport rep = analyze(pair);
        REQUIRE(rep.all_ok());
        for (const TangencyPoint& t : rep.tangencies) {
            const cplx z = t.z * (1.0 + 1e-4);
            const cplx kb = continue_branch(pair, t, z);
            CAPTURE(pair.name, t.xi, t.alpha);
            if (t.alpha > 0.0) CHECK(std::abs(kb) < 1.0);
            else CHECK(std::abs(kb) > 1.0);
            CHECK(std::abs(eval_F(pair, kb) - z) < 1e-12 * (1.0 + std::abs(z)));
        }
    }
    const AssumptionReport imp = analyze(implicit_centered(0.5));
    const TangencyPoint& tneg = imp.tangencies[1]; // kappa = -1, alpha = -1/2
    REQUIRE(tneg.alpha < 0.0);
    CHECK(std::abs(continue_branch(implicit_centered(0.5), tneg, cplx(1.001, 0.0))) > 1.0);
}

TEST_CASE("branch continuation refuses targets outside its radius", "[spectral]") {
    const AssumptionReport rep = analyze(lax_friedrichs(0.5));
    REQUIRE(rep.all_ok());
    CHECK_THROWS_AS(continue_branch(lax_friedrichs(0.5), rep.tangencies[0], cplx(3.0, 0.0)),
                    ParameterOutOfRange);
}
