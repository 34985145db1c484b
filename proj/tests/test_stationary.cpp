#include "doctest.h"

#include <cmath>
#include <vector>

#include "qstep/stationary.hpp"

using namespace qstep;

TEST_CASE("wavenumbers and matching coefficients") {
    auto [k1, k2] = step_wavenumbers(1.0, 18.4);
    CHECK(k1 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK(k2 == doctest::Approx(std::sqrt(2.0 * 19.4)).epsilon(1e-14));
    auto mc = match_coefficients({k1, k2});
    CHECK(mc.A == doctest::Approx(2.0 * k1 / (k1 + k2)).epsilon(1e-14));
    CHECK(mc.B == doctest::Approx((k1 - k2) / (k1 + k2)).epsilon(1e-14));
}

TEST_CASE("rect step closed form") {
    // frozen oracle: independent high-precision evaluation with r = 1/18.4
    ScatteringCoefficients c = rect_step_R(1.0, 18.4);
    CHECK(c.R == doctest::Approx(0.3968256211504657).epsilon(1e-12));
    CHECK(c.R + c.T == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(c.provenance == Provenance::ClosedFormRect);

    CHECK(rect_step_R(1.0, 0.0).R == 0.0);
    CHECK(rect_step_R(1.0, 0.0).T == 1.0);
    CHECK_THROWS_AS(rect_step_R(0.0, 1.0), Error);
    CHECK_THROWS_AS(rect_step_R(-1.0, 1.0), Error);
}

TEST_CASE("rect step E -> 0 limit is monotone to full reflection") {
    // frozen oracle values for r = E/dE in {1e-2, 1e-4, 1e-6} at dE = 1
    double r2 = rect_step_R(1e-2, 1.0).R;
    double r4 = rect_step_R(1e-4, 1.0).R;
    double r6 = rect_step_R(1e-6, 1.0).R;
    CHECK(r2 == doctest::Approx(0.6707650746582677).epsilon(1e-12));
    CHECK(r4 == doctest::Approx(0.9607900796500075).epsilon(1e-12));
    CHECK(r6 == doctest::Approx(0.9960079900079965).epsilon(1e-12));
    CHECK(r2 < r4);
    CHECK(r4 < r6);
    CHECK(r6 > 0.996);
}

TEST_CASE("soft step: limits and stability") {
    double E = 1.0, dE = 18.4;
    double k2 = std::sqrt(2.0 * (E + dE));
    // L -> 0 recovers the rect value
    CHECK(soft_step_R(E, dE, 1e-9 / k2).R ==
          doctest::Approx(rect_step_R(E, dE).R).epsilon(1e-6));
    // large k2 L: log-space evaluation keeps the tiny value finite
    double RL = soft_step_R(E, dE, 100.0 / k2).R;
    CHECK(RL > 0.0);
    CHECK(RL < 1e-40);
    // dE -> infinity with L fixed: tunneling-exponent limit
    double L = 0.1;
    double limit = std::exp(-2.0 * M_PI * std::sqrt(2.0 * E) * L);
    CHECK(soft_step_R(E, 1e6 * E, L).R == doctest::Approx(limit).epsilon(0.01));
    CHECK_THROWS_AS(soft_step_R(1.0, 1.0, 0.0), Error);
}

TEST_CASE("soft step: strictly decreasing in L, Visser bound") {
    double E = 1.0, dE = 18.4;
    double rect = rect_step_R(E, dE).R;
    double prev = rect;
    double L = 1e-4;
    for (int i = 0; i < 20; ++i, L *= 1.8) {
        double R = soft_step_R(E, dE, L).R;
        CHECK(R < prev);
        CHECK(R <= rect);
        prev = R;
    }
}

TEST_CASE("R(u,v): worked points and degenerate input") {
    // frozen oracle (independent high-precision evaluation)
    CHECK(R_uv({0.01, 0.5}) == doctest::Approx(0.9170859953104984).epsilon(1e-12));
    CHECK(R_uv({1e-3, 1.0}) == doctest::Approx(0.9947616274158085).epsilon(1e-12));
    CHECK(R_uv({1e-3, 1.0}) > 0.99);
    CHECK(R_uv({0.0, 0.7}) == 1.0);
    CHECK_THROWS_AS(R_uv({0.0, 0.0}), Error);

    // the true Taylor remainder at (0.01, 0.5): sqrt(R) - (1 - 2u/tanh v)
    double diff = std::sqrt(R_uv({0.01, 0.5})) - (1.0 - 0.02 / std::tanh(0.5));
    CHECK(diff == doctest::Approx(9.251382351203789e-4).epsilon(1e-9));
}

TEST_CASE("R_uv equals soft_step_R under the substitution") {
    // u = (pi/2) k1 L, v = (pi/2) sqrt(2 m dE) L / hbar
    for (double E : {0.5, 1.0, 3.0})
        for (double dE : {0.7, 18.4})
            for (double L : {1e-3, 0.05, 0.4}) {
                double k1 = std::sqrt(2.0 * E);
                DimensionlessStep d{0.5 * M_PI * k1 * L, 0.5 * M_PI * std::sqrt(2.0 * dE) * L};
                CHECK(R_uv(d) == doctest::Approx(soft_step_R(E, dE, L).R).epsilon(1e-12));
            }
}

TEST_CASE("paradoxical region predicate") {
    // Fig. 3 parameters: not deep in the regime
    double k1 = 200.0 * M_PI;
    double E = 0.5 * k1 * k1;
    RegionMargins m = paradoxical_region(k1, 0.01, 18.4 * E, 0.01);
    CHECK(m.inv_k1L == doctest::Approx(1.0 / (k1 * 0.01)).epsilon(1e-12));
    CHECK(m.depth_ratio == doctest::Approx(18.4).epsilon(1e-12));
    CHECK(m.sigma_k1 == doctest::Approx(k1 * 0.01).epsilon(1e-12));
    CHECK(!m.in_region);

    CHECK(paradoxical_region(1.0, 1e-4, 1e4 * 0.5, 1e3).in_region);
    CHECK(!paradoxical_region(1.0, 10.0, 0.05, 0.1).in_region);
}

TEST_CASE("transfer matrix: exact on the rect step, reciprocity, convergence") {
    double E = 1.0, dE = 18.4;
    Potential rect = Potential::rect_step(dE);
    double tm = transfer_matrix_R(rect, E, -1.0, 1.0, 2).R;
    CHECK(tm == doctest::Approx(rect_step_R(E, dE).R).epsilon(1e-10));

    Potential soft = Potential::soft_step(dE, 0.05);
    double closed = soft_step_R(E, dE, 0.05).R;
    double tm4096 = transfer_matrix_R(soft, E, -1.5, 1.5, 4096).R;
    CHECK(tm4096 == doctest::Approx(closed).epsilon(1e-6));

    // reciprocity: mirrored incidence at the same total energy
    double fwd = transfer_matrix_R(soft, E, -1.5, 1.5, 4096).R;
    double rev = transfer_matrix_R_mirrored(soft, E, -1.5, 1.5, 4096).R;
    CHECK(fwd == doctest::Approx(rev).epsilon(1e-10));

    // observed order >= 2 in 1/n_slices
    double e1 = std::abs(transfer_matrix_R(soft, E, -1.5, 1.5, 256).R - closed);
    double e2 = std::abs(transfer_matrix_R(soft, E, -1.5, 1.5, 512).R - closed);
    CHECK(e1 / e2 > 3.5);

    CHECK_THROWS_AS(transfer_matrix_R(soft, E, -1.5, 1.5, 0), Error);
    // incidence from the deep side of a plateau with too little energy to
    // enter it: the outgoing asymptote is evanescent
    CHECK_THROWS_AS(transfer_matrix_R(Potential::plateau(1.0, 1.0), 0.5, -2.0, 0.0, 64), Error);
}

TEST_CASE("R + T = 1 across provenances") {
    for (double E : {0.2, 1.0, 7.0}) {
        auto a = rect_step_R(E, 18.4);
        auto b = soft_step_R(E, 18.4, 0.02);
        auto c = transfer_matrix_R(Potential::soft_step(18.4, 0.02), E, -1.0, 1.0, 512);
        for (auto& s : {a, b, c}) {
            CHECK(s.R + s.T == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(s.R >= 0.0);
            CHECK(s.R <= 1.0);
        }
    }
}

TEST_CASE("branch sqrt follows the paper-style convention") {
    CHECK(detail::branch_sqrt(cplx(4.0, 0.0)) == cplx(2.0, 0.0));
    // negative real axis: i sqrt(|z|)
    cplx neg = detail::branch_sqrt(cplx(-4.0, 0.0));
    CHECK(neg.real() == doctest::Approx(0.0));
    CHECK(neg.imag() == doctest::Approx(2.0));
    // generic: positive real part
    CHECK(detail::branch_sqrt(cplx(1.0, -1.0)).real() > 0.0);
    CHECK(detail::branch_sqrt(cplx(-1.0, -1.0)).real() > 0.0);
    cplx z(0.3, -0.9);
    cplx r = detail::branch_sqrt(z);
    CHECK((r * r).real() == doctest::Approx(z.real()).epsilon(1e-12));
    CHECK((r * r).imag() == doctest::Approx(z.imag()).epsilon(1e-12));
}
