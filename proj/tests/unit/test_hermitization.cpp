// test_hermitization.cpp — Similarity transform and diffusion-frame parameters.

#include <cmath>
#include <random>

#include "doctest.h"
#include "opgap/hermitization.hpp"
#include "opgap/spectral.hpp"
#include "../oracles.hpp"

using namespace opgap;

namespace {

ChainSpec fig1(double g, std::size_t length = 5) {
    ChainSpec s;
    s.length = length;
    s.w_minus = 1.0;
    s.w_plus = 4.0;
    s.gamma = 0.01;
    s.boundary_extent = 1;
    if (g != 1.0) s.bond_overrides[1] = g;
    return s;
}

}  // namespace

TEST_SUITE("hermitization") {
    TEST_CASE("bulk parameters") {
        ChainSpec s = fig1(1.0);
        FrameParams fp = frame_params(s);
        CHECK(fp.a == doctest::Approx(std::log(4.0)).epsilon(1e-15));
        CHECK(fp.w == 2.0);
        CHECK(fp.lambda == 1.0);

        s.w_plus = 2.0;
        fp = frame_params(s);
        CHECK(fp.lambda == doctest::Approx(0.171572875253810).epsilon(1e-13));

        s.w_plus = s.w_minus = 1.5;
        s.geometry = Geometry::com;
        fp = frame_params(s);
        CHECK(fp.a == 0.0);
        CHECK(fp.lambda == 0.0);
        for (double t : fp.t_diag()) CHECK(t == 1.0);
    }

    TEST_CASE("similarity weights") {
        const FrameParams fp = frame_params(fig1(0.1, 20));
        CHECK(fp.log_t[0] == 0.0);
        CHECK(fp.t(0) == 1.0);
        for (std::size_t i = 1; i + 1 < fp.size(); ++i)
            CHECK(fp.log_t[i + 1] - fp.log_t[i] == doctest::Approx(fp.a / 2).epsilon(1e-13));
        const auto implied = log_similarity_weights(build_generator(fig1(0.1, 20)));
        for (std::size_t i = 0; i < fp.size(); ++i) CHECK(implied[i] == doctest::Approx(fp.log_t[i]).epsilon(1e-14));
    }

    TEST_CASE("three-site hermitized generator") {
        ChainSpec s;
        s.length = 3;
        s.w_plus = 2.0;
        s.w_minus = 1.0;
        const TridiagonalOperator h = hermitian_generator(s);
        CHECK(h.frame == Frame::hermitian);
        CHECK(h.diag == std::vector<double>{-2.0, -3.0, -1.0});
        CHECK(h.sub[0] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
        CHECK(h.sub[1] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
        CHECK(h.sub == h.sup);
        CHECK_THROWS_AS(hermitize(h, frame_params(s)), SpecError);
    }

    TEST_CASE("hand-built five-site matrix with a suppressed first bond") {
        const double g = 0.1, wp = 4.0, wm = 1.0, gam = 0.01;
        Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(5, 5);
        const double rates_f[4] = {g * wp, wp, wp, wp};
        const double rates_b[4] = {g * wm, wm, wm, wm};
        for (int i = 0; i < 5; ++i) {
            double out = 0.0;
            if (i < 4) out += rates_f[i];
            if (i > 0) out += rates_b[i - 1];
            ref(i, i) = -out - gam * (i + 1);
        }
        for (int i = 0; i < 4; ++i) ref(i, i + 1) = ref(i + 1, i) = std::sqrt(rates_f[i] * rates_b[i]);
        CHECK(ref(0, 1) == doctest::Approx(g * 2.0));

        const Eigen::MatrixXd got = testing::dense(hermitian_generator(fig1(g)));
        CHECK((got - ref).cwiseAbs().maxCoeff() < 1e-15);
    }

    TEST_CASE("dense spectra of M and its hermitized form agree") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 60; ++trial) {
            const ChainSpec s = testing::random_spec(rng, 50);
            const TridiagonalOperator m = build_generator(s);
            const auto general = testing::dense_general_decay_rates(m);
            const auto sym = testing::dense_symmetric_decay_rates(hermitize(m, frame_params(s)));
            REQUIRE(general.decay_rates.size() == sym.size());
            for (std::size_t i = 0; i < sym.size(); ++i)
                CHECK(std::abs(general.decay_rates[i] - sym[i]) < 1e-10 * std::max(1.0, std::abs(sym[i])));
        }
    }

    TEST_CASE("bulk decomposition into a symmetric walk, a potential and the gap") {
        ChainSpec s = fig1(1.0, 30);
        const FrameParams fp = frame_params(s);
        const TridiagonalOperator h = hermitian_generator(s);
        for (std::size_t i = 1; i + 1 < h.size(); ++i) {
            const double walk_diag = -2.0 * fp.w;
            const double expected = walk_diag - s.gamma * static_cast<double>(i + 1) - fp.lambda;
            CHECK(h.diag[i] == doctest::Approx(expected).epsilon(1e-14));
            CHECK(h.sub[i] == doctest::Approx(fp.w).epsilon(1e-15));
        }
    }

    TEST_CASE("frame conversion") {
        const ChainSpec s = fig1(0.1, 12);
        const FrameParams fp = frame_params(s);
        std::vector<double> e1(12, 0.0);
        e1[0] = 1.0;
        CHECK(to_original_frame(e1, fp) == e1);

        std::vector<double> psi(12);
        for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = 1.0 / (1.0 + static_cast<double>(i));
        const auto phi = to_original_frame(psi, fp);
        for (std::size_t i = 1; i + 1 < psi.size(); ++i)
            CHECK(phi[i + 1] / phi[i] ==
                  doctest::Approx(std::exp(fp.a / 2) * psi[i + 1] / psi[i]).epsilon(1e-13));

        ChainSpec flat = s;
        flat.geometry = Geometry::com;
        flat.w_plus = flat.w_minus = 1.0;
        flat.bond_overrides.clear();
        CHECK(to_original_frame(psi, frame_params(flat)) == psi);

        CHECK_THROWS_AS(to_original_frame(std::vector<double>(3, 1.0), fp), SpecError);
    }

    TEST_CASE("scaled conversion survives overflow of T") {
        ChainSpec s = fig1(1.0, 3000);  // T(L) ~ 2^3000
        const FrameParams fp = frame_params(s);
        std::vector<double> log_psi(s.length);
        std::vector<signed char> sign(s.length, 1);
        for (std::size_t i = 0; i < s.length; ++i) log_psi[i] = -0.5 * fp.a * static_cast<double>(i);
        const ScaledVector v = to_original_frame_scaled(log_psi, sign, fp);
        for (double x : v.values) CHECK(x == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(v.log_scale) < 1e-9);
    }
}
