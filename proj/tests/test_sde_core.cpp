#include <cmath>

#include "doctest.h"
#include "sdesr/sde.hpp"
#include "support.hpp"

using namespace sdesr;
using testsup::make_model;

TEST_CASE("sigma_of_t follows the geometric schedule") {
    NoiseSchedule s;
    CHECK(sigma_of_t(s, 0.0) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(sigma_of_t(s, 1.0) == doctest::Approx(348.0).epsilon(1e-12));
    CHECK(sigma_of_t(s, 0.5) == doctest::Approx(std::sqrt(0.01 * 348.0)).epsilon(1e-12));
    CHECK_THROWS_AS(sigma_of_t(s, -0.1), std::domain_error);
    CHECK_THROWS_AS(sigma_of_t(s, 1.1), std::domain_error);

    double prev = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double v = sigma_of_t(s, i / 100.0);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("beta_of_t is the affine schedule") {
    NoiseSchedule s;
    CHECK(beta_of_t(s, 0.0) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(beta_of_t(s, 1.0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(beta_of_t(s, 0.5) == doctest::Approx(10.05).epsilon(1e-12));
    CHECK_THROWS_AS(beta_of_t(s, 2.0), std::domain_error);
}

TEST_CASE("schedule and model validation") {
    NoiseSchedule bad;
    bad.sigma_min = 2.0;
    bad.sigma_max = 1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = NoiseSchedule{};
    bad.beta_min = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    SdeModel m;
    m.t_min = 0.0;
    CHECK_THROWS_AS(m.validate(), std::invalid_argument);
}

TEST_CASE("drift per kind") {
    Tensor x(1, 1, 1, 1.0f);
    const Tensor ve = drift(make_model(SdeKind::VE), x, 0.7);
    CHECK(ve.data[0] == 0.0f);

    const Tensor vp = drift(make_model(SdeKind::VP), x, 0.0);
    CHECK(vp.data[0] == doctest::Approx(-0.05).epsilon(1e-7));

    Tensor x2(1, 1, 1, 2.0f);
    const Tensor sub = drift(make_model(SdeKind::SubVP), x2, 1.0);
    CHECK(sub.data[0] == doctest::Approx(-20.0).epsilon(1e-7));
}

TEST_CASE("diffusion per kind") {
    CHECK(diffusion(make_model(SdeKind::VP), 1.0) == doctest::Approx(std::sqrt(20.0)).epsilon(1e-12));

    // VE closed form against a centered finite difference of sigma^2(t)
    const SdeModel ve = make_model(SdeKind::VE);
    for (double t : {0.1, 0.3, 0.5, 0.9}) {
        const double h = 1e-6;
        const double s2p = std::pow(sigma_of_t(ve.schedule, t + h), 2);
        const double s2m = std::pow(sigma_of_t(ve.schedule, t - h), 2);
        const double fd = std::sqrt((s2p - s2m) / (2 * h));
        CHECK(diffusion(ve, t) == doctest::Approx(fd).epsilon(1e-6));
    }

    // subVP vanishes at t -> 0+ and never exceeds VP
    const SdeModel sub = make_model(SdeKind::SubVP);
    CHECK(diffusion(sub, 1e-9) < 1e-4);
    const SdeModel vp = make_model(SdeKind::VP);
    for (int i = 1; i <= 20; ++i) {
        const double t = i / 20.0;
        CHECK(diffusion(sub, t) <= diffusion(vp, t) + 1e-12);
    }
}

TEST_CASE("marginal_prob closed forms") {
    const SdeModel vp = make_model(SdeKind::VP);
    // int_0^1 beta = 10.05 by quadrature
    double quad = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double t0 = static_cast<double>(i) / n, t1 = static_cast<double>(i + 1) / n;
        quad += 0.5 * (beta_of_t(vp.schedule, t0) + beta_of_t(vp.schedule, t1)) / n;
    }
    CHECK(quad == doctest::Approx(10.05).epsilon(1e-9));
    CHECK(beta_integral(vp.schedule, 1.0) == doctest::Approx(quad).epsilon(1e-9));
    CHECK(marginal_prob(vp, 1.0).mean_coeff == doctest::Approx(std::exp(-5.025)).epsilon(1e-12));
    CHECK(marginal_prob(vp, 1.0).mean_coeff == doctest::Approx(6.57e-3).epsilon(2e-3));

    const SdeModel ve = make_model(SdeKind::VE);
    const double v = marginal_prob(ve, 1.0).std;
    CHECK(v * v == doctest::Approx(348.0 * 348.0 - 0.01 * 0.01).epsilon(1e-12));
    CHECK(marginal_prob(ve, 0.37).mean_coeff == 1.0);

    // subVP std equals the square of the VP std at every t
    const SdeModel sub = make_model(SdeKind::SubVP);
    for (int i = 1; i <= 50; ++i) {
        const double t = i / 50.0;
        const double vps = marginal_prob(vp, t).std;
        CHECK(marginal_prob(sub, t).std == doctest::Approx(vps * vps).epsilon(1e-14));
    }
}

TEST_CASE("std is nondecreasing in t") {
    for (SdeKind kind : {SdeKind::VE, SdeKind::VP, SdeKind::SubVP}) {
        const SdeModel m = make_model(kind);
        double prev = 0.0;
        for (int i = 1; i <= 200; ++i) {
            const double v = marginal_prob(m, i / 200.0).std;
            CHECK(v >= prev - 1e-15);
            prev = v;
        }
    }
}

TEST_CASE("moment-ODE oracle agrees with the closed forms") {
    CHECK_THROWS_AS(integrate_moment_odes(make_model(SdeKind::VP), 0.5, 50),
                    std::invalid_argument);

    // stated spot checks
    const MarginalMoments vp0 = integrate_moment_odes(make_model(SdeKind::VP), 0.0, 100);
    CHECK(vp0.mean_coeff == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(vp0.std == doctest::Approx(0.0).epsilon(1e-12));

    const SdeModel ve = make_model(SdeKind::VE);
    CHECK(integrate_moment_odes(ve, 0.5, 10000).std ==
          doctest::Approx(marginal_prob(ve, 0.5).std).epsilon(1e-3));
    const SdeModel sub = make_model(SdeKind::SubVP);
    CHECK(integrate_moment_odes(sub, 1.0, 10000).std ==
          doctest::Approx(marginal_prob(sub, 1.0).std).epsilon(1e-3));

    // kernel-ODE agreement at 20 random t per kind
    RandomSource rng(7);
    for (SdeKind kind : {SdeKind::VE, SdeKind::VP, SdeKind::SubVP}) {
        const SdeModel m = make_model(kind);
        for (int i = 0; i < 20; ++i) {
            const double t = rng.uniform(m.t_min, 1.0);
            const MarginalMoments ode = integrate_moment_odes(m, t, 2000);
            const MarginalMoments cf = marginal_prob(m, t);
            CHECK(std::fabs(ode.mean_coeff - cf.mean_coeff) < 1e-4);
            CHECK(std::fabs(ode.std - cf.std) <= 0.005 * std::max(cf.std, 1e-300));
        }
    }
}

TEST_CASE("forward Euler-Maruyama simulation matches the kernels") {
    const std::vector<double> snaps = {0.25, 0.5, 1.0};
    for (SdeKind kind : {SdeKind::VE, SdeKind::VP, SdeKind::SubVP}) {
        const SdeModel m = make_model(kind);
        const auto est = testsup::forward_em_moments(m, 1.0, 5000, 1000, snaps, 123);
        REQUIRE(est.size() == snaps.size());
        for (size_t k = 0; k < snaps.size(); ++k) {
            const MarginalMoments mm = marginal_prob(m, snaps[k]);
            CHECK(std::fabs(est[k].mean - mm.mean_coeff * 1.0) < 0.02);
            CHECK(std::fabs(est[k].std - mm.std) < 0.03 * mm.std);
        }
    }
}

TEST_CASE("prior sampling statistics and determinism") {
    RandomSource rng(11);
    const SdeModel vp = make_model(SdeKind::VP);
    Tensor a = prior_sample(vp, 100, 1000, 1, rng);
    double sq = 0.0;
    for (float v : a.data) sq += static_cast<double>(v) * v;
    const double std_vp = std::sqrt(sq / a.size());
    CHECK(std::fabs(std_vp - 1.0) < 0.02);

    const SdeModel ve = make_model(SdeKind::VE);
    Tensor b = prior_sample(ve, 100, 1000, 1, rng);
    sq = 0.0;
    for (float v : b.data) sq += static_cast<double>(v) * v;
    CHECK(std::fabs(std::sqrt(sq / b.size()) - 348.0) < 0.02 * 348.0);

    RandomSource r1(42), r2(42);
    const Tensor s1 = prior_sample(ve, 8, 8, 1, r1);
    const Tensor s2 = prior_sample(ve, 8, 8, 1, r2);
    CHECK(s1.data == s2.data);
}

TEST_CASE("RandomSource streams") {
    RandomSource a(5), b(5);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

    RandomSource base(5);
    RandomSource c1 = base.derive(1), c2 = base.derive(2);
    bool differ = false;
    for (int i = 0; i < 10; ++i) differ |= (c1.normal() != c2.normal());
    CHECK(differ);
}
