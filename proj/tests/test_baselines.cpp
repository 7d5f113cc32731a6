// SPDX-License-Identifier: Apache-2.0
#include "jcas/baselines.hpp"
#include "jcas/channel.hpp"
#include "oracles.hpp"

#include <doctest.h>

using oracle::cd;
using oracle::CMat;

TEST_CASE("zf_digital")
{
    std::mt19937_64 rng(1);

    SUBCASE("single user is a matched filter")
    {
        const CMat h = oracle::random_matrix(1, 8, rng);
        const auto zf = jcas::zf_digital<double>(h, 2.0);
        const CMat mf = h.adjoint() * (std::sqrt(2.0) / h.norm());
        CHECK(oracle::rel(zf.X, mf) < 1e-12);
        CHECK(zf.power == 2.0);
    }

    SUBCASE("orthogonal rows")
    {
        CMat H(3, 6);
        for (int k = 0; k < 3; ++k)
            H.row(k) = oracle::steering(std::asin(2.0 * k / 6) * 180 / std::numbers::pi, 6).adjoint();
        const CMat G = H * jcas::zf_digital<double>(H, 1.0).X;
        for (int k = 0; k < 3; ++k)
            for (int j = 0; j < 3; ++j)
                if (k != j)
                    CHECK(std::abs(G(k, j)) <= 1e-10);
    }

    SUBCASE("interference ratio on random channels")
    {
        for (int trial = 0; trial < 20; ++trial)
        {
            const CMat H = jcas::gen_channels(4, 16, jcas::ChannelModel{}, 100 + trial).H;
            const auto zf = jcas::zf_digital<double>(H, 10.0);
            CHECK(std::abs(zf.X.squaredNorm() - 10.0) <= 1e-9 * 10.0);
            const CMat G = H * zf.X;
            double off = 0, diag = std::numeric_limits<double>::infinity();
            for (int k = 0; k < 4; ++k)
                for (int j = 0; j < 4; ++j)
                {
                    if (k == j)
                        diag = std::min(diag, std::abs(G(k, j)));
                    else
                        off = std::max(off, std::abs(G(k, j)));
                }
            CHECK(off / diag <= 1e-9);
        }
    }

    SUBCASE("errors")
    {
        const CMat u = oracle::random_matrix(1, 5, rng);
        CMat H(2, 5);
        H << u, u * cd(0, 2);
        CHECK_THROWS_AS(jcas::zf_digital<double>(H, 1.0), jcas::NumericalError);
        CHECK_THROWS_AS(jcas::zf_digital<double>(oracle::random_matrix(6, 5, rng), 1.0), jcas::ConfigError);
        CHECK_THROWS_AS(jcas::zf_digital<double>(oracle::random_matrix(2, 5, rng), 0.0), jcas::ConfigError);
    }
}

TEST_CASE("zf_sum_rate")
{
    std::mt19937_64 rng(2);
    const CMat H = jcas::gen_channels(3, 8, jcas::ChannelModel{}, 5).H;
    const auto zf = jcas::zf_digital<double>(H, 4.0);

    const double r = jcas::zf_sum_rate<double>(H, zf.X, 1.0);
    CHECK(r == doctest::Approx(oracle::sum_rate(H, zf.X, 1.0)).epsilon(1e-12));
    const jcas::Precoders<double> as_hybrid{CMat::Identity(8, 8), zf.X};
    CHECK(r == doctest::Approx(jcas::sum_rate<double>(H, as_hybrid, 1.0)).epsilon(1e-12));

    double prev = r;
    for (double noise : {1e2, 1e4, 1e8, 1e16})
    {
        const double now = jcas::zf_sum_rate<double>(H, zf.X, noise);
        CHECK(now < prev);
        prev = now;
    }
    CHECK(prev < 1e-12);

    CMat h = CMat::Zero(1, 2);
    h(0, 1) = cd(0, 3);
    CMat x = CMat::Zero(2, 1);
    x(1, 0) = cd(0.5, 0);
    CHECK(jcas::zf_sum_rate<double>(h, x, 2.25) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(jcas::zf_sum_rate<double>(H, CMat(zf.X.transpose()), 1.0), jcas::ConfigError);
}

TEST_CASE("conventional_pga")
{
    const std::vector<double> dirs = {-60.0, 0.0, 60.0};
    const CMat H = jcas::gen_channels(2, 12, jcas::ChannelModel{}, 3).H;
    std::mt19937_64 rng(3);
    CMat B = oracle::random_matrix(12, 12, rng, 0.1);
    const CMat psi = B * B.adjoint();
    const auto params = jcas::SystemParams<double>::for_array(12, 1.0, 1.0, 0.3);
    const auto init = jcas::init_proposed<double>(H, dirs, 3, 1.0);

    const auto a = jcas::conventional_pga<double>(H, psi, params, 5, init);
    const auto b = jcas::run_pga<double>(H, psi, params, jcas::StepSchedule::constant(5, 1, 0.01, 0.01), init);
    REQUIRE(a.records.size() == b.records.size());
    CHECK(a.final.A == b.final.A);
    CHECK(a.final.D == b.final.D);
    for (std::size_t i = 0; i < a.records.size(); ++i)
        CHECK(a.records[i].objective == b.records[i].objective);

    const auto none = jcas::conventional_pga<double>(H, psi, params, 0, init);
    CHECK(none.records.size() == 1);
    CHECK(none.final.A == jcas::project_analog<double>(init.A));
    CHECK(none.final.D == jcas::project_digital<double>(none.final.A, init.D, 1.0));
    CHECK_THROWS_AS(jcas::conventional_pga<double>(H, psi, params, -1, init), jcas::ConfigError);
}
