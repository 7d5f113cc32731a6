// SPDX-License-Identifier: Apache-2.0
#include "jcas/baselines.hpp"
#include "jcas/beampattern.hpp"
#include "jcas/channel.hpp"
#include "jcas/pga.hpp"
#include "oracles.hpp"

#include <doctest.h>

using jcas::Precoders;
using jcas::StepSchedule;
using oracle::cd;
using oracle::CMat;

namespace
{

const std::vector<double> kDirections = {-60.0, 0.0, 60.0};

struct Desk
{
    CMat H;
    CMat psi;
    jcas::SystemParams<double> params;
};

Desk desk(int N, int K, double snr_db, std::uint64_t seed, const CMat& unit_psi)
{
    const double P = std::pow(10.0, snr_db / 10.0);
    return {jcas::gen_channels(K, N, jcas::ChannelModel{}, seed).H, unit_psi * P,
            jcas::SystemParams<double>::for_array(N, P, 1.0, 0.3)};
}

bool same(const CMat& a, const CMat& b)
{
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

} // namespace

TEST_CASE("project_analog")
{
    std::mt19937_64 rng(1);
    const CMat U = oracle::random_phases(5, 3, rng);
    CHECK((jcas::project_analog<double>(U) - U).cwiseAbs().maxCoeff() < 1e-15);

    CMat one(1, 1);
    one(0, 0) = std::polar(2.0, std::numbers::pi / 3);
    CHECK(std::abs(jcas::project_analog<double>(one)(0, 0) - std::polar(1.0, std::numbers::pi / 3)) < 1e-15);
    one(0, 0) = 0;
    CHECK(jcas::project_analog<double>(one)(0, 0) == cd(1, 0));

    const CMat X = oracle::random_matrix(6, 4, rng);
    const CMat P = jcas::project_analog<double>(X);
    CHECK(((P.cwiseAbs().array() - 1.0).abs()).maxCoeff() < 1e-15);
    for (Eigen::Index c = 0; c < X.cols(); ++c)
        for (Eigen::Index r = 0; r < X.rows(); ++r)
            CHECK(std::abs(std::arg(P(r, c)) - std::arg(X(r, c))) < 1e-14);
    CHECK((jcas::project_analog<double>(P) - P).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project_digital")
{
    std::mt19937_64 rng(2);
    const CMat A = oracle::random_phases(8, 3, rng);
    const CMat D = oracle::random_matrix(3, 2, rng);
    const double P = 5.0;
    const CMat Dp = jcas::project_digital<double>(A, D, P);
    CHECK(std::abs((A * Dp).squaredNorm() - P) < 1e-9 * P);
    CHECK((jcas::project_digital<double>(A, Dp, P) - Dp).norm() < 1e-12 * Dp.norm());
    CHECK((jcas::project_digital<double>(A, CMat(7.0 * D), P) - Dp).norm() < 1e-12 * Dp.norm());
    CHECK_THROWS_AS(jcas::project_digital<double>(A, CMat::Zero(3, 2), P), jcas::NumericalError);
}

TEST_CASE("inner and digital steps")
{
    const CMat unit = jcas::solve_benchmark_covariance<double>(jcas::make_spec(kDirections, 5, 91), 1.0, 8).psi;
    const auto d = desk(8, 2, 6.0, 77, unit);
    const auto init = jcas::init_proposed<double>(d.H, kDirections, 3, d.params.power);

    SUBCASE("zero steps only project")
    {
        const std::vector<double> zeros(4, 0.0);
        const CMat A2 = jcas::analog_inner_loop<double>(init.A, init.D, zeros, d.H, d.psi, d.params);
        CHECK(same(A2, jcas::project_analog<double>(init.A)));
        const CMat D2 = jcas::digital_step<double>(A2, init.D, 0.0, d.H, d.psi, d.params);
        CHECK(same(D2, jcas::project_digital<double>(A2, init.D, d.params.power)));
    }

    SUBCASE("single step")
    {
        const std::vector<double> mu = {0.003};
        const CMat dir = jcas::grad_rate_A<double>(d.H, init, 1.0) - 0.3 * jcas::grad_tau_A<double>(init, d.psi);
        const CMat expect = jcas::project_analog<double>(CMat(init.A + 0.003 * dir));
        const CMat got = jcas::analog_inner_loop<double>(init.A, init.D, mu, d.H, d.psi, d.params);
        CHECK((got - expect).norm() < 1e-12);
    }

    SUBCASE("small analog steps climb the rate")
    {
        auto params = d.params;
        params.omega = 0;
        Precoders<double> work = init;
        double prev = jcas::sum_rate<double>(d.H, work, 1.0);
        for (int j = 0; j < 10; ++j)
        {
            // no projection between inner steps: step the raw iterate
            work.A += 1e-4 * jcas::analog_ascent_direction<double>(d.H, work, d.psi, params);
            const double now = jcas::sum_rate<double>(d.H, work, 1.0);
            CHECK(now >= prev);
            prev = now;
        }
    }

    SUBCASE("digital step")
    {
        auto params = d.params;
        params.omega = 0;
        const CMat step = init.D + 0.002 * jcas::grad_rate_D<double>(d.H, init, 1.0);
        const CMat expect = jcas::project_digital<double>(init.A, step, params.power);
        const CMat got = jcas::digital_step<double>(init.A, init.D, 0.002, d.H, d.psi, params);
        CHECK((got - expect).norm() < 1e-12 * expect.norm());

        const CMat weighted = jcas::digital_step<double>(init.A, init.D, 0.002, d.H, d.psi, d.params);
        CHECK(std::abs((init.A * weighted).squaredNorm() - d.params.power) < 1e-9 * d.params.power);
        const CMat dir = jcas::grad_rate_D<double>(d.H, init, 1.0) -
                         0.3 / 8.0 * jcas::grad_tau_D<double>(init, d.psi);
        const CMat expect2 = jcas::project_digital<double>(init.A, CMat(init.D + 0.002 * dir), d.params.power);
        CHECK((weighted - expect2).norm() < 1e-12 * expect2.norm());
    }
}

TEST_CASE("run_pga")
{
    const CMat unit = jcas::solve_benchmark_covariance<double>(jcas::make_spec(kDirections, 5, 91), 1.0, 16).psi;
    const auto d = desk(16, 2, 12.0, 5, unit);
    std::mt19937_64 rng(3);
    // deliberately infeasible start
    const Precoders<double> raw{oracle::random_matrix(16, 3, rng), oracle::random_matrix(3, 2, rng)};

    SUBCASE("zero schedule")
    {
        const auto traj = jcas::run_pga<double>(d.H, d.psi, d.params, StepSchedule::constant(4, 3, 0, 0), raw);
        REQUIRE(traj.records.size() == 5);
        const CMat A0 = jcas::project_analog<double>(raw.A);
        const CMat D0 = jcas::project_digital<double>(A0, raw.D, d.params.power);
        // re-projecting unit-modulus entries may move the last bit
        CHECK(oracle::rel(traj.final.A, A0) < 1e-14);
        CHECK(oracle::rel(traj.final.D, D0) < 1e-14);
        for (const auto& r : traj.records)
            CHECK(r.objective == doctest::Approx(traj.records.front().objective).epsilon(1e-12));
    }

    SUBCASE("one fixed step is conventional PGA")
    {
        const auto a = jcas::run_pga<double>(d.H, d.psi, d.params, StepSchedule::constant(1, 1, 0.01, 0.01), raw);
        const auto b = jcas::conventional_pga<double>(d.H, d.psi, d.params, 1, raw);
        CHECK(same(a.final.A, b.final.A));
        CHECK(same(a.final.D, b.final.D));
        // and by hand
        const CMat A0 = jcas::project_analog<double>(raw.A);
        const CMat D0 = jcas::project_digital<double>(A0, raw.D, d.params.power);
        const CMat A1 = jcas::analog_inner_loop<double>(A0, D0, std::vector<double>{0.01}, d.H, d.psi, d.params);
        const CMat D1 = jcas::digital_step<double>(A1, D0, 0.01, d.H, d.psi, d.params);
        CHECK(same(a.final.A, A1));
        CHECK(same(a.final.D, D1));
    }

    SUBCASE("feasible after every iteration and deterministic")
    {
        const auto sched = StepSchedule::constant(15, 3, 0.002, 1e-4);
        const auto init = jcas::init_proposed<double>(d.H, kDirections, 3, d.params.power);
        const auto a = jcas::run_pga<double>(d.H, d.psi, d.params, sched, init);
        const auto b = jcas::run_pga<double>(d.H, d.psi, d.params, sched, init);
        REQUIRE(a.records.size() == 16);
        for (const auto& r : a.records)
        {
            CHECK(r.modulus_error <= 1e-12);
            CHECK(r.power_error <= 1e-9);
            CHECK(r.objective == doctest::Approx(r.rate - 0.3 * r.tau).epsilon(1e-12));
        }
        CHECK(same(a.final.A, b.final.A));
        CHECK(same(a.final.D, b.final.D));
        CHECK(std::abs(jcas::objective<double>(d.H, a.final, d.psi, d.params) - a.records.back().objective) ==
              0.0);
    }

    SUBCASE("without the sensing weight the covariance is never read")
    {
        auto params = d.params;
        params.omega = 0;
        const auto sched = StepSchedule::constant(10, 2, 0.001, 1e-4);
        const auto init = jcas::init_proposed<double>(d.H, kDirections, 3, params.power);
        const auto a = jcas::run_pga<double>(d.H, d.psi, params, sched, init);
        const auto b = jcas::run_pga<double>(d.H, CMat::Zero(16, 16), params, sched, init);
        CHECK(same(a.final.A, b.final.A));
        CHECK(same(a.final.D, b.final.D));
        for (std::size_t i = 0; i < a.records.size(); ++i)
        {
            CHECK(a.records[i].rate == b.records[i].rate);
            CHECK(a.records[i].objective == b.records[i].objective);
        }
    }

    SUBCASE("bad inputs")
    {
        StepSchedule broken = StepSchedule::constant(2, 2, 0.01, 0.01);
        broken.lambda.pop_back();
        CHECK_THROWS_AS(jcas::run_pga<double>(d.H, d.psi, d.params, broken, raw), jcas::ConfigError);
        auto params = d.params;
        params.noise_var = 0;
        CHECK_THROWS_AS(jcas::run_pga<double>(d.H, d.psi, params, StepSchedule::constant(1, 1, 0, 0), raw),
                        jcas::ConfigError);
        const Precoders<double> wrong{oracle::random_phases(15, 3, rng), raw.D};
        CHECK_THROWS(jcas::run_pga<double>(d.H, d.psi, d.params, StepSchedule::constant(1, 1, 0, 0), wrong));
    }
}

TEST_CASE("initializations")
{
    std::mt19937_64 rng(4);

    SUBCASE("proposed")
    {
        const auto H = jcas::gen_channels(2, 12, jcas::ChannelModel{}, 8).H;
        const auto pc = jcas::init_proposed<double>(H, kDirections, 2, 3.0);
        CHECK(((pc.A.cwiseAbs().array() - 1.0).abs()).maxCoeff() < 1e-15);
        // M = K: phases of the channels only
        CHECK((pc.A - jcas::project_analog<double>(CMat(H.adjoint()))).norm() == 0.0);
        CHECK(std::abs((pc.A * pc.D).squaredNorm() - 3.0) < 1e-9 * 3.0);

        const auto pc4 = jcas::init_proposed<double>(H, kDirections, 4, 3.0);
        CHECK((pc4.A.col(2) - oracle::steering(-60.0, 12)).norm() < 1e-12);
        CHECK((pc4.A.col(3) - oracle::steering(0.0, 12)).norm() < 1e-12);

        CHECK_THROWS_AS(jcas::init_proposed<double>(H, kDirections, 6, 3.0), jcas::ConfigError);
        CHECK_THROWS_AS(jcas::init_proposed<double>(H, kDirections, 1, 3.0), jcas::ConfigError);
    }

    SUBCASE("proposed nulls interference on orthogonal channels")
    {
        const int N = 64, K = 4;
        CMat H(K, N);
        for (int k = 0; k < K; ++k)
        {
            // sin(theta) = 2 (k + 1) / N puts the steering vectors on distinct DFT bins
            const double th = std::asin(2.0 * (3 * k + 1) / N) * 180.0 / std::numbers::pi;
            H.row(k) = std::sqrt(double(N)) * oracle::steering(th, N).adjoint();
        }
        CHECK((H * H.adjoint() - double(N * N) * CMat::Identity(K, K)).norm() < 1e-8 * N * N);
        const auto pc = jcas::init_proposed<double>(H, kDirections, K, 10.0);
        const CMat G = H * pc.A * pc.D;
        double signal = 0, leak = 0;
        for (int k = 0; k < K; ++k)
            for (int j = 0; j < K; ++j)
                (k == j ? signal : leak) += std::norm(G(k, j));
        CHECK(10.0 * std::log10(signal / std::max(leak, 1e-300)) >= 20.0);
    }

    SUBCASE("random")
    {
        const auto H = jcas::gen_channels(3, 10, jcas::ChannelModel{}, 9).H;
        const auto a = jcas::init_random<double>(H, 4, 123, 2.0);
        const auto b = jcas::init_random<double>(H, 4, 123, 2.0);
        CHECK(same(a.A, b.A));
        CHECK(same(a.D, b.D));
        CHECK_FALSE(same(a.A, jcas::init_random<double>(H, 4, 124, 2.0).A));
        CHECK(((a.A.cwiseAbs().array() - 1.0).abs()).maxCoeff() < 1e-15);
        CHECK(std::abs((a.A * a.D).squaredNorm() - 2.0) < 1e-9 * 2.0);
    }

    SUBCASE("svd")
    {
        const auto H = jcas::gen_channels(3, 10, jcas::ChannelModel{}, 10).H;
        const auto pc = jcas::init_svd<double>(H, kDirections, 3, 2.0);
        CHECK(((pc.A.cwiseAbs().array() - 1.0).abs()).maxCoeff() < 1e-15);
        CHECK(std::abs((pc.A * pc.D).squaredNorm() - 2.0) < 1e-9 * 2.0);
        // each column carries the phases of one dominant eigenvector of H^H H
        Eigen::ComplexEigenSolver<CMat> es(CMat(H.adjoint() * H));
        std::vector<std::pair<double, int>> order;
        for (int i = 0; i < 10; ++i)
            order.push_back({es.eigenvalues()(i).real(), i});
        std::sort(order.rbegin(), order.rend());
        for (int k = 0; k < 3; ++k)
        {
            const CMat v = es.eigenvectors().col(order[k].second);
            const CMat phases = jcas::project_analog<double>(v);
            CHECK(std::abs((phases.adjoint() * pc.A.col(k))(0, 0)) == doctest::Approx(10.0).epsilon(1e-8));
        }
        const auto pc4 = jcas::init_svd<double>(H, kDirections, 4, 2.0);
        CHECK((pc4.A.col(3) - oracle::steering(-60.0, 10)).norm() < 1e-12);
    }

    SUBCASE("make_init dispatch")
    {
        const auto H = jcas::gen_channels(2, 8, jcas::ChannelModel{}, 11).H;
        CHECK(same(jcas::make_init<double>(jcas::InitKind::random, H, kDirections, 3, 1.0, 5).A,
                   jcas::init_random<double>(H, 3, 5, 1.0).A));
        CHECK(same(jcas::make_init<double>(jcas::InitKind::svd, H, kDirections, 3, 1.0, 5).A,
                   jcas::init_svd<double>(H, kDirections, 3, 1.0).A));
        CHECK(jcas::parse_init_kind("svd") == jcas::InitKind::svd);
        CHECK(jcas::to_string(jcas::InitKind::proposed) == "proposed");
        CHECK_THROWS_AS(jcas::parse_init_kind("orthogonal"), jcas::ConfigError);
    }
}

TEST_CASE("initial objective ordering over channels")
{
    const int N = 32, K = 4, M = 4;
    const double P = std::pow(10.0, 1.2);
    const CMat psi =
        jcas::solve_benchmark_covariance<double>(jcas::make_spec(kDirections, 5, 181), 1.0, N).psi * P;
    const auto params = jcas::SystemParams<double>::for_array(N, P, 1.0, 0.3);
    const auto corpus = jcas::gen_channel_corpus(50, K, N, jcas::ChannelModel{}, 2025);
    double proposed = 0, svd = 0, random = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i)
    {
        const CMat& H = corpus[i].H;
        proposed += jcas::objective<double>(H, jcas::init_proposed<double>(H, kDirections, M, P), psi, params);
        svd += jcas::objective<double>(H, jcas::init_svd<double>(H, kDirections, M, P), psi, params);
        random += jcas::objective<double>(H, jcas::init_random<double>(H, M, 1000 + i, P), psi, params);
    }
    CHECK(proposed > svd);
    CHECK(svd > random);
}

TEST_CASE("fixed-step PGA improves on the proposed start")
{
    const int N = 32, K = 4, M = 4;
    const double P = std::pow(10.0, 1.2);
    const CMat psi =
        jcas::solve_benchmark_covariance<double>(jcas::make_spec(kDirections, 5, 181), 1.0, N).psi * P;
    const auto params = jcas::SystemParams<double>::for_array(N, P, 1.0, 0.3);
    const auto corpus = jcas::gen_channel_corpus(50, K, N, jcas::ChannelModel{}, 2025);
    const auto sched = StepSchedule::constant(100, 10, 0.01, 0.01);
    int improved = 0, diverged = 0;
    for (const auto& ch : corpus)
    {
        try
        {
            const auto traj = jcas::run_pga<double>(ch.H, psi, params, sched,
                                                    jcas::init_proposed<double>(ch.H, kDirections, M, P));
            improved += traj.records.back().objective >= traj.records.front().objective;
        }
        catch (const jcas::NumericalError&)
        {
            ++diverged; // counts as not improved
        }
    }
    MESSAGE(improved << " of 50 channels end above their starting objective, " << diverged << " diverged");
    CHECK(improved >= 45);
}
