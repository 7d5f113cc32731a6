// SPDX-License-Identifier: Apache-2.0
#include "jcas/beampattern.hpp"
#include "jcas/objective.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>

using oracle::cd;
using oracle::CMat;

namespace
{

int count_on(const jcas::BeampatternSpec& spec)
{
    return static_cast<int>(std::count(spec.desired.begin(), spec.desired.end(), 1.0));
}

double quad_form_loop(const CMat& C, double theta)
{
    const Eigen::VectorXcd a = oracle::steering(theta, static_cast<int>(C.rows()));
    cd acc = 0;
    for (Eigen::Index r = 0; r < C.rows(); ++r)
        for (Eigen::Index c = 0; c < C.cols(); ++c)
            acc += std::conj(a(r)) * C(r, c) * a(c);
    return acc.real();
}

// Factored solver: Psi = V V^H with every row of V held at norm sqrt(P/N), so
// the diagonal and PSD constraints hold by construction. Alpha is refit after
// every step and the step is backtracked.
double factored_residual(const jcas::BeampatternSpec& spec, double power, int n, std::mt19937_64& rng, int iters)
{
    std::vector<Eigen::VectorXcd> steer;
    for (double th : spec.grid)
        steer.push_back(oracle::steering(th, n));
    const double row_norm = std::sqrt(power / n);
    auto normalise = [&](CMat& V) {
        for (Eigen::Index r = 0; r < V.rows(); ++r)
            V.row(r) *= row_norm / V.row(r).norm();
    };
    auto residual = [&](const CMat& V, double* alpha_out) {
        std::vector<double> p(steer.size());
        double num = 0, den = 0;
        for (std::size_t t = 0; t < steer.size(); ++t)
        {
            p[t] = (V.adjoint() * steer[t]).squaredNorm();
            num += spec.desired[t] * p[t];
            den += spec.desired[t] * spec.desired[t];
        }
        const double alpha = den > 0 ? num / den : 0;
        double r = 0;
        for (std::size_t t = 0; t < steer.size(); ++t)
            r += (alpha * spec.desired[t] - p[t]) * (alpha * spec.desired[t] - p[t]);
        if (alpha_out)
            *alpha_out = alpha;
        return r;
    };

    CMat V = oracle::random_matrix(n, n, rng);
    normalise(V);
    double alpha = 0;
    double f = residual(V, &alpha);
    double step = 1e-2;
    for (int it = 0; it < iters; ++it)
    {
        CMat g = CMat::Zero(n, n);
        for (std::size_t t = 0; t < steer.size(); ++t)
        {
            const double e = alpha * spec.desired[t] - (V.adjoint() * steer[t]).squaredNorm();
            g += -2.0 * e * steer[t] * (steer[t].adjoint() * V);
        }
        bool moved = false;
        for (int bt = 0; bt < 40; ++bt)
        {
            CMat trial = V - step * g;
            normalise(trial);
            double a2 = 0;
            const double f2 = residual(trial, &a2);
            if (f2 < f)
            {
                V = trial;
                f = f2;
                alpha = a2;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if (!moved)
            break;
    }
    return f;
}

} // namespace

TEST_CASE("make_spec")
{
    const auto spec = jcas::make_spec({-60, 0, 60}, 5, 181);
    CHECK(spec.size() == 181);
    CHECK(spec.grid.front() == -90.0);
    CHECK(spec.grid.back() == 90.0);
    CHECK(count_on(spec) == 33);
    for (std::size_t t = 1; t < spec.size(); ++t)
        CHECK(spec.grid[t] > spec.grid[t - 1]);

    CHECK(count_on(jcas::make_spec({}, 5, 181)) == 0);
    CHECK(count_on(jcas::make_spec({0}, 90, 181)) == 181);

    // duplicates collapse
    const auto dup = jcas::make_spec({0, 0, 60}, 5, 181);
    CHECK(dup.directions.size() == 2);
    CHECK(count_on(dup) == 22);

    CHECK_THROWS_AS(jcas::make_spec({0}, 0, 181), jcas::ConfigError);
    CHECK_THROWS_AS(jcas::make_spec({0}, 5, 1), jcas::ConfigError);
    CHECK_THROWS_AS(jcas::make_spec({100}, 5, 181), jcas::ConfigError);
}

TEST_CASE("beampattern_value")
{
    const int N = 8;
    const double P = 3.5;
    const CMat iso = (P / N) * CMat::Identity(N, N);
    for (double th : {-80.0, -13.0, 0.0, 44.0})
        CHECK(jcas::beampattern_value<double>(iso, th) == doctest::Approx(P).epsilon(1e-12));

    const Eigen::VectorXcd a = oracle::steering(25.0, N);
    CHECK(jcas::beampattern_value<double>(CMat(a * a.adjoint()), 25.0) == doctest::Approx(N * N).epsilon(1e-12));

    std::mt19937_64 rng(4);
    const CMat C1 = oracle::random_hermitian(N, rng);
    const CMat C2 = oracle::random_hermitian(N, rng);
    for (double th : {-61.0, -7.5, 33.0, 89.0})
    {
        CHECK(jcas::beampattern_value<double>(C1, th) == doctest::Approx(quad_form_loop(C1, th)).epsilon(1e-10));
        const double sum = jcas::beampattern_value<double>(CMat(C1 + C2), th);
        CHECK(std::abs(sum - jcas::beampattern_value<double>(C1, th) - jcas::beampattern_value<double>(C2, th)) <
              1e-10);
    }

    CHECK_THROWS_AS(jcas::beampattern_value<double>(CMat::Zero(3, 2), 0.0), jcas::ConfigError);

    const auto spec = jcas::make_spec({-60, 0, 60}, 5, 37);
    const auto pat = jcas::covariance_pattern<double>(C1, spec);
    for (std::size_t t = 0; t < spec.size(); ++t)
        CHECK(pat(t) == doctest::Approx(quad_form_loop(C1, spec.grid[t])).epsilon(1e-10));
}

TEST_CASE("beampattern_mse")
{
    std::mt19937_64 rng(6);
    const auto spec = jcas::make_spec({-60, 0, 60}, 5, 19);
    const int N = 8;

    jcas::Precoders<double> zero{oracle::random_phases(N, 3, rng), CMat::Zero(3, 2)};
    double mean_sq = 0;
    for (double b : spec.desired)
        mean_sq += b * b;
    CHECK(jcas::beampattern_mse(zero, spec) == doctest::Approx(mean_sq / spec.size()));

    // F F^H = I / N gives a^H F F^H a = 1 everywhere
    const auto full = jcas::make_spec({0}, 90, 31);
    jcas::Precoders<double> exact{CMat::Identity(N, N) / std::sqrt(double(N)), CMat::Identity(N, N)};
    CHECK(jcas::beampattern_mse(exact, full) < 1e-24);

    const jcas::Precoders<double> pc{oracle::random_phases(N, 3, rng), oracle::random_matrix(3, 2, rng, 0.3)};
    const CMat C = pc.A * pc.D * pc.D.adjoint() * pc.A.adjoint();
    double acc = 0;
    for (std::size_t t = 0; t < spec.size(); ++t)
    {
        const double d = spec.desired[t] - quad_form_loop(C, spec.grid[t]);
        acc += d * d;
    }
    CHECK(jcas::beampattern_mse(pc, spec) == doctest::Approx(acc / spec.size()).epsilon(1e-10));

    // D -> D Q with Q unitary
    Eigen::HouseholderQR<CMat> qr(oracle::random_matrix(2, 2, rng));
    const CMat Q = qr.householderQ();
    const jcas::Precoders<double> rotated{pc.A, pc.D * Q};
    CHECK(std::abs(jcas::beampattern_mse(rotated, spec) - jcas::beampattern_mse(pc, spec)) < 1e-10);

    CHECK(jcas::beampattern_mse_effective<double>(pc.A * pc.D, spec) == jcas::beampattern_mse(pc, spec));
}

namespace
{

void check_membership(const jcas::BenchmarkCovariance<double>& cov, double power, int n)
{
    const CMat& psi = cov.psi;
    CHECK((psi - psi.adjoint()).norm() <= 1e-10 * psi.norm());
    for (int i = 0; i < n; ++i)
    {
        CHECK(std::abs(psi(i, i).real() - power / n) <= 1e-9 * power / n);
        CHECK(std::abs(psi(i, i).imag()) <= 1e-12);
    }
    CHECK(jcas::hermitian_eig<double>(psi).eigenvalues(0) >= -1e-9);
    for (std::size_t i = 1; i < cov.history.size(); ++i)
        CHECK(cov.history[i] <= cov.history[i - 1] + 1e-12 * std::max(1.0, cov.history[i - 1]));
}

} // namespace

TEST_CASE("solve_benchmark_covariance")
{
    SUBCASE("constant pattern is isotropic")
    {
        auto spec = jcas::make_spec({0}, 90, 91);
        for (auto& b : spec.desired)
            b = 2.5;
        const double P = 4.0;
        const auto cov = jcas::solve_benchmark_covariance<double>(spec, P, 8);
        CHECK((cov.psi - (P / 8) * CMat::Identity(8, 8)).norm() < 1e-8);
        CHECK(cov.alpha == doctest::Approx(P / 2.5).epsilon(1e-10));
        CHECK(cov.residual < 1e-16);
    }

    SUBCASE("zero pattern stays feasible")
    {
        const auto spec = jcas::make_spec({}, 5, 61);
        const auto cov = jcas::solve_benchmark_covariance<double>(spec, 2.0, 6);
        check_membership(cov, 2.0, 6);
    }

    SUBCASE("three lobes, N = 16")
    {
        const auto spec = jcas::make_spec({-60, 0, 60}, 5, 181);
        const auto cov = jcas::solve_benchmark_covariance<double>(spec, 1.0, 16);
        check_membership(cov, 1.0, 16);
        CHECK(cov.history.size() >= 2);
        CHECK(cov.history.back() < cov.history.front());
        // linear rescale to another power stays in S
        const CMat s = cov.scaled_to(7.0);
        for (int i = 0; i < 16; ++i)
            CHECK(s(i, i).real() == doctest::Approx(7.0 / 16).epsilon(1e-12));
    }

    SUBCASE("N = 4 residual agrees with a multi-start factored solver")
    {
        const auto spec = jcas::make_spec({-60, 0, 60}, 5, 19);
        const auto cov = jcas::solve_benchmark_covariance<double>(spec, 1.0, 4);
        check_membership(cov, 1.0, 4);
        std::mt19937_64 rng(99);
        double best = std::numeric_limits<double>::infinity();
        for (int start = 0; start < 10; ++start)
            best = std::min(best, factored_residual(spec, 1.0, 4, rng, 3000));
        CHECK(std::abs(cov.residual - best) <= 0.05 * best);
    }

    SUBCASE("lobes dominate at N = 64")
    {
        const auto spec = jcas::make_spec({-60, 0, 60}, 5, 181);
        jcas::CovarianceSolverOptions opt;
        opt.max_iterations = 400;
        const auto cov = jcas::solve_benchmark_covariance<double>(spec, 1.0, 64, opt);
        check_membership(cov, 1.0, 64);
        const auto pat = jcas::covariance_pattern<double>(cov.psi, spec);
        std::vector<double> off;
        for (std::size_t t = 0; t < spec.size(); ++t)
            if (spec.desired[t] == 0.0)
                off.push_back(pat(t));
        std::nth_element(off.begin(), off.begin() + off.size() / 2, off.end());
        const double median_off = off[off.size() / 2];
        for (double d : {-60.0, 0.0, 60.0})
            CHECK(jcas::beampattern_value<double>(cov.psi, d) >= 3 * median_off);
    }

    CHECK_THROWS_AS(jcas::solve_benchmark_covariance<double>(jcas::make_spec({0}, 5, 11), 1.0, 1),
                    jcas::ConfigError);
    CHECK_THROWS_AS(jcas::solve_benchmark_covariance<double>(jcas::make_spec({0}, 5, 11), 0.0, 4),
                    jcas::ConfigError);
}

TEST_CASE("project_feasible_covariance")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial)
    {
        const CMat X = oracle::random_matrix(6, 6, rng);
        const CMat Y = jcas::project_feasible_covariance<double>(X, 0.5);
        for (int i = 0; i < 6; ++i)
            CHECK(std::abs(Y(i, i) - cd(0.5, 0)) < 1e-12);
        CHECK(jcas::hermitian_eig<double>(Y).eigenvalues(0) >= -1e-9);
        CHECK((Y - Y.adjoint()).norm() < 1e-12);
    }
}
