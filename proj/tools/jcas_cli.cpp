// SPDX-License-Identifier: Apache-2.0

#include "jcas/container.hpp"
#include "jcas/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace
{

// exit codes: 2 for anything the user can fix in their inputs, 3 when the
// numerics blow up
constexpr int kConfigExit = 2;
constexpr int kNumericExit = 3;

struct Common
{
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
};

jcas::ExperimentConfig load(const Common& c)
{
    jcas::ExperimentConfig cfg;
    if (!c.config.empty())
        cfg = jcas::load_config(c.config);
    if (c.seed_set)
        cfg.seed = c.seed;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* sub, Common& c, bool out_required = true)
{
    sub->add_option("--config", c.config, "key = value configuration file")->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&c](const std::uint64_t& v) {
            c.seed = v;
            c.seed_set = true;
        },
        "override the configured seed");
    auto* out = sub->add_option("--out", c.out, "output path");
    if (out_required)
        out->required();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hybrid beamforming design for joint communications and sensing"};
    app.require_subcommand(1);

    Common common;
    std::string dataset, psi, schedule, precoders, report, method = "pga";
    double snr_db = 12.0;
    std::vector<int> n_list, k_list;

    auto* gen = app.add_subcommand("gen", "generate a seeded channel corpus");
    add_common(gen, common);

    auto* solve = app.add_subcommand("solve-psi", "solve the benchmark covariance at psi_power");
    add_common(solve, common);

    auto* train = app.add_subcommand("train", "learn the step-size schedule");
    add_common(train, common);
    train->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
    train->add_option("--psi", psi)->required()->check(CLI::ExistingFile);
    train->add_option("--report", report, "per-epoch CSV (default: <out>.csv)");

    auto* eval = app.add_subcommand("eval", "SNR sweep over UPGANet, fixed-step PGA and ZF");
    add_common(eval, common);
    eval->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
    eval->add_option("--psi", psi)->required()->check(CLI::ExistingFile);
    eval->add_option("--schedule", schedule)->check(CLI::ExistingFile);

    auto* bp = app.add_subcommand("beampattern", "realized beampattern on the angle grid");
    add_common(bp, common);
    auto* bp_pc = bp->add_option("--precoders", precoders, "precoder file")->check(CLI::ExistingFile);
    bp->add_option("--psi", psi, "covariance file")->check(CLI::ExistingFile);
    auto* bp_ds = bp->add_option("--dataset", dataset, "average a method over this corpus")->check(CLI::ExistingFile);
    bp->add_option("--schedule", schedule)->check(CLI::ExistingFile);
    bp->add_option("--method", method, "upganet | pga | zf")->check(CLI::IsMember({"upganet", "pga", "zf"}));
    bp->add_option("--snr", snr_db, "SNR in dB for --dataset");
    bp_pc->excludes(bp_ds);

    auto* scaling = app.add_subcommand("scaling", "per-outer-iteration timing across N and K");
    add_common(scaling, common);
    scaling->add_option("--n-list", n_list, "antenna counts")->delimiter(',');
    scaling->add_option("--k-list", k_list, "user counts (M = K)")->delimiter(',');

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigExit;
    }

    try
    {
        const auto cfg = load(common);
        if (*gen)
        {
            const auto channels = jcas::cmd_gen(cfg, common.out);
            std::cout << "wrote " << channels.size() << " channels to " << common.out << '\n';
        }
        else if (*solve)
        {
            const auto cov = jcas::cmd_solve_psi(cfg, common.out);
            std::cout << "residual " << cov.residual << " after " << cov.iterations << " iterations"
                      << (cov.converged ? "" : " (not converged)") << '\n';
        }
        else if (*train)
        {
            if (report.empty())
                report = common.out + ".csv";
            const auto rep = jcas::cmd_train(cfg, dataset, psi, common.out, report);
            std::cout << "validation loss " << rep.initial_val_loss << " -> " << rep.best_val_loss << '\n';
        }
        else if (*eval)
        {
            std::optional<std::filesystem::path> sched;
            if (!schedule.empty())
                sched = schedule;
            const auto result = jcas::cmd_eval(cfg, dataset, psi, sched, common.out);
            for (const auto& w : result.warnings)
                std::cerr << "warning: " << w << '\n';
            std::cout << "wrote " << result.records.size() << " rows to " << common.out << '\n';
        }
        else if (*bp)
        {
            const auto spec = cfg.beampattern_spec();
            jcas::RVector<double> gains;
            if (!precoders.empty())
            {
                const auto pc = jcas::load_precoders(precoders);
                gains = jcas::precoder_pattern<double>(pc.A * pc.D, spec);
            }
            else if (!dataset.empty())
            {
                if (psi.empty())
                    throw jcas::ConfigError("--dataset needs --psi");
                std::optional<jcas::StepSchedule> sched;
                if (!schedule.empty())
                    sched = jcas::load_schedule(schedule);
                gains = jcas::average_method_pattern(method, cfg, jcas::load_dataset(dataset),
                                                     jcas::load_covariance(psi), sched, snr_db);
            }
            else if (!psi.empty())
            {
                gains = jcas::covariance_pattern<double>(jcas::load_covariance(psi).psi, spec);
            }
            else
            {
                throw jcas::ConfigError("beampattern needs --precoders, --psi or --dataset");
            }
            jcas::write_pattern_csv(common.out, spec, gains);
        }
        else if (*scaling)
        {
            if (n_list.empty() && k_list.empty())
                n_list.push_back(cfg.N);
            const auto rows = jcas::cmd_scaling(cfg, n_list, k_list, common.out);
            for (const auto& r : rows)
                std::printf("N=%d M=%d K=%d %.3e s/iter\n", r.N, r.M, r.K, r.seconds_per_outer);
        }
        return 0;
    }
    catch (const jcas::NumericalError& e)
    {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumericExit;
    }
    catch (const std::exception& e)
    {
        // config errors, bad containers and I/O problems
        std::cerr << "error: " << e.what() << '\n';
        return kConfigExit;
    }
}
