// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness behind the command-line tool: configuration files,
// corpus generation, benchmark covariance solving, training, SNR sweeps,
// beampattern export and per-iteration timing.

#ifndef JCAS_EXPERIMENT_HPP
#define JCAS_EXPERIMENT_HPP

#include "jcas/beampattern.hpp"
#include "jcas/channel.hpp"
#include "jcas/pga.hpp"
#include "jcas/unfolding.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace jcas
{

/// Flat `key = value` configuration; '#' starts a comment. Every field has a
/// default so a partial file is valid.
struct ExperimentConfig
{
    int N = 64;
    int M = 4;
    int K = 4;
    std::vector<double> directions = {-60.0, 0.0, 60.0};
    double delta_theta = 5.0;
    int T = 181;
    double omega = 0.3;
    int I = 120;
    int J = 20;
    std::vector<double> snr_db = {0, 2, 4, 6, 8, 10, 12};
    int n_channels = 1000;
    std::uint64_t seed = 1;
    std::string schedule; ///< optional path to a trained schedule
    InitKind init = InitKind::proposed;

    // channel model
    int paths = 10;
    double angle_spread = 90.0;
    double noise_var = 1.0;

    // benchmark covariance
    double psi_power = 1.0;
    int psi_iters = 2000;
    double psi_tol = 1e-10;

    // training
    int epochs = 30;
    int batch_size = 10;
    double snr_min = 0;
    double snr_max = 12;
    std::string grad_mode = "spsa";
    double spsa_a0 = 1e-3;
    double spsa_c0 = 1e-4;
    int spsa_samples = 1;
    std::string optimizer = "sa"; ///< sa | adam
    double initial_step = 0.01;

    // evaluation
    std::vector<std::string> methods = {"upganet", "pga", "zf"};
    int pga_iters = 120; ///< I for the fixed-step baseline
    bool timing = true;  ///< false writes 0 in the seconds column
    int repetitions = 5; ///< timing repetitions for scaling runs

    int directions_count() const { return static_cast<int>(directions.size()); }
    void validate() const;
    BeampatternSpec beampattern_spec() const;
    ChannelModel channel_model() const;
    TrainConfig train_config() const;
    CovarianceSolverOptions psi_options() const;

    bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
std::string serialize_config(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

std::vector<ChannelSet> cmd_gen(const ExperimentConfig& config, const std::filesystem::path& out);

BenchmarkCovariance<double> cmd_solve_psi(const ExperimentConfig& config, const std::filesystem::path& out);

TrainReport cmd_train(const ExperimentConfig& config, const std::filesystem::path& dataset,
                      const std::filesystem::path& psi, const std::filesystem::path& out_schedule,
                      const std::filesystem::path& out_report);

struct SweepRecord
{
    std::string method; ///< "upganet", "pga" or "zf"
    double snr_db = 0;
    std::size_t channel_idx = 0;
    double sum_rate = 0;
    double beampattern_mse = 0;
    double objective = 0;
    double seconds = 0;
};

struct SweepResult
{
    std::vector<SweepRecord> records; ///< ordered by (method, snr, channel)
    std::vector<std::string> warnings;
};

/// Runs every configured method at every SNR (P_BS = SNR * noise_var) on every
/// channel. `psi` is rescaled to each power. UPGANet rows need a schedule.
SweepResult run_sweep(const ExperimentConfig& config, const std::vector<ChannelSet>& channels,
                      const BenchmarkCovariance<double>& psi, const std::optional<StepSchedule>& schedule);

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
std::string sweep_csv(const SweepResult& result);

SweepResult cmd_eval(const ExperimentConfig& config, const std::filesystem::path& dataset,
                     const std::filesystem::path& psi, const std::optional<std::filesystem::path>& schedule,
                     const std::filesystem::path& out);

/// Precoders chosen by `method` for one channel at `power`.
Precoders<double> design_precoders(const std::string& method, const ExperimentConfig& config, const ChannelSet& channel,
                                   const BenchmarkCovariance<double>& psi, const std::optional<StepSchedule>& schedule,
                                   double power);

/// Average realized beampattern of a method over channels at `snr_db`.
RVector<double> average_method_pattern(const std::string& method, const ExperimentConfig& config,
                                       const std::vector<ChannelSet>& channels,
                                       const BenchmarkCovariance<double>& psi,
                                       const std::optional<StepSchedule>& schedule, double snr_db);

/// CSV of (theta_deg, gain), one row per grid angle.
void write_pattern_csv(const std::filesystem::path& path, const BeampatternSpec& spec, const RVector<double>& gains);
std::string pattern_csv(const BeampatternSpec& spec, const RVector<double>& gains);

struct ScalingRow
{
    int N = 0;
    int M = 0;
    int K = 0;
    double seconds_per_outer = 0; ///< median over repetitions
};

/// Times run_pga (config I, J) per outer iteration. One row per N in
/// `antenna_list` at the config (M, K), then one row per K in `user_list` at
/// the config N with M = K.
std::vector<ScalingRow> cmd_scaling(const ExperimentConfig& config, const std::vector<int>& antenna_list,
                                    const std::vector<int>& user_list, const std::filesystem::path& out);

} // namespace jcas

#endif // JCAS_EXPERIMENT_HPP
