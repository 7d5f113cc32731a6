// SPDX-License-Identifier: Apache-2.0
//
// Learning the step-size schedule of the unfolded PGA network. Each outer
// iteration of run_pga is a layer with J inner analog sub-layers; the only
// trainable parameters are mu(i, j) and lambda(i). Training is unsupervised
// on the loss omega * tau - R at the network output.

#ifndef JCAS_UNFOLDING_HPP
#define JCAS_UNFOLDING_HPP

#include "jcas/beampattern.hpp"
#include "jcas/channel.hpp"
#include "jcas/objective.hpp"
#include "jcas/pga.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace jcas
{

/// L = omega * tau - R at the output of run_pga.
template <typename Real>
Real upga_loss(const CMatrix<Real>& H, const CMatrix<Real>& psi, const SystemParams<Real>& params,
               const StepSchedule& schedule, const Precoders<Real>& init)
{
    return -run_pga<Real>(H, psi, params, schedule, init).records.back().objective;
}

/// P_BS = 10^(u / 10) with u uniform on [min_db, max_db].
double sample_power(double min_db, double max_db, std::mt19937_64& rng);

enum class GradientMode
{
    spsa,          ///< simultaneous perturbation, two losses per update
    coordinate_fd, ///< central differences, two losses per parameter
    backprop,      ///< exact reverse-mode sweep through the unrolled iterations
};

GradientMode parse_gradient_mode(const std::string& name);
std::string to_string(GradientMode mode);

enum class Optimizer
{
    sa,   ///< theta -= a_t * g
    adam, ///< per-parameter normalized steps of size ~a_t; copes with exploding loss sensitivities
};

Optimizer parse_optimizer(const std::string& name);
std::string to_string(Optimizer opt);

/// One training example: a channel at a drawn transmit power.
struct TrainingSample
{
    CMatrix<double> H;
    CMatrix<double> psi;
    SystemParams<double> params;
    Precoders<double> init;
};

/// Flattened schedule parameters: mu in row-major order, then lambda.
std::vector<double> schedule_parameters(const StepSchedule& schedule);
StepSchedule schedule_from_parameters(int outer, int inner, std::span<const double> theta);

/// Mean loss over the samples.
double batch_loss(std::span<const TrainingSample> batch, const StepSchedule& schedule);

struct LossGradient
{
    double loss = 0;
    std::vector<double> gradient; ///< same layout as schedule_parameters
};

/// Reverse-mode derivative of upga_loss with respect to every step size.
LossGradient backprop_gradient(const TrainingSample& sample, const StepSchedule& schedule);

/// Mean over the batch of backprop_gradient.
LossGradient batch_backprop_gradient(std::span<const TrainingSample> batch, const StepSchedule& schedule);

/// Central differences with step h on every parameter.
LossGradient coordinate_fd_gradient(std::span<const TrainingSample> batch, const StepSchedule& schedule, double h);

/// Two-sided SPSA estimate with Rademacher perturbation of size c, averaged
/// over `samples` independent perturbations; `loss` is the mean of the
/// perturbed losses.
LossGradient spsa_gradient(std::span<const TrainingSample> batch, const StepSchedule& schedule, double c,
                           std::mt19937_64& rng, int samples = 1);

struct TrainConfig
{
    int outer = 120; ///< I
    int inner = 20;  ///< J
    int n_rf = 4;    ///< M
    int epochs = 30;
    int batch_size = 10;
    double snr_min_db = 0;
    double snr_max_db = 12;
    double omega = 0.3;
    double noise_var = 1; ///< fixed while training; SNR is then P_BS in dB
    double initial_step = 0.01;
    double gain_a0 = 1e-3;     ///< a_t = a0 / (t + 1)^0.602
    double perturb_c0 = 1e-4;  ///< c_t = c0 / (t + 1)^0.101
    GradientMode mode = GradientMode::spsa;
    int spsa_samples = 1; ///< perturbations averaged per SPSA update
    Optimizer optimizer = Optimizer::sa;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    InitKind init = InitKind::proposed;
    std::uint64_t seed = 0;
    int patience = 5; ///< halt after this many consecutive increases of the training loss
    CovarianceSolverOptions psi_options;

    void validate() const;
};

struct EpochRecord
{
    int epoch = 0;
    double train_loss = 0;
    double val_loss = 0;
    double seconds = 0;
};

struct TrainReport
{
    std::vector<EpochRecord> epochs;
    StepSchedule schedule; ///< best validation loss seen, including the initial schedule
    double initial_val_loss = 0;
    double best_val_loss = 0;
    bool halted = false;
};

/// Deterministic 90/10 split of channel indices; validation gets at least one.
struct DataSplit
{
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};
DataSplit split_dataset(std::size_t count, std::uint64_t seed);

/// Build a sample: init and Psi (scaled from the unit-power solution) at `power`.
TrainingSample make_sample(const CMatrix<double>& H, const BenchmarkCovariance<double>& unit_psi,
                           const BeampatternSpec& spec, const TrainConfig& config, double power,
                           std::uint64_t init_seed);

TrainReport train_step_sizes(std::span<const ChannelSet> dataset, const BeampatternSpec& spec,
                             const TrainConfig& config);

/// Same as above with a precomputed unit-power benchmark covariance.
TrainReport train_step_sizes(std::span<const ChannelSet> dataset, const BeampatternSpec& spec,
                             const TrainConfig& config, const BenchmarkCovariance<double>& unit_psi);

void write_report_csv(const std::filesystem::path& path, const TrainReport& report);

struct ScheduleMetadata
{
    std::uint64_t seed = 0;
    double snr_min_db = 0;
    double snr_max_db = 0;
    double omega = 0;

    bool operator==(const ScheduleMetadata&) const = default;
};

/// JSON document {version: 1, I, J, mu (flat row-major), lambda, training{...}},
/// reals written with 17 significant digits.
std::string serialize_schedule(const StepSchedule& schedule, const ScheduleMetadata& meta = {});
StepSchedule parse_schedule(const std::string& text, ScheduleMetadata* meta = nullptr);

void save_schedule(const std::filesystem::path& path, const StepSchedule& schedule,
                   const ScheduleMetadata& meta = {});
StepSchedule load_schedule(const std::filesystem::path& path, ScheduleMetadata* meta = nullptr);

} // namespace jcas

#endif // JCAS_UNFOLDING_HPP
