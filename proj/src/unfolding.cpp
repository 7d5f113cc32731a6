// SPDX-License-Identifier: Apache-2.0

#include "jcas/unfolding.hpp"

#include "jcas/format.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace jcas
{

double sample_power(double min_db, double max_db, std::mt19937_64& rng)
{
    if (!(min_db <= max_db))
        throw ConfigError("sample_power: need min <= max");
    const double u01 = std::generate_canonical<double, 53>(rng);
    const double db = min_db + (max_db - min_db) * u01;
    return std::pow(10.0, db / 10.0);
}

GradientMode parse_gradient_mode(const std::string& name)
{
    if (name == "spsa")
        return GradientMode::spsa;
    if (name == "coordinate-fd")
        return GradientMode::coordinate_fd;
    if (name == "backprop")
        return GradientMode::backprop;
    throw ConfigError("unknown gradient mode '" + name + "' (spsa | coordinate-fd | backprop)");
}

std::string to_string(GradientMode mode)
{
    switch (mode)
    {
    case GradientMode::coordinate_fd:
        return "coordinate-fd";
    case GradientMode::backprop:
        return "backprop";
    case GradientMode::spsa:
    default:
        return "spsa";
    }
}

Optimizer parse_optimizer(const std::string& name)
{
    if (name == "sa")
        return Optimizer::sa;
    if (name == "adam")
        return Optimizer::adam;
    throw ConfigError("unknown optimizer '" + name + "' (sa | adam)");
}

std::string to_string(Optimizer opt)
{
    return opt == Optimizer::adam ? "adam" : "sa";
}

std::vector<double> schedule_parameters(const StepSchedule& schedule)
{
    std::vector<double> theta(schedule.mu);
    theta.insert(theta.end(), schedule.lambda.begin(), schedule.lambda.end());
    return theta;
}

StepSchedule schedule_from_parameters(int outer, int inner, std::span<const double> theta)
{
    const auto n_mu = static_cast<std::size_t>(outer) * static_cast<std::size_t>(inner);
    if (theta.size() != n_mu + static_cast<std::size_t>(outer))
        throw ConfigError("schedule_from_parameters: wrong parameter count");
    StepSchedule s;
    s.outer = outer;
    s.inner = inner;
    s.mu.assign(theta.begin(), theta.begin() + static_cast<std::ptrdiff_t>(n_mu));
    s.lambda.assign(theta.begin() + static_cast<std::ptrdiff_t>(n_mu), theta.end());
    return s;
}

double batch_loss(std::span<const TrainingSample> batch, const StepSchedule& schedule)
{
    double acc = 0;
    for (const auto& s : batch)
        acc += upga_loss<double>(s.H, s.psi, s.params, schedule, s.init);
    return acc / static_cast<double>(batch.size());
}

namespace
{

using CMat = CMatrix<double>;

/// grad of R - weight * tau with respect to (A, D)
GradientPair<double> weighted_gradients(const CMat& H, const Precoders<double>& pc, const CMat& psi,
                                        double noise_var, double weight)
{
    GradientPair<double> g = rate_gradients(H, pc, noise_var);
    if (weight != 0.0)
    {
        const GradientPair<double> t = tau_gradients(pc, psi);
        g.dA -= weight * t.dA;
        g.dD -= weight * t.dD;
    }
    return g;
}

GradientPair<double> weighted_gradients_tangent(const CMat& H, const Precoders<double>& pc,
                                                const Precoders<double>& dir, const CMat& psi, double noise_var,
                                                double weight)
{
    GradientPair<double> g = rate_gradients_tangent(H, pc, dir, noise_var);
    if (weight != 0.0)
    {
        const GradientPair<double> t = tau_gradients_tangent(pc, dir, psi);
        g.dA -= weight * t.dA;
        g.dD -= weight * t.dD;
    }
    return g;
}

/// Cotangent of x -> x / |x| applied entrywise (the Jacobian is symmetric).
CMat analog_projection_adjoint(const CMat& pre, const CMat& cotangent)
{
    CMat out(pre.rows(), pre.cols());
    for (Eigen::Index c = 0; c < pre.cols(); ++c)
        for (Eigen::Index r = 0; r < pre.rows(); ++r)
        {
            const double mag = std::abs(pre(r, c));
            if (mag == 0.0)
            {
                out(r, c) = 0.0;
                continue;
            }
            const std::complex<double> u = pre(r, c) / mag;
            const std::complex<double> g = cotangent(r, c);
            out(r, c) = (g - u * std::real(std::conj(u) * g)) / mag;
        }
    return out;
}

void check_finite_loss(double loss)
{
    if (!std::isfinite(loss))
        throw NumericalError("loss evaluation produced a non-finite value");
}

} // namespace

LossGradient backprop_gradient(const TrainingSample& sample, const StepSchedule& schedule)
{
    schedule.validate();
    const auto& H = sample.H;
    const auto& psi = sample.psi;
    const auto& p = sample.params;
    const int I = schedule.outer;
    const int J = schedule.inner;
    const double analog_weight = p.omega;
    const double digital_weight = p.omega * p.eta;

    // forward pass with tape
    std::vector<std::vector<CMat>> a_hat(static_cast<std::size_t>(I));
    std::vector<CMat> d_state(static_cast<std::size_t>(I) + 1);
    std::vector<CMat> a_state(static_cast<std::size_t>(I) + 1);
    std::vector<CMat> d_pre(static_cast<std::size_t>(I));
    std::vector<std::vector<CMat>> analog_dirs(static_cast<std::size_t>(I));
    std::vector<CMat> digital_dirs(static_cast<std::size_t>(I));

    a_state[0] = project_analog<double>(sample.init.A);
    d_state[0] = project_digital<double>(a_state[0], sample.init.D, p.power);
    for (int i = 0; i < I; ++i)
    {
        const auto iu = static_cast<std::size_t>(i);
        auto& tape = a_hat[iu];
        tape.reserve(static_cast<std::size_t>(J) + 1);
        tape.push_back(a_state[iu]);
        for (int j = 0; j < J; ++j)
        {
            const Precoders<double> at{tape.back(), d_state[iu]};
            CMat dir = analog_ascent_direction<double>(H, at, psi, p);
            tape.push_back(tape.back() + schedule.mu_at(i, j) * dir);
            analog_dirs[iu].push_back(std::move(dir));
        }
        a_state[iu + 1] = project_analog<double>(tape.back());
        const Precoders<double> at{a_state[iu + 1], d_state[iu]};
        digital_dirs[iu] = digital_ascent_direction<double>(H, at, psi, p);
        d_pre[iu] = d_state[iu] + schedule.lambda[iu] * digital_dirs[iu];
        d_state[iu + 1] = project_digital<double>(a_state[iu + 1], d_pre[iu], p.power);
    }

    const Precoders<double> final_pc{a_state.back(), d_state.back()};
    LossGradient out;
    out.loss = -objective(H, final_pc, psi, p);
    check_finite_loss(out.loss);
    out.gradient.assign(schedule.parameter_count(), 0.0);
    const std::size_t lambda_offset = schedule.mu.size();

    // dL = Re<bar X, dX>; bar X = 2 dL/dX* and L = -(R - omega tau)
    const GradientPair<double> g_final = weighted_gradients(H, final_pc, psi, p.noise_var, p.omega);
    CMat a_bar = -2.0 * g_final.dA;
    CMat d_bar = -2.0 * g_final.dD;

    for (int i = I - 1; i >= 0; --i)
    {
        const auto iu = static_cast<std::size_t>(i);
        const CMat& a_next = a_state[iu + 1];
        const CMat& d_prev = d_state[iu];

        // D_{i+1} = sqrt(P) D~ / ||A_{i+1} D~||
        const CMat prod = a_next * d_pre[iu];
        const double norm = prod.norm();
        const double scale = std::sqrt(p.power) / norm;
        CMat dpre_bar = scale * d_bar;
        const double norm_bar = -scale / norm * real_inner<double>(d_bar, d_pre[iu]);
        dpre_bar += (norm_bar / norm) * (a_next.adjoint() * prod);
        a_bar += (norm_bar / norm) * (prod * d_pre[iu].adjoint());

        // D~ = D_i + lambda_i * grad_D (R - omega eta tau) at (A_{i+1}, D_i)
        const double lambda = schedule.lambda[iu];
        out.gradient[lambda_offset + iu] = real_inner<double>(dpre_bar, digital_dirs[iu]);
        CMat d_prev_bar = dpre_bar;
        if (lambda != 0.0)
        {
            const Precoders<double> at{a_next, d_prev};
            const Precoders<double> dir{CMat::Zero(a_next.rows(), a_next.cols()), dpre_bar};
            const GradientPair<double> t = weighted_gradients_tangent(H, at, dir, psi, p.noise_var, digital_weight);
            a_bar += lambda * t.dA;
            d_prev_bar += lambda * t.dD;
        }

        // A_{i+1} = unit-modulus projection of the last inner iterate
        CMat ahat_bar = analog_projection_adjoint(a_hat[iu].back(), a_bar);

        // A^_{j+1} = A^_j + mu_ij * grad_A (R - omega tau) at (A^_j, D_i)
        for (int j = J - 1; j >= 0; --j)
        {
            const auto ju = static_cast<std::size_t>(j);
            const double mu = schedule.mu_at(i, j);
            out.gradient[static_cast<std::size_t>(i * J + j)] = real_inner<double>(ahat_bar, analog_dirs[iu][ju]);
            if (mu != 0.0)
            {
                const Precoders<double> at{a_hat[iu][ju], d_prev};
                const Precoders<double> dir{ahat_bar, CMat::Zero(d_prev.rows(), d_prev.cols())};
                const GradientPair<double> t =
                    weighted_gradients_tangent(H, at, dir, psi, p.noise_var, analog_weight);
                ahat_bar += mu * t.dA;
                d_prev_bar += mu * t.dD;
            }
        }
        a_bar = std::move(ahat_bar);
        d_bar = std::move(d_prev_bar);
    }
    return out;
}

LossGradient batch_backprop_gradient(std::span<const TrainingSample> batch, const StepSchedule& schedule)
{
    LossGradient out;
    out.gradient.assign(schedule.parameter_count(), 0.0);
    for (const auto& s : batch)
    {
        const LossGradient g = backprop_gradient(s, schedule);
        out.loss += g.loss;
        for (std::size_t i = 0; i < g.gradient.size(); ++i)
            out.gradient[i] += g.gradient[i];
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (double& v : out.gradient)
        v *= inv;
    return out;
}

LossGradient coordinate_fd_gradient(std::span<const TrainingSample> batch, const StepSchedule& schedule, double h)
{
    const std::vector<double> theta = schedule_parameters(schedule);
    LossGradient out;
    out.loss = batch_loss(batch, schedule);
    out.gradient.resize(theta.size());
    std::vector<double> probe = theta;
    for (std::size_t i = 0; i < theta.size(); ++i)
    {
        probe[i] = theta[i] + h;
        const double plus = batch_loss(batch, schedule_from_parameters(schedule.outer, schedule.inner, probe));
        probe[i] = theta[i] - h;
        const double minus = batch_loss(batch, schedule_from_parameters(schedule.outer, schedule.inner, probe));
        probe[i] = theta[i];
        out.gradient[i] = (plus - minus) / (2.0 * h);
    }
    return out;
}

LossGradient spsa_gradient(std::span<const TrainingSample> batch, const StepSchedule& schedule, double c,
                           std::mt19937_64& rng, int samples)
{
    if (samples < 1)
        throw ConfigError("spsa_gradient: need at least one perturbation");
    const std::vector<double> theta = schedule_parameters(schedule);
    std::vector<double> delta(theta.size());
    std::bernoulli_distribution coin(0.5);

    LossGradient out;
    out.gradient.assign(theta.size(), 0.0);
    for (int q = 0; q < samples; ++q)
    {
        for (double& d : delta)
            d = coin(rng) ? 1.0 : -1.0;

        std::vector<double> plus(theta), minus(theta);
        for (std::size_t i = 0; i < theta.size(); ++i)
        {
            plus[i] += c * delta[i];
            minus[i] -= c * delta[i];
        }
        const double l_plus = batch_loss(batch, schedule_from_parameters(schedule.outer, schedule.inner, plus));
        const double l_minus = batch_loss(batch, schedule_from_parameters(schedule.outer, schedule.inner, minus));

        out.loss += 0.5 * (l_plus + l_minus);
        const double diff = (l_plus - l_minus) / (2.0 * c);
        for (std::size_t i = 0; i < theta.size(); ++i)
            out.gradient[i] += diff / delta[i];
    }
    out.loss /= samples;
    for (double& g : out.gradient)
        g /= samples;
    return out;
}

void TrainConfig::validate() const
{
    if (outer < 1 || inner < 1)
        throw ConfigError("train: need I >= 1 and J >= 1");
    if (epochs < 1 || batch_size < 1)
        throw ConfigError("train: need epochs >= 1 and batch_size >= 1");
    if (!(snr_min_db <= snr_max_db))
        throw ConfigError("train: need snr_min <= snr_max");
    if (!(omega >= 0) || !(noise_var > 0))
        throw ConfigError("train: need omega >= 0 and noise variance > 0");
    if (!(perturb_c0 > 0) || !(gain_a0 >= 0))
        throw ConfigError("train: need a0 >= 0 and c0 > 0");
    if (patience < 1)
        throw ConfigError("train: patience must be at least 1");
    if (spsa_samples < 1)
        throw ConfigError("train: spsa_samples must be at least 1");
    if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
        throw ConfigError("train: Adam betas must lie in [0, 1)");
}

DataSplit split_dataset(std::size_t count, std::uint64_t seed)
{
    if (count < 2)
        throw ConfigError("split_dataset: need at least two channels for a validation split");
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(count))));
    DataSplit split;
    split.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
    split.validation.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    return split;
}

TrainingSample make_sample(const CMatrix<double>& H, const BenchmarkCovariance<double>& unit_psi,
                           const BeampatternSpec& spec, const TrainConfig& config, double power,
                           std::uint64_t init_seed)
{
    TrainingSample s;
    s.H = H;
    s.psi = unit_psi.scaled_to(power);
    s.params = SystemParams<double>::for_array(H.cols(), power, config.noise_var, config.omega);
    s.init = make_init<double>(config.init, H, spec.directions, config.n_rf, power, init_seed);
    return s;
}

TrainReport train_step_sizes(std::span<const ChannelSet> dataset, const BeampatternSpec& spec,
                             const TrainConfig& config)
{
    if (dataset.empty())
        throw ConfigError("train: empty dataset");
    const auto unit_psi = solve_benchmark_covariance<double>(spec, 1.0, dataset.front().antennas(), config.psi_options);
    return train_step_sizes(dataset, spec, config, unit_psi);
}

TrainReport train_step_sizes(std::span<const ChannelSet> dataset, const BeampatternSpec& spec,
                             const TrainConfig& config, const BenchmarkCovariance<double>& unit_psi)
{
    config.validate();
    if (dataset.empty())
        throw ConfigError("train: empty dataset");
    for (const auto& c : dataset)
        if (c.antennas() != unit_psi.psi.rows() || c.users() != dataset.front().users())
            throw ConfigError("train: channels must share (K, N) with the benchmark covariance");

    using clock = std::chrono::steady_clock;
    std::mt19937_64 rng(config.seed);
    const DataSplit split = split_dataset(dataset.size(), derive_seed(config.seed, 1));

    std::vector<TrainingSample> validation;
    for (std::size_t idx : split.validation)
        validation.push_back(make_sample(dataset[idx].H, unit_psi, spec, config,
                                         sample_power(config.snr_min_db, config.snr_max_db, rng),
                                         derive_seed(config.seed, 1000 + idx)));

    auto validation_loss = [&](const StepSchedule& s) {
        try
        {
            const double v = batch_loss(validation, s);
            return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
        }
        catch (const NumericalError&)
        {
            return std::numeric_limits<double>::infinity();
        }
    };

    StepSchedule current = StepSchedule::constant(config.outer, config.inner, config.initial_step, config.initial_step);
    TrainReport report;
    report.schedule = current;
    report.initial_val_loss = validation_loss(current);
    report.best_val_loss = report.initial_val_loss;

    std::vector<std::size_t> order = split.train;
    std::uint64_t t = 0;
    std::vector<double> m1(current.parameter_count(), 0.0), m2(current.parameter_count(), 0.0);
    int rising = 0;
    double previous_train = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < config.epochs; ++epoch)
    {
        const auto started = clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double train_acc = 0;
        int train_batches = 0;

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size))
        {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
            std::vector<TrainingSample> batch;
            batch.reserve(stop - start);
            for (std::size_t b = start; b < stop; ++b)
                batch.push_back(make_sample(dataset[order[b]].H, unit_psi, spec, config,
                                            sample_power(config.snr_min_db, config.snr_max_db, rng),
                                            derive_seed(config.seed, 1000 + order[b])));

            const double step = config.gain_a0 / std::pow(static_cast<double>(t + 1), 0.602);
            const double perturb = config.perturb_c0 / std::pow(static_cast<double>(t + 1), 0.101);
            ++t;

            LossGradient g;
            try
            {
                switch (config.mode)
                {
                case GradientMode::backprop:
                    g = batch_backprop_gradient(batch, current);
                    break;
                case GradientMode::coordinate_fd:
                    g = coordinate_fd_gradient(batch, current, perturb);
                    break;
                case GradientMode::spsa:
                default:
                    g = spsa_gradient(batch, current, perturb, rng, config.spsa_samples);
                    break;
                }
            }
            catch (const NumericalError&)
            {
                continue; // a diverging probe skips this update
            }
            if (!std::isfinite(g.loss) ||
                !std::all_of(g.gradient.begin(), g.gradient.end(), [](double v) { return std::isfinite(v); }))
                continue;

            std::vector<double> theta = schedule_parameters(current);
            bool finite = true;
            if (config.optimizer == Optimizer::adam)
            {
                const double n = static_cast<double>(t);
                const double bias1 = 1 - std::pow(config.adam_beta1, n);
                const double bias2 = 1 - std::pow(config.adam_beta2, n);
                for (std::size_t i = 0; i < theta.size(); ++i)
                {
                    m1[i] = config.adam_beta1 * m1[i] + (1 - config.adam_beta1) * g.gradient[i];
                    m2[i] = config.adam_beta2 * m2[i] + (1 - config.adam_beta2) * g.gradient[i] * g.gradient[i];
                    const double denom = std::sqrt(m2[i] / bias2);
                    if (denom > 0)
                        theta[i] -= step * (m1[i] / bias1) / denom;
                    finite = finite && std::isfinite(theta[i]);
                }
            }
            else
            {
                for (std::size_t i = 0; i < theta.size(); ++i)
                {
                    theta[i] -= step * g.gradient[i];
                    finite = finite && std::isfinite(theta[i]);
                }
            }
            if (finite)
                current = schedule_from_parameters(config.outer, config.inner, theta);
            train_acc += g.loss;
            ++train_batches;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = train_batches > 0 ? train_acc / train_batches : std::numeric_limits<double>::infinity();
        rec.val_loss = validation_loss(current);
        rec.seconds = std::chrono::duration<double>(clock::now() - started).count();
        report.epochs.push_back(rec);

        if (rec.val_loss < report.best_val_loss)
        {
            report.best_val_loss = rec.val_loss;
            report.schedule = current;
        }

        rising = rec.train_loss > previous_train ? rising + 1 : 0;
        previous_train = rec.train_loss;
        if (rising >= config.patience)
        {
            report.halted = true;
            break;
        }
    }
    return report;
}

void write_report_csv(const std::filesystem::path& path, const TrainReport& report)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_loss,val_loss,seconds\n";
    for (const auto& r : report.epochs)
        out << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.val_loss) << ','
            << format_real(r.seconds) << '\n';
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace jcas
