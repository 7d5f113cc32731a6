// SPDX-License-Identifier: Apache-2.0

#include "jcas/experiment.hpp"

#include "jcas/baselines.hpp"
#include "jcas/container.hpp"
#include "jcas/format.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace jcas
{

namespace
{

std::string trim(const std::string& s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

int parse_int(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    long long x = 0;
    try
    {
        x = std::stoll(v, &used);
    }
    catch (const std::exception&)
    {
        throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    }
    if (used != v.size())
        throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
    return static_cast<int>(x);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v)
{
    std::size_t used = 0;
    unsigned long long x = 0;
    try
    {
        x = std::stoull(v, &used);
    }
    catch (const std::exception&)
    {
        throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
    if (used != v.size() || v.front() == '-')
        throw ConfigError("config: '" + key + "' expects an unsigned integer, got '" + v + "'");
    return x;
}

double parse_double(const std::string& key, const std::string& v)
{
    const auto list = parse_real_list(v);
    if (list.size() != 1)
        throw ConfigError("config: '" + key + "' expects one number, got '" + v + "'");
    return list.front();
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "on" || v == "1")
        return true;
    if (v == "false" || v == "off" || v == "0")
        return false;
    throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

std::vector<std::string> parse_methods(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ','))
    {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

std::string join(const std::vector<std::string>& items)
{
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i)
        out += (i ? ", " : "") + items[i];
    return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"N", [](auto& c, auto& k, auto& v) { c.N = parse_int(k, v); }},
        {"M", [](auto& c, auto& k, auto& v) { c.M = parse_int(k, v); }},
        {"K", [](auto& c, auto& k, auto& v) { c.K = parse_int(k, v); }},
        {"directions", [](auto& c, auto&, auto& v) { c.directions = parse_real_list(v); }},
        {"delta_theta", [](auto& c, auto& k, auto& v) { c.delta_theta = parse_double(k, v); }},
        {"T", [](auto& c, auto& k, auto& v) { c.T = parse_int(k, v); }},
        {"omega", [](auto& c, auto& k, auto& v) { c.omega = parse_double(k, v); }},
        {"I", [](auto& c, auto& k, auto& v) { c.I = parse_int(k, v); }},
        {"J", [](auto& c, auto& k, auto& v) { c.J = parse_int(k, v); }},
        {"snr_db", [](auto& c, auto&, auto& v) { c.snr_db = parse_real_list(v); }},
        {"n_channels", [](auto& c, auto& k, auto& v) { c.n_channels = parse_int(k, v); }},
        {"seed", [](auto& c, auto& k, auto& v) { c.seed = parse_u64(k, v); }},
        {"schedule", [](auto& c, auto&, auto& v) { c.schedule = v; }},
        {"init", [](auto& c, auto&, auto& v) { c.init = parse_init_kind(v); }},
        {"paths", [](auto& c, auto& k, auto& v) { c.paths = parse_int(k, v); }},
        {"angle_spread", [](auto& c, auto& k, auto& v) { c.angle_spread = parse_double(k, v); }},
        {"noise_var", [](auto& c, auto& k, auto& v) { c.noise_var = parse_double(k, v); }},
        {"psi_power", [](auto& c, auto& k, auto& v) { c.psi_power = parse_double(k, v); }},
        {"psi_iters", [](auto& c, auto& k, auto& v) { c.psi_iters = parse_int(k, v); }},
        {"psi_tol", [](auto& c, auto& k, auto& v) { c.psi_tol = parse_double(k, v); }},
        {"epochs", [](auto& c, auto& k, auto& v) { c.epochs = parse_int(k, v); }},
        {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = parse_int(k, v); }},
        {"snr_min", [](auto& c, auto& k, auto& v) { c.snr_min = parse_double(k, v); }},
        {"snr_max", [](auto& c, auto& k, auto& v) { c.snr_max = parse_double(k, v); }},
        {"grad_mode", [](auto& c, auto&, auto& v) { c.grad_mode = v; }},
        {"spsa_a0", [](auto& c, auto& k, auto& v) { c.spsa_a0 = parse_double(k, v); }},
        {"spsa_c0", [](auto& c, auto& k, auto& v) { c.spsa_c0 = parse_double(k, v); }},
        {"spsa_samples", [](auto& c, auto& k, auto& v) { c.spsa_samples = parse_int(k, v); }},
        {"optimizer", [](auto& c, auto&, auto& v) { c.optimizer = v; }},
        {"initial_step", [](auto& c, auto& k, auto& v) { c.initial_step = parse_double(k, v); }},
        {"methods", [](auto& c, auto&, auto& v) { c.methods = parse_methods(v); }},
        {"pga_iters", [](auto& c, auto& k, auto& v) { c.pga_iters = parse_int(k, v); }},
        {"timing", [](auto& c, auto& k, auto& v) { c.timing = parse_bool(k, v); }},
        {"repetitions", [](auto& c, auto& k, auto& v) { c.repetitions = parse_int(k, v); }},
    };
    return table;
}

double elapsed_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

void check_channels(const ExperimentConfig& config, const std::vector<ChannelSet>& channels)
{
    for (const auto& c : channels)
        if (c.antennas() != config.N || c.users() != config.K)
            throw ConfigError("dataset dimensions (K, N) do not match the configuration");
}

std::uint64_t init_seed_for(const ChannelSet& channel)
{
    return derive_seed(channel.seed, 7);
}

} // namespace

void ExperimentConfig::validate() const
{
    if (N < 1 || M < 1 || K < 1 || T < 2 || I < 1 || J < 1 || n_channels < 1)
        throw ConfigError("config: counts N, M, K, I, J, n_channels must be >= 1 and T >= 2");
    if (K > N)
        throw ConfigError("config: need K <= N");
    if (M < K || M > K + directions_count())
        throw ConfigError("config: need K <= M <= K + P");
    if (snr_db.empty())
        throw ConfigError("config: SNR list must not be empty");
    if (!(omega >= 0) || !(noise_var > 0) || !(psi_power > 0) || !(delta_theta > 0))
        throw ConfigError("config: need omega >= 0, noise_var > 0, psi_power > 0, delta_theta > 0");
    if (paths < 1 || psi_iters < 1 || epochs < 1 || batch_size < 1 || pga_iters < 0 || repetitions < 1)
        throw ConfigError("config: paths, psi_iters, epochs, batch_size, repetitions must be >= 1");
    if (spsa_samples < 1)
        throw ConfigError("config: spsa_samples must be >= 1");
    if (methods.empty())
        throw ConfigError("config: methods must name at least one of upganet, pga, zf");
    for (const auto& m : methods)
        if (m != "upganet" && m != "pga" && m != "zf")
            throw ConfigError("config: unknown method '" + m + "' (upganet | pga | zf)");
    parse_gradient_mode(grad_mode);
    parse_optimizer(optimizer);
}

BeampatternSpec ExperimentConfig::beampattern_spec() const
{
    return make_spec(directions, delta_theta, T);
}

ChannelModel ExperimentConfig::channel_model() const
{
    return {paths, angle_spread};
}

TrainConfig ExperimentConfig::train_config() const
{
    TrainConfig t;
    t.outer = I;
    t.inner = J;
    t.n_rf = M;
    t.epochs = epochs;
    t.batch_size = batch_size;
    t.snr_min_db = snr_min;
    t.snr_max_db = snr_max;
    t.omega = omega;
    t.noise_var = noise_var;
    t.initial_step = initial_step;
    t.gain_a0 = spsa_a0;
    t.perturb_c0 = spsa_c0;
    t.spsa_samples = spsa_samples;
    t.optimizer = parse_optimizer(optimizer);
    t.mode = parse_gradient_mode(grad_mode);
    t.init = init;
    t.seed = seed;
    t.psi_options = psi_options();
    return t;
}

CovarianceSolverOptions ExperimentConfig::psi_options() const
{
    CovarianceSolverOptions o;
    o.max_iterations = psi_iters;
    o.tolerance = psi_tol;
    return o;
}

ExperimentConfig parse_config(const std::string& text)
{
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        it->second(config, key, value);
    }
    config.validate();
    return config;
}

std::string serialize_config(const ExperimentConfig& c)
{
    std::ostringstream out;
    out << "N = " << c.N << '\n'
        << "M = " << c.M << '\n'
        << "K = " << c.K << '\n'
        << "directions = " << format_list(c.directions) << '\n'
        << "delta_theta = " << format_real(c.delta_theta) << '\n'
        << "T = " << c.T << '\n'
        << "omega = " << format_real(c.omega) << '\n'
        << "I = " << c.I << '\n'
        << "J = " << c.J << '\n'
        << "snr_db = " << format_list(c.snr_db) << '\n'
        << "n_channels = " << c.n_channels << '\n'
        << "seed = " << c.seed << '\n'
        << "schedule = " << c.schedule << '\n'
        << "init = " << to_string(c.init) << '\n'
        << "paths = " << c.paths << '\n'
        << "angle_spread = " << format_real(c.angle_spread) << '\n'
        << "noise_var = " << format_real(c.noise_var) << '\n'
        << "psi_power = " << format_real(c.psi_power) << '\n'
        << "psi_iters = " << c.psi_iters << '\n'
        << "psi_tol = " << format_real(c.psi_tol) << '\n'
        << "epochs = " << c.epochs << '\n'
        << "batch_size = " << c.batch_size << '\n'
        << "snr_min = " << format_real(c.snr_min) << '\n'
        << "snr_max = " << format_real(c.snr_max) << '\n'
        << "grad_mode = " << c.grad_mode << '\n'
        << "spsa_a0 = " << format_real(c.spsa_a0) << '\n'
        << "spsa_c0 = " << format_real(c.spsa_c0) << '\n'
        << "spsa_samples = " << c.spsa_samples << '\n'
        << "optimizer = " << c.optimizer << '\n'
        << "initial_step = " << format_real(c.initial_step) << '\n'
        << "methods = " << join(c.methods) << '\n'
        << "pga_iters = " << c.pga_iters << '\n'
        << "timing = " << (c.timing ? "true" : "false") << '\n'
        << "repetitions = " << c.repetitions << '\n';
    return out.str();
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::vector<ChannelSet> cmd_gen(const ExperimentConfig& config, const std::filesystem::path& out)
{
    config.validate();
    auto channels = gen_channel_corpus(config.n_channels, config.K, config.N, config.channel_model(), config.seed);
    save_dataset(out, channels);
    return channels;
}

BenchmarkCovariance<double> cmd_solve_psi(const ExperimentConfig& config, const std::filesystem::path& out)
{
    config.validate();
    auto cov = solve_benchmark_covariance<double>(config.beampattern_spec(), config.psi_power, config.N,
                                                  config.psi_options());
    save_covariance(out, cov);
    return cov;
}

TrainReport cmd_train(const ExperimentConfig& config, const std::filesystem::path& dataset,
                      const std::filesystem::path& psi, const std::filesystem::path& out_schedule,
                      const std::filesystem::path& out_report)
{
    config.validate();
    const auto channels = load_dataset(dataset);
    check_channels(config, channels);
    const auto cov = load_covariance(psi);
    if (cov.psi.rows() != config.N)
        throw ConfigError("benchmark covariance size does not match N");
    auto report = train_step_sizes(channels, config.beampattern_spec(), config.train_config(), cov);
    if (!config.timing)
        for (auto& e : report.epochs)
            e.seconds = 0;
    save_schedule(out_schedule, report.schedule, {config.seed, config.snr_min, config.snr_max, config.omega});
    write_report_csv(out_report, report);
    return report;
}

Precoders<double> design_precoders(const std::string& method, const ExperimentConfig& config, const ChannelSet& channel,
                                   const BenchmarkCovariance<double>& psi, const std::optional<StepSchedule>& schedule,
                                   double power)
{
    if (method == "zf")
    {
        const auto zf = zf_digital<double>(channel.H, power);
        return {CMatrix<double>::Identity(config.N, config.N), zf.X};
    }
    const auto params = SystemParams<double>::for_array(config.N, power, config.noise_var, config.omega);
    const CMatrix<double> psi_p = psi.scaled_to(power);
    const auto init = make_init<double>(config.init, channel.H, config.directions, config.M, power,
                                        init_seed_for(channel));
    if (method == "pga")
        return conventional_pga<double>(channel.H, psi_p, params, config.pga_iters, init).final;
    if (method == "upganet")
    {
        if (!schedule)
            throw ConfigError("upganet needs a trained schedule");
        return run_pga<double>(channel.H, psi_p, params, *schedule, init).final;
    }
    throw ConfigError("unknown method '" + method + "' (upganet | pga | zf)");
}

SweepResult run_sweep(const ExperimentConfig& config, const std::vector<ChannelSet>& channels,
                      const BenchmarkCovariance<double>& psi, const std::optional<StepSchedule>& schedule)
{
    config.validate();
    check_channels(config, channels);
    if (psi.psi.rows() != config.N)
        throw ConfigError("benchmark covariance size does not match N");

    SweepResult result;
    std::vector<std::string> methods;
    for (const auto& m : config.methods)
    {
        if (m == "upganet" && !schedule)
        {
            result.warnings.push_back("no step schedule given; UPGANet rows omitted");
            continue;
        }
        if (std::find(methods.begin(), methods.end(), m) == methods.end())
            methods.push_back(m);
    }

    const BeampatternSpec spec = config.beampattern_spec();
    for (const auto& method : methods)
        for (double snr : config.snr_db)
        {
            const double power = std::pow(10.0, snr / 10.0) * config.noise_var;
            const CMatrix<double> psi_p = psi.scaled_to(power);
            for (std::size_t idx = 0; idx < channels.size(); ++idx)
            {
                const auto& ch = channels[idx];
                const auto start = std::chrono::steady_clock::now();
                SweepRecord rec;
                rec.method = method;
                rec.snr_db = snr;
                rec.channel_idx = idx;
                if (method == "zf")
                {
                    const auto zf = zf_digital<double>(ch.H, power);
                    rec.sum_rate = zf_sum_rate<double>(ch.H, zf.X, config.noise_var);
                    rec.beampattern_mse = beampattern_mse_effective<double>(zf.X, spec);
                    rec.objective = rec.sum_rate - config.omega * tau_effective<double>(zf.X, psi_p);
                }
                else
                {
                    const auto pc = design_precoders(method, config, ch, psi, schedule, power);
                    rec.sum_rate = sum_rate<double>(ch.H, pc, config.noise_var);
                    rec.beampattern_mse = beampattern_mse<double>(pc, spec);
                    rec.objective = rec.sum_rate - config.omega * tau<double>(pc, psi_p);
                }
                rec.seconds = config.timing ? elapsed_since(start) : 0.0;
                result.records.push_back(std::move(rec));
            }
        }
    return result;
}

std::string sweep_csv(const SweepResult& result)
{
    std::ostringstream out;
    out << "method,snr_db,channel_idx,sum_rate,beampattern_mse,objective,seconds\n";
    for (const auto& r : result.records)
        out << r.method << ',' << format_real(r.snr_db) << ',' << r.channel_idx << ',' << format_real(r.sum_rate)
            << ',' << format_real(r.beampattern_mse) << ',' << format_real(r.objective) << ','
            << format_real(r.seconds) << '\n';
    return out.str();
}

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result)
{
    write_text(path, sweep_csv(result));
}

SweepResult cmd_eval(const ExperimentConfig& config, const std::filesystem::path& dataset,
                     const std::filesystem::path& psi, const std::optional<std::filesystem::path>& schedule,
                     const std::filesystem::path& out)
{
    const auto channels = load_dataset(dataset);
    const auto cov = load_covariance(psi);
    std::optional<StepSchedule> sched;
    if (schedule)
        sched = load_schedule(*schedule);
    auto result = run_sweep(config, channels, cov, sched);
    write_sweep_csv(out, result);
    return result;
}

RVector<double> average_method_pattern(const std::string& method, const ExperimentConfig& config,
                                       const std::vector<ChannelSet>& channels,
                                       const BenchmarkCovariance<double>& psi,
                                       const std::optional<StepSchedule>& schedule, double snr_db)
{
    if (channels.empty())
        throw ConfigError("average_method_pattern: no channels");
    check_channels(config, channels);
    const BeampatternSpec spec = config.beampattern_spec();
    const double power = std::pow(10.0, snr_db / 10.0) * config.noise_var;
    RVector<double> acc = RVector<double>::Zero(static_cast<Eigen::Index>(spec.size()));
    for (const auto& ch : channels)
    {
        const auto pc = design_precoders(method, config, ch, psi, schedule, power);
        acc += precoder_pattern<double>(pc.A * pc.D, spec);
    }
    return acc / static_cast<double>(channels.size());
}

std::string pattern_csv(const BeampatternSpec& spec, const RVector<double>& gains)
{
    if (static_cast<std::size_t>(gains.size()) != spec.size())
        throw ConfigError("pattern_csv: gain count does not match grid");
    std::ostringstream out;
    out << "theta_deg,gain\n";
    for (std::size_t t = 0; t < spec.size(); ++t)
        out << format_real(spec.grid[t]) << ',' << format_real(gains(static_cast<Eigen::Index>(t))) << '\n';
    return out.str();
}

void write_pattern_csv(const std::filesystem::path& path, const BeampatternSpec& spec, const RVector<double>& gains)
{
    write_text(path, pattern_csv(spec, gains));
}

std::vector<ScalingRow> cmd_scaling(const ExperimentConfig& config, const std::vector<int>& antenna_list,
                                    const std::vector<int>& user_list, const std::filesystem::path& out)
{
    config.validate();
    struct Case
    {
        ScalingRow row;
        ChannelSet channel;
        CMatrix<double> psi;
        SystemParams<double> params;
        Precoders<double> init;
        std::vector<double> samples;
    };
    const double power = std::pow(10.0, config.snr_db.front() / 10.0) * config.noise_var;
    // small steps keep every repetition finite; the arithmetic per step is the same
    const auto schedule = StepSchedule::constant(config.I, config.J, 1e-4, 1e-4);
    std::vector<Case> cases;
    auto add_case = [&](int N, int M, int K) {
        if (K > N || M < K)
            throw ConfigError("scaling: need K <= N and M >= K");
        Case c{{N, M, K, 0}, gen_channels(K, N, config.channel_model(), config.seed), {}, {}, {}, {}};
        c.params = SystemParams<double>::for_array(N, power, config.noise_var, config.omega);
        // any Hermitian Psi exercises the same arithmetic as a solved one
        const CVector<double> a = steering_vector<double>(0.0, N);
        c.psi = (power / N) * (CMatrix<double>::Identity(N, N) + a * a.adjoint());
        c.init = init_proposed<double>(c.channel.H, std::vector<double>(static_cast<std::size_t>(M - K), 0.0), M,
                                       power);
        cases.push_back(std::move(c));
    };
    for (int N : antenna_list)
        add_case(N, config.M, config.K);
    for (int K : user_list)
        add_case(config.N, K, K);

    auto run = [&](const Case& c) {
        const auto traj = run_pga<double>(c.channel.H, c.psi, c.params, schedule, c.init);
        if (!std::isfinite(traj.records.back().objective))
            throw NumericalError("scaling: non-finite objective");
    };
    for (const auto& c : cases)
        run(c); // warm-up
    // repetitions are interleaved across cases so slow spells on the machine
    // hit every case alike
    for (int r = 0; r < config.repetitions; ++r)
        for (auto& c : cases)
        {
            const auto start = std::chrono::steady_clock::now();
            run(c);
            c.samples.push_back(elapsed_since(start) / config.I);
        }

    std::vector<ScalingRow> rows;
    for (auto& c : cases)
    {
        auto mid = c.samples.begin() + static_cast<std::ptrdiff_t>(c.samples.size() / 2);
        std::nth_element(c.samples.begin(), mid, c.samples.end());
        c.row.seconds_per_outer = *mid;
        rows.push_back(c.row);
    }

    std::ostringstream csv;
    csv << "N,M,K,seconds_per_outer_iteration\n";
    for (const auto& r : rows)
        csv << r.N << ',' << r.M << ',' << r.K << ',' << format_real(r.seconds_per_outer) << '\n';
    write_text(out, csv.str());
    return rows;
}

} // namespace jcas
