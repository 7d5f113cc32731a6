// SPDX-License-Identifier: Apache-2.0

#include "jcas/format.hpp"
#include "jcas/unfolding.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace jcas
{

namespace
{

constexpr int kScheduleVersion = 1;

std::string real_array(const std::vector<double>& values)
{
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            out += ", ";
        out += format_real(values[i]);
    }
    return out + "]";
}

} // namespace

std::string serialize_schedule(const StepSchedule& schedule, const ScheduleMetadata& meta)
{
    schedule.validate();
    std::ostringstream out;
    out << "{\n"
        << "  \"version\": " << kScheduleVersion << ",\n"
        << "  \"I\": " << schedule.outer << ",\n"
        << "  \"J\": " << schedule.inner << ",\n"
        << "  \"mu\": " << real_array(schedule.mu) << ",\n"
        << "  \"lambda\": " << real_array(schedule.lambda) << ",\n"
        << "  \"training\": {\"seed\": " << meta.seed << ", \"snr_min_db\": " << format_real(meta.snr_min_db)
        << ", \"snr_max_db\": " << format_real(meta.snr_max_db) << ", \"omega\": " << format_real(meta.omega)
        << "}\n"
        << "}\n";
    return out.str();
}

StepSchedule parse_schedule(const std::string& text, ScheduleMetadata* meta)
{
    using nlohmann::json;
    StepSchedule s;
    try
    {
        const json doc = json::parse(text);
        const int version = doc.at("version").get<int>();
        if (version != kScheduleVersion)
            throw ConfigError("step schedule: unsupported version " + std::to_string(version));
        s.outer = doc.at("I").get<int>();
        s.inner = doc.at("J").get<int>();
        s.mu = doc.at("mu").get<std::vector<double>>();
        s.lambda = doc.at("lambda").get<std::vector<double>>();
        if (meta)
        {
            const json& t = doc.at("training");
            meta->seed = t.at("seed").get<std::uint64_t>();
            meta->snr_min_db = t.at("snr_min_db").get<double>();
            meta->snr_max_db = t.at("snr_max_db").get<double>();
            meta->omega = t.at("omega").get<double>();
        }
    }
    catch (const json::exception& e)
    {
        throw ConfigError(std::string("step schedule: malformed document: ") + e.what());
    }
    s.validate();
    return s;
}

void save_schedule(const std::filesystem::path& path, const StepSchedule& schedule, const ScheduleMetadata& meta)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << serialize_schedule(schedule, meta);
    if (!out)
        throw std::runtime_error("write failed for '" + path.string() + "'");
}

StepSchedule load_schedule(const std::filesystem::path& path, ScheduleMetadata* meta)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_schedule(buf.str(), meta);
}

} // namespace jcas
