// SPDX-License-Identifier: Apache-2.0

#include "jcas/container.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace jcas
{

namespace
{

using nlohmann::json;

constexpr std::array<char, 8> kMagic = {'J', 'C', 'A', 'S', 'B', 'I', 'N', '1'};

template <typename T>
T to_little_endian(T value)
{
    if constexpr (std::endian::native == std::endian::big)
    {
        std::array<unsigned char, sizeof(T)> bytes;
        std::memcpy(bytes.data(), &value, sizeof(T));
        std::reverse(bytes.begin(), bytes.end());
        std::memcpy(&value, bytes.data(), sizeof(T));
    }
    return value;
}

class Writer
{
public:
    explicit Writer(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::trunc)
    {
        if (!out_)
            throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    }

    void header(const json& doc)
    {
        const std::string text = doc.dump();
        out_.write(kMagic.data(), kMagic.size());
        put(static_cast<std::uint64_t>(text.size()));
        out_.write(text.data(), static_cast<std::streamsize>(text.size()));
    }

    void matrix(const CMatrix<double>& m)
    {
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
            {
                put(m(r, c).real());
                put(m(r, c).imag());
            }
    }

    void finish(const std::filesystem::path& path)
    {
        out_.flush();
        if (!out_)
            throw std::runtime_error("write failed for '" + path.string() + "'");
    }

private:
    template <typename T>
    void put(T value)
    {
        value = to_little_endian(value);
        out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
    }

    std::ofstream out_;
};

class Reader
{
public:
    explicit Reader(const std::filesystem::path& path) : in_(path, std::ios::binary), path_(path)
    {
        if (!in_)
            throw std::runtime_error("cannot open '" + path.string() + "' for reading");
    }

    json header(const std::string& expected_schema)
    {
        std::array<char, 8> magic{};
        in_.read(magic.data(), magic.size());
        if (!in_ || magic != kMagic)
            throw FormatError("'" + path_.string() + "' is not a JCASBIN1 container");
        const auto length = get<std::uint64_t>();
        if (length > (std::uint64_t{1} << 32))
            throw FormatError("'" + path_.string() + "': implausible header length");
        std::string text(static_cast<std::size_t>(length), '\0');
        in_.read(text.data(), static_cast<std::streamsize>(length));
        if (!in_)
            throw FormatError("'" + path_.string() + "': truncated header");
        json doc;
        try
        {
            doc = json::parse(text);
        }
        catch (const json::exception& e)
        {
            throw FormatError("'" + path_.string() + "': malformed header: " + e.what());
        }
        if (!doc.contains("schema") || doc["schema"] != expected_schema)
            throw FormatError("'" + path_.string() + "': expected schema " + expected_schema);
        return doc;
    }

    CMatrix<double> matrix(Eigen::Index rows, Eigen::Index cols)
    {
        if (rows < 0 || cols < 0)
            throw FormatError("'" + path_.string() + "': negative dimensions");
        CMatrix<double> m(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c)
            {
                const double re = get<double>();
                const double im = get<double>();
                m(r, c) = {re, im};
            }
        return m;
    }

    void expect_end()
    {
        in_.peek();
        if (!in_.eof())
            throw FormatError("'" + path_.string() + "': trailing bytes after payload");
    }

private:
    template <typename T>
    T get()
    {
        T value{};
        in_.read(reinterpret_cast<char*>(&value), sizeof(T));
        if (!in_)
            throw FormatError("'" + path_.string() + "': truncated payload");
        return to_little_endian(value);
    }

    std::ifstream in_;
    std::filesystem::path path_;
};

template <typename T>
T field(const json& doc, const char* key)
{
    try
    {
        return doc.at(key).get<T>();
    }
    catch (const json::exception&)
    {
        throw FormatError(std::string("container header: missing or invalid field '") + key + "'");
    }
}

} // namespace

void save_dataset(const std::filesystem::path& path, const std::vector<ChannelSet>& channels)
{
    json items = json::array();
    for (const auto& c : channels)
        items.push_back({{"K", c.users()},
                         {"N", c.antennas()},
                         {"seed", c.seed},
                         {"paths", c.model.paths},
                         {"angle_spread_deg", c.model.angle_spread_deg}});
    Writer w(path);
    w.header({{"schema", "channels-v1"}, {"count", channels.size()}, {"items", items}});
    for (const auto& c : channels)
        w.matrix(c.H);
    w.finish(path);
}

std::vector<ChannelSet> load_dataset(const std::filesystem::path& path)
{
    Reader r(path);
    const json doc = r.header("channels-v1");
    const auto count = field<std::size_t>(doc, "count");
    const json& items = doc.at("items");
    if (!items.is_array() || items.size() != count)
        throw FormatError("channels-v1: item table does not match count");
    std::vector<ChannelSet> out;
    out.reserve(count);
    for (const json& item : items)
    {
        ChannelSet c;
        const auto K = field<Eigen::Index>(item, "K");
        const auto N = field<Eigen::Index>(item, "N");
        c.seed = field<std::uint64_t>(item, "seed");
        c.model.paths = field<int>(item, "paths");
        c.model.angle_spread_deg = field<double>(item, "angle_spread_deg");
        c.H = r.matrix(K, N);
        out.push_back(std::move(c));
    }
    r.expect_end();
    return out;
}

void save_covariance(const std::filesystem::path& path, const BenchmarkCovariance<double>& cov)
{
    Writer w(path);
    w.header({{"schema", "psi-v1"},
              {"N", cov.psi.rows()},
              {"P_BS", cov.power},
              {"alpha", cov.alpha},
              {"residual", cov.residual},
              {"iterations", cov.iterations},
              {"converged", cov.converged}});
    w.matrix(cov.psi);
    w.finish(path);
}

BenchmarkCovariance<double> load_covariance(const std::filesystem::path& path)
{
    Reader r(path);
    const json doc = r.header("psi-v1");
    BenchmarkCovariance<double> cov;
    const auto N = field<Eigen::Index>(doc, "N");
    cov.power = field<double>(doc, "P_BS");
    cov.alpha = field<double>(doc, "alpha");
    cov.residual = field<double>(doc, "residual");
    cov.iterations = field<int>(doc, "iterations");
    cov.converged = field<bool>(doc, "converged");
    cov.psi = r.matrix(N, N);
    r.expect_end();
    return cov;
}

void save_precoders(const std::filesystem::path& path, const Precoders<double>& pc)
{
    Writer w(path);
    w.header({{"schema", "precoders-v1"}, {"N", pc.A.rows()}, {"M", pc.A.cols()}, {"K", pc.D.cols()}});
    w.matrix(pc.A);
    w.matrix(pc.D);
    w.finish(path);
}

Precoders<double> load_precoders(const std::filesystem::path& path)
{
    Reader r(path);
    const json doc = r.header("precoders-v1");
    const auto N = field<Eigen::Index>(doc, "N");
    const auto M = field<Eigen::Index>(doc, "M");
    const auto K = field<Eigen::Index>(doc, "K");
    Precoders<double> pc;
    pc.A = r.matrix(N, M);
    pc.D = r.matrix(M, K);
    r.expect_end();
    return pc;
}

} // namespace jcas
