// SPDX-License-Identifier: Apache-2.0

#include "jcas/format.hpp"

#include "jcas/numerics.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

namespace jcas
{

std::string format_real(double value)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

std::string format_list(const std::vector<double>& values)
{
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i)
    {
        if (i)
            out += ',';
        out += format_real(values[i]);
    }
    return out;
}

std::vector<double> parse_real_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ','))
    {
        const auto first = token.find_first_not_of(" \t");
        if (first == std::string::npos)
        {
            if (text.find_first_not_of(" \t") == std::string::npos)
                break;
            throw ConfigError("empty entry in list '" + text + "'");
        }
        const auto last = token.find_last_not_of(" \t");
        const std::string trimmed = token.substr(first, last - first + 1);
        char* end = nullptr;
        const double v = std::strtod(trimmed.c_str(), &end);
        if (end == trimmed.c_str() || *end != '\0')
            throw ConfigError("not a number: '" + trimmed + "'");
        out.push_back(v);
    }
    return out;
}

} // namespace jcas
