// SPDX-License-Identifier: Apache-2.0

#ifndef JCAS_FORMAT_HPP
#define JCAS_FORMAT_HPP

#include <string>
#include <vector>

namespace jcas
{

/// printf("%.17g"): enough digits for a bit-exact double round-trip.
std::string format_real(double value);

/// Comma-joined list of reals in format_real encoding.
std::string format_list(const std::vector<double>& values);

/// Parses "a,b,c" (whitespace tolerant); throws ConfigError on bad tokens.
std::vector<double> parse_real_list(const std::string& text);

} // namespace jcas

#endif // JCAS_FORMAT_HPP
