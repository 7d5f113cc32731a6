// SPDX-License-Identifier: Apache-2.0

#include "jcas/pga.hpp"

namespace jcas
{

InitKind parse_init_kind(const std::string& name)
{
    if (name == "proposed")
        return InitKind::proposed;
    if (name == "random")
        return InitKind::random;
    if (name == "svd")
        return InitKind::svd;
    throw ConfigError("unknown init kind '" + name + "' (proposed | random | svd)");
}

std::string to_string(InitKind kind)
{
    switch (kind)
    {
    case InitKind::random:
        return "random";
    case InitKind::svd:
        return "svd";
    case InitKind::proposed:
    default:
        return "proposed";
    }
}

} // namespace jcas
