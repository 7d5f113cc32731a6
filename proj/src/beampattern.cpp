// SPDX-License-Identifier: Apache-2.0

#include "jcas/beampattern.hpp"

#include <algorithm>
#include <cmath>

namespace jcas
{

BeampatternSpec make_spec(std::vector<double> directions, double halfwidth, int grid_points)
{
    if (grid_points < 2)
        throw ConfigError("make_spec: need at least two grid points");
    if (!(halfwidth > 0.0))
        throw ConfigError("make_spec: halfwidth must be positive");
    for (double d : directions)
        if (!(d >= -90.0 && d <= 90.0))
            throw ConfigError("make_spec: directions must lie in [-90, 90] degrees");

    std::sort(directions.begin(), directions.end());
    directions.erase(std::unique(directions.begin(), directions.end(),
                                 [](double a, double b) { return std::abs(a - b) < 1e-9; }),
                     directions.end());

    BeampatternSpec spec;
    spec.directions = std::move(directions);
    spec.halfwidth = halfwidth;
    spec.grid.resize(static_cast<std::size_t>(grid_points));
    spec.desired.assign(static_cast<std::size_t>(grid_points), 0.0);
    for (int t = 0; t < grid_points; ++t)
    {
        const double theta = -90.0 + 180.0 * static_cast<double>(t) / static_cast<double>(grid_points - 1);
        spec.grid[static_cast<std::size_t>(t)] = theta;
        for (double d : spec.directions)
            if (std::abs(theta - d) <= halfwidth + 1e-9)
                spec.desired[static_cast<std::size_t>(t)] = 1.0;
    }
    return spec;
}

} // namespace jcas
