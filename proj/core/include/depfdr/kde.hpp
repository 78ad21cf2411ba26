#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace depfdr {

// 0.9 * min(sd, IQR / 1.34) * n^(-1/5). Throws DegenerateDensityError when
// every sample is identical.
double silverman_bandwidth(std::span<const double> samples);

// Gaussian-kernel density estimate evaluated at each grid point. Without an
// explicit bandwidth, Silverman's rule is used.
std::vector<double> kde(std::span<const double> samples, std::span<const double> grid,
                        std::optional<double> bandwidth = std::nullopt);

std::vector<double> linspace(double lo, double hi, std::size_t n);

}  // namespace depfdr
