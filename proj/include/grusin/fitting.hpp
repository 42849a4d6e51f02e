#pragma once

#include <span>

namespace grusin {

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least-squares line through (x, y); needs at least two distinct x values.
[[nodiscard]] LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Least-squares slope of log y against log x (all values must be positive).
[[nodiscard]] LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace grusin
