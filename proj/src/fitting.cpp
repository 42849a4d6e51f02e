#include "grusin/fitting.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "grusin/errors.hpp"

namespace grusin {

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw std::invalid_argument("fit_line: x and y differ in length");
    if (x.size() < 2) throw std::invalid_argument("fit_line: at least two points are required");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return f;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: x and y differ in length");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw DataError("fit_loglog: values must be positive");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    return fit_line(lx, ly);
}

}  // namespace grusin
