#include "grusin/coefficients.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace grusin {

void GrusinParameters::validate() const
{
    if (n < 1) throw std::invalid_argument("params.n: n must be >= 1");
    if (m < 0) throw std::invalid_argument("params.m: m must be >= 0");
    if (!(delta1 >= 0.0 && delta1 < 1.0))
        throw std::invalid_argument("params.delta1: delta1 must lie in [0,1), got " + std::to_string(delta1));
    if (!(delta1p >= 0.0 && delta1p < 1.0))
        throw std::invalid_argument("params.delta1p: delta1p must lie in [0,1), got " + std::to_string(delta1p));
    if (!(delta2 >= 0.0) || !std::isfinite(delta2))
        throw std::invalid_argument("params.delta2: delta2 must be >= 0, got " + std::to_string(delta2));
    if (!(delta2p >= 0.0) || !std::isfinite(delta2p))
        throw std::invalid_argument("params.delta2p: delta2p must be >= 0, got " + std::to_string(delta2p));
}

double piecewise_power(double a, double alpha, double alphap)
{
    if (!(a >= 0.0)) throw std::domain_error("piecewise_power: base must be non-negative");
    return a <= 1.0 ? std::pow(a, alpha) : std::pow(a, alphap);
}

double coefficient(double norm_x, double delta, double deltap)
{
    if (delta < 0.0 || deltap < 0.0) throw std::invalid_argument("coefficient: exponents must be non-negative");
    const double s2 = norm_x * norm_x;
    return std::pow(norm_x, 2.0 * delta) * std::pow(1.0 + s2, deltap - delta);
}

double coefficient(std::span<const double> x, double delta, double deltap)
{
    double s2 = 0.0;
    for (double v : x) s2 += v * v;
    return coefficient(std::sqrt(s2), delta, deltap);
}

DerivedExponents derive_exponents(const GrusinParameters& p)
{
    p.validate();
    const double n = p.n;
    const double m = p.m;
    DerivedExponents e;
    e.rho = 1.0 + p.delta2 - p.delta1;
    e.rhop = 1.0 + p.delta2p - p.delta1p;
    e.D = (n + m * e.rho) / (1.0 - p.delta1);
    e.Dp = (n + m * e.rhop) / (1.0 - p.delta1p);
    e.beta = n * p.delta1 + m * p.delta2;
    e.betap = n * p.delta1p + m * p.delta2p;
    e.gamma = p.delta2 / e.rho;
    e.gammap = p.delta2p / e.rhop;
    e.sigma = 1.0 / (1.0 - p.delta1);
    e.sigmap = 1.0 / (1.0 - p.delta1p);
    e.alpha = (1.0 - p.delta1) / e.rho;
    e.alphap = (1.0 - p.delta1p) / e.rhop;
    return e;
}

CoefficientField::CoefficientField(GrusinParameters params, double freeze_radius)
    : params_(params), freeze_radius_(freeze_radius)
{
    params_.validate();
    if (!(freeze_radius >= 0.0)) throw std::invalid_argument("CoefficientField: freeze radius must be >= 0");
}

double CoefficientField::c1(double s) const
{
    return coefficient(clamp_radius(s), params_.delta1, params_.delta1p);
}

double CoefficientField::c2(double s) const
{
    return coefficient(clamp_radius(s), params_.delta2, params_.delta2p);
}

double CoefficientField::local_exponent1() const { return freeze_radius_ > 0.0 ? 0.0 : params_.delta1; }
double CoefficientField::local_exponent2() const { return freeze_radius_ > 0.0 ? 0.0 : params_.delta2; }

std::string describe(const GrusinParameters& p)
{
    std::ostringstream os;
    os << "n=" << p.n << " m=" << p.m << " delta1=" << p.delta1 << " delta1p=" << p.delta1p
       << " delta2=" << p.delta2 << " delta2p=" << p.delta2p;
    return os.str();
}

}  // namespace grusin
