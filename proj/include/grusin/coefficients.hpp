#pragma once

#include <span>
#include <string>

namespace grusin {

/// Exponent tuple of a Grusin-type operator on R^n x R^m.
///
/// delta1/delta1p govern the local (|x1| <= 1) and global (|x1| >= 1)
/// degeneracy of the x1-block coefficient, delta2/delta2p those of the
/// x2-block coefficient. Both coefficients depend on x1 only.
struct GrusinParameters {
    int n = 1;
    int m = 1;
    double delta1 = 0.0;
    double delta1p = 0.0;
    double delta2 = 0.0;
    double delta2p = 0.0;

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;

    [[nodiscard]] int dimension() const { return n + m; }

    friend bool operator==(const GrusinParameters&, const GrusinParameters&) = default;
};

struct DerivedExponents {
    double D = 0.0;       // local dimension
    double Dp = 0.0;      // global dimension
    double beta = 0.0;    // n*delta1 + m*delta2
    double betap = 0.0;
    double rho = 1.0;     // 1 + delta2 - delta1
    double rhop = 1.0;
    double gamma = 0.0;   // delta2 / rho
    double gammap = 0.0;
    double sigma = 1.0;   // 1 / (1 - delta1)
    double sigmap = 1.0;
    double alpha = 1.0;   // (1 - delta1) / (1 + delta2 - delta1)
    double alphap = 1.0;

    [[nodiscard]] double doubling_dim() const { return D > Dp ? D : Dp; }
};

/// a^(alpha, alphap): a^alpha for a <= 1 and a^alphap for a >= 1.
/// Throws std::domain_error for a < 0.
[[nodiscard]] double piecewise_power(double a, double alpha, double alphap);

/// Smooth representative |x|^(2 delta) (1 + |x|^2)^(deltap - delta), evaluated from |x|.
[[nodiscard]] double coefficient(double norm_x, double delta, double deltap);
[[nodiscard]] double coefficient(std::span<const double> x, double delta, double deltap);

[[nodiscard]] DerivedExponents derive_exponents(const GrusinParameters& params);

/// The block-diagonal coefficient pair (c1, c2) of a Grusin operator as functions of |x1|.
///
/// A positive freeze radius replaces both coefficients inside {|x1| < freeze_radius}
/// by their values at |x1| = freeze_radius, which yields a non-degenerate operator that
/// agrees with the original one outside that slab.
class CoefficientField {
public:
    explicit CoefficientField(GrusinParameters params, double freeze_radius = 0.0);

    [[nodiscard]] const GrusinParameters& params() const { return params_; }
    [[nodiscard]] double freeze_radius() const { return freeze_radius_; }

    /// Coefficient of the x1 block at |x1| = s.
    [[nodiscard]] double c1(double s) const;
    /// Coefficient of the x2 block at |x1| = s.
    [[nodiscard]] double c2(double s) const;
    /// Coefficient acting on axis `axis` (axes 0..n-1 are x1, n..n+m-1 are x2).
    [[nodiscard]] double along_axis(int axis, double s) const { return axis < params_.n ? c1(s) : c2(s); }

    /// Exponent of the power-law singularity of c1(s) as s -> 0 (0 when frozen).
    [[nodiscard]] double local_exponent1() const;
    [[nodiscard]] double local_exponent2() const;

private:
    [[nodiscard]] double clamp_radius(double s) const { return s < freeze_radius_ ? freeze_radius_ : s; }

    GrusinParameters params_;
    double freeze_radius_;
};

[[nodiscard]] std::string describe(const GrusinParameters& params);

}  // namespace grusin
