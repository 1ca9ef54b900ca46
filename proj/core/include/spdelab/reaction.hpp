#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spdelab/spectral_field.hpp"

namespace spdelab {

/// c_0 + sum_{j>=1} c_j * mean_i cos(j xi_i): a coefficient of the reaction
/// polynomial as a low-order cosine expansion in space. A single entry is a
/// constant.
struct CosineSeries {
  std::vector<double> terms{0.0};

  static CosineSeries constant(double c) { return {{c}}; }
  double operator()(std::span<const double> xi) const;
  /// The same expansion on one axis; the infimum/supremum over the cube is
  /// attained on the diagonal, so scanning this profile is enough.
  double profile(double s) const;
  bool is_constant() const;
};

struct DissipativityCertificate {
  double a = 0.0;
  double c = 0.0;
  double theta = 0.0;
};

/// b(xi, z) = sum_{k=0}^{2m+1} p_k(xi) z^k, written in the usual form
/// -C_{2m+1}(xi) z^{2m+1} + sum_{k<=2m} C_k(xi) z^k with C_{2m+1} = -p_{2m+1}.
struct ReactionSpec {
  int m = 0;
  std::vector<CosineSeries> poly;  // p_0 .. p_{2m+1}
  std::optional<DissipativityCertificate> certificate;

  /// From constant polynomial coefficients p_0..p_{2m+1} (length must be even).
  static ReactionSpec polynomial(std::vector<double> p);
  /// F == 0.
  static ReactionSpec zero() { return polynomial({0.0, 0.0}); }

  int degree() const { return 2 * m + 1; }
  bool is_zero() const;
  bool is_affine() const;
  /// C_{2m+1}(xi) = -p_{2m+1}(xi) on the axis profile.
  double leading_coefficient_inf() const;
};

/// Structural problems: wrong polynomial length, non-finite coefficients,
/// non-positive leading coefficient C_{2m+1} when m >= 1.
std::vector<std::string> reaction_violations(const ReactionSpec& spec);

/// d^j/dz^j b(xi, z) for j in {0,1,2,3}, by Horner on the differentiated
/// polynomial.
double eval_b(const ReactionSpec& spec, std::span<const double> xi, double z, int order);

/// Constants G_j with |d^j_z b(xi,z)| <= G_j (1 + |z|^{max(0, 2m+1-j)}),
/// j = 0..3, from the coefficient sup-norms.
std::array<double, 4> growth_constants(const ReactionSpec& spec);

/// sup over xi of d/dz b(xi, z), taken over z in R (+inf if unbounded).
double one_sided_lipschitz(const ReactionSpec& spec);

struct DissipativityResult {
  bool accepted = false;
  bool vacuous = false;  // m == 0
  DissipativityCertificate certificate;
  std::string explanation;
  double worst_z = 0.0;
  double worst_h = 0.0;
};

/// Log-lattice scan of sup_xi (b(xi,z+h) - b(xi,z)) h against
/// -a h^{2m+2} + c (1 + |z|^theta) for |z|, |h| <= 1e3.
DissipativityResult validate_dissipativity(const ReactionSpec& spec);

/// Lattice of scan values: 0 and +-10^e for e = -3, -2.75, ..., 3.
std::vector<double> dissipativity_lattice();

/// Pointwise evaluation of b and its z-derivative on a grid, with the
/// projection back to the retained modes. Holds per-point coefficient tables
/// when b depends on xi.
class NemytskiiOperator {
public:
  NemytskiiOperator(ReactionSpec spec, BasisPtr basis);

  const ReactionSpec& spec() const noexcept { return spec_; }
  const GridTransform& transform() const noexcept { return *transform_; }
  bool is_zero() const noexcept { return zero_; }
  /// Grid used: max(M, (2m+2) K) intervals per axis.
  int grid() const noexcept { return transform_->grid(); }

  struct Workspace {
    AlignedBuffer values;
    AlignedBuffer scratch;
    AlignedBuffer work;
  };
  Workspace make_workspace() const;

  /// out <- P_K b(., x(.)); if `potential` is non-null it also receives
  /// d_z b(xi, x(xi)) at every grid point.
  void apply(std::span<const double> x, std::span<double> out, Workspace& ws,
             AlignedBuffer* potential = nullptr) const;

  /// out <- P_K (potential * y).
  void multiply(const AlignedBuffer& potential, std::span<const double> y,
                std::span<double> out, Workspace& ws) const;

  /// Grid values of d^j_z b(xi, x(xi)).
  std::vector<double> derivative_on_grid(std::span<const double> x, int order,
                                         Workspace& ws) const;

private:
  double b_at(std::size_t point, double z, int order) const;

  ReactionSpec spec_;
  BasisPtr basis_;
  const GridTransform* transform_;
  bool zero_;
  bool constant_coefficients_;
  std::vector<double> constant_poly_;
  std::vector<std::vector<double>> grid_poly_;  // [point][k]
};

/// F(x) for order 0 as a field; the grid potential for order >= 1.
SpectralField nemytskii_apply(const ReactionSpec& spec, const SpectralField& x);
std::vector<double> nemytskii_potential(const ReactionSpec& spec, const SpectralField& x,
                                        int order);

}  // namespace spdelab
