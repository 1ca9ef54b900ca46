#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "spdelab/domain.hpp"

namespace spdelab {

/// Heap buffer with the SIMD alignment FFTW expects. Every buffer handed to
/// a GridTransform must come from here so that plans stay valid.
class AlignedBuffer {
public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t n);

  double* data() noexcept { return data_.get(); }
  const double* data() const noexcept { return data_.get(); }
  std::size_t size() const noexcept { return size_; }
  std::span<double> span() noexcept { return {data_.get(), size_}; }
  std::span<const double> span() const noexcept { return {data_.get(), size_}; }

private:
  struct Free {
    void operator()(double* p) const noexcept;
  };
  std::unique_ptr<double[], Free> data_;
  std::size_t size_ = 0;
};

/// Tensor-product sine (Dirichlet) or cosine (Neumann) transform between the
/// first K^d eigen-coefficients and point values on a uniform grid with
/// `grid` intervals per axis. Dirichlet transforms act on the interior points
/// only; Neumann transforms include the boundary.
class GridTransform {
public:
  GridTransform(const DomainSpec& spec, int grid);
  ~GridTransform();
  GridTransform(const GridTransform&) = delete;
  GridTransform& operator=(const GridTransform&) = delete;

  int grid() const noexcept { return grid_; }
  /// Points per axis handled by the transform.
  int axis_points() const noexcept { return axis_n_; }
  std::size_t size() const noexcept { return total_; }
  /// Coordinate of transform point j along one axis.
  double coordinate(int j) const noexcept;

  /// values <- sum_k coeffs_k e_k at the transform points. Both buffers must
  /// be AlignedBuffers of length size(); `scratch` is clobbered.
  void synthesize(std::span<const double> coeffs, AlignedBuffer& values,
                  AlignedBuffer& scratch) const;

  /// coeffs <- discrete L2 projection of `values` onto the retained modes.
  /// Exact for band-limited data with bandwidth below the grid.
  void analyze(const AlignedBuffer& values, std::span<double> coeffs,
               AlignedBuffer& scratch) const;

  AlignedBuffer make_buffer() const { return AlignedBuffer(total_); }

private:
  void* plan_ = nullptr;
  int dimension_;
  int modes_;
  int grid_;
  int axis_n_;
  std::size_t total_;
  bool dirichlet_;
  std::vector<std::size_t> scatter_;  // coefficient -> transform-array index
  std::vector<double> synth_weight_;
  std::vector<double> analysis_weight_;
};

/// Everything derived from a DomainSpec that modes and fields need: the
/// multi-index enumeration, eigenvalues, L2-normalized eigenfunction norms and
/// cached grid transforms. Shared immutably between fields and threads.
class SpectralBasis {
public:
  static std::shared_ptr<const SpectralBasis> create(const DomainSpec& spec);

  const DomainSpec& spec() const noexcept { return spec_; }
  int dimension() const noexcept { return spec_.dimension; }
  /// Number of retained modes, K^d.
  std::size_t size() const noexcept { return eigenvalues_.size(); }

  std::span<const double> eigenvalues() const noexcept { return eigenvalues_; }
  double eigenvalue(std::size_t flat) const { return eigenvalues_.at(flat); }
  double largest_eigenvalue() const noexcept { return max_eigenvalue_; }

  /// Mode numbers of a flat index (only the first `dimension()` are used).
  std::array<int, 3> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const int> k) const;
  /// Flat index of the d = 1 mode k, or of (k, lo, lo) in higher dimension.
  std::size_t axis_mode(int k) const;

  /// sup_xi |e_k(xi)| and the L1 norm of e_k.
  double eigenfunction_sup(std::size_t flat) const;
  double eigenfunction_l1(std::size_t flat) const;
  /// e_k evaluated at a point of [0, pi]^d.
  double eigenfunction(std::size_t flat, std::span<const double> xi) const;

  /// Transform on the spec's own grid (used for sup-norms).
  const GridTransform& transform() const { return transform_for(spec_.grid); }
  /// Transform on any grid with at least 4K intervals; created on first use.
  const GridTransform& transform_for(int grid) const;

private:
  explicit SpectralBasis(const DomainSpec& spec);

  DomainSpec spec_;
  std::vector<double> eigenvalues_;
  double max_eigenvalue_ = 0.0;
  mutable std::mutex cache_mutex_;
  mutable std::map<int, std::unique_ptr<GridTransform>> transforms_;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

}  // namespace spdelab
