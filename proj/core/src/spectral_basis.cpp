#include "spdelab/spectral_basis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spdelab/error.hpp"

namespace spdelab {

namespace {

// FFTW planning is not re-entrant; execution with new arrays is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

const double kSineNorm = std::sqrt(2.0 / std::numbers::pi);

std::size_t ipow(std::size_t base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

AlignedBuffer::AlignedBuffer(std::size_t n)
    : data_(static_cast<double*>(fftw_malloc(sizeof(double) * std::max<std::size_t>(n, 1)))),
      size_(n) {
  if (!data_) throw std::bad_alloc();
  std::fill_n(data_.get(), n, 0.0);
}

void AlignedBuffer::Free::operator()(double* p) const noexcept { fftw_free(p); }

GridTransform::GridTransform(const DomainSpec& spec, int grid)
    : dimension_(spec.dimension),
      modes_(spec.modes),
      grid_(grid),
      dirichlet_(spec.boundary == Boundary::Dirichlet) {
  if (grid < 4 * spec.modes) {
    throw DomainError("transform grid must have at least 4K intervals");
  }
  axis_n_ = dirichlet_ ? grid - 1 : grid + 1;
  total_ = ipow(static_cast<std::size_t>(axis_n_), dimension_);

  // Per-axis normalizations for L2-orthonormal eigenfunctions.
  auto synth_axis = [&](int k) {
    if (!dirichlet_ && k == 0) return 1.0 / std::sqrt(std::numbers::pi);
    return kSineNorm / 2.0;
  };
  auto analysis_axis = [&](int k) {
    if (!dirichlet_ && k == 0) return std::sqrt(std::numbers::pi) / (2.0 * grid);
    return 1.0 / (kSineNorm * grid);
  };

  const std::size_t n_coeff = ipow(static_cast<std::size_t>(modes_), dimension_);
  scatter_.resize(n_coeff);
  synth_weight_.resize(n_coeff);
  analysis_weight_.resize(n_coeff);
  const int lo = dirichlet_ ? 1 : 0;
  for (std::size_t flat = 0; flat < n_coeff; ++flat) {
    std::size_t rem = flat;
    std::size_t pos = 0;
    std::size_t stride = 1;
    double ws = 1.0;
    double wa = 1.0;
    // Row-major with the last axis fastest, in both layouts.
    for (int axis = dimension_ - 1; axis >= 0; --axis) {
      int i = static_cast<int>(rem % modes_);
      rem /= modes_;
      int k = i + lo;
      pos += static_cast<std::size_t>(i) * stride;
      stride *= axis_n_;
      ws *= synth_axis(k);
      wa *= analysis_axis(k);
    }
    scatter_[flat] = pos;
    synth_weight_[flat] = ws;
    analysis_weight_[flat] = wa;
  }

  AlignedBuffer in(total_);
  AlignedBuffer out(total_);
  std::array<int, 3> n{axis_n_, axis_n_, axis_n_};
  std::array<fftw_r2r_kind, 3> kind{};
  kind.fill(dirichlet_ ? FFTW_RODFT00 : FFTW_REDFT00);
  std::lock_guard lock(planner_mutex());
  plan_ = fftw_plan_r2r(dimension_, n.data(), in.data(), out.data(), kind.data(),
                        FFTW_ESTIMATE);
  if (!plan_) throw std::runtime_error("FFTW failed to create a plan");
}

GridTransform::~GridTransform() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(plan_));
}

double GridTransform::coordinate(int j) const noexcept {
  const double h = std::numbers::pi / grid_;
  return dirichlet_ ? (j + 1) * h : j * h;
}

void GridTransform::synthesize(std::span<const double> coeffs,
                               AlignedBuffer& values,
                               AlignedBuffer& scratch) const {
  std::fill_n(scratch.data(), total_, 0.0);
  for (std::size_t i = 0; i < scatter_.size(); ++i) {
    scratch.data()[scatter_[i]] = coeffs[i] * synth_weight_[i];
  }
  fftw_execute_r2r(static_cast<fftw_plan>(plan_), scratch.data(), values.data());
}

void GridTransform::analyze(const AlignedBuffer& values,
                            std::span<double> coeffs,
                            AlignedBuffer& scratch) const {
  // FFTW's r2r interface takes a non-const input even for out-of-place plans
  // it does not modify.
  fftw_execute_r2r(static_cast<fftw_plan>(plan_),
                   const_cast<double*>(values.data()), scratch.data());
  for (std::size_t i = 0; i < scatter_.size(); ++i) {
    coeffs[i] = scratch.data()[scatter_[i]] * analysis_weight_[i];
  }
}

std::shared_ptr<const SpectralBasis> SpectralBasis::create(const DomainSpec& spec) {
  return std::shared_ptr<const SpectralBasis>(new SpectralBasis(spec));
}

SpectralBasis::SpectralBasis(const DomainSpec& spec) : spec_(spec) {
  if (spec.dimension < 1 || spec.dimension > 3 || spec.modes < 1) {
    throw DomainError("basis needs dimension in {1,2,3} and K >= 1");
  }
  if (spec.grid < 4 * spec.modes) {
    throw DomainError("grid resolution M must be at least 4K");
  }
  const std::size_t n = ipow(static_cast<std::size_t>(spec.modes), spec.dimension);
  eigenvalues_.resize(n);
  for (std::size_t flat = 0; flat < n; ++flat) {
    auto k = multi_index(flat);
    double lambda = 0.0;
    for (int axis = 0; axis < spec.dimension; ++axis) {
      lambda += static_cast<double>(k[axis]) * k[axis];
    }
    eigenvalues_[flat] = lambda;
  }
  max_eigenvalue_ = *std::max_element(eigenvalues_.begin(), eigenvalues_.end());
}

std::array<int, 3> SpectralBasis::multi_index(std::size_t flat) const {
  if (flat >= size()) throw DomainError("flat mode index out of range");
  const int lo = spec_.boundary == Boundary::Dirichlet ? 1 : 0;
  std::array<int, 3> k{lo, lo, lo};
  for (int axis = spec_.dimension - 1; axis >= 0; --axis) {
    k[axis] = static_cast<int>(flat % spec_.modes) + lo;
    flat /= spec_.modes;
  }
  return k;
}

std::size_t SpectralBasis::flat_index(std::span<const int> k) const {
  if (static_cast<int>(k.size()) != spec_.dimension) {
    throw DomainError("multi-index rank does not match the domain dimension");
  }
  const int lo = spec_.boundary == Boundary::Dirichlet ? 1 : 0;
  std::size_t flat = 0;
  for (int ki : k) {
    if (ki < lo || ki >= lo + spec_.modes) {
      throw DomainError("mode index " + std::to_string(ki) +
                        " outside the retained range");
    }
    flat = flat * spec_.modes + static_cast<std::size_t>(ki - lo);
  }
  return flat;
}

std::size_t SpectralBasis::axis_mode(int k) const {
  const int lo = spec_.boundary == Boundary::Dirichlet ? 1 : 0;
  std::array<int, 3> idx{k, lo, lo};
  return flat_index(std::span<const int>(idx.data(), spec_.dimension));
}

double SpectralBasis::eigenfunction_sup(std::size_t flat) const {
  auto k = multi_index(flat);
  double s = 1.0;
  for (int axis = 0; axis < spec_.dimension; ++axis) {
    s *= k[axis] == 0 ? 1.0 / std::sqrt(std::numbers::pi) : kSineNorm;
  }
  return s;
}

double SpectralBasis::eigenfunction_l1(std::size_t flat) const {
  auto k = multi_index(flat);
  double s = 1.0;
  for (int axis = 0; axis < spec_.dimension; ++axis) {
    s *= k[axis] == 0 ? std::sqrt(std::numbers::pi) : 2.0 * kSineNorm;
  }
  return s;
}

double SpectralBasis::eigenfunction(std::size_t flat,
                                    std::span<const double> xi) const {
  auto k = multi_index(flat);
  double v = 1.0;
  for (int axis = 0; axis < spec_.dimension; ++axis) {
    if (spec_.boundary == Boundary::Dirichlet) {
      v *= kSineNorm * std::sin(k[axis] * xi[axis]);
    } else {
      v *= k[axis] == 0 ? 1.0 / std::sqrt(std::numbers::pi)
                        : kSineNorm * std::cos(k[axis] * xi[axis]);
    }
  }
  return v;
}

const GridTransform& SpectralBasis::transform_for(int grid) const {
  std::lock_guard lock(cache_mutex_);
  auto it = transforms_.find(grid);
  if (it == transforms_.end()) {
    it = transforms_.emplace(grid, std::make_unique<GridTransform>(spec_, grid)).first;
  }
  return *it->second;
}

}  // namespace spdelab
