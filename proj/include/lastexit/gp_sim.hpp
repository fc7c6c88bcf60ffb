#pragma once

// Grid simulation of the Gaussian limit processes: Brownian motion and
// bridge on (0,1], the Brownian sheet on (0,1]^2 and the Kiefer-Mueller
// process over a finite function class.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "lastexit/error.hpp"
#include "lastexit/grid.hpp"
#include "lastexit/rng.hpp"

namespace lastexit {

// Upper bound on the number of cells of a materialised sheet (128 MiB of doubles).
inline constexpr std::size_t kMaxSheetCells = std::size_t{1} << 24;

// Covariance of a P-Brownian bridge over a finite class {f_1..f_k}:
// entry (i,j) = P f_i f_j - P f_i P f_j.
class CovMatrix {
 public:
  explicit CovMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
    detail::require(entries_.rows() == entries_.cols() && entries_.rows() > 0, "CovMatrix: must be square and non-empty");
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < entries_.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if (std::abs(entries_(i, j) - entries_(j, i)) > 1e-12 * scale)
          throw InvalidArgument("CovMatrix: not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");
    if (!entries_.allFinite()) throw InvalidArgument("CovMatrix: non-finite entry");

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(entries_);
    const Eigen::VectorXd& eig = solver.eigenvalues();
    const double spectral = eig.cwiseAbs().maxCoeff();
    if (eig.minCoeff() < -1e-10 * spectral) {
      throw NotPositiveSemidefinite("CovMatrix: not positive semidefinite, eigenvalue " + std::to_string(eig.minCoeff()),
                                    eig.minCoeff());
    }
    factor_ = solver.eigenvectors() * eig.cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }

  // f_values(i, x) = f_i evaluated at support point x; weights = P{x}.
  static CovMatrix from_function_class(const Eigen::MatrixXd& f_values, std::span<const double> weights) {
    detail::require(static_cast<std::size_t>(f_values.cols()) == weights.size(), "CovMatrix: weights/support mismatch");
    const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
    const Eigen::VectorXd mean = f_values * w;
    const Eigen::MatrixXd second = f_values * w.asDiagonal() * f_values.transpose();
    return CovMatrix(second - mean * mean.transpose());
  }

  // Indicators 1{x <= t_i} under Uniform(0,1): t_i ^ t_j - t_i t_j.
  static CovMatrix uniform_ecdf(std::span<const double> t) {
    const auto k = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd c(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
      for (Eigen::Index j = 0; j < k; ++j) c(i, j) = std::min(t[i], t[j]) - t[i] * t[j];
    return CovMatrix(std::move(c));
  }

  Eigen::Index dimension() const noexcept { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }
  // L with L * L^T = entries().
  const Eigen::MatrixXd& factor() const noexcept { return factor_; }

 private:
  Eigen::MatrixXd entries_;
  Eigen::MatrixXd factor_;
};

// Z(s_i, f_j) stored as values(i, j).
struct KieferField {
  Grid1D grid;
  Eigen::MatrixXd values;
};

inline double sup_abs(const KieferField& field) {
  return field.values.size() == 0 ? 0.0 : field.values.cwiseAbs().maxCoeff();
}

// ---- Brownian motion and bridge -------------------------------------------

inline PathGrid simulate_brownian_motion(const Grid1D& grid, Engine& engine) {
  std::vector<double> values(grid.size());
  double b = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    b += std::sqrt(grid.spacing(i)) * standard_normal(engine);
    values[i] = b;
  }
  return {grid, std::move(values)};
}

inline PathGrid simulate_brownian_motion(const Grid1D& grid, SeedSpec seed) {
  Engine engine = make_engine(seed);
  return simulate_brownian_motion(grid, engine);
}

// B(s) - s B(1), from the same increments as simulate_brownian_motion.
inline PathGrid simulate_brownian_bridge(const Grid1D& grid, Engine& engine) {
  PathGrid path = simulate_brownian_motion(grid, engine);
  const double end = path.values.back();
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) path.values[i] -= grid[i] * end;
  path.values.back() = 0.0;
  return path;
}

inline PathGrid simulate_brownian_bridge(const Grid1D& grid, SeedSpec seed) {
  Engine engine = make_engine(seed);
  return simulate_brownian_bridge(grid, engine);
}

// ---- Brownian sheet --------------------------------------------------------

namespace detail {

inline void check_sheet_grids(const Grid1D& s_grid, const Grid1D& t_grid) {
  require(s_grid.size() >= 2 && t_grid.size() >= 2, "Brownian sheet: each grid needs at least two points");
}

inline std::vector<double> sqrt_spacings(const Grid1D& grid) {
  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) out[i] = std::sqrt(grid.spacing(i));
  return out;
}

// Streams the sheet row by row: S(s_i, .) = S(s_{i-1}, .) + cumulative sum
// over t of independent rectangle increments with variance ds * dt.
template <typename RowVisitor>
void generate_sheet_rows(const Grid1D& s_grid, const Grid1D& t_grid, Engine& engine, RowVisitor&& visit) {
  const auto root_dt = sqrt_spacings(t_grid);
  std::vector<double> row(t_grid.size(), 0.0);
  for (std::size_t i = 0; i < s_grid.size(); ++i) {
    const double root_ds = std::sqrt(s_grid.spacing(i));
    double running = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      running += root_ds * root_dt[j] * standard_normal(engine);
      row[j] += running;
    }
    visit(i, std::span<const double>(row));
  }
}

}  // namespace detail

inline SheetGrid simulate_brownian_sheet(const Grid1D& s_grid, const Grid1D& t_grid, Engine& engine) {
  detail::check_sheet_grids(s_grid, t_grid);
  if (s_grid.size() > kMaxSheetCells / t_grid.size())
    throw BudgetExceeded("Brownian sheet: " + std::to_string(s_grid.size()) + "x" + std::to_string(t_grid.size()) +
                         " cells exceeds the budget of " + std::to_string(kMaxSheetCells));
  std::vector<double> values(s_grid.size() * t_grid.size());
  detail::generate_sheet_rows(s_grid, t_grid, engine, [&](std::size_t i, std::span<const double> row) {
    std::copy(row.begin(), row.end(), values.begin() + static_cast<std::ptrdiff_t>(i * row.size()));
  });
  return {s_grid, t_grid, std::move(values)};
}

inline SheetGrid simulate_brownian_sheet(const Grid1D& s_grid, const Grid1D& t_grid, SeedSpec seed) {
  Engine engine = make_engine(seed);
  return simulate_brownian_sheet(s_grid, t_grid, engine);
}

// sup |S| over the grid without materialising the sheet. Consumes the
// engine exactly like simulate_brownian_sheet.
inline double sheet_sup_abs(const Grid1D& s_grid, const Grid1D& t_grid, Engine& engine) {
  detail::check_sheet_grids(s_grid, t_grid);
  double best = 0.0;
  detail::generate_sheet_rows(s_grid, t_grid, engine,
                              [&](std::size_t, std::span<const double> row) { best = std::max(best, sup_abs(row)); });
  return best;
}

// ---- Kiefer-Mueller process ------------------------------------------------

// Partial-sum construction: Z(s_i) = Z(s_{i-1}) + sqrt(ds) * L * xi with
// xi ~ N(0, I_k), so Cov(Z(s,f_a), Z(t,f_b)) = (s ^ t) cov(a,b).
inline KieferField simulate_kiefer_muller(const Grid1D& grid, const CovMatrix& cov, Engine& engine) {
  const Eigen::Index k = cov.dimension();
  Eigen::MatrixXd values(static_cast<Eigen::Index>(grid.size()), k);
  Eigen::VectorXd state = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd xi(k);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (Eigen::Index a = 0; a < k; ++a) xi(a) = standard_normal(engine);
    state.noalias() += std::sqrt(grid.spacing(i)) * (cov.factor() * xi);
    values.row(static_cast<Eigen::Index>(i)) = state.transpose();
  }
  return {grid, std::move(values)};
}

inline KieferField simulate_kiefer_muller(const Grid1D& grid, const CovMatrix& cov, SeedSpec seed) {
  Engine engine = make_engine(seed);
  return simulate_kiefer_muller(grid, cov, engine);
}

// ---- Samplers of grid suprema ---------------------------------------------

inline auto brownian_sup_sampler(Grid1D grid) {
  return [grid = std::move(grid)](Engine& engine) {
    double b = 0.0, best = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      b += std::sqrt(grid.spacing(i)) * standard_normal(engine);
      best = std::max(best, std::abs(b));
    }
    return best;
  };
}

inline auto sheet_sup_sampler(Grid1D s_grid, Grid1D t_grid) {
  detail::check_sheet_grids(s_grid, t_grid);
  return [s = std::move(s_grid), t = std::move(t_grid)](Engine& engine) { return sheet_sup_abs(s, t, engine); };
}

inline auto kiefer_sup_sampler(Grid1D grid, CovMatrix cov) {
  return [grid = std::move(grid), cov = std::move(cov)](Engine& engine) {
    return sup_abs(simulate_kiefer_muller(grid, cov, engine));
  };
}

}  // namespace lastexit
