#pragma once

// Functional data model: the observation grid, raw datasets and their centered
// and standardized versions, plus CSV ingestion.

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <vector>

namespace flrpoi {

// Equidistant grid t_j = j/(p-1), j = 0..p-1, on [0,1].
class Grid {
 public:
  static constexpr std::size_t kMinPoints = 5;

  explicit Grid(std::size_t p);

  std::size_t size() const noexcept { return points_.size(); }
  double step() const noexcept { return 1.0 / static_cast<double>(points_.size() - 1); }
  double operator[](std::size_t j) const { return points_[j]; }
  const std::vector<double>& points() const noexcept { return points_; }

  // Index of the grid point closest to t (ties go to the lower index).
  std::size_t nearest_index(double t) const;

 private:
  std::vector<double> points_;
};

class FunctionalDataset {
 public:
  // Rows of x are trajectories on an equidistant grid of x.cols() points.
  FunctionalDataset(Eigen::MatrixXd x, Eigen::VectorXd y);

  const Grid& grid() const noexcept { return grid_; }
  const Eigen::MatrixXd& x() const noexcept { return x_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  std::size_t n() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t p() const noexcept { return grid_.size(); }

 private:
  Grid grid_;
  Eigen::MatrixXd x_;
  Eigen::VectorXd y_;
};

struct CenteredDataset {
  FunctionalDataset base;
  Eigen::VectorXd yc;
  Eigen::MatrixXd xc;
  double y_mean = 0.0;
  Eigen::VectorXd x_means;

  std::size_t n() const noexcept { return base.n(); }
  std::size_t p() const noexcept { return base.p(); }
};

struct StandardizedDataset {
  CenteredDataset centered;
  Eigen::VectorXd yst;
  Eigen::MatrixXd xst;
  double y_sd = 0.0;
  Eigen::VectorXd x_sds;
  double sd_floor = 0.0;
};

// sd with the 1/n divisor, around the sample mean.
double population_sd(const Eigen::Ref<const Eigen::VectorXd>& v);

CenteredDataset center(const FunctionalDataset& ds);

// 1e-10 * max(1, max|Xc|).
double default_sd_floor(const CenteredDataset& ds);

// Divides each column (and the response) by its 1/n sd. Columns whose sd is
// below sd_floor become identically zero. Throws DegenerateResponse when
// sd(Y) < sd_floor.
StandardizedDataset standardize(const CenteredDataset& ds, double sd_floor);
StandardizedDataset standardize(const CenteredDataset& ds);

struct CsvOptions {
  bool has_header = false;
};

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path, const CsvOptions& options = {});

// X: n rows by p columns. Y: n rows, one value each.
FunctionalDataset load_csv(const std::filesystem::path& path_x, const std::filesystem::path& path_y,
                           const CsvOptions& options = {});

// Writes with max_digits10 precision so values survive a read back exactly.
void write_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);
void write_csv(const FunctionalDataset& ds, const std::filesystem::path& path_x,
               const std::filesystem::path& path_y);

}  // namespace flrpoi
