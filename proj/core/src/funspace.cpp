#include "flrpoi/funspace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include "flrpoi/error.hpp"

namespace flrpoi {

Grid::Grid(std::size_t p) {
  if (p < kMinPoints) {
    fail(ErrorKind::InvalidArgument,
         "grid needs at least " + std::to_string(kMinPoints) + " points, got " + std::to_string(p));
  }
  points_.resize(p);
  const double denom = static_cast<double>(p - 1);
  for (std::size_t j = 0; j < p; ++j) points_[j] = static_cast<double>(j) / denom;
}

std::size_t Grid::nearest_index(double t) const {
  const double scaled = t * static_cast<double>(size() - 1);
  const double clamped = std::clamp(scaled, 0.0, static_cast<double>(size() - 1));
  auto j = static_cast<std::size_t>(std::floor(clamped));
  if (j + 1 < size() && (clamped - static_cast<double>(j)) > 0.5) ++j;
  return j;
}

FunctionalDataset::FunctionalDataset(Eigen::MatrixXd x, Eigen::VectorXd y)
    : grid_(static_cast<std::size_t>(x.cols())), x_(std::move(x)), y_(std::move(y)) {
  if (y_.size() < 2) fail(ErrorKind::ShapeMismatch, "need at least 2 observations");
  if (x_.rows() != y_.size()) {
    fail(ErrorKind::ShapeMismatch, "X has " + std::to_string(x_.rows()) + " rows but Y has " +
                                       std::to_string(y_.size()) + " values");
  }
  if (!x_.allFinite() || !y_.allFinite()) fail(ErrorKind::InvalidArgument, "non-finite entries");
}

double population_sd(const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (v.size() == 0) return 0.0;
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / static_cast<double>(v.size()));
}

CenteredDataset center(const FunctionalDataset& ds) {
  CenteredDataset out{ds, {}, {}, 0.0, {}};
  out.y_mean = ds.y().mean();
  out.yc = ds.y().array() - out.y_mean;
  out.x_means = ds.x().colwise().mean().transpose();
  out.xc = ds.x().rowwise() - out.x_means.transpose();
  return out;
}

double default_sd_floor(const CenteredDataset& ds) {
  const double scale = ds.xc.size() > 0 ? ds.xc.cwiseAbs().maxCoeff() : 0.0;
  return 1e-10 * std::max(1.0, scale);
}

StandardizedDataset standardize(const CenteredDataset& ds, double sd_floor) {
  if (!(sd_floor > 0.0)) fail(ErrorKind::InvalidArgument, "sd_floor must be positive");
  StandardizedDataset out{ds, {}, {}, 0.0, {}, sd_floor};
  out.y_sd = population_sd(ds.yc);
  if (out.y_sd < sd_floor) fail(ErrorKind::DegenerateResponse, "sd(Y) is below the sd floor");
  out.yst = ds.yc / out.y_sd;

  const auto p = ds.xc.cols();
  out.x_sds.resize(p);
  out.xst.resize(ds.xc.rows(), p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double sd = population_sd(ds.xc.col(j));
    out.x_sds(j) = sd;
    if (sd < sd_floor) {
      out.xst.col(j).setZero();
    } else {
      out.xst.col(j) = ds.xc.col(j) / sd;
    }
  }
  return out;
}

StandardizedDataset standardize(const CenteredDataset& ds) {
  return standardize(ds, default_sd_floor(ds));
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_cell(std::string_view cell, const std::string& where) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto* begin = cell.data();
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (cell.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    fail(ErrorKind::ParseError, where + ": not a finite number: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::ParseError, "cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = options.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    const auto content = trim(line);
    if (content.empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::vector<double> row;
    std::size_t start = 0;
    for (;;) {
      const auto comma = content.find(',', start);
      const auto cell = content.substr(start, comma == std::string_view::npos ? comma : comma - start);
      row.push_back(parse_cell(cell, path.filename().string() + " row " + std::to_string(line_no)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      fail(ErrorKind::ParseError, path.filename().string() + " row " + std::to_string(line_no) +
                                      ": expected " + std::to_string(rows.front().size()) +
                                      " columns, found " + std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorKind::ParseError, path.string() + " contains no data rows");

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

FunctionalDataset load_csv(const std::filesystem::path& path_x, const std::filesystem::path& path_y,
                           const CsvOptions& options) {
  Eigen::MatrixXd x = read_csv_matrix(path_x, options);
  Eigen::MatrixXd y = read_csv_matrix(path_y, options);
  if (y.cols() != 1) {
    fail(ErrorKind::ParseError, path_y.filename().string() + ": expected one value per line, found " +
                                    std::to_string(y.cols()) + " columns");
  }
  if (x.rows() != y.rows()) {
    fail(ErrorKind::ShapeMismatch, "X has " + std::to_string(x.rows()) + " rows but Y has " +
                                       std::to_string(y.rows()));
  }
  return FunctionalDataset(std::move(x), y.col(0));
}

void write_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::ParseError, "cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

void write_csv(const FunctionalDataset& ds, const std::filesystem::path& path_x,
               const std::filesystem::path& path_y) {
  write_csv(ds.x(), path_x);
  write_csv(Eigen::MatrixXd(ds.y()), path_y);
}

}  // namespace flrpoi
