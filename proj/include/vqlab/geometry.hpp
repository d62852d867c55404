#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace vqlab {

using Point = std::vector<double>;

// Row-major set of points sharing one dimension.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(std::size_t dim) : dim_(dim) {}
  PointSet(std::size_t count, std::size_t dim) : dim_(dim), data_(count * dim, 0.0) {}

  static PointSet from_rows(const std::vector<Point>& rows);

  std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
  std::size_t dim() const { return dim_; }
  bool empty() const { return data_.empty(); }

  std::span<const double> operator[](std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> operator[](std::size_t i) { return {data_.data() + i * dim_, dim_}; }

  void push_back(std::span<const double> p);
  void reserve(std::size_t count) { data_.reserve(count * dim_); }

  std::vector<Point> rows() const;
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t dim_ = 0;
  std::vector<double> data_;
};

// Ordered list of k >= 2 code points with finite coordinates.
class Codebook {
 public:
  explicit Codebook(PointSet points);
  static Codebook from_rows(const std::vector<Point>& rows) { return Codebook(PointSet::from_rows(rows)); }

  std::size_t size() const { return points_.size(); }
  std::size_t dim() const { return points_.dim(); }
  std::span<const double> operator[](std::size_t i) const { return points_[i]; }
  const PointSet& points() const { return points_; }
  std::vector<Point> rows() const { return points_.rows(); }

 private:
  PointSet points_;
};

struct Nearest {
  std::size_t index = 0;
  double squared_distance = 0.0;
};

// Labels from the nearest-neighbor rule with ties broken to the smallest
// index. tie_count counts samples whose squared distance to two code points at
// distinct positions differs by at most kTieTolerance.
struct Assignment {
  std::vector<std::size_t> labels;
  std::size_t tie_count = 0;
};

inline constexpr double kTieTolerance = 1e-12;

double squared_distance(std::span<const double> a, std::span<const double> b);

// gamma(c, x) = min_j |x - c_j|^2.
double contrast(const Codebook& c, std::span<const double> x);

Nearest nearest_index(const Codebook& c, std::span<const double> x);

Assignment assign(const Codebook& c, const PointSet& sample);

// (1/n) sum_i gamma(c, X_i), compensated.
double empirical_risk(const Codebook& c, const PointSet& sample);

// Distance from x to the closest bisector hyperplane between its nearest code
// point and any other code point at a distinct position. Never exceeds the
// distance from x to the Voronoi boundary N_c.
double boundary_distance(const Codebook& c, std::span<const double> x);

// B of a codebook: min_{i != j} |c_i - c_j|.
double min_pairwise_distance(const Codebook& c);

// Euclidean norm of c - c' viewed as vectors of (R^d)^k (labels aligned).
double codebook_distance(const Codebook& a, const Codebook& b);

// Hausdorff distance between the code-point sets (labels ignored).
double set_distance(const Codebook& a, const Codebook& b);

// Permutation of b's labels minimizing codebook_distance(a, permuted b).
// Exhaustive for k <= 8, greedy matching beyond.
Codebook align_labels(const Codebook& reference, const Codebook& b);

double norm(std::span<const double> x);

void require_same_dim(std::size_t a, std::size_t b, const char* what);

}  // namespace vqlab
