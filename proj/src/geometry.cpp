#include "vqlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "vqlab/error.hpp"
#include "vqlab/numeric.hpp"

namespace vqlab {

void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw InputError(std::string("dimension mismatch in ") + what + ": " + std::to_string(a) + " vs " +
                     std::to_string(b));
  }
}

PointSet PointSet::from_rows(const std::vector<Point>& rows) {
  if (rows.empty()) return PointSet();
  PointSet out(rows.front().size());
  if (out.dim_ == 0) throw InputError("points must have at least one coordinate");
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r);
  return out;
}

void PointSet::push_back(std::span<const double> p) {
  if (dim_ == 0 && data_.empty()) dim_ = p.size();
  require_same_dim(dim_, p.size(), "PointSet::push_back");
  for (double v : p) {
    if (!std::isfinite(v)) throw InputError("point coordinates must be finite");
  }
  data_.insert(data_.end(), p.begin(), p.end());
}

std::vector<Point> PointSet::rows() const {
  std::vector<Point> out;
  out.reserve(size());
  for (std::size_t i = 0; i < size(); ++i) {
    auto p = (*this)[i];
    out.emplace_back(p.begin(), p.end());
  }
  return out;
}

Codebook::Codebook(PointSet points) : points_(std::move(points)) {
  if (points_.size() < 2) throw InputError("a codebook needs k >= 2 code points");
  for (double v : points_.data()) {
    if (!std::isfinite(v)) throw InputError("code points must be finite");
  }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

Nearest nearest_index(const Codebook& c, std::span<const double> x) {
  require_same_dim(c.dim(), x.size(), "nearest_index");
  Nearest best{0, squared_distance(c[0], x)};
  for (std::size_t j = 1; j < c.size(); ++j) {
    const double d = squared_distance(c[j], x);
    if (d < best.squared_distance) best = {j, d};
  }
  return best;
}

double contrast(const Codebook& c, std::span<const double> x) { return nearest_index(c, x).squared_distance; }

Assignment assign(const Codebook& c, const PointSet& sample) {
  require_same_dim(c.dim(), sample.dim(), "assign");
  Assignment a;
  a.labels.resize(sample.size());
  std::vector<double> dist(c.size());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 0; j < c.size(); ++j) {
      dist[j] = squared_distance(c[j], sample[i]);
      if (dist[j] < dist[best]) best = j;
    }
    a.labels[i] = best;
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (j == best || squared_distance(c[j], c[best]) == 0.0) continue;
      if (dist[j] - dist[best] <= kTieTolerance) {
        ++a.tie_count;
        break;
      }
    }
  }
  return a;
}

double empirical_risk(const Codebook& c, const PointSet& sample) {
  if (sample.empty()) throw InputError("empirical_risk needs a nonempty sample");
  require_same_dim(c.dim(), sample.dim(), "empirical_risk");
  CompensatedSum s;
  for (std::size_t i = 0; i < sample.size(); ++i) s.add(contrast(c, sample[i]));
  return s.value() / static_cast<double>(sample.size());
}

double boundary_distance(const Codebook& c, std::span<const double> x) {
  const Nearest near = nearest_index(c, x);
  const auto ci = c[near.index];
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j == near.index) continue;
    const double sep = std::sqrt(squared_distance(ci, c[j]));
    if (sep == 0.0) continue;
    const double gap = squared_distance(x, c[j]) - near.squared_distance;
    best = std::min(best, std::fabs(gap) / (2.0 * sep));
  }
  if (!std::isfinite(best)) throw DegenerateCodebookError("boundary_distance: all code points coincide");
  return best;
}

double min_pairwise_distance(const Codebook& c) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) best = std::min(best, squared_distance(c[i], c[j]));
  }
  return std::sqrt(best);
}

double codebook_distance(const Codebook& a, const Codebook& b) {
  require_same_dim(a.dim(), b.dim(), "codebook_distance");
  if (a.size() != b.size()) throw InputError("codebook_distance: codebooks differ in size");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += squared_distance(a[i], b[i]);
  return std::sqrt(s);
}

double set_distance(const Codebook& a, const Codebook& b) {
  require_same_dim(a.dim(), b.dim(), "set_distance");
  auto directed = [](const Codebook& p, const Codebook& q) {
    double worst = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) worst = std::max(worst, contrast(q, p[i]));
    return worst;
  };
  return std::sqrt(std::max(directed(a, b), directed(b, a)));
}

Codebook align_labels(const Codebook& reference, const Codebook& b) {
  require_same_dim(reference.dim(), b.dim(), "align_labels");
  const std::size_t k = reference.size();
  if (b.size() != k) throw InputError("align_labels: codebooks differ in size");
  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best_perm = perm;
  if (k <= 8) {
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (std::size_t i = 0; i < k && s < best; ++i) s += squared_distance(reference[i], b[perm[i]]);
      if (s < best) {
        best = s;
        best_perm = perm;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<bool> used(k, false);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t pick = k;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k; ++j) {
        if (used[j]) continue;
        const double dj = squared_distance(reference[i], b[j]);
        if (dj < d) {
          d = dj;
          pick = j;
        }
      }
      used[pick] = true;
      best_perm[i] = pick;
    }
  }
  PointSet out(b.dim());
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(b[best_perm[i]]);
  return Codebook(std::move(out));
}

}  // namespace vqlab
