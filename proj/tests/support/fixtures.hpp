#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "vqlab/distributions.hpp"

namespace fixtures {

// Three pairs of atoms around radius 0.7 (angles 90, 210, 330 degrees), each
// pair split +-0.1 along the radial direction. Uniform weights, M = 1, k = 3.
inline vqlab::FiniteSupportDist six_atoms() {
  std::vector<vqlab::Point> rows;
  for (double deg : {90.0, 210.0, 330.0}) {
    const double a = deg * std::numbers::pi / 180.0;
    for (double r : {0.6, 0.8}) rows.push_back({r * std::cos(a), r * std::sin(a)});
  }
  return vqlab::FiniteSupportDist::uniform(vqlab::PointSet::from_rows(rows), 1.0);
}

inline vqlab::PointSet triangle_means(double radius) {
  std::vector<vqlab::Point> rows;
  for (double deg : {90.0, 210.0, 330.0}) {
    const double a = deg * std::numbers::pi / 180.0;
    rows.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return vqlab::PointSet::from_rows(rows);
}

// Three well separated poles at radius 0.5, equal weights, M = 1.
inline vqlab::TruncatedGaussianMixture small_sigma_mixture(double sigma = 0.01) {
  return vqlab::TruncatedGaussianMixture::create(triangle_means(0.5), {1.0 / 3, 1.0 / 3, 1.0 / 3}, sigma, 1.0);
}

}  // namespace fixtures
