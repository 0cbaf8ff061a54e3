#pragma once

#include <gtest/gtest.h>

#include <random>

#include "oscillab/oscillab.hpp"

namespace testing_util {

using oscillab::Complex;
using oscillab::CVector;

inline oscillab::PhasePoint random_point(std::mt19937_64& rng, std::size_t dim, double imin = 0.2, double imax = 2.0) {
  return oscillab::sample_point(rng, dim, imin, imax);
}

inline oscillab::ReducedPoint random_reduced(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  oscillab::ReducedPoint b{CVector(static_cast<Eigen::Index>(dim))};
  for (std::size_t k = 0; k < dim; ++k) b.beta(static_cast<Eigen::Index>(k)) = Complex(g(rng), g(rng));
  return b;
}

inline oscillab::Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return oscillab::unit(oscillab::Vec3{g(rng), g(rng), g(rng)});
}

inline double max_diff(const CVector& a, const CVector& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace testing_util
