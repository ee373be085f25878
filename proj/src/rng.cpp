#include "csdesign/rng.hpp"

#include <algorithm>
#include <cmath>

namespace csd {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x632be59bd9b4e019ULL)));
}

double Rng::normal() { return normal_(engine_); }

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

int Rng::uniform_int(int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(engine_);
}

Matrix Rng::gaussian(int rows, int cols, double stddev) {
  Matrix m(rows, cols);
  // column-major fill order is part of the reproducibility contract
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = stddev * normal();
  }
  return m;
}

Vector Rng::gaussian(int size, double stddev) {
  Vector v(size);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = stddev * normal();
  return v;
}

Support Rng::k_subset(int n, int k) {
  // Floyd's algorithm: k draws, uniform over all C(n, k) subsets.
  Support s;
  s.reserve(static_cast<std::size_t>(k));
  for (int j = n - k; j < n; ++j) {
    const int t = uniform_int(0, j);
    if (std::find(s.begin(), s.end(), t) == s.end()) {
      s.push_back(t);
    } else {
      s.push_back(j);
    }
  }
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace csd
