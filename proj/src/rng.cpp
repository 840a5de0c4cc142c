#include "lazyflow/rng.hpp"

namespace lazyflow {

namespace {
std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix(master);
  for (std::uint64_t id : path) s = splitmix(s ^ splitmix(id + 0x632be59bd9b4e019ULL));
  return s;
}

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Engine& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Matrix out(rows, cols);
  // Row-major fill so the draw order matches the parameter layout.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = stddev * dist(rng);
  return out;
}

Vector normal_vector(Eigen::Index size, double stddev, Engine& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Vector out(size);
  for (Eigen::Index i = 0; i < size; ++i) out(i) = stddev * dist(rng);
  return out;
}

Matrix sample_sphere(Eigen::Index n, Eigen::Index d, Engine& rng) {
  Matrix x = normal_matrix(n, d, 1.0, rng);
  for (Eigen::Index i = 0; i < n; ++i) {
    double r = x.row(i).norm();
    while (r == 0.0) {
      x.row(i) = normal_vector(d, 1.0, rng).transpose();
      r = x.row(i).norm();
    }
    x.row(i) /= r;
  }
  return x;
}

Vector random_unit(Eigen::Index p, Engine& rng) {
  Vector v = normal_vector(p, 1.0, rng);
  return v / v.norm();
}

}  // namespace lazyflow
