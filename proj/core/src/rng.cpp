#include "l96da/rng.hpp"

namespace l96da {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, Substream kind, std::uint64_t index) {
  const std::uint64_t tag = (static_cast<std::uint64_t>(kind) << 32) + index;
  return splitmix64(master ^ splitmix64(tag));
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index n, double stddev) {
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = stddev * normal();
  return out;
}

Eigen::MatrixXd RngStream::normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = stddev * normal();
  return out;
}

}  // namespace l96da
