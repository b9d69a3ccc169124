#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace l96da {

/// Named substreams of a master seed. Values are part of the seed-derivation
/// scheme and must not be renumbered.
enum class Substream : std::uint64_t {
  kTruthInit = 1,
  kTruthObs = 2,
  kFilterInit = 3,
  kPerturbations = 4,
  kBetaTrials = 5,
  kTest = 99,
};

/// Seed derivation: splitmix64(master ^ splitmix64(kind * 2^32 + index)).
/// Distinct (kind, index) pairs give decorrelated engine seeds.
std::uint64_t derive_seed(std::uint64_t master, Substream kind, std::uint64_t index = 0);

std::uint64_t splitmix64(std::uint64_t x);

/// A single-owner Gaussian stream: mt19937_64 plus std::normal_distribution.
/// Bit-identical output is only promised for a fixed standard library build.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master, Substream kind, std::uint64_t index = 0)
      : engine_(derive_seed(master, kind, index)) {}

  RngStream(const RngStream&) = delete;
  RngStream& operator=(const RngStream&) = delete;
  RngStream(RngStream&&) = default;
  RngStream& operator=(RngStream&&) = default;

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }

  /// n i.i.d. draws of N(0, stddev^2), in index order.
  Eigen::VectorXd normal_vector(Eigen::Index n, double stddev = 1.0);

  /// rows x cols i.i.d. draws of N(0, stddev^2), column-major: column 0 first.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, double stddev = 1.0);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace l96da
