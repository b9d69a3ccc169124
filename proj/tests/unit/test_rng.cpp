#include <gtest/gtest.h>

#include <set>

#include "l96da/rng.hpp"

namespace l96da {
namespace {

TEST(Rng, SameSeedSameSequence) {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.normal(), b.normal());
}

TEST(Rng, SubstreamSeedsAreDistinct) {
  std::set<std::uint64_t> seeds;
  for (auto kind : {Substream::kTruthInit, Substream::kTruthObs, Substream::kFilterInit, Substream::kPerturbations})
    for (std::uint64_t i = 0; i < 16; ++i) seeds.insert(derive_seed(7, kind, i));
  EXPECT_EQ(seeds.size(), 64u);
  EXPECT_NE(derive_seed(7, Substream::kTruthInit), derive_seed(8, Substream::kTruthInit));
}

TEST(Rng, NormalMatrixIsColumnMajorDrawOrder) {
  RngStream a(3);
  RngStream b(3);
  const Eigen::MatrixXd m = a.normal_matrix(4, 3);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 4; ++r) EXPECT_EQ(m(r, c), b.normal());
}

}  // namespace
}  // namespace l96da
