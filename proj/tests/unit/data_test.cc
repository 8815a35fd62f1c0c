// Copyright 2026 The fedsmooth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedsmooth/data.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <gtest/gtest.h>

#include "fedsmooth/objectives.h"

namespace fedsmooth {
namespace {

namespace fs = std::filesystem;

const std::string kFixtureImages =
    std::string(FEDSMOOTH_TEST_DATA_DIR) + "/mnist100-images.idx3-ubyte";
const std::string kFixtureLabels =
    std::string(FEDSMOOTH_TEST_DATA_DIR) + "/mnist100-labels.idx1-ubyte";

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("fedsmooth_data_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string File(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

void WriteBytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

std::vector<unsigned char> Header(uint32_t magic, std::vector<uint32_t> dims) {
  std::vector<unsigned char> b;
  auto put = [&](uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>(v >> s));
  };
  put(magic);
  for (uint32_t d : dims) put(d);
  return b;
}

IdxErrorCode LoadCode(const std::string& images, const std::string& labels) {
  try {
    LoadIdx(images, labels);
  } catch (const IdxError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no IdxError thrown";
  return IdxErrorCode::kOpenFailed;
}

Dataset Sequential(int64_t n, int64_t features = 2, int32_t classes = 10) {
  Dataset d;
  d.features.resize(n, features);
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < features; ++j) d.features(i, j) = static_cast<double>(i);
    d.labels.push_back(static_cast<int32_t>(i % classes));
  }
  return d;
}

TEST(LoadIdxTest, Fixture) {
  const Dataset d = LoadIdx(kFixtureImages, kFixtureLabels);
  ASSERT_EQ(d.size(), 100);
  EXPECT_EQ(d.num_features(), 784);
  const std::vector<int32_t> head = {5, 0, 4, 1, 9, 2, 1, 3, 1, 4};
  EXPECT_EQ(std::vector<int32_t>(d.labels.begin(), d.labels.begin() + 10), head);
  EXPECT_GE(d.features.minCoeff(), 0.0);
  EXPECT_LE(d.features.maxCoeff(), 1.0);
  EXPECT_DOUBLE_EQ(d.features.maxCoeff(), 1.0);
  for (int32_t y : d.labels) {
    EXPECT_GE(y, 0);
    EXPECT_LE(y, 9);
  }
}

TEST(LoadIdxTest, FullMnistTrainSet) {
  const char* dir = std::getenv("FEDSMOOTH_DATA_DIR");
  if (dir == nullptr || !fs::exists(std::string(dir) + "/train-images.idx3-ubyte")) {
    GTEST_SKIP() << "FEDSMOOTH_DATA_DIR does not hold MNIST";
  }
  const Dataset d = LoadIdx(std::string(dir) + "/train-images.idx3-ubyte",
                            std::string(dir) + "/train-labels.idx1-ubyte");
  EXPECT_EQ(d.size(), 60000);
  EXPECT_EQ(d.num_features(), 784);
  EXPECT_EQ(*std::min_element(d.labels.begin(), d.labels.end()), 0);
  EXPECT_EQ(*std::max_element(d.labels.begin(), d.labels.end()), 9);
}

TEST(LoadIdxTest, BadMagic) {
  TempDir tmp;
  auto labels = Header(0x803, {2});
  labels.push_back(1);
  labels.push_back(2);
  WriteBytes(tmp.File("l"), labels);
  EXPECT_EQ(LoadCode(kFixtureImages, tmp.File("l")), IdxErrorCode::kBadMagic);
}

TEST(LoadIdxTest, TruncatedPayload) {
  TempDir tmp;
  auto images = Header(0x803, {2, 2, 2});
  images.insert(images.end(), {1, 2, 3, 4, 5});  // 8 expected
  auto labels = Header(0x801, {2});
  labels.insert(labels.end(), {0, 1});
  WriteBytes(tmp.File("i"), images);
  WriteBytes(tmp.File("l"), labels);
  EXPECT_EQ(LoadCode(tmp.File("i"), tmp.File("l")), IdxErrorCode::kTruncated);
  WriteBytes(tmp.File("h"), {0, 0, 8});
  EXPECT_EQ(LoadCode(tmp.File("h"), tmp.File("l")), IdxErrorCode::kTruncated);
}

TEST(LoadIdxTest, CountMismatch) {
  TempDir tmp;
  auto images = Header(0x803, {2, 1, 1});
  images.insert(images.end(), {1, 2});
  auto labels = Header(0x801, {3});
  labels.insert(labels.end(), {0, 1, 2});
  WriteBytes(tmp.File("i"), images);
  WriteBytes(tmp.File("l"), labels);
  EXPECT_EQ(LoadCode(tmp.File("i"), tmp.File("l")), IdxErrorCode::kCountMismatch);
}

TEST(LoadIdxTest, MissingFile) {
  EXPECT_EQ(LoadCode("/nonexistent/images", kFixtureLabels), IdxErrorCode::kOpenFailed);
}

TEST(LoadIdxTest, RoundTrip) {
  TempDir tmp;
  Dataset d;
  d.features.resize(3, 6);
  for (int i = 0; i < 18; ++i) d.features.data()[i] = (i * 37 % 256) / 255.0;
  d.labels = {7, 0, 3};
  WriteIdx(d, 2, 3, tmp.File("i"), tmp.File("l"));
  const Dataset back = LoadIdx(tmp.File("i"), tmp.File("l"));
  EXPECT_EQ(back.features, d.features);
  EXPECT_EQ(back.labels, d.labels);
  // The fixture reproduces byte for byte.
  const Dataset fixture = LoadIdx(kFixtureImages, kFixtureLabels);
  WriteIdx(fixture, 28, 28, tmp.File("fi"), tmp.File("fl"));
  EXPECT_EQ(fs::file_size(tmp.File("fi")), fs::file_size(kFixtureImages));
  const Dataset again = LoadIdx(tmp.File("fi"), tmp.File("fl"));
  EXPECT_EQ(again.features, fixture.features);
  EXPECT_THROW(WriteIdx(d, 4, 4, tmp.File("i"), tmp.File("l")), std::invalid_argument);
}

TEST(PartitionTest, MnistShape) {
  // 50K of the 60K training rows go to clients, 10K stay for validation.
  const Dataset d = Sequential(60000, 1);
  const Partition p = PartitionIid(d, 1000, 50, 3);
  ASSERT_EQ(p.shards.size(), 1000u);
  EXPECT_EQ(p.leftover_rows.size(), 10000u);
  std::set<int64_t> seen;
  for (std::size_t c = 0; c < p.shards.size(); ++c) {
    EXPECT_EQ(p.shards[c].client_id, static_cast<int64_t>(c));
    ASSERT_EQ(p.shards[c].data.size(), 50);
    for (std::size_t i = 0; i < 50; ++i) {
      const int64_t r = p.shard_rows[c][i];
      EXPECT_TRUE(seen.insert(r).second);
      EXPECT_EQ(p.shards[c].data.features(i, 0), static_cast<double>(r));
      EXPECT_EQ(p.shards[c].data.labels[i], d.labels[r]);
    }
  }
  EXPECT_EQ(seen.size(), 50000u);
  for (int64_t r : p.leftover_rows) EXPECT_TRUE(seen.insert(r).second);
  EXPECT_EQ(seen.size(), 60000u);
}

TEST(PartitionTest, SingleClientTakesPermutationPrefix) {
  const Dataset d = Sequential(30);
  const Partition one = PartitionIid(d, 1, 7, 9);
  const Partition all = PartitionIid(d, 3, 10, 9);
  ASSERT_EQ(one.shards.size(), 1u);
  EXPECT_EQ(one.shard_rows[0],
            std::vector<int64_t>(all.shard_rows[0].begin(), all.shard_rows[0].begin() + 7));
}

TEST(PartitionTest, DeterministicUnderSeed) {
  const Dataset d = Sequential(200);
  EXPECT_EQ(PartitionIid(d, 10, 15, 4).shard_rows, PartitionIid(d, 10, 15, 4).shard_rows);
  EXPECT_NE(PartitionIid(d, 10, 15, 4).shard_rows, PartitionIid(d, 10, 15, 5).shard_rows);
}

TEST(PartitionTest, InsufficientSamples) {
  const Dataset d = Sequential(10);
  EXPECT_THROW(PartitionIid(d, 3, 4, 1), std::invalid_argument);
  EXPECT_THROW(PartitionIid(d, 0, 4, 1), std::invalid_argument);
  EXPECT_NO_THROW(PartitionIid(d, 2, 5, 1));
}

TEST(PartitionTest, LabelSortedShardsAreNarrow) {
  const Dataset d = Sequential(1000);
  const Partition p = PartitionLabelSorted(d, 20, 50, 2);
  EXPECT_EQ(p.scheme, PartitionScheme::kLabelSorted);
  std::set<int64_t> seen;
  for (const auto& shard : p.shards) {
    std::set<int32_t> labels(shard.data.labels.begin(), shard.data.labels.end());
    EXPECT_LE(labels.size(), 2u);
    EXPECT_TRUE(std::is_sorted(shard.data.labels.begin(), shard.data.labels.end()));
  }
  for (const auto& rows : p.shard_rows)
    for (int64_t r : rows) EXPECT_TRUE(seen.insert(r).second);
  EXPECT_EQ(seen.size(), 1000u);
}

TEST(SynthTest, DeterministicAndBalanced) {
  const Dataset a = SynthClassification(300, 12, 10, 3, 5);
  const Dataset b = SynthClassification(300, 12, 10, 3, 5);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.labels, b.labels);
  EXPECT_NE(a.features, SynthClassification(300, 12, 10, 3, 6).features);
  std::vector<int> counts(10, 0);
  for (int32_t y : a.labels) ++counts[y];
  for (int c : counts) EXPECT_EQ(c, 30);
}

TEST(SynthTest, MeanSeparation) {
  for (int64_t dim : {4, 20}) {
    const Dataset d = SynthClassification(20000, dim, 5, 6.0, 7);
    std::vector<Eigen::RowVectorXd> mean(5, Eigen::RowVectorXd::Zero(dim));
    std::vector<int> n(5, 0);
    for (int64_t i = 0; i < d.size(); ++i) {
      mean[d.labels[i]] += d.features.row(i);
      ++n[d.labels[i]];
    }
    for (int c = 0; c < 5; ++c) mean[c] /= n[c];
    if (dim >= 5) {
      EXPECT_NEAR((mean[0] - mean[1]).norm(), 6.0, 0.15);
    } else {
      for (int c = 0; c < 5; ++c) EXPECT_NEAR(mean[c].norm(), 3.0, 0.1);
    }
  }
}

// Plain full-batch gradient descent; returns accuracy on `eval`.
double FitAndScore(const Dataset& train, const Dataset& eval, int64_t classes,
                   int iters) {
  const LogisticModel m{classes, train.num_features()};
  std::vector<double> w = m.Init();
  for (int t = 0; t < iters; ++t) {
    const LossGrad lg = LogisticGrad(m, w, train, 0);
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= 0.5 * lg.grad[k];
  }
  return LogisticEvaluate(m, w, eval).accuracy;
}

TEST(SynthTest, LargeSeparationIsLearnable) {
  const Dataset d = SynthClassification(2000, 20, 10, 10.0, 8);
  EXPECT_GT(FitAndScore(d, d, 10, 300), 0.99);
}

TEST(SynthTest, ZeroSeparationIsChance) {
  // Fit and score on independent draws; the training fit alone overfits noise.
  const Dataset train = SynthClassification(2000, 20, 10, 0.0, 8);
  const Dataset eval = SynthClassification(20000, 20, 10, 0.0, 9);
  EXPECT_NEAR(FitAndScore(train, eval, 10, 300), 0.1, 0.015);
}

TEST(StandardizeTest, Affine) {
  Dataset d = Sequential(4, 1);
  Standardize(d, 1.0, 2.0);
  EXPECT_DOUBLE_EQ(d.features(0, 0), -0.5);
  EXPECT_DOUBLE_EQ(d.features(3, 0), 1.0);
  EXPECT_THROW(Standardize(d, 0, 0), std::invalid_argument);
}

}  // namespace
}  // namespace fedsmooth
