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

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "fedsmooth/rng.h"

namespace fedsmooth {
namespace {

uint32_t ReadBigEndian32(std::istream& in, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw IdxError(IdxErrorCode::kTruncated, path + ": truncated header");
  }
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) |
         (uint32_t{b[2]} << 8) | uint32_t{b[3]};
}

void WriteBigEndian32(std::ostream& out, uint32_t v) {
  const std::array<char, 4> b = {static_cast<char>(v >> 24),
                                 static_cast<char>(v >> 16),
                                 static_cast<char>(v >> 8),
                                 static_cast<char>(v)};
  out.write(b.data(), 4);
}

std::ifstream OpenOrThrow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxErrorCode::kOpenFailed, "cannot open " + path);
  return in;
}

void CheckMagic(uint32_t got, uint32_t want, const std::string& path) {
  if (got != want) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), ": magic 0x%08x, expected 0x%08x", got,
                  want);
    throw IdxError(IdxErrorCode::kBadMagic, path + buf);
  }
}

Partition ChunkRows(const std::vector<int64_t>& order, int64_t n_clients,
                    int64_t per_client, const Dataset& data) {
  Partition p;
  const auto used = static_cast<std::size_t>(n_clients * per_client);
  p.shards.reserve(static_cast<std::size_t>(n_clients));
  for (int64_t c = 0; c < n_clients; ++c) {
    std::vector<int64_t> rows(order.begin() + c * per_client,
                              order.begin() + (c + 1) * per_client);
    p.shards.push_back(ClientShard{c, Subset(data, rows)});
    p.shard_rows.push_back(std::move(rows));
  }
  p.leftover_rows.assign(order.begin() + static_cast<std::ptrdiff_t>(used),
                         order.end());
  return p;
}

std::vector<int64_t> CheckedPermutation(const Dataset& data, int64_t n_clients,
                                        int64_t per_client, uint64_t seed) {
  if (n_clients < 1 || per_client < 1) {
    throw std::invalid_argument("partition: n_clients and per_client must be >= 1");
  }
  if (n_clients * per_client > data.size()) {
    throw std::invalid_argument(
        "partition: " + std::to_string(n_clients) + " x " +
        std::to_string(per_client) + " exceeds " + std::to_string(data.size()) +
        " samples");
  }
  std::vector<int64_t> order(static_cast<std::size_t>(data.size()));
  std::iota(order.begin(), order.end(), int64_t{0});
  Rng rng(MixBits(seed));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace

Dataset LoadIdx(const std::string& images_path,
                const std::string& labels_path) {
  std::ifstream img = OpenOrThrow(images_path);
  std::ifstream lab = OpenOrThrow(labels_path);
  CheckMagic(ReadBigEndian32(img, images_path), kIdxImagesMagic, images_path);
  CheckMagic(ReadBigEndian32(lab, labels_path), kIdxLabelsMagic, labels_path);
  const uint32_t n_img = ReadBigEndian32(img, images_path);
  const uint32_t rows = ReadBigEndian32(img, images_path);
  const uint32_t cols = ReadBigEndian32(img, images_path);
  const uint32_t n_lab = ReadBigEndian32(lab, labels_path);
  if (n_img != n_lab) {
    throw IdxError(IdxErrorCode::kCountMismatch,
                   images_path + " holds " + std::to_string(n_img) +
                       " images but " + labels_path + " holds " +
                       std::to_string(n_lab) + " labels");
  }
  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> raw(std::size_t{n_img} * pixels);
  if (!img.read(reinterpret_cast<char*>(raw.data()),
                static_cast<std::streamsize>(raw.size()))) {
    throw IdxError(IdxErrorCode::kTruncated,
                   images_path + ": image payload truncated");
  }
  std::vector<unsigned char> raw_labels(n_lab);
  if (!lab.read(reinterpret_cast<char*>(raw_labels.data()),
                static_cast<std::streamsize>(raw_labels.size()))) {
    throw IdxError(IdxErrorCode::kTruncated,
                   labels_path + ": label payload truncated");
  }
  Dataset out;
  out.features.resize(n_img, static_cast<Eigen::Index>(pixels));
  double* dst = out.features.data();
  for (std::size_t k = 0; k < raw.size(); ++k) dst[k] = raw[k] / 255.0;
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  return out;
}

void WriteIdx(const Dataset& data, int64_t rows, int64_t cols,
              const std::string& images_path, const std::string& labels_path) {
  if (rows * cols != data.num_features()) {
    throw std::invalid_argument("WriteIdx: rows x cols != feature count");
  }
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) {
    throw IdxError(IdxErrorCode::kOpenFailed, "cannot write IDX output");
  }
  const auto n = static_cast<uint32_t>(data.size());
  WriteBigEndian32(img, kIdxImagesMagic);
  WriteBigEndian32(img, n);
  WriteBigEndian32(img, static_cast<uint32_t>(rows));
  WriteBigEndian32(img, static_cast<uint32_t>(cols));
  WriteBigEndian32(lab, kIdxLabelsMagic);
  WriteBigEndian32(lab, n);
  const double* src = data.features.data();
  const auto total = static_cast<std::size_t>(data.features.size());
  std::vector<char> bytes(total);
  for (std::size_t k = 0; k < total; ++k) {
    const double v = std::clamp(std::round(src[k] * 255.0), 0.0, 255.0);
    bytes[k] = static_cast<char>(static_cast<unsigned char>(v));
  }
  img.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  for (int32_t y : data.labels) lab.put(static_cast<char>(y));
}

Dataset Subset(const Dataset& data, const std::vector<int64_t>& rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      data.features.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) =
        data.features.row(rows[i]);
    out.labels[i] = data.labels[static_cast<std::size_t>(rows[i])];
  }
  return out;
}

Partition PartitionIid(const Dataset& data, int64_t n_clients,
                       int64_t per_client, uint64_t seed) {
  const std::vector<int64_t> order =
      CheckedPermutation(data, n_clients, per_client, seed);
  Partition p = ChunkRows(order, n_clients, per_client, data);
  p.scheme = PartitionScheme::kIid;
  p.seed = seed;
  return p;
}

Partition PartitionLabelSorted(const Dataset& data, int64_t n_clients,
                               int64_t per_client, uint64_t seed) {
  std::vector<int64_t> order =
      CheckedPermutation(data, n_clients, per_client, seed);
  const auto used = static_cast<std::ptrdiff_t>(n_clients * per_client);
  std::stable_sort(order.begin(), order.begin() + used,
                   [&](int64_t a, int64_t b) {
                     return data.labels[static_cast<std::size_t>(a)] <
                            data.labels[static_cast<std::size_t>(b)];
                   });
  Partition p = ChunkRows(order, n_clients, per_client, data);
  p.scheme = PartitionScheme::kLabelSorted;
  p.seed = seed;
  return p;
}

Dataset SynthClassification(int64_t n, int64_t dim, int64_t classes,
                            double separation, uint64_t seed) {
  if (n < 1 || dim < 1 || classes < 2) {
    throw std::invalid_argument(
        "SynthClassification: need n >= 1, dim >= 1, classes >= 2");
  }
  Rng rng(MixBits(seed));
  std::normal_distribution<double> gauss;
  RowMatrix means = RowMatrix::Zero(classes, dim);
  if (dim >= classes) {
    // Orthogonal axes: every pair of means is exactly `separation` apart.
    for (int64_t c = 0; c < classes; ++c) {
      means(c, c) = separation / std::sqrt(2.0);
    }
  } else {
    for (int64_t c = 0; c < classes; ++c) {
      for (int64_t k = 0; k < dim; ++k) means(c, k) = gauss(rng);
      const double norm = means.row(c).norm();
      means.row(c) *= (norm > 0 ? 0.5 * separation / norm : 0.0);
    }
  }
  std::vector<int32_t> labels(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    labels[static_cast<std::size_t>(i)] = static_cast<int32_t>(i % classes);
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  Dataset out;
  out.features.resize(n, dim);
  for (int64_t i = 0; i < n; ++i) {
    const int32_t y = labels[static_cast<std::size_t>(i)];
    for (int64_t k = 0; k < dim; ++k) {
      out.features(i, k) = means(y, k) + gauss(rng);
    }
  }
  out.labels = std::move(labels);
  return out;
}

void Standardize(Dataset& data, double mean, double stddev) {
  if (!(stddev > 0.0)) throw std::invalid_argument("stddev must be positive");
  data.features.array() = (data.features.array() - mean) / stddev;
}

}  // namespace fedsmooth
