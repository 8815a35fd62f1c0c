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

#ifndef FEDSMOOTH_DATA_H_
#define FEDSMOOTH_DATA_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedsmooth/types.h"

namespace fedsmooth {

enum class IdxErrorCode {
  kOpenFailed,
  kBadMagic,
  kTruncated,
  kCountMismatch,
};

class IdxError : public std::runtime_error {
 public:
  IdxError(IdxErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  IdxErrorCode code() const { return code_; }

 private:
  IdxErrorCode code_;
};

inline constexpr uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr uint32_t kIdxLabelsMagic = 0x00000801;

// Reads an IDX image/label pair. Pixels are scaled to [0, 1]. Throws
// IdxError with a code that identifies the failure.
Dataset LoadIdx(const std::string& images_path,
                const std::string& labels_path);

// Writes `data` as an IDX pair with rows x cols images. Features are
// mapped back to bytes by round(255 x), clamped to [0, 255].
void WriteIdx(const Dataset& data, int64_t rows, int64_t cols,
              const std::string& images_path, const std::string& labels_path);

// Subset of rows in the given order.
Dataset Subset(const Dataset& data, const std::vector<int64_t>& rows);

struct ClientShard {
  int64_t client_id = 0;
  Dataset data;
};

enum class PartitionScheme { kIid, kLabelSorted };

struct Partition {
  PartitionScheme scheme = PartitionScheme::kIid;
  uint64_t seed = 0;
  std::vector<ClientShard> shards;
  // Source row indices per shard, parallel to `shards`.
  std::vector<std::vector<int64_t>> shard_rows;
  // Rows not assigned to any client.
  std::vector<int64_t> leftover_rows;
};

// Random permutation, then contiguous chunks of `per_client` rows. Rows past
// n_clients * per_client are left over (typically used for validation).
// Throws std::invalid_argument if there are not enough samples.
Partition PartitionIid(const Dataset& data, int64_t n_clients,
                       int64_t per_client, uint64_t seed);

// Same split sizes, but the permuted rows are stably sorted by label before
// chunking, so each client sees one or two classes.
Partition PartitionLabelSorted(const Dataset& data, int64_t n_clients,
                               int64_t per_client, uint64_t seed);

// Gaussian class clusters in `dim` dimensions with unit within-class
// variance per coordinate. When dim >= classes the class means sit on
// orthogonal axes, pairwise `separation` apart; otherwise they are random
// directions of norm separation / 2. Labels are balanced
// round robin before shuffling.
Dataset SynthClassification(int64_t n, int64_t dim, int64_t classes,
                            double separation, uint64_t seed);

// In-place affine map x -> (x - mean) / stddev applied to every feature.
void Standardize(Dataset& data, double mean, double stddev);

}  // namespace fedsmooth

#endif  // FEDSMOOTH_DATA_H_
