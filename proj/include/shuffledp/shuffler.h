// Copyright 2025 The shuffledp Authors
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
//
// Simulated anonymization intermediary. An instance hosts reporting
// channels; each channel buffers opaque reports and releases them either as
// a uniformly shuffled list or as a coordinate-wise sum, with all respondent
// metadata stripped. Also implements randomized report deletion for
// crowd-size thresholding.
#ifndef SHUFFLEDP_SHUFFLER_H_
#define SHUFFLEDP_SHUFFLER_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "shuffledp/random.h"

namespace shuffledp {
namespace shuffler {

// Opaque report payload. In-process the string carries its own length; on a
// wire these would be length-prefixed byte strings.
using Payload = std::string;

class ShufflerInstance {
 public:
  explicit ShufflerInstance(uint32_t id) : id_(id) {}

  uint32_t id() const { return id_; }

  void DeclareChannel(uint32_t channel);
  bool HasChannel(uint32_t channel) const;

  // Buffers a report. The respondent id is retained only until release and
  // never appears in any output. Throws RoutingError for undeclared channels.
  void Ingest(uint32_t channel, Payload report, uint64_t respondent);

  size_t BufferedCount(uint32_t channel) const;

  // Releases the channel's buffer as a uniformly random permutation and
  // clears it. Throws EmptyReleaseError on an empty channel.
  std::vector<Payload> ReleaseShuffled(uint32_t channel, Rng& rng);

  // Releases the channel's buffer as a coordinate-wise sum of bit reports
  // (every payload must be a byte vector of 0/1 values of identical length)
  // and clears it. Equivalent to post-processing ReleaseShuffled.
  std::vector<uint64_t> ReleaseSummed(uint32_t channel);

 private:
  struct Buffered {
    Payload payload;
    uint64_t respondent;
  };

  uint32_t id_;
  std::map<uint32_t, std::vector<Buffered>> channels_;
};

// One crowd's buffered reports, keyed by its public crowd id.
struct CrowdPartition {
  uint64_t crowd_id = 0;
  std::vector<Payload> reports;
};

struct CrowdConfig {
  double epsilon_cr = 0.0;
  double delta_cr = 0.0;
};

struct DeletionOutcome {
  // Abort is a distinguished outcome of the mechanism, not a failure. When
  // set, no partition is released at all.
  bool aborted = false;
  std::vector<CrowdPartition> partitions;
};

// Randomized report deletion: per crowd draws
//   n_hat = max(n + Laplace(2/eps) - (2/eps)*log(2/delta), 0)
// and removes ceil(n - n_hat) uniformly chosen reports, or aborts the whole
// batch if any n_hat exceeds its n. Released counts are (eps, delta)-DP.
DeletionOutcome RandomizedReportDeletion(std::vector<CrowdPartition> partitions,
                                         const CrowdConfig& config, Rng& rng);

}  // namespace shuffler
}  // namespace shuffledp

#endif  // SHUFFLEDP_SHUFFLER_H_
