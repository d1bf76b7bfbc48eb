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
#include "shuffledp/shuffler.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shuffledp/errors.h"

namespace shuffledp {
namespace shuffler {

void ShufflerInstance::DeclareChannel(uint32_t channel) {
  channels_.try_emplace(channel);
}

bool ShufflerInstance::HasChannel(uint32_t channel) const {
  return channels_.count(channel) > 0;
}

void ShufflerInstance::Ingest(uint32_t channel, Payload report,
                              uint64_t respondent) {
  auto it = channels_.find(channel);
  if (it == channels_.end()) {
    throw RoutingError("Ingest: channel " + std::to_string(channel) +
                       " not declared on instance " + std::to_string(id_));
  }
  it->second.push_back(Buffered{std::move(report), respondent});
}

size_t ShufflerInstance::BufferedCount(uint32_t channel) const {
  auto it = channels_.find(channel);
  if (it == channels_.end()) {
    throw RoutingError("BufferedCount: channel not declared");
  }
  return it->second.size();
}

std::vector<Payload> ShufflerInstance::ReleaseShuffled(uint32_t channel,
                                                       Rng& rng) {
  auto it = channels_.find(channel);
  if (it == channels_.end()) {
    throw RoutingError("ReleaseShuffled: channel not declared");
  }
  if (it->second.empty()) {
    throw EmptyReleaseError("ReleaseShuffled: channel holds no reports");
  }
  // Strip respondent ids, then Fisher-Yates.
  std::vector<Payload> out;
  out.reserve(it->second.size());
  for (Buffered& b : it->second) out.push_back(std::move(b.payload));
  it->second.clear();
  for (size_t i = out.size(); i > 1; --i) {
    size_t j = rng.UniformInt(i);
    std::swap(out[i - 1], out[j]);
  }
  return out;
}

std::vector<uint64_t> ShufflerInstance::ReleaseSummed(uint32_t channel) {
  auto it = channels_.find(channel);
  if (it == channels_.end()) {
    throw RoutingError("ReleaseSummed: channel not declared");
  }
  if (it->second.empty()) {
    throw EmptyReleaseError("ReleaseSummed: channel holds no reports");
  }
  size_t arity = it->second.front().payload.size();
  std::vector<uint64_t> sums(arity, 0);
  for (const Buffered& b : it->second) {
    if (b.payload.size() != arity) {
      throw FormatError("ReleaseSummed: mixed report arity on channel " +
                        std::to_string(channel));
    }
    for (size_t i = 0; i < arity; ++i) {
      uint8_t bit = static_cast<uint8_t>(b.payload[i]);
      if (bit > 1) {
        throw FormatError("ReleaseSummed: payload byte is not a bit");
      }
      sums[i] += bit;
    }
  }
  it->second.clear();
  return sums;
}

DeletionOutcome RandomizedReportDeletion(std::vector<CrowdPartition> partitions,
                                         const CrowdConfig& config, Rng& rng) {
  if (!(config.epsilon_cr > 0.0) || !(config.delta_cr > 0.0)) {
    throw std::invalid_argument(
        "RandomizedReportDeletion: privacy parameters must be positive");
  }
  double scale = 2.0 / config.epsilon_cr;
  double shift = scale * std::log(2.0 / config.delta_cr);

  // Decide every crowd's noisy count before touching any buffer: an abort
  // anywhere suppresses the entire batch.
  std::vector<uint64_t> deletions(partitions.size(), 0);
  for (size_t i = 0; i < partitions.size(); ++i) {
    double n = static_cast<double>(partitions[i].reports.size());
    double n_hat = std::max(n + rng.Laplace(scale) - shift, 0.0);
    if (n_hat > n) {
      return DeletionOutcome{true, {}};
    }
    deletions[i] = static_cast<uint64_t>(std::ceil(n - n_hat));
    if (deletions[i] > partitions[i].reports.size()) {
      deletions[i] = partitions[i].reports.size();
    }
  }
  for (size_t i = 0; i < partitions.size(); ++i) {
    auto& reports = partitions[i].reports;
    // Partial Fisher-Yates: move a uniform victim to the back, then drop it.
    for (uint64_t d = 0; d < deletions[i]; ++d) {
      size_t j = rng.UniformInt(reports.size());
      std::swap(reports[j], reports.back());
      reports.pop_back();
    }
  }
  return DeletionOutcome{false, std::move(partitions)};
}

}  // namespace shuffler
}  // namespace shuffledp
