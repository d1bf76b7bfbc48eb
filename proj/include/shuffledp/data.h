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
// Dataset ingestion and synthesis. Grayscale PGM images are interpreted as
// respondent-count grids (one respondent per unit of luminosity, optionally
// scaled); a power-law generator synthesizes heavy-hitter distributions.
#ifndef SHUFFLEDP_DATA_H_
#define SHUFFLEDP_DATA_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "shuffledp/estimation.h"
#include "shuffledp/random.h"

namespace shuffledp {
namespace data {

struct GridDataset {
  uint32_t width = 0;
  uint32_t height = 0;
  std::vector<uint64_t> counts;  // respondents per cell, row-major
  uint64_t total_n = 0;

  uint64_t domain_size() const { return counts.size(); }
};

// Parses a binary (P5) or ASCII (P2) PGM with maxval 255 and scales each
// luminosity by `scale`, rounding half to even. Malformed input raises
// ParseError with the offending byte offset.
GridDataset LoadGridFromPgm(const std::string& path, double scale);

// Writes a binary PGM, clamping round(count/scale) into [0, 255]. The
// round-trip through LoadGridFromPgm is byte-exact at scale 1.
void WriteGridToPgm(const GridDataset& grid, const std::string& path,
                    double scale);

// Renders a frequency estimate over a width x height grid: each cell gets
// clamp(round(h_j * n / scale), 0, 255). Negative estimates clamp to 0.
void WriteEstimateToPgm(const estimation::HistogramEstimate& estimate,
                        uint32_t width, uint32_t height,
                        const std::string& path, double scale);

struct PowerLawSpec {
  uint64_t domain_size = 1;
  double exponent = 1.35;
  // Extra probability mass placed on specific elements; the power-law tail
  // is normalized over the whole domain to the remaining mass so everything
  // sums to one.
  std::vector<std::pair<uint64_t, double>> heavy_hitters;
  uint64_t total_n = 0;
};

// The exact mixture pmf the sampler draws from.
std::vector<double> PowerLawPmf(const PowerLawSpec& spec);

// total_n iid draws from the mixture, returned as per-element counts.
std::vector<uint64_t> SamplePowerLaw(const PowerLawSpec& spec, Rng& rng);

// "index,count" with a one-line header.
void WriteCountsCsv(const std::vector<uint64_t>& counts,
                    const std::string& path);
std::vector<uint64_t> LoadCountsCsv(const std::string& path);

}  // namespace data
}  // namespace shuffledp

#endif  // SHUFFLEDP_DATA_H_
