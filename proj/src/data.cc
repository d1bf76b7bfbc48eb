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
#include "shuffledp/data.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "shuffledp/errors.h"

namespace shuffledp {
namespace data {
namespace {

// Reads the next header token, skipping whitespace and '#' comments.
// Position tracking feeds the ParseError offsets.
std::string NextToken(const std::string& bytes, size_t& pos) {
  while (pos < bytes.size()) {
    char c = bytes[pos];
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size()) {
    throw ParseError("unexpected end of PGM header", pos);
  }
  size_t start = pos;
  while (pos < bytes.size() &&
         !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
         bytes[pos] != '#') {
    ++pos;
  }
  return bytes.substr(start, pos - start);
}

uint64_t ParseHeaderInt(const std::string& bytes, size_t& pos,
                        const char* what) {
  size_t at = pos;
  std::string tok = NextToken(bytes, pos);
  try {
    size_t used = 0;
    long long v = std::stoll(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return static_cast<uint64_t>(v);
  } catch (const std::exception&) {
    throw ParseError(std::string("invalid PGM ") + what + " field '" + tok +
                         "'",
                     at);
  }
}

uint64_t RoundHalfEven(double x) {
  if (x < 0.0) return 0;
  double floor_x = std::floor(x);
  double frac = x - floor_x;
  if (frac > 0.5) return static_cast<uint64_t>(floor_x) + 1;
  if (frac < 0.5) return static_cast<uint64_t>(floor_x);
  uint64_t f = static_cast<uint64_t>(floor_x);
  return (f % 2 == 0) ? f : f + 1;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

GridDataset LoadGridFromPgm(const std::string& path, double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("LoadGridFromPgm: scale must be > 0");
  }
  std::string bytes = ReadFile(path);
  size_t pos = 0;
  std::string magic = NextToken(bytes, pos);
  bool binary;
  if (magic == "P5") {
    binary = true;
  } else if (magic == "P2") {
    binary = false;
  } else {
    throw ParseError("PGM magic must be P5 or P2, got '" + magic + "'", 0);
  }
  uint64_t width = ParseHeaderInt(bytes, pos, "width");
  uint64_t height = ParseHeaderInt(bytes, pos, "height");
  size_t maxval_at = pos;
  uint64_t maxval = ParseHeaderInt(bytes, pos, "maxval");
  if (maxval != 255) {
    throw ParseError("PGM maxval must be 255, got " + std::to_string(maxval),
                     maxval_at);
  }
  if (width == 0 || height == 0) {
    throw ParseError("PGM dimensions must be positive", 0);
  }

  GridDataset grid;
  grid.width = static_cast<uint32_t>(width);
  grid.height = static_cast<uint32_t>(height);
  size_t pixels = static_cast<size_t>(width) * height;
  grid.counts.reserve(pixels);

  if (binary) {
    // Exactly one whitespace byte separates the header from the payload.
    if (pos >= bytes.size() ||
        !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
      throw ParseError("missing separator before PGM payload", pos);
    }
    ++pos;
    if (bytes.size() - pos < pixels) {
      throw ParseError("truncated PGM payload: expected " +
                           std::to_string(pixels) + " bytes, have " +
                           std::to_string(bytes.size() - pos),
                       bytes.size());
    }
    for (size_t i = 0; i < pixels; ++i) {
      uint8_t lum = static_cast<uint8_t>(bytes[pos + i]);
      grid.counts.push_back(RoundHalfEven(scale * lum));
    }
  } else {
    for (size_t i = 0; i < pixels; ++i) {
      size_t at = pos;
      uint64_t lum = ParseHeaderInt(bytes, pos, "pixel");
      if (lum > 255) {
        throw ParseError("ASCII PGM pixel exceeds maxval", at);
      }
      grid.counts.push_back(RoundHalfEven(scale * static_cast<double>(lum)));
    }
  }
  grid.total_n = 0;
  for (uint64_t c : grid.counts) grid.total_n += c;
  return grid;
}

void WriteGridToPgm(const GridDataset& grid, const std::string& path,
                    double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("WriteGridToPgm: scale must be > 0");
  }
  if (grid.counts.size() !=
      static_cast<size_t>(grid.width) * grid.height) {
    throw FormatError("WriteGridToPgm: counts length does not match grid");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << grid.width << " " << grid.height << "\n255\n";
  for (uint64_t c : grid.counts) {
    double v = std::nearbyint(static_cast<double>(c) / scale);
    uint8_t pixel = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
    out.put(static_cast<char>(pixel));
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

void WriteEstimateToPgm(const estimation::HistogramEstimate& estimate,
                        uint32_t width, uint32_t height,
                        const std::string& path, double scale) {
  if (estimate.h_hat.size() != static_cast<size_t>(width) * height) {
    throw FormatError("WriteEstimateToPgm: estimate length does not match grid");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  double n = static_cast<double>(estimate.n);
  for (double h : estimate.h_hat) {
    double v = std::nearbyint(h * n / scale);
    uint8_t pixel = static_cast<uint8_t>(std::clamp(v, 0.0, 255.0));
    out.put(static_cast<char>(pixel));
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<double> PowerLawPmf(const PowerLawSpec& spec) {
  if (spec.domain_size == 0) {
    throw std::invalid_argument("PowerLawSpec: domain_size must be > 0");
  }
  if (!(spec.exponent > 0.0)) {
    throw std::invalid_argument("PowerLawSpec: exponent must be > 0");
  }
  double hh_mass = 0.0;
  for (const auto& [index, mass] : spec.heavy_hitters) {
    if (index >= spec.domain_size) {
      throw std::invalid_argument("PowerLawSpec: heavy hitter out of domain");
    }
    if (!(mass >= 0.0)) {
      throw std::invalid_argument("PowerLawSpec: heavy hitter mass < 0");
    }
    hh_mass += mass;
  }
  if (hh_mass > 1.0 + 1e-9) {
    throw std::invalid_argument("PowerLawSpec: heavy hitter mass exceeds 1");
  }
  hh_mass = std::min(hh_mass, 1.0);

  // Tail normalized over the finite domain; no infinite-sum approximation.
  std::vector<double> pmf(spec.domain_size, 0.0);
  double z = 0.0;
  for (uint64_t x = 0; x < spec.domain_size; ++x) {
    pmf[x] = std::pow(static_cast<double>(x + 1), -spec.exponent);
    z += pmf[x];
  }
  double tail_mass = 1.0 - hh_mass;
  for (double& p : pmf) p *= tail_mass / z;
  for (const auto& [index, mass] : spec.heavy_hitters) pmf[index] += mass;
  return pmf;
}

std::vector<uint64_t> SamplePowerLaw(const PowerLawSpec& spec, Rng& rng) {
  std::vector<double> pmf = PowerLawPmf(spec);
  std::vector<double> cdf(pmf.size());
  double acc = 0.0;
  for (size_t i = 0; i < pmf.size(); ++i) {
    acc += pmf[i];
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  std::vector<uint64_t> counts(pmf.size(), 0);
  for (uint64_t i = 0; i < spec.total_n; ++i) {
    double u = rng.UniformUnit();
    size_t idx = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
    if (idx >= counts.size()) idx = counts.size() - 1;
    ++counts[idx];
  }
  return counts;
}

void WriteCountsCsv(const std::vector<uint64_t>& counts,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "index,count\n";
  for (size_t i = 0; i < counts.size(); ++i) {
    out << i << "," << counts[i] << "\n";
  }
}

std::vector<uint64_t> LoadCountsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,count", 0) != 0) {
    throw ParseError("counts CSV must start with an 'index,count' header", 0);
  }
  std::vector<uint64_t> counts;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw ParseError("counts CSV line " + std::to_string(line_no) +
                           " has no comma",
                       0);
    }
    uint64_t index, count;
    try {
      index = std::stoull(line.substr(0, comma));
      count = std::stoull(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ParseError("counts CSV line " + std::to_string(line_no) +
                           " is not numeric",
                       0);
    }
    if (index != counts.size()) {
      throw ParseError("counts CSV indices must be consecutive from 0", 0);
    }
    counts.push_back(count);
  }
  return counts;
}

}  // namespace data
}  // namespace shuffledp
