// Copyright 2026 The shuffledist Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SHUFFLEDIST_RANDOMIZERS_HPP_
#define SHUFFLEDIST_RANDOMIZERS_HPP_

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shuffledist/histogram.hpp"
#include "shuffledist/rng.hpp"

namespace shuffledist {

enum class Protocol { kAsp, kSsw, kSwLdp, kFlip, kPure };

std::string_view ProtocolName(Protocol protocol);
Protocol ParseProtocol(std::string_view name);
inline bool IsPiecewise(Protocol p) { return p == Protocol::kAsp || p == Protocol::kSsw || p == Protocol::kSwLdp; }

// Piecewise (square-wave) randomizer: density p within b of the input and q
// elsewhere on [-b, 1 + b], with p = k q.
struct PerturbParams {
  double b = 0;
  double k = 1;
  double p = 1;
  double q = 1;

  // k = 1 is the uninformative channel and is accepted as a limit case.
  static PerturbParams FromBandRatio(double b, double k);

  double out_lo() const { return -b; }
  double out_hi() const { return 1 + b; }
  double out_width() const { return 1 + 2 * b; }
  // Probability of reporting inside the band.
  double band_mass() const { return 2 * b * p; }

  void Validate() const;

  friend bool operator==(const PerturbParams&, const PerturbParams&) = default;
};

// Square-wave parameters achieving eps_l-LDP: k = e^eps_l and the
// mutual-information-optimal band half-width.
PerturbParams SwParams(double eps_l);

double PiecewisePerturb(double x, const PerturbParams& params, RngStream& rng);

// Parameters of the two categorical shuffle protocols over c chunks.
struct ScfoParams {
  int c = 2;
  int s = 1;
  double q_flip = 0;  // unused by Pure

  int messages_per_user() const { return s + 1; }
  void Validate(Protocol protocol) const;

  friend bool operator==(const ScfoParams&, const ScfoParams&) = default;
};

// Reports of the piecewise protocols: one real per user.
struct PiecewiseReports {
  double b = 0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

// Pure reports: values in [1, c], s + 1 per user.
struct PureReports {
  int c = 2;
  int messages_per_user = 1;
  std::vector<std::uint32_t> values;

  std::size_t size() const { return values.size(); }
};

// Flip reports: length-c bit vectors packed into 64-bit words, s + 1 per user.
struct FlipReports {
  int c = 2;
  int messages_per_user = 1;
  std::vector<std::uint64_t> words;

  int words_per_message() const { return (c + 63) / 64; }
  std::size_t size() const { return words.size() / static_cast<std::size_t>(words_per_message()); }
  bool bit(std::size_t message, int j) const {
    return (words[message * words_per_message() + j / 64] >> (j % 64)) & 1u;
  }
  void set_bit(std::size_t message, int j) {
    words[message * words_per_message() + j / 64] |= std::uint64_t{1} << (j % 64);
  }
  // Appends an all-zero message and returns its index.
  std::size_t add_message() {
    words.resize(words.size() + words_per_message(), 0);
    return size() - 1;
  }
  void Append(const FlipReports& other) { words.insert(words.end(), other.words.begin(), other.words.end()); }
};

using ReportBatch = std::variant<PiecewiseReports, PureReports, FlipReports>;

std::size_t MessageCount(const ReportBatch& batch);

// Range checks shared by honest and crafted batches.
void ValidateBatch(const ReportBatch& batch);

// One-hot vector of `bin` plus s all-zero dummy vectors, every bit flipped
// with probability q_flip.
FlipReports FlipEncode(int bin, const ScfoParams& sc, RngStream& rng);

// The true bin (as bin + 1) followed by s uniform dummies on [1, c].
std::vector<std::uint32_t> PureEncode(int bin, const ScfoParams& sc, RngStream& rng);

// Whole-population randomization. Users are processed in fixed blocks, each
// block drawing from rng.Child(block index), so results do not depend on
// evaluation order.
inline constexpr std::size_t kUserBlock = 4096;
PiecewiseReports RandomizePiecewise(const Dataset& data, const PerturbParams& params, const RngStream& rng);
FlipReports RandomizeFlip(const Dataset& data, const ScfoParams& sc, const RngStream& rng);
PureReports RandomizePure(const Dataset& data, const ScfoParams& sc, const RngStream& rng);

// Uniformly random permutation of the flat message multiset.
ReportBatch Shuffle(ReportBatch batch, RngStream& rng);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_RANDOMIZERS_HPP_
