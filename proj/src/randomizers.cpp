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

#include "shuffledist/randomizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace shuffledist {

std::string_view ProtocolName(Protocol protocol) {
  switch (protocol) {
    case Protocol::kAsp: return "ASP";
    case Protocol::kSsw: return "SSW";
    case Protocol::kSwLdp: return "SW-LDP";
    case Protocol::kFlip: return "Flip";
    case Protocol::kPure: return "Pure";
  }
  return "?";
}

Protocol ParseProtocol(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (lower == "asp") return Protocol::kAsp;
  if (lower == "ssw") return Protocol::kSsw;
  if (lower == "sw-ldp" || lower == "sw_ldp" || lower == "swldp") return Protocol::kSwLdp;
  if (lower == "flip") return Protocol::kFlip;
  if (lower == "pure") return Protocol::kPure;
  throw Error(ErrorCode::kInvalidArgument, "unknown protocol '" + std::string(name) + "'");
}

PerturbParams PerturbParams::FromBandRatio(double b, double k) {
  if (!(b > 0) || !std::isfinite(b)) throw Error(ErrorCode::kParameter, "band half-width b must be > 0");
  if (!(k >= 1) || !std::isfinite(k)) throw Error(ErrorCode::kParameter, "density ratio k must be >= 1");
  PerturbParams params;
  params.b = b;
  params.k = k;
  params.q = 1.0 / (2 * b * k + 1);
  params.p = k * params.q;
  return params;
}

void PerturbParams::Validate() const {
  if (!(b > 0) || !(k >= 1) || !(q > 0) || !(p >= q)) {
    throw Error(ErrorCode::kParameter, "invalid piecewise parameters");
  }
  if (std::abs(2 * b * p + q - 1) > 1e-9) throw Error(ErrorCode::kParameter, "piecewise parameters do not conserve mass");
}

PerturbParams SwParams(double eps_l) {
  if (!(eps_l > 0) || !std::isfinite(eps_l)) throw Error(ErrorCode::kParameter, "eps_l must be > 0");
  const double e = std::exp(eps_l);
  // e - 1 - eps_l loses precision for small eps_l; expm1 keeps it.
  const double em1 = std::expm1(eps_l);
  const double b = (eps_l * e - em1) / (2 * e * (em1 - eps_l));
  PerturbParams params;
  params.b = b;
  params.k = e;
  params.p = e / (2 * b * e + 1);
  params.q = 1 / (2 * b * e + 1);
  return params;
}

double PiecewisePerturb(double x, const PerturbParams& params, RngStream& rng) {
  if (!(x >= 0 && x <= 1)) throw Error(ErrorCode::kDomain, "input " + std::to_string(x) + " outside [0, 1]");
  const double b = params.b;
  if (rng.Uniform() < params.band_mass()) return x - b + 2 * b * rng.Uniform();
  // The complement [-b, x - b) U (x + b, 1 + b] has total length 1.
  const double u = rng.Uniform();
  return u < x ? -b + u : x + b + (u - x);
}

void ScfoParams::Validate(Protocol protocol) const {
  if (c < 2) throw Error(ErrorCode::kParameter, "chunk count c must be >= 2");
  if (s < 0) throw Error(ErrorCode::kParameter, "dummy multiplicity s must be >= 0");
  if (protocol == Protocol::kFlip && !(q_flip >= 0 && q_flip <= 0.5)) {
    throw Error(ErrorCode::kParameter, "flip probability must lie in [0, 1/2]");
  }
}

std::size_t MessageCount(const ReportBatch& batch) {
  return std::visit([](const auto& b) { return b.size(); }, batch);
}

void ValidateBatch(const ReportBatch& batch) {
  std::visit(
      [](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, PiecewiseReports>) {
          for (std::size_t i = 0; i < b.values.size(); ++i) {
            const double v = b.values[i];
            if (!(v >= -b.b && v <= 1 + b.b)) {
              throw Error(ErrorCode::kBatch, "report " + std::to_string(i) + " = " + std::to_string(v) +
                                                 " outside [-b, 1+b]");
            }
          }
        } else if constexpr (std::is_same_v<T, PureReports>) {
          for (std::size_t i = 0; i < b.values.size(); ++i) {
            if (b.values[i] < 1 || b.values[i] > static_cast<std::uint32_t>(b.c)) {
              throw Error(ErrorCode::kBatch, "report " + std::to_string(i) + " outside [1, c]");
            }
          }
        } else {
          if (b.words.size() % static_cast<std::size_t>(b.words_per_message()) != 0) {
            throw Error(ErrorCode::kBatch, "flip batch has a truncated message");
          }
          const int tail = b.c % 64;
          if (tail != 0) {
            const std::uint64_t mask = ~((std::uint64_t{1} << tail) - 1);
            for (std::size_t i = 0; i < b.size(); ++i) {
              if (b.words[(i + 1) * b.words_per_message() - 1] & mask) {
                throw Error(ErrorCode::kBatch, "report " + std::to_string(i) + " has bits beyond c");
              }
            }
          }
        }
      },
      batch);
}

namespace {

void CheckBin(int bin, int c) {
  if (bin < 0 || bin >= c) throw Error(ErrorCode::kDomain, "bin " + std::to_string(bin) + " outside [0, c)");
}

void AppendFlipUser(int bin, const ScfoParams& sc, RngStream& rng, FlipReports& out) {
  for (int v = 0; v <= sc.s; ++v) {
    const std::size_t msg = out.add_message();
    for (int j = 0; j < sc.c; ++j) {
      const bool one = (v == 0 && j == bin);
      if (one != rng.Bernoulli(sc.q_flip)) out.set_bit(msg, j);
    }
  }
}

void AppendPureUser(int bin, const ScfoParams& sc, RngStream& rng, std::vector<std::uint32_t>& out) {
  out.push_back(static_cast<std::uint32_t>(bin + 1));
  for (int v = 0; v < sc.s; ++v) out.push_back(static_cast<std::uint32_t>(rng.UniformInt(1, sc.c)));
}

template <typename PerUser>
void ForEachUserBlock(std::size_t n, const RngStream& rng, PerUser&& per_user) {
  for (std::size_t start = 0, block = 0; start < n; start += kUserBlock, ++block) {
    RngStream stream = rng.Child(block);
    const std::size_t stop = std::min(n, start + kUserBlock);
    for (std::size_t i = start; i < stop; ++i) per_user(i, stream);
  }
}

}  // namespace

FlipReports FlipEncode(int bin, const ScfoParams& sc, RngStream& rng) {
  sc.Validate(Protocol::kFlip);
  CheckBin(bin, sc.c);
  FlipReports out{sc.c, sc.messages_per_user(), {}};
  AppendFlipUser(bin, sc, rng, out);
  return out;
}

std::vector<std::uint32_t> PureEncode(int bin, const ScfoParams& sc, RngStream& rng) {
  sc.Validate(Protocol::kPure);
  CheckBin(bin, sc.c);
  std::vector<std::uint32_t> out;
  out.reserve(sc.s + 1);
  AppendPureUser(bin, sc, rng, out);
  return out;
}

PiecewiseReports RandomizePiecewise(const Dataset& data, const PerturbParams& params, const RngStream& rng) {
  params.Validate();
  PiecewiseReports out{params.b, std::vector<double>(data.n())};
  ForEachUserBlock(data.n(), rng,
                   [&](std::size_t i, RngStream& s) { out.values[i] = PiecewisePerturb(data.values[i], params, s); });
  return out;
}

FlipReports RandomizeFlip(const Dataset& data, const ScfoParams& sc, const RngStream& rng) {
  sc.Validate(Protocol::kFlip);
  FlipReports out{sc.c, sc.messages_per_user(), {}};
  out.words.reserve(data.n() * sc.messages_per_user() * out.words_per_message());
  ForEachUserBlock(data.n(), rng,
                   [&](std::size_t i, RngStream& s) { AppendFlipUser(BinIndex(data.values[i], sc.c), sc, s, out); });
  return out;
}

PureReports RandomizePure(const Dataset& data, const ScfoParams& sc, const RngStream& rng) {
  sc.Validate(Protocol::kPure);
  PureReports out{sc.c, sc.messages_per_user(), {}};
  out.values.reserve(data.n() * sc.messages_per_user());
  ForEachUserBlock(data.n(), rng,
                   [&](std::size_t i, RngStream& s) { AppendPureUser(BinIndex(data.values[i], sc.c), sc, s, out.values); });
  return out;
}

ReportBatch Shuffle(ReportBatch batch, RngStream& rng) {
  std::visit(
      [&rng](auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, FlipReports>) {
          const std::size_t count = b.size();
          const int w = b.words_per_message();
          std::vector<std::size_t> order(count);
          std::iota(order.begin(), order.end(), std::size_t{0});
          std::shuffle(order.begin(), order.end(), rng);
          std::vector<std::uint64_t> words(b.words.size());
          for (std::size_t i = 0; i < count; ++i) {
            std::copy_n(b.words.begin() + order[i] * w, w, words.begin() + i * w);
          }
          b.words = std::move(words);
        } else {
          std::shuffle(b.values.begin(), b.values.end(), rng);
        }
      },
      batch);
  return batch;
}

}  // namespace shuffledist
