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

#include "shuffledist/report_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace shuffledist {
namespace {

constexpr std::string_view kMagic = "#shuffledist-batch";

std::string FormatReal(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::map<std::string, std::string> ParseHeader(const std::string& line) {
  std::istringstream in(line);
  std::string word;
  in >> word;
  if (word != kMagic) throw Error(ErrorCode::kBatch, "missing batch header");
  std::map<std::string, std::string> fields;
  while (in >> word) {
    const auto eq = word.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kBatch, "malformed header field '" + word + "'");
    fields[word.substr(0, eq)] = word.substr(eq + 1);
  }
  return fields;
}

template <typename T>
T Field(const std::map<std::string, std::string>& fields, const std::string& key) {
  const auto it = fields.find(key);
  if (it == fields.end()) throw Error(ErrorCode::kBatch, "batch header lacks '" + key + "'");
  T value{};
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kBatch, "bad header value " + key + "=" + s);
  }
  return value;
}

Error LineError(std::size_t line, const std::string& what) {
  return Error(ErrorCode::kBatch, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

void WriteBatch(std::ostream& os, const ReportBatch& batch) {
  std::visit(
      [&os](const auto& b) {
        using T = std::decay_t<decltype(b)>;
        if constexpr (std::is_same_v<T, PiecewiseReports>) {
          os << kMagic << " kind=piecewise b=" << FormatReal(b.b) << '\n';
          for (double v : b.values) os << FormatReal(v) << '\n';
        } else if constexpr (std::is_same_v<T, PureReports>) {
          os << kMagic << " kind=pure c=" << b.c << " per_user=" << b.messages_per_user << '\n';
          for (auto v : b.values) os << v << '\n';
        } else {
          os << kMagic << " kind=flip c=" << b.c << " per_user=" << b.messages_per_user << '\n';
          std::string bits(b.c, '0');
          for (std::size_t i = 0; i < b.size(); ++i) {
            for (int j = 0; j < b.c; ++j) bits[j] = b.bit(i, j) ? '1' : '0';
            os << bits << '\n';
          }
        }
      },
      batch);
}

ReportBatch ReadBatch(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(ErrorCode::kBatch, "empty batch stream");
  const auto fields = ParseHeader(line);
  const auto kind_it = fields.find("kind");
  if (kind_it == fields.end()) throw Error(ErrorCode::kBatch, "batch header lacks 'kind'");
  const std::string& kind = kind_it->second;

  std::size_t lineno = 1;
  ReportBatch batch;
  if (kind == "piecewise") {
    PiecewiseReports out{Field<double>(fields, "b"), {}};
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      double v = 0;
      const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc() || ptr != line.data() + line.size()) throw LineError(lineno, "not a real: " + line);
      out.values.push_back(v);
    }
    batch = std::move(out);
  } else if (kind == "pure") {
    PureReports out{Field<int>(fields, "c"), Field<int>(fields, "per_user"), {}};
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::uint32_t v = 0;
      const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
      if (ec != std::errc() || ptr != line.data() + line.size()) throw LineError(lineno, "not an integer: " + line);
      out.values.push_back(v);
    }
    batch = std::move(out);
  } else if (kind == "flip") {
    FlipReports out{Field<int>(fields, "c"), Field<int>(fields, "per_user"), {}};
    if (out.c < 1) throw Error(ErrorCode::kBatch, "flip batch needs c >= 1");
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (line.size() != static_cast<std::size_t>(out.c)) throw LineError(lineno, "bitstring length differs from c");
      const std::size_t msg = out.add_message();
      for (int j = 0; j < out.c; ++j) {
        if (line[j] == '1') {
          out.set_bit(msg, j);
        } else if (line[j] != '0') {
          throw LineError(lineno, "bitstring contains '" + std::string(1, line[j]) + "'");
        }
      }
    }
    batch = std::move(out);
  } else {
    throw Error(ErrorCode::kBatch, "unknown batch kind '" + kind + "'");
  }
  ValidateBatch(batch);
  return batch;
}

void SaveBatch(const std::string& path, const ReportBatch& batch) {
  std::ofstream os(path);
  if (!os) throw Error(ErrorCode::kIo, "cannot write " + path);
  WriteBatch(os, batch);
  if (!os) throw Error(ErrorCode::kIo, "write failed for " + path);
}

ReportBatch LoadBatch(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path);
  return ReadBatch(is);
}

}  // namespace shuffledist
