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

#ifndef SHUFFLEDIST_REPORT_IO_HPP_
#define SHUFFLEDIST_REPORT_IO_HPP_

#include <iosfwd>
#include <string>

#include "shuffledist/randomizers.hpp"

namespace shuffledist {

// Line-oriented batch format. A header line
//   #shuffledist-batch kind=piecewise b=<b>
//   #shuffledist-batch kind=pure c=<c> per_user=<s+1>
//   #shuffledist-batch kind=flip c=<c> per_user=<s+1>
// is followed by one message per line: a real, an integer in [1, c], or a
// length-c string of '0'/'1'.
void WriteBatch(std::ostream& os, const ReportBatch& batch);
ReportBatch ReadBatch(std::istream& is);

void SaveBatch(const std::string& path, const ReportBatch& batch);
ReportBatch LoadBatch(const std::string& path);

}  // namespace shuffledist

#endif  // SHUFFLEDIST_REPORT_IO_HPP_
