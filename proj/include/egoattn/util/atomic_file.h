// Copyright 2026 The egoattn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EGOATTN_UTIL_ATOMIC_FILE_H_
#define EGOATTN_UTIL_ATOMIC_FILE_H_

#include <filesystem>
#include <stdexcept>
#include <string>

namespace egoattn {
namespace util {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Writes `contents` to a sibling temporary file and renames it over `path`,
// so readers see either the old file or the complete new one. Creates parent
// directories. Throws IoError on failure.
void WriteFileAtomic(const std::filesystem::path& path,
                     const std::string& contents);

// Whole file as a string. Throws IoError if it cannot be read.
std::string ReadFile(const std::filesystem::path& path);

}  // namespace util
}  // namespace egoattn

#endif  // EGOATTN_UTIL_ATOMIC_FILE_H_
