// Copyright 2026 The phop Authors
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

#ifndef PHOP_IO_HPP
#define PHOP_IO_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace phop {

/// Missing, corrupt or undeclared run artifacts.
class ArtifactError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Lowercase hex SHA-256 of a byte string or a file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Write through a temporary sibling and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

/// Shortest round-tripping decimal form.
std::string fmt_double(double x);

/// UTC, ISO 8601, second resolution.
std::string utc_timestamp();

/// Little-endian packing of doubles.
void append_le(std::string& out, std::span<const double> values);
std::vector<double> parse_le_doubles(std::string_view bytes);

/// Comma-separated rows with a header, no quoting (fields never contain
/// commas).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;
};

CsvTable parse_csv(std::string_view text);

}  // namespace phop

#endif  // PHOP_IO_HPP
