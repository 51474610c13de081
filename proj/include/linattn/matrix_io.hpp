// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "linattn/matrix.hpp"

namespace linattn {

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// One matrix row per line, comma separated, shortest round-trip decimals.
void write_matrix_csv(std::ostream& out, const Matrix& m);
std::string matrix_to_csv(const Matrix& m);

/// Parses the CSV form above. Blank lines and lines starting with '#' are
/// skipped. Throws ShapeError on ragged rows and DomainError on bad numbers.
Matrix read_matrix_csv(std::istream& in);
Matrix matrix_from_csv(std::string_view text);

/// Writes `contents` to a sibling temp file then renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace linattn
