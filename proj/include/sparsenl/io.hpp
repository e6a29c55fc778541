#pragma once
#include <sparsenl/types.hpp>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace sparsenl::io {

// CSV: one observation per line, comma separated. A first line that does not
// parse as numbers is treated as a header.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const Matrix& M);

// Binary: "SPCT", u32 n, u32 p, then n*p little-endian f64 in row-major order.
Matrix read_matrix_binary(std::istream& in);
Matrix read_matrix_binary(const std::filesystem::path& path);
void write_matrix_binary(std::ostream& out, const Matrix& M);
void write_matrix_binary(const std::filesystem::path& path, const Matrix& M);

// Dispatches on the leading magic bytes.
Matrix read_matrix(const std::filesystem::path& path);

// Vector: JSON array, or CSV with a single value per line (optional header).
Vector read_vector(const std::filesystem::path& path);
Vector parse_vector(const std::string& text);

// %.17g, so values round-trip exactly.
std::string format_double(double x);

} // namespace sparsenl::io
