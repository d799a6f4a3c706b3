#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

namespace gccakit::io {

/// Matrix container: "GCCA" magic, u16 format version, u16 dtype code
/// (1 = 64-bit float), u64 rows, u64 cols, all little-endian, then the
/// row-major payload. Paths ending in .csv use plain CSV (one row per
/// sample) written with 17 significant digits instead.
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// Atomic: writes to a temp file in the same directory, then renames.
void write_matrix(const Eigen::MatrixXd& matrix, const std::filesystem::path& path);

/// Atomic text write (temp file + rename).
void write_text_atomic(const std::string& content, const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);

}  // namespace gccakit::io
