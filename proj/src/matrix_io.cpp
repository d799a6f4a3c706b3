#include "gccakit/matrix_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "gccakit/errors.hpp"
#include "gccakit/util.hpp"

namespace gccakit::io {

namespace {

constexpr char kMagic[4] = {'G', 'C', 'C', 'A'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint16_t kDtypeFloat64 = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 2 + 8 + 8;
constexpr std::uint64_t kMaxElements = 1ULL << 32;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

double get_f64(const unsigned char* p) {
  const std::uint64_t bits = get_u64(p);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }

Eigen::MatrixXd read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.peek() == std::ifstream::traits_type::eof()) break;
    std::vector<double> row;
    std::size_t pos = 0;
    std::size_t col_no = 0;
    while (pos <= line.size()) {
      ++col_no;
      const std::size_t next = line.find(',', pos);
      const std::string cell =
          line.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || (end != nullptr && *end != '\0')) {
        throw IoError(path.string() + ": non-numeric cell at line " + std::to_string(line_no) +
                      ", column " + std::to_string(col_no));
      }
      row.push_back(v);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ": ragged row at line " + std::to_string(line_no));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

void write_csv(const Eigen::MatrixXd& matrix, const std::filesystem::path& path) {
  std::string out;
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += gccakit::format_double(matrix(r, c));
    }
    out.push_back('\n');
  }
  write_text_atomic(out, path);
}

}  // namespace

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  if (is_csv(path)) return read_csv(path);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) {
    throw IoError(path.string() + ": truncated header, " + std::to_string(bytes.size()) +
                  " bytes before byte " + std::to_string(kHeaderBytes));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kMagic, 4) != 0) {
    throw IoError(path.string() + ": bad magic at byte 0");
  }
  const std::uint16_t version = get_u16(p + 4);
  if (version != kVersion) {
    throw IoError(path.string() + ": unsupported format version " + std::to_string(version) +
                  " at byte 4");
  }
  const std::uint16_t dtype = get_u16(p + 6);
  if (dtype != kDtypeFloat64) {
    throw IoError(path.string() + ": unsupported dtype code " + std::to_string(dtype) +
                  " at byte 6");
  }
  const std::uint64_t rows = get_u64(p + 8);
  const std::uint64_t cols = get_u64(p + 16);
  if (cols != 0 && rows > kMaxElements / cols) {
    throw IoError(path.string() + ": implausible shape " + std::to_string(rows) + "x" +
                  std::to_string(cols));
  }
  const std::uint64_t expected = rows * cols * 8;
  if (bytes.size() - kHeaderBytes != expected) {
    throw IoError(path.string() + ": truncated payload at byte " + std::to_string(kHeaderBytes) +
                  ": expected " + std::to_string(expected) + " bytes, found " +
                  std::to_string(bytes.size() - kHeaderBytes));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* payload = p + kHeaderBytes;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = get_f64(payload);
      payload += 8;
    }
  }
  return m;
}

void write_matrix(const Eigen::MatrixXd& matrix, const std::filesystem::path& path) {
  if (is_csv(path)) {
    write_csv(matrix, path);
    return;
  }
  std::string out;
  out.reserve(kHeaderBytes + static_cast<std::size_t>(matrix.size()) * 8);
  out.append(kMagic, 4);
  put_u16(out, kVersion);
  put_u16(out, kDtypeFloat64);
  put_u64(out, static_cast<std::uint64_t>(matrix.rows()));
  put_u64(out, static_cast<std::uint64_t>(matrix.cols()));
  for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < matrix.cols(); ++c) put_f64(out, matrix(r, c));
  }
  write_text_atomic(out, path);
}

void write_text_atomic(const std::string& content, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace gccakit::io
