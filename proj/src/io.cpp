#include "csmusic/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <stdexcept>
#include <system_error>

namespace csmusic::io {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // Prefer the shorter form when it round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string matrix_csv(const Matrix& m) {
  std::string out;
  out.reserve(static_cast<size_t>(m.size()) * 12 + 16);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  write_text_atomic(path, matrix_csv(m));
}

void write_pgm(const std::filesystem::path& path, const Matrix& values,
               double lo, double hi) {
  if (hi <= lo) throw std::invalid_argument("write_pgm: need hi > lo");
  std::string out = "P2\n" + std::to_string(values.cols()) + " " +
                    std::to_string(values.rows()) + "\n255\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      double v = std::clamp(values(i, j), lo, hi);
      int g = static_cast<int>(std::lround((v - lo) / (hi - lo) * 255.0));
      if (j > 0) out += ' ';
      out += std::to_string(g);
    }
    out += '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace csmusic::io
