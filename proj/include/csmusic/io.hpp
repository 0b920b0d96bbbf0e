#pragma once

#include <filesystem>
#include <string>

#include "csmusic/linalg.hpp"

namespace csmusic::io {

// Formats a double so it round-trips exactly (shortest %.17g form).
std::string format_double(double v);

// Writes via a sibling temp file + rename so readers never see partial output.
void write_text_atomic(const std::filesystem::path& path,
                       const std::string& content);

// Dense matrix as comma-separated rows, one row per line.
std::string matrix_csv(const Matrix& m);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

// ASCII (P2) PGM. Values are clamped to [lo, hi] and mapped to 0..255.
void write_pgm(const std::filesystem::path& path, const Matrix& values,
               double lo, double hi);

}  // namespace csmusic::io
