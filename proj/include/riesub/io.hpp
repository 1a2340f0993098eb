#pragma once

#include <string>

#include "riesub/manifold.hpp"

namespace riesub {

// Shortest-safe text for a double: 17 significant digits.
std::string format_double(double x);

std::string matrix_to_csv(const Matrix& M);
Matrix matrix_from_csv(const std::string& text);

void write_matrix_csv(const std::string& path, const Matrix& M);
Matrix read_matrix_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace riesub
