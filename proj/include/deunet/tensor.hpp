#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace deunet {

/// Dense row-major matrix of doubles.
struct Tensor2D {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor2D() = default;
  Tensor2D(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, fill) {
    if (r < 0 || c < 0) throw std::invalid_argument("tensor-shape: negative dimension");
  }

  double& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  double* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row(int r) const {
    return data.data() + static_cast<std::size_t>(r) * cols;
  }

  bool same_shape(const Tensor2D& o) const {
    return rows == o.rows && cols == o.cols;
  }

  std::size_t size() const { return data.size(); }
};

inline void require_shape(const Tensor2D& t, int rows, int cols, const char* what) {
  if (t.rows != rows || t.cols != cols) {
    throw std::invalid_argument(std::string("shape-mismatch: ") + what + ": expected " +
                                std::to_string(rows) + "x" + std::to_string(cols) +
                                ", got " + std::to_string(t.rows) + "x" +
                                std::to_string(t.cols));
  }
}

}  // namespace deunet
