#pragma once

#include <stdexcept>
#include <string>

namespace acimlab {

/// Malformed configuration, unknown preset, or out-of-range parameter.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adaptive quadrature exhausted its interval-splitting budget.
class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, std::size_t cell)
      : std::runtime_error(what + " (cell " + std::to_string(cell) + ")"),
        cell_(cell) {}

  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

inline void require_unit_interval(double x, const char* where) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw std::domain_error(std::string(where) + ": argument " +
                            std::to_string(x) + " outside [0,1]");
  }
}

}  // namespace acimlab
