#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

namespace spikefisher {

// Test function f for linear spectral statistics. Built-in kinds evaluate on
// complex arguments (needed by the contour methods); custom ones are real-only.
struct SpectralFn {
  enum class Kind { x, log, log1p_scaled, custom };

  Kind kind = Kind::x;
  double kappa = 0.0;
  std::function<double(double)> fn;

  static SpectralFn x() { return {Kind::x, 0.0, {}}; }
  static SpectralFn log() { return {Kind::log, 0.0, {}}; }
  static SpectralFn log1p_scaled(double kappa) { return {Kind::log1p_scaled, kappa, {}}; }
  static SpectralFn custom(std::function<double(double)> f) {
    return {Kind::custom, 0.0, std::move(f)};
  }

  double operator()(double v) const {
    switch (kind) {
      case Kind::x:
        return v;
      case Kind::log:
        if (!(v > 0.0)) throw std::domain_error("SpectralFn: log of non-positive value");
        return std::log(v);
      case Kind::log1p_scaled:
        if (!(1.0 + kappa * v > 0.0))
          throw std::domain_error("SpectralFn: log1p argument non-positive");
        return std::log1p(kappa * v);
      case Kind::custom:
        return fn(v);
    }
    throw std::logic_error("SpectralFn: unknown kind");
  }

  std::complex<double> eval(std::complex<double> v) const {
    switch (kind) {
      case Kind::x:
        return v;
      case Kind::log:
        return std::log(v);
      case Kind::log1p_scaled:
        return std::log(1.0 + kappa * v);
      case Kind::custom:
        throw std::invalid_argument("SpectralFn: custom functions are not analytic inputs");
    }
    throw std::logic_error("SpectralFn: unknown kind");
  }

  bool analytic() const { return kind != Kind::custom; }

  std::string name() const {
    switch (kind) {
      case Kind::x:
        return "x";
      case Kind::log:
        return "log";
      case Kind::log1p_scaled:
        return "log1p:" + std::to_string(kappa);
      case Kind::custom:
        return "custom";
    }
    return "?";
  }
};

}  // namespace spikefisher
