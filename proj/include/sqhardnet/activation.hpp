#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sqhardnet {

enum class ActivationKind {
  relu,
  truncated_relu,
  sigmoid,
  tanh,
  sign,
  identity,
  constant
};

/**
 * A scalar activation with declared analytic properties.
 *
 * `param` is the cap T for truncated-relu and the value c for constant; it is
 * unused otherwise. sign(0) is +1.
 */
struct ActivationSpec {
  ActivationKind kind = ActivationKind::identity;
  double param = 0.0;
  bool declared_odd = false;
  std::optional<std::pair<double, double>> declared_range;

  static ActivationSpec relu() { return {ActivationKind::relu, 0.0, false, {}}; }
  static ActivationSpec truncated_relu(double cap) {
    if (!(cap > 0.0))
      throw std::invalid_argument("truncated-relu cap must be positive");
    return {ActivationKind::truncated_relu, cap, false, {{0.0, cap}}};
  }
  static ActivationSpec sigmoid() {
    return {ActivationKind::sigmoid, 0.0, false, {{0.0, 1.0}}};
  }
  static ActivationSpec tanh() {
    return {ActivationKind::tanh, 0.0, true, {{-1.0, 1.0}}};
  }
  static ActivationSpec sign() {
    return {ActivationKind::sign, 0.0, true, {{-1.0, 1.0}}};
  }
  static ActivationSpec identity() {
    return {ActivationKind::identity, 0.0, true, {}};
  }
  static ActivationSpec constant(double c) {
    return {ActivationKind::constant, c, c == 0.0, {{c, c}}};
  }

  double operator()(double x) const {
    switch (kind) {
      case ActivationKind::relu:
        return x > 0.0 ? x : 0.0;
      case ActivationKind::truncated_relu:
        return x <= 0.0 ? 0.0 : (x < param ? x : param);
      case ActivationKind::sigmoid:
        return 1.0 / (1.0 + std::exp(-x));
      case ActivationKind::tanh:
        return std::tanh(x);
      case ActivationKind::sign:
        return x >= 0.0 ? 1.0 : -1.0;
      case ActivationKind::identity:
        return x;
      case ActivationKind::constant:
        return param;
    }
    return 0.0;
  }

  /// Points where the function or its derivative is discontinuous.
  std::vector<double> kinks() const {
    switch (kind) {
      case ActivationKind::relu:
      case ActivationKind::sign:
        return {0.0};
      case ActivationKind::truncated_relu:
        return {0.0, param};
      default:
        return {};
    }
  }

  bool bounded() const { return declared_range.has_value(); }

  /// Finite Hermite expansion (polynomial activations).
  bool is_polynomial() const {
    return kind == ActivationKind::identity || kind == ActivationKind::constant;
  }

  /// Canonical name; parse_activation(name()) reproduces the spec.
  std::string name() const {
    switch (kind) {
      case ActivationKind::relu:
        return "relu";
      case ActivationKind::truncated_relu:
        return "truncated-relu:" + format_param();
      case ActivationKind::sigmoid:
        return "sigmoid";
      case ActivationKind::tanh:
        return "tanh";
      case ActivationKind::sign:
        return "sign";
      case ActivationKind::identity:
        return "identity";
      case ActivationKind::constant:
        return "constant:" + format_param();
    }
    return "?";
  }

  friend bool operator==(const ActivationSpec& a, const ActivationSpec& b) {
    return a.kind == b.kind && a.param == b.param;
  }

 private:
  std::string format_param() const {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", param);
    return buf;
  }
};

/// Accepts relu, sigmoid, tanh, sign, identity, truncated-relu:T, constant:c.
inline ActivationSpec parse_activation(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  auto argument = [&]() -> double {
    if (colon == std::string::npos)
      throw std::invalid_argument("activation '" + head +
                                  "' needs a parameter, e.g. " + head + ":1");
    try {
      std::size_t used = 0;
      const double v = std::stod(text.substr(colon + 1), &used);
      if (used != text.size() - colon - 1) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("bad activation parameter in '" + text + "'");
    }
  };
  auto no_argument = [&] {
    if (colon != std::string::npos)
      throw std::invalid_argument("activation '" + head +
                                  "' takes no parameter");
  };
  if (head == "relu") return no_argument(), ActivationSpec::relu();
  if (head == "sigmoid") return no_argument(), ActivationSpec::sigmoid();
  if (head == "tanh") return no_argument(), ActivationSpec::tanh();
  if (head == "sign") return no_argument(), ActivationSpec::sign();
  if (head == "identity") return no_argument(), ActivationSpec::identity();
  if (head == "truncated-relu") return ActivationSpec::truncated_relu(argument());
  if (head == "constant") return ActivationSpec::constant(argument());
  throw std::invalid_argument("unknown activation: " + text);
}

}  // namespace sqhardnet
