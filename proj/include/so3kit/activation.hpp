#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace so3kit {

enum class Activation { Identity, Relu, Elu, Sigmoid };

inline double activate(Activation a, double x) {
  switch (a) {
    case Activation::Identity: return x;
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Elu: return x > 0.0 ? x : std::expm1(x);
    case Activation::Sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return x;
}

inline Eigen::MatrixXd activate(Activation a, const Eigen::MatrixXd& x) {
  if (a == Activation::Identity) return x;
  return x.unaryExpr([a](double v) { return activate(a, v); });
}

inline std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Elu: return "elu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "identity";
}

inline Activation activation_from_name(const std::string& s) {
  if (s == "identity") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "elu") return Activation::Elu;
  if (s == "sigmoid") return Activation::Sigmoid;
  throw std::invalid_argument("unknown activation \"" + s + "\"");
}

}  // namespace so3kit
