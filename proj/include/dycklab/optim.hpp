#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dycklab/tensor.hpp"

namespace dycklab {

using NamedParams = std::vector<std::pair<std::string, Tensor>>;

// p <- p - lr * g / (sqrt(s) + eps) with s <- alpha*s + (1-alpha)*g^2.
// Accumulator state is keyed by position, sized lazily on the first step.
class RmsProp {
 public:
  explicit RmsProp(double lr, double alpha = 0.99, double eps = 1e-8);
  void step(NamedParams& params);

 private:
  double lr_, alpha_, eps_;
  std::vector<std::vector<double>> s_;
};

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(NamedParams& params);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace dycklab
