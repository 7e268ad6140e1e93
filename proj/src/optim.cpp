#include "dycklab/optim.hpp"

#include <cmath>

namespace dycklab {

namespace {

void check_finite(const std::string& name, const std::vector<double>& g) {
  for (double x : g)
    if (!std::isfinite(x))
      throw TrainingError("non-finite gradient in parameter '" + name + "'");
}

void ensure_state(std::vector<std::vector<double>>& s, const NamedParams& p) {
  if (s.empty()) {
    s.resize(p.size());
    for (size_t i = 0; i < p.size(); ++i)
      s[i].assign(p[i].second.size(), 0.0);
  }
  if (s.size() != p.size())
    throw ConfigError("optimizer state does not match the parameter list");
}

}  // namespace

RmsProp::RmsProp(double lr, double alpha, double eps)
    : lr_(lr), alpha_(alpha), eps_(eps) {
  if (lr <= 0 || alpha <= 0 || alpha >= 1 || eps <= 0)
    throw ConfigError("rmsprop: need lr > 0, alpha in (0,1), eps > 0");
}

void RmsProp::step(NamedParams& params) {
  ensure_state(s_, params);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    const auto& g = p.grad();
    if (g.empty()) continue;  // parameter untouched this step
    check_finite(name, g);
    auto& v = p.data();
    auto& s = s_[i];
    for (size_t j = 0; j < v.size(); ++j) {
      s[j] = alpha_ * s[j] + (1.0 - alpha_) * g[j] * g[j];
      v[j] -= lr_ * g[j] / (std::sqrt(s[j]) + eps_);
    }
  }
}

Adam::Adam(double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (lr <= 0 || beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1 ||
      eps <= 0)
    throw ConfigError("adam: need lr > 0, betas in [0,1), eps > 0");
}

void Adam::step(NamedParams& params) {
  ensure_state(m_, params);
  ensure_state(v_, params);
  ++t_;
  double bc1 = 1.0 - std::pow(beta1_, t_);
  double bc2 = 1.0 - std::pow(beta2_, t_);
  for (size_t i = 0; i < params.size(); ++i) {
    auto& [name, p] = params[i];
    const auto& g = p.grad();
    if (g.empty()) continue;
    check_finite(name, g);
    auto& val = p.data();
    auto& m = m_[i];
    auto& v = v_[i];
    for (size_t j = 0; j < val.size(); ++j) {
      m[j] = beta1_ * m[j] + (1.0 - beta1_) * g[j];
      v[j] = beta2_ * v[j] + (1.0 - beta2_) * g[j] * g[j];
      val[j] -= lr_ * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + eps_);
    }
  }
}

}  // namespace dycklab
