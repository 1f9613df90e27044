#include "meattack/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meattack/error.hpp"

namespace meattack {

namespace {

void check(std::span<const double> logits, Label y, const char* what) {
  if (logits.size() < 2) throw InvalidArgument(std::string(what) + ": needs at least 2 classes");
  if (y >= logits.size()) {
    throw InvalidArgument(std::string(what) + ": label " + std::to_string(y) + " out of range [0," +
                          std::to_string(logits.size()) + ")");
  }
}

double max_excluding(std::span<const double> v, Label y) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k != y) m = std::max(m, v[k]);
  }
  return m;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::logits: return "logits";
    case LossKind::probability: return "probability";
    case LossKind::cross_entropy: return "cross_entropy";
  }
  return "unknown";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "logits") return LossKind::logits;
  if (name == "probability") return LossKind::probability;
  if (name == "cross_entropy") return LossKind::cross_entropy;
  throw InvalidArgument("unknown loss '" + name + "'");
}

Label argmax(std::span<const double> logits) {
  if (logits.empty()) throw InvalidArgument("argmax of empty logits");
  return static_cast<Label>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

std::vector<double> softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p[k] = std::exp(logits[k] - m);
    z += p[k];
  }
  for (double& v : p) v /= z;
  return p;
}

double logits_margin(std::span<const double> logits, Label y) {
  check(logits, y, "logits_margin");
  return std::max(logits[y] - max_excluding(logits, y), 0.0);
}

double probability_margin(std::span<const double> logits, Label y) {
  check(logits, y, "probability_margin");
  const auto p = softmax(logits);
  double total = 0.0;
  for (double v : p) total += v;
  return std::max(total - max_excluding(p, y), 0.0);
}

double cross_entropy(std::span<const double> logits, Label y) {
  check(logits, y, "cross_entropy");
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - m);
  return std::max(std::log(z) - (logits[y] - m), 0.0);
}

double targeted_margin(std::span<const double> logits, Label target) {
  check(logits, target, "targeted_margin");
  return std::max(max_excluding(logits, target) - logits[target], 0.0);
}

double Objective::operator()(std::span<const double> logits) const {
  if (target) return targeted_margin(logits, *target);
  switch (kind) {
    case LossKind::logits: return logits_margin(logits, label);
    case LossKind::probability: return probability_margin(logits, label);
    case LossKind::cross_entropy: return cross_entropy(logits, label);
  }
  return logits_margin(logits, label);
}

}  // namespace meattack
