#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meattack/tensor.hpp"

namespace meattack {

using Logits = std::vector<double>;

enum class LossKind { logits, probability, cross_entropy };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

// Lowest index among the maxima.
Label argmax(std::span<const double> logits);

std::vector<double> softmax(std::span<const double> logits);

// max(l_y - max_{k != y} l_k, 0)
double logits_margin(std::span<const double> logits, Label y);

// max(sum_k p_k - max_{k != y} p_k, 0) with p = softmax(l). The sum term is
// kept literally, so the value is 1 - max_{k != y} p_k.
double probability_margin(std::span<const double> logits, Label y);

// -log softmax(l)[y]
double cross_entropy(std::span<const double> logits, Label y);

// max(max_{k != t} l_k - l_t, 0)
double targeted_margin(std::span<const double> logits, Label target);

// The scalar the attack drives to zero. A target switches to targeted_margin
// regardless of kind.
struct Objective {
  LossKind kind = LossKind::logits;
  Label label = 0;
  std::optional<Label> target;

  double operator()(std::span<const double> logits) const;
};

}  // namespace meattack
