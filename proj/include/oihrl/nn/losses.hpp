#pragma once

#include "oihrl/nn/dense_net.hpp"

namespace oihrl::nn {

/// Floor applied to probabilities inside log().
inline constexpr double kLogFloor = 1e-12;

/// Numerically stable softmax (max-subtracted). Throws InvalidInput on empty or non-finite input.
auto softmax(const Vector &logits) -> Vector;

/// log(softmax(logits)) computed as logits - logsumexp(logits).
auto log_softmax(const Vector &logits) -> Vector;

struct CrossEntropyResult {
    double loss = 0.0;
    Vector logit_grad;
};

/// L(y, p) = -(1/k) sum_i y_i log(max(p_i, kLogFloor)) and its gradient w.r.t. the logits that
/// produced `probs` through softmax: (1/k) (p * sum(y) - y).
auto cross_entropy_loss_and_grad(const Vector &target, const Vector &probs) -> CrossEntropyResult;

}    // namespace oihrl::nn
