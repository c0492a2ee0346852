#include "oihrl/nn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "oihrl/common/errors.hpp"

namespace oihrl::nn {

namespace {

void check_logits(const Vector &logits) {
    if (logits.size() == 0) {
        throw InvalidInput("softmax: empty input");
    }
    if (!logits.allFinite()) {
        throw InvalidInput("softmax: non-finite logits");
    }
}

}    // namespace

auto softmax(const Vector &logits) -> Vector {
    check_logits(logits);
    const double mx = logits.maxCoeff();
    Vector e = (logits.array() - mx).exp().matrix();
    return e / e.sum();
}

auto log_softmax(const Vector &logits) -> Vector {
    check_logits(logits);
    const double mx = logits.maxCoeff();
    const double lse = mx + std::log((logits.array() - mx).exp().sum());
    return (logits.array() - lse).matrix();
}

auto cross_entropy_loss_and_grad(const Vector &target, const Vector &probs) -> CrossEntropyResult {
    if (target.size() != probs.size()) {
        throw InvalidInput("cross_entropy: target length " + std::to_string(target.size()) + " != probs length "
                           + std::to_string(probs.size()));
    }
    if (probs.size() == 0) {
        throw InvalidInput("cross_entropy: empty vectors");
    }
    if ((target.array() < 0.0).any()) {
        throw InvalidInput("cross_entropy: negative target entry");
    }
    const auto k = static_cast<double>(probs.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        if (target[i] != 0.0) {
            acc += target[i] * std::log(std::max(probs[i], kLogFloor));
        }
    }
    CrossEntropyResult r;
    r.loss = -acc / k;
    r.logit_grad = (probs * target.sum() - target) / k;
    return r;
}

}    // namespace oihrl::nn
