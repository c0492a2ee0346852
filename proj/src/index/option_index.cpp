#include "oihrl/index/option_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "oihrl/common/binary_io.hpp"
#include "oihrl/common/errors.hpp"
#include "oihrl/common/log.hpp"
#include "oihrl/nn/losses.hpp"
#include "oihrl/nn/serialize.hpp"

namespace oihrl::index {

namespace {

constexpr std::array<char, 8> kMagic = {'O', 'I', 'H', 'R', 'L', 'C', 'K', 'P'};

}    // namespace

auto OptionIndex::glorot(int option_count, int key_dim, Rng &rng) -> OptionIndex {
    if (option_count < 1 || key_dim < 1) {
        throw InvalidInput("option index needs at least one option and a positive key dimension");
    }
    OptionIndex idx;
    idx.keys.resize(option_count, key_dim);
    nn::glorot_fill(idx.keys, static_cast<std::size_t>(key_dim), static_cast<std::size_t>(option_count), rng);
    return idx;
}

auto Qgn::glorot(int state_dim, int hidden, int key_dim, Rng &rng) -> Qgn {
    if (state_dim < 1 || hidden < 1 || key_dim < 1) {
        throw InvalidInput("QGN dimensions must be positive");
    }
    const std::array<std::size_t, 3> widths{static_cast<std::size_t>(state_dim), static_cast<std::size_t>(hidden),
                                            static_cast<std::size_t>(key_dim)};
    return Qgn{nn::DenseNet::glorot(widths, nn::Activation::relu, nn::Activation::identity, rng)};
}

auto IndexModel::create(int state_dim, int option_count, int hidden, int key_dim, std::uint64_t seed) -> IndexModel {
    Rng rng(derive_seed(seed, {0x1DE7}));
    IndexModel m;
    m.qgn = Qgn::glorot(state_dim, hidden, key_dim, rng);
    m.index = OptionIndex::glorot(option_count, key_dim, rng);
    return m;
}

auto top_p_order(const Vector &probs, double p) -> std::vector<int> {
    if (probs.size() == 0) {
        throw InvalidInput("top-p: empty probability vector");
    }
    if (!(p > 0.0 && p < 1.0)) {
        throw InvalidInput("top-p: threshold must lie in (0, 1)");
    }
    std::vector<int> order(static_cast<std::size_t>(probs.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return probs[a] > probs[b]; });
    double mass = 0.0;
    std::size_t n = 0;
    while (n < order.size() && !(mass > p)) {
        mass += probs[order[n]];
        ++n;
    }
    order.resize(n);
    return order;
}

auto option_logits(const IndexModel &model, const Vector &s0) -> Vector {
    if (s0.size() != model.qgn.input_dim()) {
        throw InvalidInput("state length " + std::to_string(s0.size()) + " does not match QGN input "
                           + std::to_string(model.qgn.input_dim()));
    }
    if (model.qgn.key_dim() != model.index.key_dim()) {
        throw InvalidInput("QGN output dimension does not match the index key dimension");
    }
    return model.index.keys * nn::forward(model.qgn.net, s0);
}

auto select_options(const IndexModel &model, const Vector &s0, double p) -> RetrievalResult {
    RetrievalResult r;
    r.probabilities = nn::softmax(option_logits(model, s0));
    r.fetched = top_p_order(r.probabilities, p);
    std::sort(r.fetched.begin(), r.fetched.end());
    return r;
}

auto target_from_trajectories(std::span<const env::Trajectory> trajectories, int option_count) -> TargetVector {
    TargetVector t;
    t.y = Vector::Zero(option_count);
    double total = 0.0;
    for (const auto &tr : trajectories) {
        for (int o : tr.options) {
            if (o < 0 || o >= option_count) {
                throw InvalidInput("trajectory references option " + std::to_string(o) + " outside the library");
            }
        }
        total += tr.ret;
    }
    if (trajectories.empty() || !(total > 0.0)) {
        t.skip = true;
        return t;
    }
    for (const auto &tr : trajectories) {
        if (tr.options.empty()) {
            continue;
        }
        const double share = tr.ret / static_cast<double>(tr.options.size()) / total;
        for (int o : tr.options) {
            t.y[o] += share;
        }
    }
    return t;
}

auto loss_and_gradients(const IndexModel &model, const TrainingSample &sample) -> LossAndGradients {
    if (sample.y.size() != model.index.option_count()) {
        throw InvalidInput("target length does not match the option count");
    }
    const auto trace = nn::forward_trace(model.qgn.net, sample.s0);
    const Vector &q = trace.activations.back();
    const Vector logits = model.index.keys * q;
    LossAndGradients out;
    if (!logits.allFinite()) {
        out.loss = std::numeric_limits<double>::quiet_NaN();
        out.grads.qgn = nn::Gradients::zeros_like(model.qgn.net);
        out.grads.keys = Matrix::Zero(model.index.keys.rows(), model.index.keys.cols());
        return out;
    }
    const auto ce = nn::cross_entropy_loss_and_grad(sample.y, nn::softmax(logits));

    out.loss = ce.loss;
    out.grads.keys = ce.logit_grad * q.transpose();
    const Vector dq = model.index.keys.transpose() * ce.logit_grad;
    out.grads.qgn = nn::backward(model.qgn.net, trace, dq);
    return out;
}

auto sample_loss(const IndexModel &model, const TrainingSample &sample) -> double {
    const Vector probs = nn::softmax(option_logits(model, sample.s0));
    return nn::cross_entropy_loss_and_grad(sample.y, probs).loss;
}

auto update(IndexModel &model, std::span<const TrainingSample> batch, nn::OptimizerState &optimizer) -> UpdateResult {
    if (batch.empty()) {
        throw InvalidInput("update: empty batch");
    }
    auto grads = nn::Gradients::zeros_like(model.qgn.net);
    Matrix key_grads = Matrix::Zero(model.index.keys.rows(), model.index.keys.cols());
    double loss = 0.0;
    for (const auto &s : batch) {
        auto lg = loss_and_gradients(model, s);
        loss += lg.loss;
        grads += lg.grads.qgn;
        key_grads += lg.grads.keys;
    }
    const double scale = 1.0 / static_cast<double>(batch.size());
    UpdateResult r;
    r.mean_loss = loss * scale;
    if (!std::isfinite(r.mean_loss)) {
        log::warn("index update skipped: non-finite loss");
        return r;
    }
    grads *= scale;
    key_grads *= scale;

    auto blocks = nn::parameter_blocks(model.qgn.net, grads);
    blocks.push_back({std::span<double>(model.index.keys.data(), static_cast<std::size_t>(model.index.keys.size())),
                      std::span<const double>(key_grads.data(), static_cast<std::size_t>(key_grads.size()))});
    r.applied = nn::optimizer_step(blocks, optimizer);
    return r;
}

void save_checkpoint(const std::filesystem::path &path, const IndexModel &model, std::uint64_t domain_hash) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot open checkpoint for writing: " + path.string());
    }
    os.write(kMagic.data(), kMagic.size());
    io::write_u32(os, kCheckpointVersion);
    io::write_u64(os, domain_hash);
    io::write_u32(os, static_cast<std::uint32_t>(model.index.option_count()));
    io::write_u32(os, static_cast<std::uint32_t>(model.index.key_dim()));
    nn::write_net(os, model.qgn.net);
    for (Eigen::Index i = 0; i < model.index.keys.rows(); ++i) {
        for (Eigen::Index j = 0; j < model.index.keys.cols(); ++j) {
            io::write_f64(os, model.index.keys(i, j));
        }
    }
    if (!os) {
        throw std::runtime_error("failed writing checkpoint: " + path.string());
    }
}

auto load_checkpoint(const std::filesystem::path &path, const CheckpointExpectation &expect) -> Checkpoint {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw LoadError("cannot open checkpoint: " + path.string());
    }
    const auto fail = [&](const std::string &msg) { return LoadError(path.string() + ": " + msg); };
    try {
        std::array<char, 8> magic{};
        is.read(magic.data(), magic.size());
        if (!is || magic != kMagic) {
            throw fail("not an option-index checkpoint");
        }
        const auto version = io::read_u32(is);
        if (version != kCheckpointVersion) {
            throw fail("unsupported checkpoint version " + std::to_string(version));
        }
        Checkpoint ck;
        ck.domain_hash = io::read_u64(is);
        const auto k = static_cast<int>(io::read_u32(is));
        const auto d = static_cast<int>(io::read_u32(is));
        if (expect.domain_hash && *expect.domain_hash != ck.domain_hash) {
            std::ostringstream msg;
            msg << "domain hash mismatch (checkpoint " << std::hex << ck.domain_hash << ", expected "
                << *expect.domain_hash << ")";
            throw fail(msg.str());
        }
        if (expect.option_count && *expect.option_count != k) {
            throw fail("option count mismatch (checkpoint " + std::to_string(k) + ", expected "
                       + std::to_string(*expect.option_count) + ")");
        }
        if (expect.key_dim && *expect.key_dim != d) {
            throw fail("key dimension mismatch (checkpoint " + std::to_string(d) + ", expected "
                       + std::to_string(*expect.key_dim) + ")");
        }
        if (k < 1 || d < 1) {
            throw fail("empty index");
        }
        ck.model.qgn.net = nn::read_net(is);
        if (ck.model.qgn.key_dim() != d) {
            throw fail("QGN output dimension " + std::to_string(ck.model.qgn.key_dim()) + " != key dimension "
                       + std::to_string(d));
        }
        if (expect.state_dim && *expect.state_dim != ck.model.qgn.input_dim()) {
            throw fail("state dimension mismatch (checkpoint " + std::to_string(ck.model.qgn.input_dim())
                       + ", expected " + std::to_string(*expect.state_dim) + ")");
        }
        ck.model.index.keys.resize(k, d);
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < d; ++j) {
                ck.model.index.keys(i, j) = io::read_f64(is);
            }
        }
        if (is.peek() != std::char_traits<char>::eof()) {
            throw fail("trailing bytes after key matrix");
        }
        if (!ck.model.qgn.net.all_finite() || !ck.model.index.keys.allFinite()) {
            throw fail("non-finite parameters");
        }
        return ck;
    } catch (const LoadError &e) {
        const std::string what = e.what();
        if (what.rfind(path.string(), 0) == 0) {
            throw;
        }
        throw fail(what);
    }
}

}    // namespace oihrl::index
