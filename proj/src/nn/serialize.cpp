#include "oihrl/nn/serialize.hpp"

#include <string>

#include "oihrl/common/binary_io.hpp"
#include "oihrl/common/errors.hpp"

namespace oihrl::nn {

namespace {
constexpr std::uint32_t kMaxLayers = 64;
constexpr std::uint32_t kMaxWidth = 1U << 20;
}    // namespace

void write_net(std::ostream &os, const DenseNet &net) {
    const auto &layers = net.layers();
    io::write_u32(os, static_cast<std::uint32_t>(layers.size()));
    for (const auto &l : layers) {
        io::write_u32(os, static_cast<std::uint32_t>(l.weights.rows()));
        io::write_u32(os, static_cast<std::uint32_t>(l.weights.cols()));
        io::write_u8(os, static_cast<std::uint8_t>(l.activation));
    }
    for (const auto &l : layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                io::write_f64(os, l.weights(r, c));
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            io::write_f64(os, l.bias[r]);
        }
    }
}

auto read_net(std::istream &is) -> DenseNet {
    const auto count = io::read_u32(is);
    if (count == 0 || count > kMaxLayers) {
        throw LoadError("network header: implausible layer count " + std::to_string(count));
    }
    std::vector<Layer> layers(count);
    for (auto &l : layers) {
        const auto out = io::read_u32(is);
        const auto in = io::read_u32(is);
        const auto act = io::read_u8(is);
        if (out == 0 || in == 0 || out > kMaxWidth || in > kMaxWidth) {
            throw LoadError("network header: implausible layer shape");
        }
        if (act > static_cast<std::uint8_t>(Activation::relu)) {
            throw LoadError("network header: unknown activation code " + std::to_string(act));
        }
        l.weights.resize(out, in);
        l.bias.resize(out);
        l.activation = static_cast<Activation>(act);
    }
    for (auto &l : layers) {
        for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
            for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
                l.weights(r, c) = io::read_f64(is);
            }
        }
        for (Eigen::Index r = 0; r < l.bias.size(); ++r) {
            l.bias[r] = io::read_f64(is);
        }
    }
    try {
        return DenseNet(std::move(layers));
    } catch (const InvalidInput &e) {
        throw LoadError(std::string("network payload: ") + e.what());
    }
}

}    // namespace oihrl::nn
