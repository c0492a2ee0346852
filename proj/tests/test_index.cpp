#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oihrl/common/errors.hpp"
#include "oihrl/index/option_index.hpp"
#include "oihrl/nn/losses.hpp"
#include "support.hpp"

using namespace oihrl;
using namespace oihrl::index;
using env::Trajectory;

namespace fs = std::filesystem;

namespace {

auto probs(std::initializer_list<double> v) -> Vector {
    Vector p(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        p[i++] = x;
    }
    return p;
}

auto sorted(std::vector<int> v) -> std::vector<int> {
    std::sort(v.begin(), v.end());
    return v;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / ("oihrl_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}    // namespace

TEST_CASE("top-p: worked cases") {
    CHECK(sorted(top_p_order(probs({0.6, 0.35, 0.05}), 0.9)) == std::vector<int>{0, 1});
    CHECK(top_p_order(probs({1.0}), 0.9) == std::vector<int>{0});
    CHECK(top_p_order(Vector::Constant(10, 0.1), 0.9).size() == 10);
    // Ties go to the lower id.
    CHECK(top_p_order(probs({0.25, 0.25, 0.25, 0.25}), 0.4) == std::vector<int>{0, 1});
    CHECK_THROWS_AS(top_p_order(probs({0.5, 0.5}), 1.0), InvalidInput);
    CHECK_THROWS_AS(top_p_order(probs({0.5, 0.5}), 0.0), InvalidInput);
    CHECK_THROWS_AS(top_p_order(Vector(), 0.5), InvalidInput);
}

TEST_CASE("top-p: minimality and monotonicity on random vectors") {
    const auto r = oihrl::testing::check_top_p(20000, 77);
    CHECK(r.minimality_failures == 0);
    CHECK(r.monotonicity_failures == 0);
    CHECK(r.reference_mismatches == 0);
}

TEST_CASE("top-p: near-uniform probabilities fetch at least ceil(0.9 k) options") {
    Rng rng(5);
    for (int n = 0; n < 500; ++n) {
        const int k = 2 + static_cast<int>(uniform_index(rng, 300));
        Vector p(k);
        for (int i = 0; i < k; ++i) {
            p[i] = 1.0 + 1e-3 * (2.0 * uniform01(rng) - 1.0);
        }
        p /= p.sum();
        CHECK(top_p_order(p, 0.9).size() >= static_cast<std::size_t>(std::ceil(0.9 * k - 1e-9)));
    }
}

TEST_CASE("top-p: fresh Glorot model on a desk-sized library") {
    const auto model = IndexModel::create(138, 61, 100, 50, 1);
    Rng rng(2);
    std::size_t fewest = 61;
    for (int n = 0; n < 50; ++n) {
        const auto r = select_options(model, oihrl::testing::random_binary(138, rng, 0.05), 0.9);
        fewest = std::min(fewest, r.fetched.size());
        CHECK(std::is_sorted(r.fetched.begin(), r.fetched.end()));
        CHECK(std::abs(r.probabilities.sum() - 1.0) < 1e-9);
    }
    MESSAGE("fresh-init fetch count (min over 50 scenes): " << fewest << " of 61");
    CHECK(fewest >= 40);
}

TEST_CASE("select_options: logits are keys times query") {
    const auto model = IndexModel::create(12, 7, 5, 3, 4);
    Rng rng(1);
    const Vector s0 = oihrl::testing::random_binary(12, rng);
    const Vector q = nn::forward(model.qgn.net, s0);
    CHECK((option_logits(model, s0) - model.index.keys * q).cwiseAbs().maxCoeff() < 1e-14);
    CHECK_THROWS_AS(select_options(model, Vector::Zero(11), 0.9), InvalidInput);
    CHECK(model.index.option_count() == 7);
    CHECK(model.index.key_dim() == 3);
    CHECK(model.qgn.input_dim() == 12);
}

TEST_CASE("target: worked examples") {
    const auto empty = target_from_trajectories({}, 4);
    CHECK(empty.skip);
    CHECK(empty.y.isZero());

    const std::vector<Trajectory> one{{{0, 1}, 1.0}};
    const auto a = target_from_trajectories(one, 4);
    CHECK_FALSE(a.skip);
    CHECK(a.y[0] == 0.5);
    CHECK(a.y[1] == 0.5);
    CHECK(a.y[2] == 0.0);

    const std::vector<Trajectory> two{{{0, 1}, 1.0}, {{0, 2, 3}, 0.5}};
    const auto b = target_from_trajectories(two, 4);
    CHECK(b.y[0] == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
    CHECK(b.y[1] == doctest::Approx(3.0 / 9.0).epsilon(1e-15));
    CHECK(b.y[2] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(b.y[3] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(std::abs(b.y.sum() - 1.0) < 1e-15);

    const std::vector<Trajectory> zero{{{0}, 0.0}};
    CHECK(target_from_trajectories(zero, 2).skip);
    const std::vector<Trajectory> bad{{{5}, 1.0}};
    CHECK_THROWS_AS(target_from_trajectories(bad, 2), InvalidInput);
}

TEST_CASE("target: sums to one and matches the reference on random sets") {
    const auto [sum_err, ref_err] = oihrl::testing::check_target_sums(1000, 3);
    CHECK(sum_err < 1e-9);
    CHECK(ref_err < 1e-12);
}

TEST_CASE("gradients: query network and keys match central differences") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = oihrl::testing::check_index_gradients(seed);
        CHECK(r.qgn < oihrl::testing::kFdTolerance);
        CHECK(r.keys < oihrl::testing::kFdTolerance);
    }
}

TEST_CASE("update: target equal to the prediction is a stationary point") {
    auto model = IndexModel::create(10, 6, 8, 4, 3);
    Rng rng(4);
    TrainingSample s{oihrl::testing::random_binary(10, rng), Vector()};
    s.y = nn::softmax(option_logits(model, s.s0));
    const auto before = model;
    nn::OptimizerState sgd({nn::OptimizerKind::sgd, 0.5});
    const auto r = update(model, std::span<const TrainingSample>(&s, 1), sgd);
    CHECK(r.applied);
    CHECK((model.index.keys - before.index.keys).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((model.qgn.net.layers()[0].weights - before.qgn.net.layers()[0].weights).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("update: repeated steps drive the loss to its closed-form minimum") {
    auto model = IndexModel::create(10, 6, 8, 4, 5);
    Rng rng(6);
    TrainingSample s{oihrl::testing::random_binary(10, rng), Vector::Zero(6)};
    s.y[1] = 4.0 / 9.0;
    s.y[2] = 3.0 / 9.0;
    s.y[4] = 2.0 / 9.0;
    const double floor = nn::cross_entropy_loss_and_grad(s.y, s.y).loss;
    const double start = sample_loss(model, s);
    nn::OptimizerState adam(nn::OptimizerConfig{});
    for (int i = 0; i < 500; ++i) {
        update(model, std::span<const TrainingSample>(&s, 1), adam);
    }
    const double end = sample_loss(model, s);
    CHECK(end >= floor - 1e-12);
    CHECK(end - floor < 0.01 * (start - floor));
}

TEST_CASE("update: non-finite parameters skip the step") {
    auto model = IndexModel::create(5, 3, 4, 2, 1);
    model.index.keys(0, 0) = std::nan("");
    const auto keys = model.index.keys;
    TrainingSample s{Vector::Ones(5), Vector::Constant(3, 1.0 / 3.0)};
    nn::OptimizerState adam(nn::OptimizerConfig{});
    const auto r = update(model, std::span<const TrainingSample>(&s, 1), adam);
    CHECK_FALSE(r.applied);
    CHECK(adam.step() == 0);
    CHECK(model.index.keys.block(1, 0, 2, 2) == keys.block(1, 0, 2, 2));
}

TEST_CASE("checkpoint: round trip preserves retrieval bitwise") {
    TempDir dir("ckpt_roundtrip");
    const auto model = IndexModel::create(40, 20, 16, 8, 9);
    const auto file = dir.path / "model.bin";
    save_checkpoint(file, model, 0xABCDEF);
    const auto back = load_checkpoint(file, {0xABCDEF, 20, 8, 40});
    CHECK(back.domain_hash == 0xABCDEF);
    CHECK(back.model.index.keys == model.index.keys);
    Rng rng(10);
    for (int n = 0; n < 100; ++n) {
        const Vector s0 = oihrl::testing::random_binary(40, rng, 0.2);
        const auto a = select_options(model, s0, 0.9);
        const auto b = select_options(back.model, s0, 0.9);
        CHECK(a.fetched == b.fetched);
        CHECK(a.probabilities == b.probabilities);
    }
}

TEST_CASE("checkpoint: truncation, trailing bytes and mismatches are load errors") {
    TempDir dir("ckpt_errors");
    const auto craft = IndexModel::create(138, 61, 100, 50, 1);
    const auto file = dir.path / "craft.bin";
    save_checkpoint(file, craft, 1);
    std::string bytes;
    {
        std::ifstream in(file, std::ios::binary);
        bytes.assign(std::istreambuf_iterator<char>(in), {});
    }
    const auto cut = dir.path / "cut.bin";
    std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
    CHECK_THROWS_AS(load_checkpoint(cut), LoadError);
    const auto longer = dir.path / "long.bin";
    std::ofstream(longer, std::ios::binary) << bytes << 'x';
    CHECK_THROWS_AS(load_checkpoint(longer), LoadError);
    const auto magic = dir.path / "magic.bin";
    std::ofstream(magic, std::ios::binary) << "NOTACKPT" << bytes.substr(8);
    CHECK_THROWS_AS(load_checkpoint(magic), LoadError);
    // Kitchen expectations: key dimension 10, different domain.
    CHECK_THROWS_WITH_AS(load_checkpoint(file, {std::nullopt, 61, 10, std::nullopt}), doctest::Contains("key"),
                         LoadError);
    CHECK_THROWS_AS(load_checkpoint(file, {2, std::nullopt, std::nullopt, std::nullopt}), LoadError);
    CHECK_THROWS_AS(load_checkpoint(file, {std::nullopt, 39, std::nullopt, std::nullopt}), LoadError);
    CHECK_THROWS_AS(load_checkpoint(dir.path / "missing.bin"), LoadError);
}
