#include <doctest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "oihrl/common/errors.hpp"
#include "oihrl/harness/experiment.hpp"
#include "oihrl/harness/results.hpp"
#include "oihrl/harness/run_config.hpp"
#include "support.hpp"

using namespace oihrl;
using namespace oihrl::harness;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

auto tiny_doc() -> json {
    return json{
        {"name", "tiny"},
        {"master_seed", 42},
        {"domain", {{"generator", {{"object_count", 12}, {"group_size", 3}, {"composite_count", 2}}}, {"seed", 3}}},
        {"meta_train", {{"iterations", 60}, {"batch_size", 8}, {"hidden", 16}, {"key_dim", 8}}},
        {"a2c", {{"total_env_steps", 4000}, {"eval_interval_steps", 2000}, {"hidden", 16}}},
        {"baselines", {"OI_HRL", "HRL_N", "HRL_N+2", "HRL_FULL"}},
        {"test_variants", 4},
        {"sweep", {{"fractions", {0.5, 1.0}}, {"seeds", 2}}},
    };
}

auto model_for(const RunConfig &c) -> std::shared_ptr<const env::DomainModel> {
    return std::make_shared<const env::DomainModel>(load_domain(c.domain));
}

auto as_set(const std::vector<int> &v) -> std::set<int> {
    return {v.begin(), v.end()};
}

auto includes(const std::vector<int> &outer, const std::vector<int> &inner) -> bool {
    return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
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

TEST_CASE("baselines: names parse and print") {
    CHECK(parse_baseline("OI_HRL").kind == BaselineKind::oi_hrl);
    CHECK(parse_baseline("HRL_N+2") == BaselineSpec{BaselineKind::hrl_n_plus_k, 2});
    CHECK(parse_baseline("HRL_N_PLUS_3").name() == "HRL_N+3");
    CHECK(parse_baseline("HRL_FULL").name() == "HRL_FULL");
    CHECK_THROWS_AS(parse_baseline("HRL_N+0"), ConfigError);
    CHECK_THROWS_AS(parse_baseline("HRL_X"), ConfigError);
    CHECK(parse_baseline_list("HRL_N,HRL_FULL").size() == 2);
}

TEST_CASE("run config: json round trip and errors") {
    const auto c = run_config_from_json(tiny_doc());
    const auto back = run_config_from_json(run_config_to_json(c));
    CHECK(back.name == "tiny");
    CHECK(back.master_seed == 42);
    CHECK(back.meta.iterations == 60);
    CHECK(back.meta.hidden == 16);
    CHECK(back.a2c.total_env_steps == 4000);
    CHECK(back.baselines == c.baselines);
    CHECK(back.fractions == std::vector<double>{0.5, 1.0});
    CHECK(back.sweep_seeds == 2);
    CHECK(back.domain.generator->object_count == 12);
    CHECK(meta_seed(back) == meta_seed(c));
    CHECK(meta_seed(c) != test_sample_seed(c));

    auto doc = tiny_doc();
    doc.erase("domain");
    CHECK_THROWS_AS(run_config_from_json(doc), ConfigError);
    doc = tiny_doc();
    doc["meta_train"]["top_p"] = 1.5;
    CHECK_THROWS_WITH_AS(run_config_from_json(doc), doctest::Contains("top_p"), ConfigError);
    doc = tiny_doc();
    doc["domain"] = {{"config", "no/such/file.json"}};
    CHECK_THROWS_AS(run_config_from_json(doc), ConfigError);
    doc = tiny_doc();
    doc["a2c"]["gamma"] = 0.0;
    CHECK_THROWS_AS(run_config_from_json(doc), ConfigError);
}

TEST_CASE("shipped configs load") {
    for (const auto *name : {"craftworld_desk.json", "craftworld_paper.json", "kitchen_run.json"}) {
        const auto c = load_run_config(fs::path(OIHRL_SOURCE_DIR) / "configs" / name);
        CHECK_FALSE(c.baselines.empty());
    }
}

TEST_CASE("baseline option sets are nested and oracle sets are sufficient") {
    const auto c = run_config_from_json(tiny_doc());
    const auto m = model_for(c);
    const auto model = index::IndexModel::create(m->state_dim(), m->option_count(), 8, 4, 1);
    for (const auto &ref : m->domain().split.test) {
        const auto seed = variant_seed(c, ref);
        const auto s0 = env::reset(*m, ref, m->domain().episode, seed);
        const auto &recipe = m->recipe(ref);
        const auto n = select_baseline_options({BaselineKind::hrl_n}, ref, *m, nullptr, s0, 0.9, seed);
        const auto nk = select_baseline_options({BaselineKind::hrl_n_plus_k, 2}, ref, *m, nullptr, s0, 0.9, seed);
        const auto full = select_baseline_options({BaselineKind::hrl_full}, ref, *m, nullptr, s0, 0.9, seed);
        const auto oi = select_baseline_options({BaselineKind::oi_hrl}, ref, *m, &model, s0, 0.9, seed);
        CHECK(n == recipe);
        CHECK(nk.size() == recipe.size() + 2);
        CHECK(full.size() == static_cast<std::size_t>(m->option_count()));
        CHECK(includes(nk, n));
        CHECK(includes(full, nk));
        CHECK(std::is_sorted(nk.begin(), nk.end()));
        CHECK(as_set(oi) == as_set(index::select_options(model, env::encode_features(*m, s0), 0.9).fetched));
        for (const auto &opts : {n, nk, full}) {
            CHECK(retrieval_metrics(opts, recipe).missing == 0);
        }
        CHECK(select_baseline_options({BaselineKind::hrl_n_plus_k, 2}, ref, *m, nullptr, s0, 0.9, seed) == nk);
        CHECK_THROWS_AS(select_baseline_options({BaselineKind::hrl_n_plus_k, 100}, ref, *m, nullptr, s0, 0.9, seed),
                        ConfigError);
        CHECK_THROWS_AS(select_baseline_options({BaselineKind::oi_hrl}, ref, *m, nullptr, s0, 0.9, seed),
                        InvalidInput);
    }
}

TEST_CASE("retrieval metrics") {
    const auto a = retrieval_metrics({1, 2, 3, 7}, {1, 2, 3});
    CHECK(a.sufficient);
    CHECK(a.extra == 1);
    CHECK(a.missing == 0);
    const auto b = retrieval_metrics({1, 5}, {1, 2, 3});
    CHECK_FALSE(b.sufficient);
    CHECK(b.extra == 1);
    CHECK(b.missing == 2);
}

TEST_CASE("mean and 95% interval") {
    const auto r = mean_ci95({1.0, 2.0, 3.0});
    CHECK(r.mean == doctest::Approx(2.0));
    CHECK(r.hi - r.mean == doctest::Approx(1.959963984540054 / std::sqrt(3.0)));
    CHECK(r.mean - r.lo == doctest::Approx(r.hi - r.mean));
    const auto one = mean_ci95({0.5});
    CHECK(one.lo == 0.5);
    CHECK(one.hi == 0.5);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(hits.size(), 3, [&](std::size_t i) { hits[i]++; });
    for (const auto &h : hits) {
        CHECK(h.load() == 1);
    }
    CHECK_THROWS_AS(parallel_for(10, 2,
                                 [](std::size_t i) {
                                     if (i == 7) {
                                         throw InvalidInput("boom");
                                     }
                                 }),
                    InvalidInput);
}

TEST_CASE("test variant sampling is seeded and ordered") {
    const auto c = run_config_from_json(tiny_doc());
    const auto d = load_domain(c.domain);
    const auto a = sample_test_variants(d, 4, 1);
    CHECK(a == sample_test_variants(d, 4, 1));
    CHECK(a.size() == 4);
    for (const auto &r : a) {
        CHECK(std::find(d.split.test.begin(), d.split.test.end(), r) != d.split.test.end());
    }
    CHECK(sample_test_variants(d, 1000, 1) == d.split.test);
}

TEST_CASE("evaluation: results round trip, intervals, and worker count independence") {
    auto c = run_config_from_json(tiny_doc());
    c.length_buckets = {{1, 3}, {4, 4}};
    const auto m = model_for(c);
    const auto trained = meta_train_index(m, m->domain().split.train, c.meta, meta_seed(c));
    const auto data = run_evaluation(c, m, &trained.model);
    c.workers = 3;
    const auto parallel = run_evaluation(c, m, &trained.model);
    REQUIRE(data.retrieval.size() == 4 * 4);
    CHECK(data.curves.size() == 4 * 4 * 2);
    for (std::size_t i = 0; i < data.curves.size(); ++i) {
        CHECK(data.curves[i].mean_reward == parallel.curves[i].mean_reward);
        CHECK(data.curves[i].variant_id == parallel.curves[i].variant_id);
        CHECK(data.curves[i].master_seed == 42);
    }

    const auto agg = aggregate(data, c.length_buckets);
    std::set<std::string> arms;
    for (const auto &r : agg.reward) {
        arms.insert(r.baseline);
        CHECK(r.ci_lo <= r.mean);
        CHECK(r.mean <= r.ci_hi);
        CHECK(r.n == 4);
    }
    CHECK(arms == std::set<std::string>{"OI_HRL", "HRL_N", "HRL_N+2", "HRL_FULL"});
    CHECK(final_rows(agg.reward).size() == 4);
    // Every recipe has length 4, so only the second bucket appears, once per arm.
    REQUIRE(agg.by_length.size() == 4);
    for (const auto &b : agg.by_length) {
        CHECK(b.length_lo == 4);
        CHECK(b.variants == 4);
    }

    TempDir dir("emit");
    emit_results(data, agg, dir.path);
    for (const auto *f : {"retrieval.csv", "curves.csv", "aggregate.csv", "aggregate_length.csv",
                          "aggregate_completion.csv", "completion_by_length.csv", "retrieval_summary.csv"}) {
        CHECK(fs::exists(dir.path / f));
    }
    const auto parsed = parse_results(dir.path);
    CHECK(aggregate(parsed, c.length_buckets) == agg);
    CHECK(parse_aggregate(dir.path / "aggregate.csv") == agg.reward);
    std::ofstream(dir.path / "curves.csv", std::ios::app) << "garbage\n";
    CHECK_THROWS_AS(parse_results(dir.path), LoadError);
}

TEST_CASE("sweep: fraction one reproduces the main run and tiny fractions are rejected") {
    const auto c = run_config_from_json(tiny_doc());
    const auto m = model_for(c);
    const auto rows = run_trainsize_sweep(c, m, {1.0});
    REQUIRE(rows.size() == 2);
    const auto trained = meta_train_index(m, m->domain().split.train, c.meta, meta_seed(c));
    const auto main = aggregate({evaluate_retrieval(c, *m, trained.model, m->domain().split.test), {}});
    REQUIRE(main.retrieval.size() == 1);
    CHECK(rows[0].summary.sufficient == main.retrieval[0].sufficient);
    CHECK(rows[0].summary.extra == main.retrieval[0].extra);
    CHECK(rows[0].train_variants == static_cast<int>(m->domain().split.train.size()));
    CHECK_THROWS_AS(run_trainsize_sweep(c, m, {1e-6}), ConfigError);
    CHECK_THROWS_AS(run_trainsize_sweep(c, m, {1.5}), ConfigError);
}

TEST_CASE("manifest records seeds, domain hash and checkpoint hash") {
    const auto c = run_config_from_json(tiny_doc());
    const auto d = load_domain(c.domain);
    TempDir dir("manifest");
    const auto ck = dir.path / "ck.bin";
    std::ofstream(ck) << "abc";
    const auto j = make_manifest(c, d, {ck}, nullptr);
    CHECK(j.dump().find(file_hash(ck)) != std::string::npos);
    CHECK(j.dump().find("42") != std::string::npos);
    write_manifest(dir.path, j);
    CHECK(fs::exists(dir.path / "manifest.json"));
}
