#include "oihrl/harness/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/hash.hpp"
#include "oihrl/common/rng.hpp"
#include "oihrl/task/domain_config.hpp"

namespace oihrl::harness {

namespace {

auto baseline_stream(const BaselineSpec &b) -> std::uint64_t {
    return (static_cast<std::uint64_t>(b.kind) << 32U) | static_cast<std::uint64_t>(b.k);
}

auto hex(std::uint64_t v) -> std::string {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << v;
    return os.str();
}

}    // namespace

auto select_baseline_options(const BaselineSpec &spec, task::VariantRef variant, const env::DomainModel &domain,
                             const index::IndexModel *model, const env::EnvState &s0, double top_p,
                             std::uint64_t seed) -> std::vector<int> {
    const auto &recipe = domain.recipe(variant);
    const int k = domain.option_count();
    switch (spec.kind) {
    case BaselineKind::oi_hrl: {
        if (model == nullptr) {
            throw InvalidInput("OI_HRL needs a meta-trained index");
        }
        return index::select_options(*model, env::encode_features(domain, s0), top_p).fetched;
    }
    case BaselineKind::hrl_n:
        return recipe;
    case BaselineKind::hrl_n_plus_k: {
        const int room = k - static_cast<int>(recipe.size());
        if (spec.k < 1 || spec.k > room) {
            throw ConfigError(spec.name() + ": k must lie in [1, " + std::to_string(room) + "] for variant "
                              + domain.graph().variant_name(variant));
        }
        std::vector<int> pool;
        for (int o = 0; o < k; ++o) {
            if (!std::binary_search(recipe.begin(), recipe.end(), o)) {
                pool.push_back(o);
            }
        }
        Rng rng(derive_seed(seed, {0xE8A, static_cast<std::uint64_t>(spec.k)}));
        auto out = recipe;
        for (int i = 0; i < spec.k; ++i) {
            const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - static_cast<std::size_t>(i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
            out.push_back(pool[static_cast<std::size_t>(i)]);
        }
        std::sort(out.begin(), out.end());
        return out;
    }
    case BaselineKind::hrl_full: {
        std::vector<int> all(static_cast<std::size_t>(k));
        for (int o = 0; o < k; ++o) {
            all[static_cast<std::size_t>(o)] = o;
        }
        return all;
    }
    }
    return {};
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)> &fn) {
    const auto threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            while (!failed) {
                const auto i = next.fetch_add(1);
                if (i >= n) {
                    return;
                }
                try {
                    fn(i);
                } catch (...) {
                    const std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    failed = true;
                }
            }
        });
    }
    for (auto &th : pool) {
        th.join();
    }
    if (error) {
        std::rethrow_exception(error);
    }
}

auto sample_test_variants(const task::Domain &domain, int count, std::uint64_t seed) -> std::vector<task::VariantRef> {
    const auto &test = domain.split.test;
    if (test.empty()) {
        throw ConfigError("domain has an empty test split");
    }
    if (static_cast<std::size_t>(count) >= test.size()) {
        return test;
    }
    std::vector<std::size_t> idx(test.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    Rng rng(derive_seed(seed, {0x5A3}));
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    std::vector<task::VariantRef> out;
    out.reserve(idx.size());
    for (auto i : idx) {
        out.push_back(test[i]);
    }
    return out;
}

auto meta_train_index(std::shared_ptr<const env::DomainModel> domain, const std::vector<task::VariantRef> &train,
                      const meta::MetaTrainConfig &config, std::uint64_t seed, const meta::ProgressFn &progress)
    -> MetaTrainOutcome {
    auto mc = config;
    mc.seed = derive_seed(seed, {0x7A1});
    MetaTrainOutcome out;
    out.model = index::IndexModel::create(domain->state_dim(), domain->option_count(), mc.hidden, mc.key_dim,
                                          derive_seed(seed, {0x1417}));
    const meta::HrlOracle oracle(domain, mc.oracle);
    out.report = meta::meta_train(oracle, train, out.model, domain->domain().episode, mc, progress);
    return out;
}

auto evaluate_retrieval(const RunConfig &config, const env::DomainModel &domain, const index::IndexModel &model,
                        const std::vector<task::VariantRef> &variants) -> std::vector<RetrievalRow> {
    std::vector<RetrievalRow> rows;
    rows.reserve(variants.size());
    const BaselineSpec oi{BaselineKind::oi_hrl, 0};
    for (const auto &v : variants) {
        const auto vseed = variant_seed(config, v);
        const auto s0 = env::reset(domain, v, domain.domain().episode, vseed);
        const auto fetched = select_baseline_options(oi, v, domain, &model, s0, config.meta.top_p, vseed);
        const auto &recipe = domain.recipe(v);
        rows.push_back({domain.graph().variant_name(v), oi.name(), retrieval_metrics(fetched, recipe),
                        static_cast<int>(fetched.size()), static_cast<int>(recipe.size()), config.master_seed,
                        vseed});
    }
    return rows;
}

auto run_evaluation(const RunConfig &config, std::shared_ptr<const env::DomainModel> domain,
                    const index::IndexModel *model, const ProgressLine &progress) -> ResultsDataset {
    const auto &baselines = config.baselines;
    if (baselines.empty()) {
        throw ConfigError("no baselines configured");
    }
    const bool needs_index = std::any_of(baselines.begin(), baselines.end(),
                                         [](const BaselineSpec &b) { return b.kind == BaselineKind::oi_hrl; });
    if (needs_index && model == nullptr) {
        throw ConfigError("OI_HRL requires a meta-trained checkpoint");
    }
    const auto variants = sample_test_variants(domain->domain(), config.test_variants, test_sample_seed(config));
    const auto jobs = variants.size() * baselines.size();

    struct JobResult {
        RetrievalRow retrieval;
        std::vector<CurveRow> curve;
    };
    std::vector<JobResult> results(jobs);
    std::atomic<std::size_t> done{0};
    std::mutex progress_mutex;

    parallel_for(jobs, config.workers, [&](std::size_t j) {
        const auto &v = variants[j / baselines.size()];
        const auto &b = baselines[j % baselines.size()];
        const auto vseed = variant_seed(config, v);
        const auto id = domain->graph().variant_name(v);
        const env::SmdpEnv prototype(domain, v, domain->domain().episode, vseed);
        const auto fetched =
            select_baseline_options(b, v, *domain, model, prototype.initial_state(), config.meta.top_p, vseed);
        const auto &recipe = domain->recipe(v);
        auto &out = results[j];
        out.retrieval = {id,
                         b.name(),
                         retrieval_metrics(fetched, recipe),
                         static_cast<int>(fetched.size()),
                         static_cast<int>(recipe.size()),
                         config.master_seed,
                         vseed};
        if (config.train_policies) {
            auto ac = config.a2c;
            ac.seed = derive_seed(vseed, {0xA2C, baseline_stream(b)});
            const auto trained = a2c::train_policy(prototype, fetched, ac);
            for (const auto &p : trained.curve) {
                out.curve.push_back(
                    {id, b.name(), p.env_steps, p.mean_reward, p.mean_length, p.completion, config.master_seed, vseed});
            }
        }
        const auto finished = ++done;
        if (progress) {
            const std::lock_guard lock(progress_mutex);
            std::ostringstream msg;
            msg << "[" << finished << "/" << jobs << "] " << id << " " << b.name()
                << " fetched=" << fetched.size() << " sufficient=" << out.retrieval.metrics.sufficient;
            if (!out.curve.empty()) {
                msg << " final_reward=" << out.curve.back().mean_reward;
            }
            progress(msg.str());
        }
    });

    ResultsDataset data;
    for (auto &r : results) {
        data.retrieval.push_back(std::move(r.retrieval));
        for (auto &c : r.curve) {
            data.curves.push_back(std::move(c));
        }
    }
    return data;
}

auto run_trainsize_sweep(const RunConfig &config, std::shared_ptr<const env::DomainModel> domain,
                         const std::vector<double> &fractions, const ProgressLine &progress)
    -> std::vector<SweepRow> {
    const auto &train = domain->domain().split.train;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ConfigError("sweep fraction " + std::to_string(f) + " outside (0, 1]");
        }
        if (std::llround(f * static_cast<double>(train.size())) < 1) {
            throw ConfigError("sweep fraction " + std::to_string(f) + " selects no train variants");
        }
    }
    const auto &test = domain->domain().split.test;
    const auto seeds = static_cast<std::size_t>(config.sweep_seeds);
    std::vector<SweepRow> rows(fractions.size() * seeds);
    std::mutex progress_mutex;

    parallel_for(rows.size(), config.workers, [&](std::size_t j) {
        const double f = fractions[j / seeds];
        const auto s = static_cast<int>(j % seeds);
        // Seed 0 reproduces the main run's meta-training stream.
        const auto seed = s == 0 ? meta_seed(config) : derive_seed(meta_seed(config), {static_cast<std::uint64_t>(s)});
        std::vector<task::VariantRef> subset = train;
        const auto n = static_cast<std::size_t>(std::llround(f * static_cast<double>(train.size())));
        if (n < train.size()) {
            Rng rng(derive_seed(seed, {0x5B5E7}));
            for (std::size_t i = 0; i < n; ++i) {
                const auto k = i + static_cast<std::size_t>(uniform_index(rng, subset.size() - i));
                std::swap(subset[i], subset[k]);
            }
            subset.resize(n);
        }
        const auto trained = meta_train_index(domain, subset, config.meta, seed);
        const auto retrieval = evaluate_retrieval(config, *domain, trained.model, test);
        ResultsDataset tmp;
        tmp.retrieval = retrieval;
        const auto agg = aggregate(tmp);
        rows[j] = {f, s, seed, static_cast<int>(subset.size()), agg.retrieval.front()};
        if (progress) {
            const std::lock_guard lock(progress_mutex);
            std::ostringstream msg;
            msg << "fraction=" << f << " seed=" << s << " train=" << subset.size()
                << " sufficient=" << rows[j].summary.sufficient << " extra=" << rows[j].summary.extra
                << " missing=" << rows[j].summary.missing;
            progress(msg.str());
        }
    });
    return rows;
}

void write_sweep(const std::filesystem::path &dir, const std::vector<SweepRow> &rows, std::uint64_t master_seed) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "sweep.csv", std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + (dir / "sweep.csv").string());
    }
    os.precision(17);
    os << "fraction,seed_index,seed,train_variants,test_variants,sufficient,extra,missing,master_seed\n";
    for (const auto &r : rows) {
        os << r.fraction << ',' << r.seed_index << ',' << r.seed << ',' << r.train_variants << ','
           << r.summary.variants << ',' << r.summary.sufficient << ',' << r.summary.extra << ',' << r.summary.missing
           << ',' << master_seed << '\n';
    }

    std::ofstream agg(dir / "sweep_aggregate.csv", std::ios::trunc);
    agg.precision(17);
    agg << "fraction,seeds,sufficient,sufficient_ci_lo,sufficient_ci_hi,extra,missing\n";
    std::vector<double> seen;
    for (const auto &r : rows) {
        if (std::find(seen.begin(), seen.end(), r.fraction) != seen.end()) {
            continue;
        }
        seen.push_back(r.fraction);
        std::vector<double> suff;
        double extra = 0.0;
        double missing = 0.0;
        for (const auto &q : rows) {
            if (q.fraction == r.fraction) {
                suff.push_back(q.summary.sufficient);
                extra += q.summary.extra;
                missing += q.summary.missing;
            }
        }
        const auto ci = mean_ci95(suff);
        const auto n = static_cast<double>(suff.size());
        agg << r.fraction << ',' << suff.size() << ',' << ci.mean << ',' << ci.lo << ',' << ci.hi << ',' << extra / n
            << ',' << missing / n << '\n';
    }
}

auto file_hash(const std::filesystem::path &path) -> std::string {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw LoadError("cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << is.rdbuf();
    return hex(fnv1a64(buf.str()));
}

auto make_manifest(const RunConfig &config, const task::Domain &domain,
                   const std::vector<std::filesystem::path> &checkpoints, const ResultsDataset *data)
    -> nlohmann::json {
    nlohmann::json m;
    m["format"] = "oihrl-run-manifest/1";
    m["config"] = run_config_to_json(config);
    m["master_seed"] = config.master_seed;
    m["seeds"] = {{"meta_train", meta_seed(config)}, {"test_sample", test_sample_seed(config)}};
    m["domain"] = {{"name", domain.name},
                   {"hash", hex(task::domain_hash(domain))},
                   {"options", domain.graph.option_count()},
                   {"train_variants", domain.split.train.size()},
                   {"test_variants", domain.split.test.size()}};
    m["checkpoints"] = nlohmann::json::array();
    for (const auto &p : checkpoints) {
        m["checkpoints"].push_back({{"path", p.string()}, {"fnv1a64", file_hash(p)}});
    }
    if (data != nullptr) {
        nlohmann::json variants = nlohmann::json::array();
        std::vector<std::string> seen;
        for (const auto &r : data->retrieval) {
            if (std::find(seen.begin(), seen.end(), r.variant_id) == seen.end()) {
                seen.push_back(r.variant_id);
                variants.push_back({{"variant_id", r.variant_id}, {"variant_seed", r.variant_seed}});
            }
        }
        m["test_variants"] = variants;
    }
    return m;
}

void write_manifest(const std::filesystem::path &dir, const nlohmann::json &manifest) {
    std::filesystem::create_directories(dir);
    std::ofstream os(dir / "manifest.json", std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
    }
    os << manifest.dump(2) << '\n';
}

}    // namespace oihrl::harness
