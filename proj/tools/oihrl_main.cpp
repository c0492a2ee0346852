#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>

#include "oihrl/common/errors.hpp"
#include "oihrl/common/log.hpp"
#include "oihrl/harness/experiment.hpp"
#include "oihrl/task/domain_config.hpp"
#include "oihrl/task/validate.hpp"

namespace fs = std::filesystem;
using namespace oihrl;

namespace {

struct CommonOptions {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    std::string baselines;
    std::vector<double> fractions;
    int workers = 0;
    bool quiet = false;
};

auto load_config(const CommonOptions &o) -> harness::RunConfig {
    auto c = harness::load_run_config(o.config);
    if (o.seed_set) {
        c.master_seed = o.seed;
    }
    if (!o.out.empty()) {
        c.out_dir = o.out;
    }
    if (!o.baselines.empty()) {
        c.baselines = harness::parse_baseline_list(o.baselines);
    }
    if (!o.fractions.empty()) {
        c.fractions = o.fractions;
    }
    if (o.workers > 0) {
        c.workers = o.workers;
    }
    return c;
}

auto checkpoint_path(const harness::RunConfig &c) -> fs::path {
    return c.checkpoint ? *c.checkpoint : c.out_dir / "checkpoint.bin";
}

auto print_line(const std::string &s) -> void {
    std::cout << s << std::endl;
}

void print_summary(const harness::Aggregates &agg) {
    std::cout << std::fixed << std::setprecision(4);
    for (const auto &r : agg.retrieval) {
        std::cout << "retrieval " << r.baseline << ": sufficient=" << r.sufficient << " extra=" << r.extra
                  << " missing=" << r.missing << " (n=" << r.variants << ")\n";
    }
    const auto reward = harness::final_rows(agg.reward);
    const auto length = harness::final_rows(agg.length);
    for (std::size_t i = 0; i < reward.size(); ++i) {
        std::cout << "final " << reward[i].baseline << " @" << reward[i].iteration << ": reward=" << reward[i].mean
                  << " [" << reward[i].ci_lo << ", " << reward[i].ci_hi << "]";
        if (i < length.size()) {
            std::cout << " length=" << length[i].mean;
        }
        std::cout << '\n';
    }
    for (const auto &b : agg.by_length) {
        std::cout << "completion " << b.baseline << " length " << b.length_lo << "-" << b.length_hi << ": "
                  << b.completion << " (n=" << b.variants << ")\n";
    }
    std::cout.unsetf(std::ios::fixed);
}

auto cmd_generate(const CommonOptions &o) -> int {
    std::ifstream is(o.config);
    if (!is) {
        throw ConfigError("cannot open " + o.config);
    }
    const auto doc = nlohmann::json::parse(is);
    task::Domain domain;
    if (doc.contains("objects")) {
        domain = task::domain_from_json(doc);
    } else {
        const auto &gen = doc.contains("generator") ? doc.at("generator") : doc;
        const auto seed = o.seed_set ? o.seed : doc.value("seed", std::uint64_t{0});
        domain = task::generate_craftworld_domain(task::generator_config_from_json(gen), seed);
        domain.name = doc.value("name", std::string("craftworld"));
    }
    const auto report = task::validate_graph(domain.graph);
    for (const auto &f : report.findings) {
        std::cerr << task::to_string(f.kind) << ": " << f.message << '\n';
    }
    if (!report.clean()) {
        return 2;
    }
    const fs::path out = o.out.empty() ? fs::path("domain.json") : fs::path(o.out);
    if (out.has_parent_path()) {
        fs::create_directories(out.parent_path());
    }
    task::save_domain_config(domain, out);
    std::cout << "domain '" << domain.name << "': " << domain.graph.object_count() << " objects, "
              << domain.graph.option_count() << " options, " << domain.split.train.size() << " train / "
              << domain.split.validation.size() << " validation / " << domain.split.test.size()
              << " test variants -> " << out.string() << '\n';
    return 0;
}

auto cmd_meta_train(const CommonOptions &o) -> int {
    const auto config = load_config(o);
    const auto domain = std::make_shared<const env::DomainModel>(harness::load_domain(config.domain));
    fs::create_directories(config.out_dir);
    const auto every = std::max(1, config.meta.iterations / 20);
    const auto trained = harness::meta_train_index(
        domain, domain->domain().split.train, config.meta, harness::meta_seed(config),
        [&](const meta::IterationRecord &r) {
            if (!o.quiet && (r.iteration % every == 0 || r.iteration + 1 == config.meta.iterations)) {
                std::cout << "iteration " << r.iteration << " loss=" << r.mean_loss << " skipped=" << r.skipped
                          << std::endl;
            }
        });
    const auto ckpt = checkpoint_path(config);
    if (ckpt.has_parent_path()) {
        fs::create_directories(ckpt.parent_path());
    }
    index::save_checkpoint(ckpt, trained.model, task::domain_hash(domain->domain()));
    {
        std::ofstream os(config.out_dir / "metrics.csv", std::ios::trunc);
        meta::write_metrics(os, trained.report);
    }
    const auto retrieval =
        harness::evaluate_retrieval(config, *domain, trained.model, domain->domain().split.test);
    harness::ResultsDataset data;
    data.retrieval = retrieval;
    const auto agg = harness::aggregate(data);
    print_summary(agg);
    harness::write_manifest(config.out_dir, harness::make_manifest(config, domain->domain(), {ckpt}, nullptr));
    std::cout << "checkpoint -> " << ckpt.string() << '\n';
    return 0;
}

auto cmd_evaluate(const CommonOptions &o) -> int {
    const auto config = load_config(o);
    const auto domain = std::make_shared<const env::DomainModel>(harness::load_domain(config.domain));
    std::optional<index::IndexModel> model;
    std::vector<fs::path> checkpoints;
    const bool needs_index = std::any_of(config.baselines.begin(), config.baselines.end(), [](const auto &b) {
        return b.kind == harness::BaselineKind::oi_hrl;
    });
    if (needs_index) {
        const auto ckpt = checkpoint_path(config);
        if (!fs::exists(ckpt)) {
            throw ConfigError("checkpoint not found: " + ckpt.string() + " (run meta-train first)");
        }
        index::CheckpointExpectation expect;
        expect.domain_hash = task::domain_hash(domain->domain());
        expect.option_count = domain->option_count();
        expect.state_dim = domain->state_dim();
        model = index::load_checkpoint(ckpt, expect).model;
        checkpoints.push_back(ckpt);
    }
    const auto data = harness::run_evaluation(config, domain, model ? &*model : nullptr,
                                              o.quiet ? harness::ProgressLine{} : harness::ProgressLine(print_line));
    const auto agg = harness::aggregate(data, config.length_buckets);
    harness::emit_results(data, agg, config.out_dir);
    harness::write_manifest(config.out_dir, harness::make_manifest(config, domain->domain(), checkpoints, &data));
    print_summary(agg);
    return 0;
}

auto cmd_sweep(const CommonOptions &o) -> int {
    const auto config = load_config(o);
    const auto domain = std::make_shared<const env::DomainModel>(harness::load_domain(config.domain));
    const auto rows = harness::run_trainsize_sweep(config, domain, config.fractions,
                                                   o.quiet ? harness::ProgressLine{} : harness::ProgressLine(print_line));
    harness::write_sweep(config.out_dir, rows, config.master_seed);
    harness::write_manifest(config.out_dir, harness::make_manifest(config, domain->domain(), {}, nullptr));
    std::cout << "sweep -> " << (config.out_dir / "sweep.csv").string() << '\n';
    return 0;
}

auto cmd_report(const CommonOptions &o) -> int {
    std::vector<harness::LengthBucket> buckets;
    fs::path dir = o.out;
    if (!o.config.empty()) {
        const auto config = load_config(o);
        buckets = config.length_buckets;
        if (dir.empty()) {
            dir = config.out_dir;
        }
    }
    if (dir.empty()) {
        throw ConfigError("report needs --out <dir> or --config");
    }
    const auto data = harness::parse_results(dir);
    const auto agg = harness::aggregate(data, buckets);
    harness::emit_results(data, agg, dir);
    print_summary(agg);
    return 0;
}

}    // namespace

auto main(int argc, char **argv) -> int {
    CLI::App app{"Option indexing for hierarchical RL: domains, meta-training, evaluation"};
    app.require_subcommand(1);
    CommonOptions o;

    auto add_common = [&](CLI::App *sub, bool config_required) {
        auto *opt = sub->add_option("--config", o.config, "Run config (JSON)");
        if (config_required) {
            opt->required()->check(CLI::ExistingFile);
        }
        sub->add_option_function<std::uint64_t>(
            "--seed",
            [&](const std::uint64_t &s) {
                o.seed = s;
                o.seed_set = true;
            },
            "Master seed (overrides the config)");
        sub->add_option("--out", o.out, "Output directory");
        sub->add_flag("--quiet", o.quiet, "Suppress progress output");
    };

    auto *gen = app.add_subcommand("generate-domain", "Generate or validate a domain and write its config");
    add_common(gen, true);
    auto *mt = app.add_subcommand("meta-train", "Meta-train the option index and QGN; writes a checkpoint");
    add_common(mt, true);
    mt->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    auto *ev = app.add_subcommand("evaluate", "Train A2C policies on test variants for each baseline");
    add_common(ev, true);
    ev->add_option("--baselines", o.baselines, "Comma-separated: OI_HRL,HRL_N,HRL_N+2,HRL_FULL");
    ev->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    auto *sw = app.add_subcommand("sweep", "Retrieval quality versus train-set size");
    add_common(sw, true);
    sw->add_option("--fractions", o.fractions, "Train fractions in (0, 1]")->delimiter(',');
    sw->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
    auto *rp = app.add_subcommand("report", "Recompute aggregates from result tables");
    add_common(rp, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            return cmd_generate(o);
        }
        if (*mt) {
            return cmd_meta_train(o);
        }
        if (*ev) {
            return cmd_evaluate(o);
        }
        if (*sw) {
            return cmd_sweep(o);
        }
        if (*rp) {
            return cmd_report(o);
        }
    } catch (const ConfigError &e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
