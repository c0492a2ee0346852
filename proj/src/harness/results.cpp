#include "oihrl/harness/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "oihrl/common/errors.hpp"

namespace oihrl::harness {

namespace {

constexpr double kZ95 = 1.959963984540054;

auto split_csv(const std::string &line) -> std::vector<std::string> {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        out.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

template <typename T>
auto parse_number(const std::string &s, const std::string &where) -> T {
    T v{};
    const auto *end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) {
        throw LoadError(where + ": cannot parse '" + s + "'");
    }
    return v;
}

auto open_out(const std::filesystem::path &p) -> std::ofstream {
    std::ofstream os(p, std::ios::trunc);
    if (!os) {
        throw std::runtime_error("cannot write " + p.string());
    }
    os.precision(17);
    return os;
}

/// Reads a CSV whose header must equal `header`; returns data rows.
auto read_table(const std::filesystem::path &p, const std::string &header) -> std::vector<std::vector<std::string>> {
    std::ifstream is(p);
    if (!is) {
        throw LoadError("cannot open " + p.string());
    }
    std::string line;
    if (!std::getline(is, line) || line != header) {
        throw LoadError(p.string() + ": unexpected header");
    }
    const auto cols = split_csv(header).size();
    std::vector<std::vector<std::string>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        auto cells = split_csv(line);
        if (cells.size() != cols) {
            throw LoadError(p.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(cols)
                            + " fields, got " + std::to_string(cells.size()));
        }
        rows.push_back(std::move(cells));
    }
    return rows;
}

const std::string kRetrievalHeader =
    "variant_id,baseline,sufficient,extra,missing,fetched,recipe_length,master_seed,variant_seed";
const std::string kCurvesHeader =
    "variant_id,baseline,iteration,mean_reward,mean_length,completion,master_seed,variant_seed";
const std::string kAggregateHeader = "baseline,iteration,mean,ci_lo,ci_hi,n";

void write_aggregate(const std::filesystem::path &p, const std::vector<AggregateRow> &rows) {
    auto os = open_out(p);
    os << kAggregateHeader << '\n';
    for (const auto &r : rows) {
        os << r.baseline << ',' << r.iteration << ',' << r.mean << ',' << r.ci_lo << ',' << r.ci_hi << ',' << r.n
           << '\n';
    }
}

auto baseline_order(const ResultsDataset &data) -> std::vector<std::string> {
    std::vector<std::string> order;
    auto add = [&](const std::string &b) {
        if (std::find(order.begin(), order.end(), b) == order.end()) {
            order.push_back(b);
        }
    };
    for (const auto &r : data.retrieval) {
        add(r.baseline);
    }
    for (const auto &c : data.curves) {
        add(c.baseline);
    }
    return order;
}

}    // namespace

auto retrieval_metrics(const std::vector<int> &fetched, const std::vector<int> &recipe) -> RetrievalMetrics {
    RetrievalMetrics m;
    for (int o : recipe) {
        if (!std::binary_search(fetched.begin(), fetched.end(), o)) {
            ++m.missing;
        }
    }
    for (int o : fetched) {
        if (!std::binary_search(recipe.begin(), recipe.end(), o)) {
            ++m.extra;
        }
    }
    m.sufficient = m.missing == 0;
    return m;
}

auto mean_ci95(const std::vector<double> &values) -> MeanCi {
    MeanCi r;
    if (values.empty()) {
        return r;
    }
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    r.mean = sum / n;
    if (values.size() < 2) {
        r.lo = r.hi = r.mean;
        return r;
    }
    double ss = 0.0;
    for (double v : values) {
        ss += (v - r.mean) * (v - r.mean);
    }
    const double half = kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    r.lo = r.mean - half;
    r.hi = r.mean + half;
    return r;
}

auto aggregate(const ResultsDataset &data, const std::vector<LengthBucket> &buckets) -> Aggregates {
    Aggregates agg;
    const auto order = baseline_order(data);

    std::map<std::pair<std::string, std::int64_t>, std::vector<const CurveRow *>> by_point;
    for (const auto &c : data.curves) {
        by_point[{c.baseline, c.iteration}].push_back(&c);
    }
    for (const auto &b : order) {
        for (const auto &[key, rows] : by_point) {
            if (key.first != b) {
                continue;
            }
            std::vector<double> rw;
            std::vector<double> ln;
            std::vector<double> cp;
            for (const auto *r : rows) {
                rw.push_back(r->mean_reward);
                ln.push_back(r->mean_length);
                cp.push_back(r->completion);
            }
            const int n = static_cast<int>(rows.size());
            const auto a = mean_ci95(rw);
            const auto l = mean_ci95(ln);
            const auto c = mean_ci95(cp);
            agg.reward.push_back({b, key.second, a.mean, a.lo, a.hi, n});
            agg.length.push_back({b, key.second, l.mean, l.lo, l.hi, n});
            agg.completion.push_back({b, key.second, c.mean, c.lo, c.hi, n});
        }
    }

    // Retrieval summary per baseline.
    for (const auto &b : order) {
        RetrievalSummary s;
        s.baseline = b;
        for (const auto &r : data.retrieval) {
            if (r.baseline != b) {
                continue;
            }
            ++s.variants;
            s.sufficient += r.metrics.sufficient ? 1.0 : 0.0;
            s.extra += r.metrics.extra;
            s.missing += r.metrics.missing;
        }
        if (s.variants > 0) {
            s.sufficient /= s.variants;
            s.extra /= s.variants;
            s.missing /= s.variants;
            agg.retrieval.push_back(s);
        }
    }

    // Completion by recipe length, from each (variant, baseline)'s final checkpoint.
    std::map<std::string, int> lengths;
    for (const auto &r : data.retrieval) {
        lengths[r.variant_id] = r.recipe_length;
    }
    std::map<std::pair<std::string, std::string>, const CurveRow *> last;
    for (const auto &c : data.curves) {
        auto &slot = last[{c.baseline, c.variant_id}];
        if (slot == nullptr || c.iteration > slot->iteration) {
            slot = &c;
        }
    }
    auto effective = buckets;
    if (effective.empty()) {
        std::set<int> distinct;
        for (const auto &[v, len] : lengths) {
            distinct.insert(len);
        }
        for (int len : distinct) {
            effective.push_back({len, len});
        }
    }
    for (const auto &b : order) {
        for (const auto &bucket : effective) {
            CompletionBucketRow row{b, bucket.lo, bucket.hi, 0, 0.0};
            for (const auto &[key, c] : last) {
                if (key.first != b) {
                    continue;
                }
                const auto it = lengths.find(key.second);
                if (it == lengths.end() || it->second < bucket.lo || it->second > bucket.hi) {
                    continue;
                }
                ++row.variants;
                row.completion += c->completion;
            }
            if (row.variants > 0) {
                row.completion /= row.variants;
                agg.by_length.push_back(row);
            }
        }
    }
    return agg;
}

auto final_rows(const std::vector<AggregateRow> &rows) -> std::vector<AggregateRow> {
    std::vector<AggregateRow> out;
    for (const auto &r : rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const AggregateRow &o) { return o.baseline == r.baseline; });
        if (it == out.end()) {
            out.push_back(r);
        } else if (r.iteration > it->iteration) {
            *it = r;
        }
    }
    return out;
}

void emit_results(const ResultsDataset &data, const Aggregates &agg, const std::filesystem::path &dir) {
    if (data.retrieval.empty() && data.curves.empty()) {
        throw InvalidInput("emit_results: empty dataset");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    {
        auto os = open_out(dir / "retrieval.csv");
        os << kRetrievalHeader << '\n';
        for (const auto &r : data.retrieval) {
            os << r.variant_id << ',' << r.baseline << ',' << (r.metrics.sufficient ? 1 : 0) << ',' << r.metrics.extra
               << ',' << r.metrics.missing << ',' << r.fetched << ',' << r.recipe_length << ',' << r.master_seed << ','
               << r.variant_seed << '\n';
        }
    }
    {
        auto os = open_out(dir / "curves.csv");
        os << kCurvesHeader << '\n';
        for (const auto &c : data.curves) {
            os << c.variant_id << ',' << c.baseline << ',' << c.iteration << ',' << c.mean_reward << ','
               << c.mean_length << ',' << c.completion << ',' << c.master_seed << ',' << c.variant_seed << '\n';
        }
    }
    write_aggregate(dir / "aggregate.csv", agg.reward);
    write_aggregate(dir / "aggregate_length.csv", agg.length);
    write_aggregate(dir / "aggregate_completion.csv", agg.completion);
    {
        auto os = open_out(dir / "completion_by_length.csv");
        os << "baseline,length_lo,length_hi,variants,completion\n";
        for (const auto &r : agg.by_length) {
            os << r.baseline << ',' << r.length_lo << ',' << r.length_hi << ',' << r.variants << ',' << r.completion
               << '\n';
        }
    }
    {
        auto os = open_out(dir / "retrieval_summary.csv");
        os << "baseline,variants,sufficient,extra,missing\n";
        for (const auto &r : agg.retrieval) {
            os << r.baseline << ',' << r.variants << ',' << r.sufficient << ',' << r.extra << ',' << r.missing << '\n';
        }
    }
}

auto parse_results(const std::filesystem::path &dir) -> ResultsDataset {
    ResultsDataset d;
    const auto rfile = (dir / "retrieval.csv").string();
    for (const auto &c : read_table(dir / "retrieval.csv", kRetrievalHeader)) {
        RetrievalRow r;
        r.variant_id = c[0];
        r.baseline = c[1];
        r.metrics.sufficient = parse_number<int>(c[2], rfile) != 0;
        r.metrics.extra = parse_number<int>(c[3], rfile);
        r.metrics.missing = parse_number<int>(c[4], rfile);
        r.fetched = parse_number<int>(c[5], rfile);
        r.recipe_length = parse_number<int>(c[6], rfile);
        r.master_seed = parse_number<std::uint64_t>(c[7], rfile);
        r.variant_seed = parse_number<std::uint64_t>(c[8], rfile);
        d.retrieval.push_back(std::move(r));
    }
    const auto cfile = (dir / "curves.csv").string();
    for (const auto &c : read_table(dir / "curves.csv", kCurvesHeader)) {
        CurveRow r;
        r.variant_id = c[0];
        r.baseline = c[1];
        r.iteration = parse_number<std::int64_t>(c[2], cfile);
        r.mean_reward = parse_number<double>(c[3], cfile);
        r.mean_length = parse_number<double>(c[4], cfile);
        r.completion = parse_number<double>(c[5], cfile);
        r.master_seed = parse_number<std::uint64_t>(c[6], cfile);
        r.variant_seed = parse_number<std::uint64_t>(c[7], cfile);
        d.curves.push_back(std::move(r));
    }
    return d;
}

auto parse_aggregate(const std::filesystem::path &file) -> std::vector<AggregateRow> {
    std::vector<AggregateRow> rows;
    const auto f = file.string();
    for (const auto &c : read_table(file, kAggregateHeader)) {
        rows.push_back({c[0], parse_number<std::int64_t>(c[1], f), parse_number<double>(c[2], f),
                        parse_number<double>(c[3], f), parse_number<double>(c[4], f), parse_number<int>(c[5], f)});
    }
    return rows;
}

}    // namespace oihrl::harness
