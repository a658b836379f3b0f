#include "eevdag/bench.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"

#include "eevdag/rng.hpp"
#include "eevdag/sem.hpp"
#include "eevdag/textio.hpp"

namespace eevdag {

namespace {

using nlohmann::ordered_json;

constexpr const char* kGdsLabel = "gds_eev";
constexpr const char* kBaselineLabel = "per_node";

std::uint64_t scenario_tag(Scenario s) { return static_cast<std::uint64_t>(s) + 10; }

double mean_of(const std::vector<int>& xs) {
    double sum = 0.0;
    for (int x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<int>& xs, double mean) {
    if (xs.size() < 2) return 0.0;
    double sum = 0.0;
    for (int x : xs) {
        const double d = x - mean;
        sum += d * d;
    }
    return std::sqrt(sum / static_cast<double>(xs.size() - 1));
}

void finalize_method(MethodCell& cell) {
    cell.mean_shd_dag = mean_of(cell.shd_dag);
    cell.sd_shd_dag = sample_sd(cell.shd_dag, cell.mean_shd_dag);
    cell.mean_shd_cpdag = mean_of(cell.shd_cpdag);
    cell.sd_shd_cpdag = sample_sd(cell.shd_cpdag, cell.mean_shd_cpdag);
}

struct ReplicateOutcome {
    int gds_shd_dag = 0;
    int gds_shd_cpdag = 0;
    int baseline_shd_dag = 0;
    int baseline_shd_cpdag = 0;
    bool equal_variance_best = false;
    bool recovered = false;
};

ReplicateOutcome run_replicate(const BenchmarkSpec& spec, int p, long n, double a, int rep) {
    const std::uint64_t rep_seed =
        Rng::derive(spec.master_seed,
                    {scenario_tag(spec.scenario), static_cast<std::uint64_t>(p),
                     static_cast<std::uint64_t>(n), std::bit_cast<std::uint64_t>(a),
                     static_cast<std::uint64_t>(rep)});

    const LinearGaussianSem model = [&] {
        if (spec.scenario == Scenario::nonfaithful) return nonfaithful_example();
        RandomModelConfig mc;
        mc.p = p;
        mc.p_edge = scenario_edge_probability(spec.scenario, p);
        mc.variance_spread = a;
        mc.seed = Rng::derive(rep_seed, {1});
        return random_model(mc);
    }();
    const DataSet data = sample(model, n, Rng::derive(rep_seed, {2}));
    const CovarianceSummary cov = sample_covariance(data);

    SearchConfig gds_config;
    gds_config.seed = Rng::derive(rep_seed, {3});
    SearchConfig baseline_config;
    baseline_config.seed = Rng::derive(rep_seed, {4});

    const SearchResult gds = gds_eev(cov, gds_config);
    const SearchResult baseline = greedy_per_node_baseline(cov, baseline_config);

    const Dag& truth = model.dag();
    const Cpdag truth_dag = Cpdag::from_dag(truth);
    const Cpdag truth_class = to_cpdag(truth);

    ReplicateOutcome out;
    out.gds_shd_dag = shd(Cpdag::from_dag(gds.best.dag), truth_dag);
    out.gds_shd_cpdag = shd(to_cpdag(gds.best.dag), truth_class);
    out.baseline_shd_dag = shd(Cpdag::from_dag(baseline.best.dag), truth_dag);
    out.baseline_shd_cpdag = shd(to_cpdag(baseline.best.dag), truth_class);
    // The two methods optimize different model families, so the comparison
    // charges each fit for its variance parameters (one pooled versus p
    // per-node values). Within a family the charge is constant and cannot
    // change either search.
    Fit gds_full = gds.best;
    gds_full.score += gds_full.lambda;
    Fit baseline_full = baseline.best;
    baseline_full.score += baseline_full.lambda * static_cast<double>(p);
    out.equal_variance_best =
        best_score_select({{kGdsLabel, gds_full}, {kBaselineLabel, baseline_full}}) == kGdsLabel;
    out.recovered = gds.best.dag == truth;
    return out;
}

BenchmarkCell run_cell(const BenchmarkSpec& spec, int p, long n, double a, int threads) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<ReplicateOutcome> outcomes(spec.replicates);
    if (threads <= 1) {
        for (int rep = 0; rep < spec.replicates; ++rep) {
            outcomes[rep] = run_replicate(spec, p, n, a, rep);
        }
    } else {
        std::exception_ptr error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
        for (int rep = 0; rep < spec.replicates; ++rep) {
            try {
                outcomes[rep] = run_replicate(spec, p, n, a, rep);
            } catch (...) {
#ifdef _OPENMP
#pragma omp critical(eevdag_bench_error)
#endif
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
    }

    BenchmarkCell cell;
    cell.p = p;
    cell.n = n;
    cell.a = a;
    int best_count = 0;
    int recovered_count = 0;
    for (const ReplicateOutcome& out : outcomes) {
        cell.gds.shd_dag.push_back(out.gds_shd_dag);
        cell.gds.shd_cpdag.push_back(out.gds_shd_cpdag);
        cell.baseline.shd_dag.push_back(out.baseline_shd_dag);
        cell.baseline.shd_cpdag.push_back(out.baseline_shd_cpdag);
        best_count += out.equal_variance_best ? 1 : 0;
        recovered_count += out.recovered ? 1 : 0;
    }
    finalize_method(cell.gds);
    finalize_method(cell.baseline);
    const double reps = spec.replicates;
    cell.best_score_equal_variance_fraction = best_count / reps;
    cell.recovery_rate = recovered_count / reps;
    cell.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

BenchmarkSpec normalize_spec(const BenchmarkSpec& spec) {
    BenchmarkSpec out = spec;
    if (out.replicates < 1) throw std::invalid_argument("benchmark needs at least one replicate");
    if (out.p_values.empty()) {
        switch (out.scenario) {
            case Scenario::sparse:
            case Scenario::dense: out.p_values = {5}; break;
            case Scenario::perturbation: out.p_values = {10}; break;
            case Scenario::nonfaithful: out.p_values = {3}; break;
        }
    }
    if (out.n_values.empty()) {
        out.n_values = {out.scenario == Scenario::sparse || out.scenario == Scenario::dense
                            ? 1000L
                            : 500L};
    }
    if (out.scenario == Scenario::perturbation) {
        if (out.a_values.empty()) {
            for (int i = 0; i <= 9; ++i) out.a_values.push_back(i / 10.0);
        }
    } else if (!out.a_values.empty()) {
        throw std::invalid_argument("perturbation levels only apply to the perturbation scenario");
    } else {
        out.a_values = {0.0};
    }
    for (int p : out.p_values) {
        if (p < 2) throw std::invalid_argument("benchmark needs p >= 2");
        if (out.scenario == Scenario::nonfaithful && p != 3) {
            throw std::invalid_argument("the nonfaithful scenario is fixed at p = 3");
        }
    }
    for (long n : out.n_values) {
        if (n < 2) throw std::invalid_argument("benchmark needs n >= 2");
    }
    for (double a : out.a_values) {
        if (!(a >= 0.0 && a < 1.0)) {
            throw std::invalid_argument("perturbation level must lie in [0, 1)");
        }
    }
    return out;
}

ordered_json method_json(const MethodCell& cell) {
    ordered_json j;
    j["mean_shd_dag"] = cell.mean_shd_dag;
    j["sd_shd_dag"] = cell.sd_shd_dag;
    j["mean_shd_cpdag"] = cell.mean_shd_cpdag;
    j["sd_shd_cpdag"] = cell.sd_shd_cpdag;
    j["shd_dag"] = cell.shd_dag;
    j["shd_cpdag"] = cell.shd_cpdag;
    return j;
}

ordered_json body_json(const BenchmarkReport& report) {
    ordered_json spec_j;
    spec_j["scenario"] = scenario_name(report.spec.scenario);
    spec_j["p"] = report.spec.p_values;
    spec_j["n"] = report.spec.n_values;
    spec_j["replicates"] = report.spec.replicates;
    spec_j["a"] = report.spec.a_values;
    spec_j["master_seed"] = report.spec.master_seed;

    ordered_json cells = ordered_json::array();
    for (const BenchmarkCell& cell : report.cells) {
        ordered_json c;
        c["p"] = cell.p;
        c["n"] = cell.n;
        c["a"] = cell.a;
        c["methods"][kGdsLabel] = method_json(cell.gds);
        c["methods"][kBaselineLabel] = method_json(cell.baseline);
        c["best_score_equal_variance_fraction"] = cell.best_score_equal_variance_fraction;
        c["recovery_rate"] = cell.recovery_rate;
        cells.push_back(std::move(c));
    }

    ordered_json body;
    body["spec"] = std::move(spec_j);
    body["cells"] = std::move(cells);
    return body;
}

// Type-7 quantile: linear interpolation between order statistics.
double quantile(std::vector<int> xs, double q) {
    std::sort(xs.begin(), xs.end());
    const double h = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo]);
}

}  // namespace

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::sparse: return "sparse";
        case Scenario::dense: return "dense";
        case Scenario::perturbation: return "perturbation";
        case Scenario::nonfaithful: return "nonfaithful";
    }
    throw std::logic_error("unreachable scenario");
}

Scenario scenario_from_name(const std::string& name) {
    if (name == "sparse") return Scenario::sparse;
    if (name == "dense") return Scenario::dense;
    if (name == "perturbation") return Scenario::perturbation;
    if (name == "nonfaithful") return Scenario::nonfaithful;
    throw std::invalid_argument("unknown scenario '" + name +
                                "', expected sparse, dense, perturbation, or nonfaithful");
}

double scenario_edge_probability(Scenario s, int p) {
    if (p < 2) throw std::invalid_argument("edge probability needs p >= 2");
    double raw = 0.0;
    switch (s) {
        case Scenario::sparse: raw = 3.0 / (2.0 * p - 2.0); break;
        case Scenario::dense: raw = 0.3; break;
        case Scenario::perturbation: raw = 2.0 / (p - 1.0); break;
        case Scenario::nonfaithful:
            throw std::invalid_argument("the nonfaithful scenario uses a fixed model");
    }
    return std::min(raw, 1.0);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("EEVDAG_THREADS")) {
        const int value = static_cast<int>(parse_int_token(env, "EEVDAG_THREADS"));
        if (value < 1) throw std::invalid_argument("EEVDAG_THREADS must be positive");
        return value;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

BenchmarkReport run_benchmark(const BenchmarkSpec& spec) {
    BenchmarkReport report;
    report.spec = normalize_spec(spec);
    report.threads_used = resolve_threads(report.spec.threads);
    for (int p : report.spec.p_values) {
        for (long n : report.spec.n_values) {
            for (double a : report.spec.a_values) {
                report.cells.push_back(run_cell(report.spec, p, n, a, report.threads_used));
            }
        }
    }
    return report;
}

BenchmarkReport perturbation_sweep(const BenchmarkSpec& spec) {
    if (spec.scenario != Scenario::perturbation) {
        throw std::invalid_argument("perturbation_sweep needs the perturbation scenario");
    }
    return run_benchmark(spec);
}

OracleStudyReport recovery_oracle_study(const OracleStudyConfig& config) {
    OracleStudyConfig resolved = config;
    if (resolved.p_values.empty()) resolved.p_values = {3, 4};
    if (resolved.models < 1) throw std::invalid_argument("oracle study needs at least one model");
    if (!(resolved.lambda_pop > 0.0) || !std::isfinite(resolved.lambda_pop)) {
        throw std::invalid_argument("population penalty must be positive and finite");
    }
    if (!(resolved.variance_spread >= 0.0 && resolved.variance_spread < 1.0)) {
        throw std::invalid_argument("variance spread must lie in [0, 1)");
    }
    for (int p : resolved.p_values) {
        if (p < 2 || p > kDagEnumerationCap) {
            throw std::invalid_argument("oracle study needs 2 <= p <= enumeration cap");
        }
    }
    const int threads = resolve_threads(resolved.threads);

    OracleStudyReport report;
    report.config = resolved;
    for (int p : resolved.p_values) {
        const double p_edge =
            resolved.p_edge ? *resolved.p_edge : std::min(3.0 / (2.0 * p - 2.0), 1.0);
        std::vector<char> hits(resolved.models, 0);
        const auto run_one = [&](int i) {
            RandomModelConfig mc;
            mc.p = p;
            mc.p_edge = p_edge;
            mc.variance_spread = resolved.variance_spread;
            mc.seed = Rng::derive(resolved.seed,
                                  {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(i)});
            const LinearGaussianSem model = random_model(mc);
            const CovarianceSummary cov = CovarianceSummary::population(population_covariance(model));
            const Fit fit = exhaustive_search_serial(cov, resolved.lambda_pop);
            hits[i] = fit.dag == model.dag() ? 1 : 0;
        };
        if (threads <= 1) {
            for (int i = 0; i < resolved.models; ++i) run_one(i);
        } else {
            std::exception_ptr error = nullptr;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
            for (int i = 0; i < resolved.models; ++i) {
                try {
                    run_one(i);
                } catch (...) {
#ifdef _OPENMP
#pragma omp critical(eevdag_oracle_error)
#endif
                    if (!error) error = std::current_exception();
                }
            }
            if (error) std::rethrow_exception(error);
        }
        OracleStudyRow row;
        row.p = p;
        row.models = resolved.models;
        for (char h : hits) row.recovered += h;
        row.fraction = static_cast<double>(row.recovered) / static_cast<double>(row.models);
        report.rows.push_back(row);
    }
    return report;
}

std::string report_body_json(const BenchmarkReport& report) { return body_json(report).dump(2); }

void write_report_json(std::ostream& out, const BenchmarkReport& report) {
    ordered_json doc;
    doc["body"] = body_json(report);
    ordered_json env;
    env["threads_used"] = report.threads_used;
#ifdef _OPENMP
    env["openmp"] = true;
#else
    env["openmp"] = false;
#endif
    ordered_json walls = ordered_json::array();
    for (const BenchmarkCell& cell : report.cells) walls.push_back(cell.wall_seconds);
    env["wall_seconds"] = std::move(walls);
    doc["environment"] = std::move(env);
    out << doc.dump(2) << '\n';
}

std::string report_text_table(const BenchmarkReport& report) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-13s %3s %6s %4s %-8s %9s %8s %11s %10s %9s %9s\n",
                  "scenario", "p", "n", "a", "method", "shd_dag", "sd", "shd_cpdag", "sd",
                  "eev_best", "recovery");
    out += line;
    const std::string name = scenario_name(report.spec.scenario);
    for (const BenchmarkCell& cell : report.cells) {
        const auto row = [&](const char* method, const MethodCell& m) {
            std::snprintf(line, sizeof line,
                          "%-13s %3d %6ld %4.1f %-8s %9.3f %8.3f %11.3f %10.3f %9.2f %9.2f\n",
                          name.c_str(), cell.p, cell.n, cell.a, method, m.mean_shd_dag,
                          m.sd_shd_dag, m.mean_shd_cpdag, m.sd_shd_cpdag,
                          cell.best_score_equal_variance_fraction, cell.recovery_rate);
            out += line;
        };
        row(kGdsLabel, cell.gds);
        row(kBaselineLabel, cell.baseline);
    }
    return out;
}

std::string sweep_quantiles_csv(const BenchmarkReport& report) {
    static constexpr double kQuantiles[] = {0.0, 0.25, 0.5, 0.75, 1.0};
    std::string out = "a,method,quantile,value\n";
    for (const BenchmarkCell& cell : report.cells) {
        const auto rows = [&](const char* method, const MethodCell& m) {
            for (double q : kQuantiles) {
                out += format_double(cell.a);
                out += ',';
                out += method;
                out += ',';
                out += format_double(q);
                out += ',';
                out += format_double(quantile(m.shd_dag, q));
                out += '\n';
            }
        };
        rows(kGdsLabel, cell.gds);
        rows(kBaselineLabel, cell.baseline);
    }
    return out;
}

void write_oracle_report_json(std::ostream& out, const OracleStudyReport& report) {
    ordered_json doc;
    doc["models_per_p"] = report.config.models;
    doc["variance_spread"] = report.config.variance_spread;
    doc["lambda"] = report.config.lambda_pop;
    doc["seed"] = report.config.seed;
    ordered_json rows = ordered_json::array();
    for (const OracleStudyRow& row : report.rows) {
        ordered_json r;
        r["p"] = row.p;
        r["models"] = row.models;
        r["recovered"] = row.recovered;
        r["fraction"] = row.fraction;
        rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    out << doc.dump(2) << '\n';
}

std::string oracle_report_text(const OracleStudyReport& report) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%3s %8s %10s %9s\n", "p", "models", "recovered", "fraction");
    out += line;
    for (const OracleStudyRow& row : report.rows) {
        std::snprintf(line, sizeof line, "%3d %8d %10d %9.3f\n", row.p, row.models, row.recovered,
                      row.fraction);
        out += line;
    }
    return out;
}

}  // namespace eevdag
