// Command-line front end: simulation, fitting, exhaustive oracle runs,
// scoring, structural Hamming distance, and the benchmark harness.
//
// Randomized subcommands refuse to run without --seed; pass "--seed auto"
// to draw one from the system (the chosen seed is printed so the run can
// be repeated). Exit codes: 0 success, 1 usage or input error, 2 internal
// invariant violation.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eevdag/bench.hpp"
#include "eevdag/graph.hpp"
#include "eevdag/json_io.hpp"
#include "eevdag/rng.hpp"
#include "eevdag/score.hpp"
#include "eevdag/search.hpp"
#include "eevdag/sem.hpp"
#include "eevdag/textio.hpp"

namespace {

using namespace eevdag;

std::uint64_t parse_seed(const std::string& text) {
    if (text == "auto") {
        std::random_device rd;
        const std::uint64_t seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        std::cout << "seed: " << seed << '\n';
        return seed;
    }
    unsigned long long value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("--seed: expected a non-negative integer or 'auto', got '" +
                                    text + "'");
    }
    return value;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    auto out = open_output(path);
    out << text;
    if (!out) throw std::invalid_argument("failed while writing '" + path + "'");
}

// --- simulate ---------------------------------------------------------------

struct SimulateOpts {
    std::string model_path;
    bool nonfaithful = false;
    int p = 0;
    std::string p_edge = "sparse";
    double coef_low = 0.1;
    double coef_high = 1.0;
    double variance_spread = 0.0;
    long n = 0;
    std::string seed;
    std::string out = "sim";
};

double resolve_p_edge(const std::string& text, int p) {
    if (text == "sparse") return std::min(3.0 / (2.0 * p - 2.0), 1.0);
    if (text == "dense") return 0.3;
    return parse_double_token(text, "--p-edge");
}

void run_simulate(const SimulateOpts& opts) {
    const int sources = (opts.model_path.empty() ? 0 : 1) + (opts.nonfaithful ? 1 : 0) +
                        (opts.p > 0 ? 1 : 0);
    if (sources != 1) {
        throw std::invalid_argument(
            "pick exactly one model source: --model FILE, --nonfaithful, or --p P");
    }
    const std::uint64_t seed = parse_seed(opts.seed);

    const LinearGaussianSem model = [&] {
        if (!opts.model_path.empty()) {
            auto in = open_input(opts.model_path);
            return read_model_json(in);
        }
        if (opts.nonfaithful) return nonfaithful_example();
        RandomModelConfig mc;
        mc.p = opts.p;
        mc.p_edge = resolve_p_edge(opts.p_edge, opts.p);
        mc.coef_low = opts.coef_low;
        mc.coef_high = opts.coef_high;
        mc.variance_spread = opts.variance_spread;
        mc.seed = Rng::derive(seed, {1});
        return random_model(mc);
    }();

    const DataSet data = sample(model, opts.n, Rng::derive(seed, {2}));
    {
        auto out = open_output(opts.out + ".csv");
        write_csv(out, data);
    }
    {
        auto out = open_output(opts.out + ".model.json");
        write_model_json(out, model);
    }
}

// --- fit --------------------------------------------------------------------

struct FitOpts {
    std::string data_path;
    std::vector<int> k_schedule;
    double lambda = 0;
    bool lambda_set = false;
    double epsilon = 0.1;
    double init_edge_prob = 0;
    bool init_set = false;
    long max_iterations = 100000;
    std::string seed;
    std::string out;
    std::string graph_out;
    std::string dot_out;
    bool verbose = false;
};

void run_fit(const FitOpts& opts) {
    const std::uint64_t seed = parse_seed(opts.seed);
    auto in = open_input(opts.data_path);
    const DataSet data = read_csv(in);
    const CovarianceSummary cov = sample_covariance(data);

    SearchConfig config;
    config.k_schedule = opts.k_schedule;
    if (opts.lambda_set) config.lambda = opts.lambda;
    if (opts.init_set) config.init_edge_prob = opts.init_edge_prob;
    config.epsilon = opts.epsilon;
    config.seed = seed;
    config.max_iterations = opts.max_iterations;

    const SearchResult result = gds_eev(cov, config);
    if (opts.out.empty()) {
        write_search_result_json(std::cout, result, opts.verbose);
    } else {
        auto out = open_output(opts.out);
        write_search_result_json(out, result, opts.verbose);
    }
    if (!opts.graph_out.empty()) {
        auto out = open_output(opts.graph_out);
        const Eigen::MatrixXd& b = result.best.b_hat;
        write_edge_list(out, result.best.dag,
                        [&](int parent, int child) { return b(child, parent); });
    }
    if (!opts.dot_out.empty()) write_text_file(opts.dot_out, to_dot(result.best.dag, data.names));
}

// --- oracle -----------------------------------------------------------------

struct OracleOpts {
    std::string data_path;
    std::string model_path;
    bool population = false;
    double lambda = 0;
    bool lambda_set = false;
    std::string score = "equal";
    int cap = kDagEnumerationCap;
    std::string out;
    std::string graph_out;
    std::string dot_out;
};

void run_oracle(const OracleOpts& opts) {
    if (opts.data_path.empty() == opts.model_path.empty()) {
        throw std::invalid_argument("pass exactly one of --data FILE.csv or --model FILE.json");
    }
    if (opts.population && opts.model_path.empty()) {
        throw std::invalid_argument("--population needs --model");
    }
    if (!opts.model_path.empty() && !opts.population) {
        throw std::invalid_argument("--model input is population-only: add --population");
    }
    ScoreKind kind;
    if (opts.score == "equal") {
        kind = ScoreKind::equal_variance;
    } else if (opts.score == "pernode") {
        kind = ScoreKind::per_node;
    } else {
        throw std::invalid_argument("--score must be 'equal' or 'pernode'");
    }

    std::vector<std::string> names;
    CovarianceSummary cov{1, Eigen::MatrixXd::Identity(1, 1)};
    double lambda = 0;
    if (!opts.data_path.empty()) {
        auto in = open_input(opts.data_path);
        const DataSet data = read_csv(in);
        names = data.names;
        cov = sample_covariance(data);
        lambda = opts.lambda_set ? opts.lambda : default_lambda(cov.n);
    } else {
        auto in = open_input(opts.model_path);
        const LinearGaussianSem model = read_model_json(in);
        names = default_names(model.p());
        cov = CovarianceSummary::population(population_covariance(model));
        lambda = opts.lambda_set ? opts.lambda : 1e-6;
    }

    const Fit fit = exhaustive_search_serial(cov, lambda, kind, opts.cap);
    if (opts.out.empty()) {
        write_fit_json(std::cout, fit);
    } else {
        auto out = open_output(opts.out);
        write_fit_json(out, fit);
    }
    if (!opts.graph_out.empty()) {
        auto out = open_output(opts.graph_out);
        const Eigen::MatrixXd& b = fit.b_hat;
        write_edge_list(out, fit.dag, [&](int parent, int child) { return b(child, parent); });
    }
    if (!opts.dot_out.empty()) write_text_file(opts.dot_out, to_dot(fit.dag, names));
}

// --- score ------------------------------------------------------------------

struct ScoreOpts {
    std::string data_path;
    std::string graph_path;
    std::string alpha_path;
    double lambda = 0;
    bool lambda_set = false;
    std::string out;
};

Eigen::VectorXd read_alpha_file(const std::string& path, int p) {
    auto in = open_input(path);
    std::vector<double> values;
    std::string tok;
    while (in >> tok) values.push_back(parse_double_token(tok, path));
    if (static_cast<int>(values.size()) != p) {
        throw std::invalid_argument(path + ": expected " + std::to_string(p) +
                                    " noise weights, got " + std::to_string(values.size()));
    }
    return Eigen::Map<Eigen::VectorXd>(values.data(), p);
}

void run_score(const ScoreOpts& opts) {
    auto data_in = open_input(opts.data_path);
    const DataSet data = read_csv(data_in);
    const CovarianceSummary cov = sample_covariance(data);

    auto graph_in = open_input(opts.graph_path);
    const EdgeListFile file = read_edge_list(graph_in);
    if (file.declared_p && *file.declared_p != data.p()) {
        throw std::invalid_argument("graph declares p = " + std::to_string(*file.declared_p) +
                                    " but the data has " + std::to_string(data.p()) + " columns");
    }
    const Dag dag = dag_from_edge_list(file, data.p());
    const double lambda = opts.lambda_set ? opts.lambda : default_lambda(cov.n);

    std::optional<Eigen::VectorXd> alpha;
    if (!opts.alpha_path.empty()) alpha = read_alpha_file(opts.alpha_path, data.p());

    const auto equal = equal_variance_bic(dag, cov, lambda, alpha ? &*alpha : nullptr);
    const auto per_node = per_node_variance_bic(dag, cov, lambda);
    if (!equal || !per_node) {
        throw std::invalid_argument("score undefined: the covariance is degenerate on this graph");
    }

    nlohmann::ordered_json doc;
    doc["equal_variance"] = fit_to_json(*equal);
    doc["per_node"] = fit_to_json(*per_node);
    if (opts.out.empty()) {
        std::cout << doc.dump(2) << '\n';
    } else {
        auto out = open_output(opts.out);
        out << doc.dump(2) << '\n';
    }
}

// --- shd --------------------------------------------------------------------

struct ShdOpts {
    std::string graph_a;
    std::string graph_b;
    bool as_cpdag = false;
    int p = 0;
};

void run_shd(const ShdOpts& opts) {
    auto in_a = open_input(opts.graph_a);
    const EdgeListFile file_a = read_edge_list(in_a);
    auto in_b = open_input(opts.graph_b);
    const EdgeListFile file_b = read_edge_list(in_b);

    std::optional<int> p;
    if (opts.p > 0) {
        p = opts.p;
    } else if (file_a.declared_p && file_b.declared_p) {
        if (*file_a.declared_p != *file_b.declared_p) {
            throw std::invalid_argument(
                "the graphs declare different vertex counts (" +
                std::to_string(*file_a.declared_p) + " vs " + std::to_string(*file_b.declared_p) +
                ")");
        }
        p = *file_a.declared_p;
    } else if (file_a.declared_p || file_b.declared_p) {
        p = file_a.declared_p ? *file_a.declared_p : *file_b.declared_p;
    } else {
        int max_vertex = -1;
        for (const EdgeListEntry& e : file_a.entries) max_vertex = std::max({max_vertex, e.parent, e.child});
        for (const EdgeListEntry& e : file_b.entries) max_vertex = std::max({max_vertex, e.parent, e.child});
        if (max_vertex >= 0) p = max_vertex + 1;
    }

    const Dag dag_a = dag_from_edge_list(file_a, p);
    const Dag dag_b = dag_from_edge_list(file_b, p);
    const int value = opts.as_cpdag ? shd(to_cpdag(dag_a), to_cpdag(dag_b))
                                    : shd(Cpdag::from_dag(dag_a), Cpdag::from_dag(dag_b));
    std::cout << value << '\n';
}

// --- bench ------------------------------------------------------------------

struct BenchOpts {
    std::string spec_path;
    std::string scenario;
    std::vector<int> p_values;
    std::vector<long> n_values;
    int replicates = 100;
    std::vector<double> a_values;
    int threads = 0;
    std::string seed;
    std::string out;
};

BenchmarkSpec spec_from_json(const std::string& path) {
    auto in = open_input(path);
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument(path + ": spec must be a JSON object");

    static const std::vector<std::string> known = {"scenario", "p",           "n",      "replicates",
                                                   "a",        "master_seed", "threads"};
    std::string unknown;
    for (const auto& item : doc.items()) {
        if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
            unknown += unknown.empty() ? "" : ", ";
            unknown += item.key();
        }
    }
    if (!unknown.empty()) {
        throw std::invalid_argument(path + ": unknown benchmark spec keys: " + unknown);
    }
    if (!doc.contains("scenario") || !doc["scenario"].is_string()) {
        throw std::invalid_argument(path + ": key 'scenario' must be a string");
    }

    BenchmarkSpec spec;
    spec.scenario = scenario_from_name(doc["scenario"].get<std::string>());
    const auto int_list = [&](const char* key, auto& target) {
        if (!doc.contains(key)) return;
        if (!doc[key].is_array()) throw std::invalid_argument(path + ": key '" + key + "' must be an array of integers");
        for (const auto& v : doc[key]) {
            if (!v.is_number_integer()) {
                throw std::invalid_argument(path + ": key '" + key + "' must be an array of integers");
            }
            target.push_back(v.template get<long>());
        }
    };
    int_list("p", spec.p_values);
    int_list("n", spec.n_values);
    if (doc.contains("a")) {
        if (!doc["a"].is_array()) throw std::invalid_argument(path + ": key 'a' must be an array of numbers");
        for (const auto& v : doc["a"]) {
            if (!v.is_number()) throw std::invalid_argument(path + ": key 'a' must be an array of numbers");
            spec.a_values.push_back(v.get<double>());
        }
    }
    if (doc.contains("replicates")) {
        if (!doc["replicates"].is_number_integer()) {
            throw std::invalid_argument(path + ": key 'replicates' must be an integer");
        }
        spec.replicates = doc["replicates"].get<int>();
    }
    if (doc.contains("threads")) {
        if (!doc["threads"].is_number_integer()) {
            throw std::invalid_argument(path + ": key 'threads' must be an integer");
        }
        spec.threads = doc["threads"].get<int>();
    }
    if (doc.contains("master_seed")) {
        if (!doc["master_seed"].is_number_integer() && !doc["master_seed"].is_number_unsigned()) {
            throw std::invalid_argument(path + ": key 'master_seed' must be a non-negative integer");
        }
        spec.master_seed = doc["master_seed"].get<std::uint64_t>();
    } else {
        spec.master_seed = std::uint64_t(-1);  // sentinel: caller must supply --seed
    }
    return spec;
}

void run_bench(const BenchOpts& opts) {
    if (opts.spec_path.empty() == opts.scenario.empty()) {
        throw std::invalid_argument("pass exactly one of --spec FILE.json or --scenario NAME");
    }

    BenchmarkSpec spec;
    if (!opts.spec_path.empty()) {
        spec = spec_from_json(opts.spec_path);
        if (!opts.seed.empty()) {
            spec.master_seed = parse_seed(opts.seed);
        } else if (spec.master_seed == std::uint64_t(-1)) {
            throw std::invalid_argument(
                "benchmark needs a master seed: add 'master_seed' to the spec or pass --seed");
        }
        if (opts.threads > 0) spec.threads = opts.threads;
    } else {
        spec.scenario = scenario_from_name(opts.scenario);
        spec.p_values = opts.p_values;
        spec.n_values = opts.n_values;
        spec.replicates = opts.replicates;
        spec.a_values = opts.a_values;
        spec.threads = opts.threads;
        if (opts.seed.empty()) {
            throw std::invalid_argument("benchmark is randomized: pass --seed N or --seed auto");
        }
        spec.master_seed = parse_seed(opts.seed);
    }

    const BenchmarkReport report = spec.scenario == Scenario::perturbation
                                       ? perturbation_sweep(spec)
                                       : run_benchmark(spec);

    const std::string prefix =
        opts.out.empty() ? "bench_" + scenario_name(report.spec.scenario) : opts.out;
    {
        auto out = open_output(prefix + ".json");
        write_report_json(out, report);
    }
    const std::string table = report_text_table(report);
    write_text_file(prefix + ".txt", table);
    if (report.spec.scenario == Scenario::perturbation) {
        write_text_file(prefix + "_quantiles.csv", sweep_quantiles_csv(report));
    }
    std::cout << table;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structure learning for linear Gaussian models with equal error variances"};
    app.require_subcommand(1);

    SimulateOpts sim;
    CLI::App* sim_cmd = app.add_subcommand(
        "simulate", "Draw a dataset (and its generating model) from a linear Gaussian SEM");
    sim_cmd->add_option("--model", sim.model_path, "model JSON to sample from");
    sim_cmd->add_flag("--nonfaithful", sim.nonfaithful,
                      "use the fixed 3-variable cancellation model");
    sim_cmd->add_option("--p", sim.p, "draw a random model on p variables");
    sim_cmd->add_option("--p-edge", sim.p_edge,
                        "edge probability: a number, 'sparse' (3/(2p-2)), or 'dense' (0.3)");
    sim_cmd->add_option("--coef-low", sim.coef_low, "minimal coefficient magnitude");
    sim_cmd->add_option("--coef-high", sim.coef_high, "maximal coefficient magnitude");
    sim_cmd->add_option("--variance-spread", sim.variance_spread,
                        "noise variances drawn from [1-a, 1+a]");
    sim_cmd->add_option("--n", sim.n, "number of rows")->required();
    sim_cmd->add_option("--seed", sim.seed, "integer or 'auto' (prints the chosen seed)")
        ->required();
    sim_cmd->add_option("--out", sim.out, "output prefix: writes PREFIX.csv and PREFIX.model.json");

    FitOpts fit;
    CLI::App* fit_cmd =
        app.add_subcommand("fit", "Greedy equal-variance structure search on a dataset");
    fit_cmd->add_option("--data", fit.data_path, "dataset CSV")->required();
    fit_cmd->add_option("--k-schedule", fit.k_schedule, "restart pool sizes")->delimiter(',');
    fit_cmd->add_option("--lambda", fit.lambda, "penalty per edge (default log(n)/2)");
    fit_cmd->add_option("--epsilon", fit.epsilon, "uniform share of the move sampler");
    fit_cmd->add_option("--init-edge-prob", fit.init_edge_prob,
                        "edge probability of restart graphs (default 1/(p-1))");
    fit_cmd->add_option("--max-iterations", fit.max_iterations, "per-restart cap");
    fit_cmd->add_option("--seed", fit.seed, "integer or 'auto' (prints the chosen seed)")
        ->required();
    fit_cmd->add_option("--out", fit.out, "search result JSON (default: standard output)");
    fit_cmd->add_option("--graph-out", fit.graph_out, "fitted edge list with weights");
    fit_cmd->add_option("--dot", fit.dot_out, "fitted graph in DOT form");
    fit_cmd->add_flag("--verbose", fit.verbose, "include accepted-score traces");

    OracleOpts oracle;
    CLI::App* oracle_cmd = app.add_subcommand(
        "oracle", "Exhaustive global score minimization (small p only)");
    oracle_cmd->add_option("--data", oracle.data_path, "dataset CSV");
    oracle_cmd->add_option("--model", oracle.model_path,
                           "model JSON; scores its analytic covariance");
    oracle_cmd->add_flag("--population", oracle.population,
                         "use the model's population covariance (default lambda 1e-6)");
    oracle_cmd->add_option("--lambda", oracle.lambda, "penalty per edge");
    oracle_cmd->add_option("--score", oracle.score, "'equal' (default) or 'pernode'");
    oracle_cmd->add_option("--cap", oracle.cap, "largest p the enumeration accepts");
    oracle_cmd->add_option("--out", oracle.out, "fit JSON (default: standard output)");
    oracle_cmd->add_option("--graph-out", oracle.graph_out, "best edge list with weights");
    oracle_cmd->add_option("--dot", oracle.dot_out, "best graph in DOT form");

    ScoreOpts score;
    CLI::App* score_cmd = app.add_subcommand(
        "score", "Score a fixed graph: equal-variance and per-node-variance records");
    score_cmd->add_option("--data", score.data_path, "dataset CSV")->required();
    score_cmd->add_option("--graph", score.graph_path, "edge-list file")->required();
    score_cmd->add_option("--alpha", score.alpha_path,
                          "file of p noise weights for the weighted equal-variance score");
    score_cmd->add_option("--lambda", score.lambda, "penalty per edge (default log(n)/2)");
    score_cmd->add_option("--out", score.out, "score JSON (default: standard output)");

    ShdOpts shd_opts;
    CLI::App* shd_cmd =
        app.add_subcommand("shd", "Structural Hamming distance between two graphs");
    shd_cmd->add_option("graph_a", shd_opts.graph_a, "first edge-list file")->required();
    shd_cmd->add_option("graph_b", shd_opts.graph_b, "second edge-list file")->required();
    shd_cmd->add_flag("--as-cpdag", shd_opts.as_cpdag,
                      "compare Markov equivalence classes instead of the DAGs");
    shd_cmd->add_option("--p", shd_opts.p, "vertex count when the files do not declare one");

    BenchOpts bench;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "Monte Carlo benchmark scenarios with fixed seeds");
    bench_cmd->add_option("--spec", bench.spec_path, "benchmark spec JSON");
    bench_cmd->add_option("--scenario", bench.scenario,
                          "sparse, dense, perturbation, or nonfaithful");
    bench_cmd->add_option("--p", bench.p_values, "variable counts")->delimiter(',');
    bench_cmd->add_option("--n", bench.n_values, "sample sizes")->delimiter(',');
    bench_cmd->add_option("--reps", bench.replicates, "replicates per cell");
    bench_cmd->add_option("--a", bench.a_values, "perturbation levels")->delimiter(',');
    bench_cmd->add_option("--threads", bench.threads,
                          "worker count (default: EEVDAG_THREADS, then all cores)");
    bench_cmd->add_option("--seed", bench.seed, "integer or 'auto' (prints the chosen seed)");
    bench_cmd->add_option("--out", bench.out, "output prefix (default bench_SCENARIO)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim_cmd->parsed()) run_simulate(sim);
        if (fit_cmd->parsed()) run_fit(fit);
        if (oracle_cmd->parsed()) run_oracle(oracle);
        if (score_cmd->parsed()) run_score(score);
        if (shd_cmd->parsed()) run_shd(shd_opts);
        if (bench_cmd->parsed()) run_bench(bench);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
