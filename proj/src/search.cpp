#include "eevdag/search.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "eevdag/json_io.hpp"
#include "eevdag/rng.hpp"

namespace eevdag {

namespace {

double ascending_mean(const Eigen::VectorXd& v) {
    double sum = 0.0;
    for (int j = 0; j < v.size(); ++j) sum += v[j];
    return sum / static_cast<double>(v.size());
}

// Score of a residual-variance state; false when undefined. Built from the
// same helpers as the from-scratch fits, with the same summation order, so
// incremental and full scores agree bit for bit.
bool state_score(ScoreKind kind, long n, const Eigen::VectorXd& v, double floor, double lambda,
                 int edge_count, double& out) {
    const int p = static_cast<int>(v.size());
    if (kind == ScoreKind::equal_variance) {
        const double pooled = ascending_mean(v);
        if (!(pooled > floor)) return false;
        out = equal_variance_nll(n, p, pooled) + lambda * edge_count;
        return true;
    }
    for (int j = 0; j < p; ++j)
        if (!(v[j] > floor)) return false;
    out = per_node_nll(n, v) + lambda * edge_count;
    return true;
}

std::vector<int> with_parent(const std::vector<int>& pa, int add) {
    std::vector<int> out = pa;
    out.insert(std::upper_bound(out.begin(), out.end(), add), add);
    return out;
}

std::vector<int> without_parent(const std::vector<int>& pa, int drop) {
    std::vector<int> out;
    out.reserve(pa.size());
    for (int x : pa)
        if (x != drop) out.push_back(x);
    return out;
}

struct Candidate {
    Move move;
    double score = 0.0;
    int new_edge_count = 0;
    int n_updates = 0;
    int node[2] = {0, 0};
    double value[2] = {0.0, 0.0};
};

// Draws moves without replacement. A draw is uniform over the remaining
// pool with probability epsilon; otherwise a child node is picked with
// probability (1 - eps) v_j / sum(v) + eps / p restricted to nodes that
// still have moves, then a move into that node uniformly.
class MoveSampler {
public:
    MoveSampler(const std::vector<Move>& moves, int p, double epsilon)
        : moves_(moves), epsilon_(epsilon), p_(p), pos_(moves.size()), bucket_(p),
          bucket_pos_(moves.size()) {
        remaining_.reserve(moves.size());
        for (int id = 0; id < static_cast<int>(moves.size()); ++id) {
            pos_[id] = id;
            remaining_.push_back(id);
            const int child = moves[id].edge.child;
            bucket_pos_[id] = {child, static_cast<int>(bucket_[child].size())};
            bucket_[child].push_back(id);
        }
    }

    bool empty() const { return remaining_.empty(); }

    int draw(Rng& rng, const Eigen::VectorXd& v) {
        int id = -1;
        if (rng.uniform() < epsilon_) {
            id = remaining_[rng.below(remaining_.size())];
        } else {
            double total_v = 0.0;
            for (int j = 0; j < p_; ++j) total_v += std::max(v[j], 0.0);
            double restricted = 0.0;
            if (total_v > 0.0)
                for (int j = 0; j < p_; ++j)
                    if (!bucket_[j].empty()) restricted += weight(v, total_v, j);
            if (restricted <= 0.0) {
                id = remaining_[rng.below(remaining_.size())];
            } else {
                const double r = rng.uniform() * restricted;
                int chosen = -1;
                double acc = 0.0;
                for (int j = 0; j < p_; ++j) {
                    if (bucket_[j].empty()) continue;
                    chosen = j;
                    acc += weight(v, total_v, j);
                    if (r < acc) break;
                }
                id = bucket_[chosen][rng.below(bucket_[chosen].size())];
            }
        }
        erase(id);
        return id;
    }

private:
    double weight(const Eigen::VectorXd& v, double total_v, int j) const {
        return (1.0 - epsilon_) * std::max(v[j], 0.0) / total_v + epsilon_ / p_;
    }

    void erase(int id) {
        const int i = pos_[id];
        const int last = remaining_.back();
        remaining_[i] = last;
        pos_[last] = i;
        remaining_.pop_back();
        const auto [child, bi] = bucket_pos_[id];
        const int blast = bucket_[child].back();
        bucket_[child][bi] = blast;
        bucket_pos_[blast] = {child, bi};
        bucket_[child].pop_back();
    }

    const std::vector<Move>& moves_;
    double epsilon_;
    int p_;
    std::vector<int> remaining_;
    std::vector<int> pos_;
    std::vector<std::vector<int>> bucket_;
    std::vector<std::pair<int, int>> bucket_pos_;
};

RestartTrace run_restart(const CovarianceSummary& cov, ScoreKind kind, double lambda,
                         double floor, int k, double init_prob, double epsilon,
                         long max_iterations, std::uint64_t init_seed) {
    const int p = cov.p();
    const long n = cov.n;
    RestartTrace trace;
    trace.k = k;
    trace.init_seed = init_seed;
    Rng rng(init_seed);

    // Random sparse start: Fisher-Yates order, then one uniform per forward
    // pair in lexicographic position order.
    std::vector<int> order(p);
    for (int i = 0; i < p; ++i) order[i] = i;
    for (int i = p - 1; i >= 1; --i)
        std::swap(order[i], order[static_cast<int>(rng.below(i + 1))]);
    std::vector<Edge> init_edges;
    for (int s = 0; s < p; ++s)
        for (int t = s + 1; t < p; ++t)
            if (rng.uniform() < init_prob) init_edges.push_back({order[s], order[t]});
    Dag g(p, std::move(init_edges));

    auto node_variances = [&](const Dag& d) -> std::optional<Eigen::VectorXd> {
        Eigen::VectorXd out(p);
        for (int j = 0; j < p; ++j) {
            auto rv = residual_variance(cov.S, j, d.parents(j));
            if (!rv) return std::nullopt;
            out[j] = *rv;
        }
        return out;
    };

    double current = 0.0;
    auto v0 = node_variances(g);
    if (!(v0 && state_score(kind, n, *v0, floor, lambda, g.edge_count(), current))) {
        // Random start can be degenerate on ill-conditioned input; retreat to
        // the empty graph before declaring the covariance unusable.
        g = Dag(p);
        v0 = node_variances(g);
        if (!(v0 && state_score(kind, n, *v0, floor, lambda, 0, current)))
            throw std::invalid_argument("covariance is too degenerate to score any start graph");
    }
    Eigen::VectorXd v = std::move(*v0);
    trace.accepted_scores.push_back(current);

    int edges = g.edge_count();
    Eigen::VectorXd scratch(p);

    auto evaluate = [&](const Move& m) -> std::optional<Candidate> {
        Candidate c;
        c.move = m;
        const int u = m.edge.parent;
        const int w = m.edge.child;
        scratch = v;
        if (m.kind == MoveKind::add) {
            auto rv = residual_variance(cov.S, w, with_parent(g.parents(w), u));
            if (!rv) return std::nullopt;
            scratch[w] = *rv;
            c.node[0] = w;
            c.value[0] = *rv;
            c.n_updates = 1;
            c.new_edge_count = edges + 1;
        } else if (m.kind == MoveKind::remove) {
            auto rv = residual_variance(cov.S, w, without_parent(g.parents(w), u));
            if (!rv) return std::nullopt;
            scratch[w] = *rv;
            c.node[0] = w;
            c.value[0] = *rv;
            c.n_updates = 1;
            c.new_edge_count = edges - 1;
        } else {
            auto rvw = residual_variance(cov.S, w, without_parent(g.parents(w), u));
            if (!rvw) return std::nullopt;
            auto rvu = residual_variance(cov.S, u, with_parent(g.parents(u), w));
            if (!rvu) return std::nullopt;
            scratch[w] = *rvw;
            scratch[u] = *rvu;
            c.node[0] = w;
            c.value[0] = *rvw;
            c.node[1] = u;
            c.value[1] = *rvu;
            c.n_updates = 2;
            c.new_edge_count = edges;
        }
        double s = 0.0;
        if (!state_score(kind, n, scratch, floor, lambda, c.new_edge_count, s))
            return std::nullopt;
        c.score = s;
        return c;
    };

    while (true) {
        if (trace.iterations >= max_iterations) break;  // cap trip, not certified
        ++trace.iterations;
        const std::vector<Move> moves = legal_moves(g);
        MoveSampler sampler(moves, p, epsilon);
        std::optional<Candidate> best;
        bool accepted = false;
        long draws = 0;
        while (!sampler.empty()) {
            const int id = sampler.draw(rng, v);
            ++draws;
            ++trace.evaluations;
            auto cand = evaluate(moves[id]);
            if (cand && cand->score < current) {
                if (!best || cand->score < best->score) best = std::move(cand);
                if (draws >= k) {
                    accepted = true;
                    break;
                }
            } else if (draws >= k && best) {
                accepted = true;
                break;
            }
        }
        if (!accepted && best) accepted = true;  // pool smaller than k
        if (!accepted) {
            trace.certified_local_optimum = true;
            break;
        }
        g = apply_move(g, best->move);
        for (int t = 0; t < best->n_updates; ++t) v[best->node[t]] = best->value[t];
        edges = best->new_edge_count;
        current = best->score;
        ++trace.moves_accepted;
        trace.accepted_scores.push_back(current);
    }

    auto fit = kind == ScoreKind::equal_variance ? equal_variance_bic(g, cov, lambda)
                                                 : per_node_variance_bic(g, cov, lambda);
    if (!fit) throw std::logic_error("final search state lost its defined score");
    trace.final_fit = std::move(*fit);
    return trace;
}

SearchResult greedy_search(const CovarianceSummary& cov, const SearchConfig& config,
                           ScoreKind kind) {
    if (cov.n < 1) throw std::invalid_argument("covariance summary needs n >= 1");
    if (cov.S.rows() < 1 || cov.S.cols() != cov.S.rows())
        throw std::invalid_argument("covariance matrix must be square and nonempty");
    if (!(config.epsilon >= 0.0 && config.epsilon <= 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    if (config.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
    const int p = cov.p();
    const double lambda = config.lambda ? *config.lambda : default_lambda(cov.n);
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be finite and nonnegative");
    std::vector<int> schedule = config.k_schedule;
    if (schedule.empty()) schedule = {p, 2 * p, 3 * p, 5 * p, 300};
    for (int k : schedule)
        if (k < 1) throw std::invalid_argument("neighbor budgets must be >= 1");
    double init_prob = 0.0;
    if (config.init_edge_prob)
        init_prob = *config.init_edge_prob;
    else if (p > 1)
        init_prob = 1.0 / (p - 1);
    if (!(init_prob >= 0.0 && init_prob <= 1.0))
        throw std::invalid_argument("init_edge_prob must lie in [0, 1]");
    const double floor = variance_floor(cov.S);

    SearchResult result;
    result.restarts.reserve(schedule.size());
    for (std::size_t r = 0; r < schedule.size(); ++r) {
        const std::uint64_t init_seed =
            Rng::derive(config.seed, {static_cast<std::uint64_t>(kind) + 1, r});
        RestartTrace trace = run_restart(cov, kind, lambda, floor, schedule[r], init_prob,
                                         config.epsilon, config.max_iterations, init_seed);
        result.total_evaluations += trace.evaluations;
        result.restarts.push_back(std::move(trace));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.restarts.size(); ++i)
        if (result.restarts[i].final_fit.score < result.restarts[best].final_fit.score) best = i;
    result.best = result.restarts[best].final_fit;
    result.best_restart = static_cast<int>(best);
    return result;
}

}  // namespace

SearchResult gds_eev(const CovarianceSummary& cov, const SearchConfig& config) {
    return greedy_search(cov, config, ScoreKind::equal_variance);
}

SearchResult greedy_per_node_baseline(const CovarianceSummary& cov, const SearchConfig& config) {
    return greedy_search(cov, config, ScoreKind::per_node);
}

std::vector<double> residual_bias(const Dag& dag, const Eigen::MatrixXd& b_hat,
                                  const CovarianceSummary& cov, double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0))
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    const int p = dag.p();
    if (cov.p() != p || b_hat.rows() != p || b_hat.cols() != p)
        throw std::invalid_argument("dimension mismatch");
    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k)
            if (b_hat(j, k) != 0.0 && !dag.has_edge(k, j))
                throw std::invalid_argument("coefficient outside the graph's support");
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - b_hat;
    const Eigen::VectorXd diag = (m * cov.S * m.transpose()).diagonal();
    double total = 0.0;
    for (int j = 0; j < p; ++j) total += std::max(diag[j], 0.0);
    std::vector<double> w(p, 1.0 / p);
    if (total > 0.0)
        for (int j = 0; j < p; ++j)
            w[j] = (1.0 - epsilon) * std::max(diag[j], 0.0) / total + epsilon / p;
    return w;
}

namespace {

// Scores one acyclic edge mask; false when the score is undefined there.
bool score_mask(const CovarianceSummary& cov, ScoreKind kind, double lambda, double floor,
                std::uint64_t mask, double& score, int& edge_count) {
    const int p = cov.p();
    std::vector<std::vector<int>> parents(p);
    int k = 0;
    const int m = p * (p - 1);
    for (int i = 0; i < m; ++i)
        if ((mask >> i) & 1ULL) {
            const Edge e = pair_from_index(p, i);
            parents[e.child].push_back(e.parent);
            ++k;
        }
    Eigen::VectorXd v(p);
    for (int j = 0; j < p; ++j) {
        auto rv = residual_variance(cov.S, j, parents[j]);
        if (!rv) return false;
        v[j] = *rv;
    }
    edge_count = k;
    return state_score(kind, cov.n, v, floor, lambda, k, score);
}

// Strict total order: score, then edge count, then lexicographic edge set.
// Bit i of a mask is the i-th ordered pair, already in (parent, child)
// order, so with equal edge counts the mask owning the lowest differing bit
// has the lexicographically earlier edge list.
bool mask_better(double sa, int ka, std::uint64_t ma, double sb, int kb, std::uint64_t mb) {
    if (sa != sb) return sa < sb;
    if (ka != kb) return ka < kb;
    if (ma == mb) return false;
    const std::uint64_t diff = ma ^ mb;
    const std::uint64_t lowest = diff & (~diff + 1ULL);
    return (ma & lowest) != 0;
}

Fit finish_exhaustive(const CovarianceSummary& cov, ScoreKind kind, double lambda,
                      std::uint64_t mask) {
    const Dag dag = dag_from_mask(cov.p(), mask);
    auto fit = kind == ScoreKind::equal_variance ? equal_variance_bic(dag, cov, lambda)
                                                 : per_node_variance_bic(dag, cov, lambda);
    if (!fit) throw std::logic_error("winning DAG lost its defined score");
    return *fit;
}

void check_exhaustive_inputs(const CovarianceSummary& cov, double lambda) {
    if (cov.n < 1) throw std::invalid_argument("covariance summary needs n >= 1");
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw std::invalid_argument("lambda must be finite and nonnegative");
    // Trips the shared matrix validation before any parallel region.
    (void)residual_variance(cov.S, 0, {});
}

}  // namespace

Fit exhaustive_search_serial(const CovarianceSummary& cov, double lambda, ScoreKind kind,
                             int cap) {
    check_exhaustive_inputs(cov, lambda);
    const double floor = variance_floor(cov.S);
    const std::vector<std::uint64_t> masks = acyclic_edge_masks(cov.p(), cap);
    bool found = false;
    double bs = 0.0;
    int bk = 0;
    std::uint64_t bm = 0;
    for (const std::uint64_t mask : masks) {
        double s = 0.0;
        int k = 0;
        if (!score_mask(cov, kind, lambda, floor, mask, s, k)) continue;
        if (!found || mask_better(s, k, mask, bs, bk, bm)) {
            found = true;
            bs = s;
            bk = k;
            bm = mask;
        }
    }
    if (!found) throw std::invalid_argument("no DAG has a defined score on this covariance");
    return finish_exhaustive(cov, kind, lambda, bm);
}

Fit exhaustive_search(const CovarianceSummary& cov, double lambda, ScoreKind kind, int cap,
                      int threads) {
#ifdef _OPENMP
    check_exhaustive_inputs(cov, lambda);
    const double floor = variance_floor(cov.S);
    const std::vector<std::uint64_t> masks = acyclic_edge_masks(cov.p(), cap);
    const int nt = threads > 0 ? threads : omp_get_max_threads();
    std::vector<char> t_found(nt, 0);
    std::vector<double> t_score(nt, 0.0);
    std::vector<int> t_k(nt, 0);
    std::vector<std::uint64_t> t_mask(nt, 0);
#pragma omp parallel num_threads(nt)
    {
        const int tid = omp_get_thread_num();
        bool found = false;
        double bs = 0.0;
        int bk = 0;
        std::uint64_t bm = 0;
#pragma omp for schedule(static)
        for (long i = 0; i < static_cast<long>(masks.size()); ++i) {
            double s = 0.0;
            int k = 0;
            if (!score_mask(cov, kind, lambda, floor, masks[i], s, k)) continue;
            if (!found || mask_better(s, k, masks[i], bs, bk, bm)) {
                found = true;
                bs = s;
                bk = k;
                bm = masks[i];
            }
        }
        t_found[tid] = found ? 1 : 0;
        t_score[tid] = bs;
        t_k[tid] = bk;
        t_mask[tid] = bm;
    }
    // Fold in thread order. The comparator is a strict total order over
    // distinct DAGs, so the winner does not depend on the partition anyway.
    bool found = false;
    double bs = 0.0;
    int bk = 0;
    std::uint64_t bm = 0;
    for (int t = 0; t < nt; ++t) {
        if (!t_found[t]) continue;
        if (!found || mask_better(t_score[t], t_k[t], t_mask[t], bs, bk, bm)) {
            found = true;
            bs = t_score[t];
            bk = t_k[t];
            bm = t_mask[t];
        }
    }
    if (!found) throw std::invalid_argument("no DAG has a defined score on this covariance");
    return finish_exhaustive(cov, kind, lambda, bm);
#else
    (void)threads;
    return exhaustive_search_serial(cov, lambda, kind, cap);
#endif
}

std::string best_score_select(const std::vector<std::pair<std::string, Fit>>& fits) {
    if (fits.empty()) throw std::invalid_argument("best_score_select needs at least one fit");
    for (const auto& [label, fit] : fits)
        if (fit.lambda != fits.front().second.lambda)
            throw std::invalid_argument("fits with different lambdas are not comparable");
    std::size_t best = 0;
    for (std::size_t i = 1; i < fits.size(); ++i)
        if (fits[i].second.score < fits[best].second.score) best = i;
    return fits[best].first;
}

nlohmann::ordered_json search_result_to_json(const SearchResult& result, bool verbose) {
    nlohmann::ordered_json root;
    root["best"] = fit_to_json(result.best);
    root["best_restart"] = result.best_restart;
    root["total_evaluations"] = result.total_evaluations;
    auto restarts = nlohmann::ordered_json::array();
    for (const RestartTrace& t : result.restarts) {
        nlohmann::ordered_json r;
        r["k"] = t.k;
        r["init_seed"] = t.init_seed;
        r["iterations"] = t.iterations;
        r["moves_accepted"] = t.moves_accepted;
        r["evaluations"] = t.evaluations;
        r["certified_local_optimum"] = t.certified_local_optimum;
        if (verbose) r["accepted_scores"] = t.accepted_scores;
        r["final"] = fit_to_json(t.final_fit);
        restarts.push_back(std::move(r));
    }
    root["restarts"] = std::move(restarts);
    return root;
}

void write_search_result_json(std::ostream& out, const SearchResult& result, bool verbose) {
    out << search_result_to_json(result, verbose).dump(2) << '\n';
}

}  // namespace eevdag
