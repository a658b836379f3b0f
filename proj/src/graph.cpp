#include "eevdag/graph.hpp"

#include <algorithm>
#include <iostream>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "eevdag/textio.hpp"

namespace eevdag {

namespace {

void check_vertex(int p, int v) {
    if (v < 0 || v >= p)
        throw std::invalid_argument("vertex index " + std::to_string(v) +
                                    " out of range for p = " + std::to_string(p));
}

void check_p(int p) {
    if (p < 1) throw std::invalid_argument("vertex count must be positive");
}

}  // namespace

bool is_acyclic(int p, const std::vector<Edge>& edges) {
    check_p(p);
    std::vector<std::vector<int>> children(p);
    for (const Edge& e : edges) {
        check_vertex(p, e.parent);
        check_vertex(p, e.child);
        if (e.parent == e.child) return false;
        children[e.parent].push_back(e.child);
    }
    // Iterative three-color depth-first search; a gray-to-gray edge is a cycle.
    std::vector<std::uint8_t> color(p, 0);
    std::vector<std::pair<int, std::size_t>> stack;
    for (int s = 0; s < p; ++s) {
        if (color[s] != 0) continue;
        stack.push_back({s, 0});
        color[s] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next < children[u].size()) {
                int v = children[u][next++];
                if (color[v] == 1) return false;
                if (color[v] == 0) {
                    color[v] = 1;
                    stack.push_back({v, 0});
                }
            } else {
                color[u] = 2;
                stack.pop_back();
            }
        }
    }
    return true;
}

Dag::Dag(int p) {
    check_p(p);
    p_ = p;
    adj_.assign(static_cast<std::size_t>(p) * p, 0);
    parents_.assign(p, {});
}

Dag::Dag(int p, std::vector<Edge> edges) : Dag(p) {
    for (const Edge& e : edges) {
        check_vertex(p, e.parent);
        check_vertex(p, e.child);
        if (e.parent == e.child)
            throw std::invalid_argument("self-loop at vertex " + std::to_string(e.parent));
        std::uint8_t& cell = adj_[static_cast<std::size_t>(e.parent) * p_ + e.child];
        if (cell)
            throw std::invalid_argument("duplicate edge " + std::to_string(e.parent) + " -> " +
                                        std::to_string(e.child));
        cell = 1;
        parents_[e.child].push_back(e.parent);
        ++edge_count_;
    }
    if (!is_acyclic(p, edges)) throw std::invalid_argument("edge set has a directed cycle");
    for (auto& pa : parents_) std::sort(pa.begin(), pa.end());
}

std::vector<int> Dag::children(int parent) const {
    check_vertex(p_, parent);
    std::vector<int> out;
    for (int v = 0; v < p_; ++v)
        if (has_edge(parent, v)) out.push_back(v);
    return out;
}

std::vector<Edge> Dag::edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (int u = 0; u < p_; ++u)
        for (int v = 0; v < p_; ++v)
            if (adj_[static_cast<std::size_t>(u) * p_ + v]) out.push_back({u, v});
    return out;
}

std::vector<int> topological_order(const Dag& dag) {
    const int p = dag.p();
    std::vector<int> indegree(p);
    for (int v = 0; v < p; ++v) indegree[v] = static_cast<int>(dag.parents(v).size());
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int v = 0; v < p; ++v)
        if (indegree[v] == 0) ready.push(v);
    std::vector<int> order;
    order.reserve(p);
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        order.push_back(u);
        for (int v : dag.children(u))
            if (--indegree[v] == 0) ready.push(v);
    }
    if (static_cast<int>(order.size()) != p)
        throw std::logic_error("topological sort failed on an acyclic graph");
    return order;
}

Move inverse_move(const Move& move) {
    switch (move.kind) {
        case MoveKind::add: return {MoveKind::remove, move.edge};
        case MoveKind::remove: return {MoveKind::add, move.edge};
        case MoveKind::reverse: return {MoveKind::reverse, {move.edge.child, move.edge.parent}};
    }
    throw std::invalid_argument("unknown move kind");
}

namespace {

// reach[u] holds a bitmask (64-bit words) of vertices with a directed path
// from u, u itself excluded.
std::vector<std::vector<std::uint64_t>> reachability(const Dag& dag) {
    const int p = dag.p();
    const int words = (p + 63) / 64;
    std::vector<std::vector<std::uint64_t>> reach(p, std::vector<std::uint64_t>(words, 0));
    std::vector<int> order = topological_order(dag);
    for (int i = p - 1; i >= 0; --i) {
        int u = order[i];
        for (int v : dag.children(u)) {
            reach[u][v >> 6] |= 1ULL << (v & 63);
            for (int w = 0; w < words; ++w) reach[u][w] |= reach[v][w];
        }
    }
    return reach;
}

bool reach_test(const std::vector<std::vector<std::uint64_t>>& reach, int u, int v) {
    return (reach[u][v >> 6] >> (v & 63)) & 1ULL;
}

// True when u still reaches v after deleting the direct edge u -> v.
bool path_avoiding_edge(const Dag& dag, int u, int v) {
    std::vector<std::uint8_t> seen(dag.p(), 0);
    std::vector<int> stack{u};
    seen[u] = 1;
    while (!stack.empty()) {
        int x = stack.back();
        stack.pop_back();
        for (int y : dag.children(x)) {
            if (x == u && y == v) continue;
            if (y == v) return true;
            if (!seen[y]) {
                seen[y] = 1;
                stack.push_back(y);
            }
        }
    }
    return false;
}

}  // namespace

std::vector<Move> legal_moves(const Dag& dag) {
    const int p = dag.p();
    auto reach = reachability(dag);
    std::vector<Move> moves;
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) {
            if (u == v || dag.adjacent(u, v)) continue;
            if (!reach_test(reach, v, u)) moves.push_back({MoveKind::add, {u, v}});
        }
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v)
            if (dag.has_edge(u, v)) moves.push_back({MoveKind::remove, {u, v}});
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v)
            if (dag.has_edge(u, v) && !path_avoiding_edge(dag, u, v))
                moves.push_back({MoveKind::reverse, {u, v}});
    return moves;
}

Dag apply_move(const Dag& dag, const Move& move) {
    const int u = move.edge.parent;
    const int v = move.edge.child;
    check_vertex(dag.p(), u);
    check_vertex(dag.p(), v);
    std::vector<Edge> edges = dag.edges();
    switch (move.kind) {
        case MoveKind::add:
            if (u == v || dag.adjacent(u, v))
                throw std::invalid_argument("illegal addition: endpoints already adjacent");
            edges.push_back({u, v});
            break;
        case MoveKind::remove:
            if (!dag.has_edge(u, v)) throw std::invalid_argument("illegal removal: edge absent");
            std::erase(edges, Edge{u, v});
            break;
        case MoveKind::reverse:
            if (!dag.has_edge(u, v)) throw std::invalid_argument("illegal reversal: edge absent");
            std::erase(edges, Edge{u, v});
            edges.push_back({v, u});
            break;
    }
    try {
        return Dag(dag.p(), std::move(edges));
    } catch (const std::invalid_argument&) {
        throw std::invalid_argument("illegal move: result has a directed cycle");
    }
}

// --- exhaustive enumeration ------------------------------------------------

int pair_count(int p) {
    check_p(p);
    return p * (p - 1);
}

int pair_index(int p, int parent, int child) {
    check_vertex(p, parent);
    check_vertex(p, child);
    if (parent == child) throw std::invalid_argument("ordered pair must have distinct endpoints");
    return parent * (p - 1) + child - (child > parent ? 1 : 0);
}

Edge pair_from_index(int p, int index) {
    if (index < 0 || index >= pair_count(p))
        throw std::invalid_argument("ordered-pair index out of range");
    int parent = index / (p - 1);
    int r = index % (p - 1);
    return {parent, r + (r >= parent ? 1 : 0)};
}

namespace {

void check_enumeration_size(int p, int cap) {
    check_p(p);
    const int limit = std::min(cap, kDagEnumerationHardLimit);
    if (p > limit)
        throw std::invalid_argument(
            "refusing to enumerate all DAGs on " + std::to_string(p) +
            " vertices (cap " + std::to_string(limit) +
            "); the count grows superexponentially, raise the cap only for p <= " +
            std::to_string(kDagEnumerationHardLimit));
    if (p > kDagEnumerationCap)
        std::cerr << "warning: enumerating all DAGs on " << p << " vertices, this is slow\n";
}

// Depth-first walk over the ordered pairs. reach[] rows are transitive
// closure bitmasks, so every emitted mask is acyclic by construction.
template <typename Emit>
void enumerate_masks(int p, int i, std::uint64_t mask, std::vector<std::uint64_t>& reach,
                     const Emit& emit) {
    const int m = p * (p - 1);
    if (i == m) {
        emit(mask);
        return;
    }
    enumerate_masks(p, i + 1, mask, reach, emit);
    const Edge e = pair_from_index(p, i);
    if ((reach[e.child] >> e.parent) & 1ULL) return;  // would close a cycle
    std::vector<std::uint64_t> saved = reach;
    const std::uint64_t gained = reach[e.child] | (1ULL << e.child);
    for (int a = 0; a < p; ++a)
        if (a == e.parent || ((reach[a] >> e.parent) & 1ULL)) reach[a] |= gained;
    enumerate_masks(p, i + 1, mask | (1ULL << i), reach, emit);
    reach = saved;
}

}  // namespace

void for_each_dag(int p, const std::function<void(const Dag&)>& fn, int cap) {
    check_enumeration_size(p, cap);
    std::vector<std::uint64_t> reach(p, 0);
    enumerate_masks(p, 0, 0, reach, [&](std::uint64_t mask) { fn(dag_from_mask(p, mask)); });
}

std::uint64_t count_dags(int p, int cap) {
    check_enumeration_size(p, cap);
    std::uint64_t count = 0;
    std::vector<std::uint64_t> reach(p, 0);
    enumerate_masks(p, 0, 0, reach, [&](std::uint64_t) { ++count; });
    return count;
}

std::vector<std::uint64_t> acyclic_edge_masks(int p, int cap) {
    check_enumeration_size(p, cap);
    std::vector<std::uint64_t> masks;
    std::vector<std::uint64_t> reach(p, 0);
    enumerate_masks(p, 0, 0, reach, [&](std::uint64_t mask) { masks.push_back(mask); });
    return masks;
}

Dag dag_from_mask(int p, std::uint64_t mask) {
    std::vector<Edge> edges;
    const int m = pair_count(p);
    for (int i = 0; i < m; ++i)
        if ((mask >> i) & 1ULL) edges.push_back(pair_from_index(p, i));
    return Dag(p, std::move(edges));
}

// --- Markov equivalence ------------------------------------------------------

Cpdag::Cpdag(int p, std::set<Edge> directed, std::set<std::pair<int, int>> undirected)
    : p_(p), directed_(std::move(directed)), undirected_(std::move(undirected)) {
    check_p(p);
    std::set<std::pair<int, int>> skeleton;
    auto claim = [&](int u, int v) {
        check_vertex(p_, u);
        check_vertex(p_, v);
        if (u == v) throw std::invalid_argument("self-loop in partially directed graph");
        std::pair<int, int> key{std::min(u, v), std::max(u, v)};
        if (!skeleton.insert(key).second)
            throw std::invalid_argument("skeleton edge {" + std::to_string(u) + "," +
                                        std::to_string(v) + "} listed twice");
    };
    for (const Edge& e : directed_) claim(e.parent, e.child);
    for (const auto& [a, b] : undirected_) {
        if (a >= b)
            throw std::invalid_argument("undirected pairs must be normalized (first < second)");
        claim(a, b);
    }
}

Cpdag Cpdag::from_dag(const Dag& dag) {
    std::set<Edge> directed;
    for (const Edge& e : dag.edges()) directed.insert(e);
    return Cpdag(dag.p(), std::move(directed), {});
}

Cpdag to_cpdag(const Dag& dag) {
    const int p = dag.p();
    std::vector<std::uint8_t> dir(static_cast<std::size_t>(p) * p, 0);
    std::vector<std::uint8_t> und(static_cast<std::size_t>(p) * p, 0);
    auto D = [&](int u, int v) -> std::uint8_t& { return dir[static_cast<std::size_t>(u) * p + v]; };
    auto U = [&](int u, int v) -> std::uint8_t& { return und[static_cast<std::size_t>(u) * p + v]; };
    auto adjacent = [&](int u, int v) { return D(u, v) || D(v, u) || U(u, v); };
    auto orient = [&](int u, int v) {
        U(u, v) = U(v, u) = 0;
        D(u, v) = 1;
    };

    for (const Edge& e : dag.edges()) U(e.parent, e.child) = U(e.child, e.parent) = 1;

    // v-structures a -> c <- b with nonadjacent a, b keep their direction.
    for (int c = 0; c < p; ++c) {
        const auto& pa = dag.parents(c);
        for (std::size_t i = 0; i < pa.size(); ++i)
            for (std::size_t j = i + 1; j < pa.size(); ++j)
                if (!dag.adjacent(pa[i], pa[j])) {
                    orient(pa[i], c);
                    orient(pa[j], c);
                }
    }

    // Meek's orientation rules to a fixed point. Each one is forced: the
    // opposite orientation would create a new v-structure or a cycle.
    bool changed = true;
    while (changed) {
        changed = false;
        for (int a = 0; a < p; ++a)
            for (int b = 0; b < p; ++b) {
                if (!U(a, b)) continue;
                bool forced = false;
                // rule 1: c -> a - b, c and b nonadjacent
                for (int c = 0; c < p && !forced; ++c)
                    if (D(c, a) && c != b && !adjacent(c, b)) forced = true;
                // rule 2: a -> c -> b alongside a - b
                for (int c = 0; c < p && !forced; ++c)
                    if (D(a, c) && D(c, b)) forced = true;
                // rule 3: a - c -> b and a - d -> b with c, d nonadjacent
                for (int c = 0; c < p && !forced; ++c) {
                    if (!(U(a, c) && D(c, b))) continue;
                    for (int d = c + 1; d < p && !forced; ++d)
                        if (U(a, d) && D(d, b) && !adjacent(c, d)) forced = true;
                }
                // rule 4: a - b, a adjacent to c, c -> d -> b, c and b nonadjacent
                for (int c = 0; c < p && !forced; ++c) {
                    if (c == a || c == b || !adjacent(a, c) || adjacent(c, b)) continue;
                    for (int d = 0; d < p && !forced; ++d)
                        if (D(c, d) && D(d, b)) forced = true;
                }
                if (forced) {
                    orient(a, b);
                    changed = true;
                }
            }
    }

    std::set<Edge> directed;
    std::set<std::pair<int, int>> undirected;
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) {
            if (D(u, v)) directed.insert({u, v});
            if (u < v && U(u, v)) undirected.insert({u, v});
        }
    return Cpdag(p, std::move(directed), std::move(undirected));
}

int shd(const Cpdag& a, const Cpdag& b) {
    if (a.p() != b.p())
        throw std::invalid_argument("structural Hamming distance needs equal vertex counts");
    const int p = a.p();
    // per-pair state: 0 none, 1 lo->hi, 2 hi->lo, 3 undirected
    auto state = [](const Cpdag& g, int i, int j) -> int {
        if (g.directed().count({i, j})) return 1;
        if (g.directed().count({j, i})) return 2;
        if (g.undirected().count({i, j})) return 3;
        return 0;
    };
    int total = 0;
    for (int i = 0; i < p; ++i)
        for (int j = i + 1; j < p; ++j) {
            const int sa = state(a, i, j);
            const int sb = state(b, i, j);
            if (sa == sb) continue;
            const bool flipped = (sa == 1 && sb == 2) || (sa == 2 && sb == 1);
            total += flipped ? 2 : 1;
        }
    return total;
}

// --- plain-text I/O ----------------------------------------------------------

EdgeListFile read_edge_list(std::istream& in) {
    EdgeListFile out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "edge list line " + std::to_string(lineno);
        std::string comment;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            comment = line.substr(hash + 1);
            line.erase(hash);
        }
        // "# p = N" declares the vertex count
        {
            std::istringstream cs(comment);
            std::string key, eq;
            long long declared = 0;
            if (cs >> key && key == "p" && cs >> eq && eq == "=" && cs >> declared) {
                if (out.declared_p)
                    throw std::invalid_argument(where + ": duplicate '# p = N' declaration");
                if (declared < 1)
                    throw std::invalid_argument(where + ": declared vertex count must be positive");
                out.declared_p = static_cast<int>(declared);
            }
        }
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string tok;
        while (ls >> tok) tokens.push_back(tok);
        if (tokens.empty()) continue;
        if (tokens.size() != 2 && tokens.size() != 3)
            throw std::invalid_argument(where + ": expected 'parent child [weight]', got " +
                                        std::to_string(tokens.size()) + " fields");
        EdgeListEntry e;
        e.parent = static_cast<int>(parse_int_token(tokens[0], where));
        e.child = static_cast<int>(parse_int_token(tokens[1], where));
        if (tokens.size() == 3) e.weight = parse_double_token(tokens[2], where);
        out.entries.push_back(e);
    }
    return out;
}

Dag dag_from_edge_list(const EdgeListFile& file, std::optional<int> p_override) {
    int p = 0;
    if (p_override)
        p = *p_override;
    else if (file.declared_p)
        p = *file.declared_p;
    else {
        int maxv = -1;
        for (const EdgeListEntry& e : file.entries) maxv = std::max({maxv, e.parent, e.child});
        if (maxv < 0)
            throw std::invalid_argument(
                "cannot infer the vertex count of an empty edge list; declare it with '# p = N'");
        p = maxv + 1;
    }
    std::vector<Edge> edges;
    edges.reserve(file.entries.size());
    for (const EdgeListEntry& e : file.entries) edges.push_back({e.parent, e.child});
    return Dag(p, std::move(edges));
}

void write_edge_list(std::ostream& out, const Dag& dag,
                     const std::function<double(int parent, int child)>& weight) {
    out << "# p = " << dag.p() << "\n";
    for (const Edge& e : dag.edges()) {
        out << e.parent << ' ' << e.child;
        if (weight) out << ' ' << format_double(weight(e.parent, e.child));
        out << '\n';
    }
}

namespace {

std::vector<std::string> dot_names(int p, const std::vector<std::string>& names) {
    if (names.empty()) {
        std::vector<std::string> out;
        for (int v = 0; v < p; ++v) out.push_back("X" + std::to_string(v));
        return out;
    }
    if (static_cast<int>(names.size()) != p)
        throw std::invalid_argument("name list length does not match vertex count");
    return names;
}

}  // namespace

std::string to_dot(const Dag& dag, const std::vector<std::string>& names) {
    const auto label = dot_names(dag.p(), names);
    std::ostringstream os;
    os << "digraph g {\n";
    for (int v = 0; v < dag.p(); ++v) os << "  \"" << label[v] << "\";\n";
    for (const Edge& e : dag.edges())
        os << "  \"" << label[e.parent] << "\" -> \"" << label[e.child] << "\";\n";
    os << "}\n";
    return os.str();
}

std::string to_dot(const Cpdag& graph, const std::vector<std::string>& names) {
    const auto label = dot_names(graph.p(), names);
    std::ostringstream os;
    os << "digraph g {\n";
    for (int v = 0; v < graph.p(); ++v) os << "  \"" << label[v] << "\";\n";
    for (const Edge& e : graph.directed())
        os << "  \"" << label[e.parent] << "\" -> \"" << label[e.child] << "\";\n";
    for (const auto& [a, b] : graph.undirected())
        os << "  \"" << label[a] << "\" -> \"" << label[b] << "\" [dir=none];\n";
    os << "}\n";
    return os.str();
}

}  // namespace eevdag
