#pragma once
// Directed acyclic graphs on vertices 0..p-1, the single-edge move set
// connecting neighbouring DAGs, Markov equivalence machinery (CPDAG and
// structural Hamming distance), exhaustive enumeration for small p, and
// plain-text graph I/O.

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace eevdag {

struct Edge {
    int parent = 0;
    int child = 0;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// True when the edge set on p vertices has no directed cycle. Throws
// std::invalid_argument for out-of-range endpoints; self-loops count as
// cycles.
bool is_acyclic(int p, const std::vector<Edge>& edges);

class Dag {
public:
    explicit Dag(int p);
    Dag(int p, std::vector<Edge> edges);

    int p() const { return p_; }
    int edge_count() const { return edge_count_; }
    bool has_edge(int parent, int child) const {
        return adj_[static_cast<std::size_t>(parent) * p_ + child] != 0;
    }
    bool adjacent(int u, int v) const { return has_edge(u, v) || has_edge(v, u); }
    const std::vector<int>& parents(int child) const { return parents_[child]; }
    std::vector<int> children(int parent) const;
    std::vector<Edge> edges() const;  // sorted by (parent, child)

    friend bool operator==(const Dag& a, const Dag& b) {
        return a.p_ == b.p_ && a.adj_ == b.adj_;
    }

private:
    int p_ = 0;
    int edge_count_ = 0;
    std::vector<std::uint8_t> adj_;          // row-major, adj_[u*p+v] for u -> v
    std::vector<std::vector<int>> parents_;  // sorted ascending
};

// Ascending-index tie break, so the order is a deterministic function of the
// graph alone.
std::vector<int> topological_order(const Dag& dag);

enum class MoveKind { add, remove, reverse };

struct Move {
    MoveKind kind = MoveKind::add;
    Edge edge;
    friend auto operator<=>(const Move&, const Move&) = default;
};

Move inverse_move(const Move& move);

// All moves whose application yields a DAG again: every acyclicity-preserving
// addition, every removal, every acyclicity-preserving reversal. Listed adds
// first, then removes, then reversals, each block in lexicographic (parent,
// child) order.
std::vector<Move> legal_moves(const Dag& dag);

// Throws std::invalid_argument when the move is not legal on this graph.
Dag apply_move(const Dag& dag, const Move& move);

// --- exhaustive enumeration --------------------------------------------
//
// Every labeled DAG on p vertices. Counts grow superexponentially (25 at
// p = 3, 543 at p = 4, 29281 at p = 5), so callers must raise `cap`
// explicitly to go past the default; a warning is printed above 5 and the
// hard limit is 8 (edge sets are handled as 64-bit masks over ordered
// pairs).

inline constexpr int kDagEnumerationCap = 5;
inline constexpr int kDagEnumerationHardLimit = 8;

void for_each_dag(int p, const std::function<void(const Dag&)>& fn,
                  int cap = kDagEnumerationCap);
std::uint64_t count_dags(int p, int cap = kDagEnumerationCap);

// Mask form used by the exhaustive-search kernels: bit i of a mask stands
// for the ordered pair pair_from_index(p, i).
int pair_count(int p);
int pair_index(int p, int parent, int child);
Edge pair_from_index(int p, int index);
std::vector<std::uint64_t> acyclic_edge_masks(int p, int cap = kDagEnumerationCap);
Dag dag_from_mask(int p, std::uint64_t mask);

// --- Markov equivalence --------------------------------------------------

// Partially directed graph with the same skeleton as some DAG. `undirected`
// holds normalized pairs (first < second); a skeleton edge appears in
// exactly one of the two sets.
class Cpdag {
public:
    Cpdag(int p, std::set<Edge> directed, std::set<std::pair<int, int>> undirected);

    // Every edge kept directed; represents the DAG itself rather than its
    // equivalence class.
    static Cpdag from_dag(const Dag& dag);

    int p() const { return p_; }
    const std::set<Edge>& directed() const { return directed_; }
    const std::set<std::pair<int, int>>& undirected() const { return undirected_; }

    friend bool operator==(const Cpdag&, const Cpdag&) = default;

private:
    int p_ = 0;
    std::set<Edge> directed_;
    std::set<std::pair<int, int>> undirected_;
};

// Completed partially directed graph of the Markov equivalence class:
// skeleton plus v-structures, closed under the standard orientation rules.
Cpdag to_cpdag(const Dag& dag);

// Structural Hamming distance. Per unordered vertex pair: 0 when both
// graphs agree exactly, 2 when both direct the edge but in opposite ways,
// 1 for any other disagreement (including directed vs undirected).
int shd(const Cpdag& a, const Cpdag& b);

// --- plain-text I/O -------------------------------------------------------
//
// Edge-list format: one edge per line as "parent child" or
// "parent child weight", '#' starts a comment. Writers emit a "# p = N"
// comment so vertex counts survive a round trip; readers honor it when
// present.

struct EdgeListEntry {
    int parent = 0;
    int child = 0;
    std::optional<double> weight;
};

struct EdgeListFile {
    std::optional<int> declared_p;
    std::vector<EdgeListEntry> entries;
};

EdgeListFile read_edge_list(std::istream& in);

// Vertex count resolution: p_override, else the "# p = N" declaration, else
// 1 + max endpoint. Throws std::invalid_argument on conflicts or cycles.
Dag dag_from_edge_list(const EdgeListFile& file, std::optional<int> p_override = {});

void write_edge_list(std::ostream& out, const Dag& dag,
                     const std::function<double(int parent, int child)>& weight = {});

// DOT export (directed edges use ->, undirected use dir=none). Vertex names
// default to X0..X{p-1}.
std::string to_dot(const Dag& dag, const std::vector<std::string>& names = {});
std::string to_dot(const Cpdag& graph, const std::vector<std::string>& names = {});

}  // namespace eevdag
