#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>
#include <sstream>
#include <vector>

#include "eevdag/graph.hpp"
#include "eevdag/rng.hpp"
#include "support/oracles.hpp"

using namespace eevdag;

namespace {

Dag dag_of(int p, std::vector<Edge> edges) { return Dag(p, std::move(edges)); }

bool order_respects_edges(const Dag& dag, const std::vector<int>& order) {
    std::vector<int> position(dag.p(), -1);
    for (int i = 0; i < dag.p(); ++i) position[order[i]] = i;
    for (const Edge& e : dag.edges()) {
        if (position[e.parent] >= position[e.child]) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("acyclicity on the frozen small cases") {
    CHECK(is_acyclic(2, {}));
    CHECK_FALSE(is_acyclic(2, {{0, 1}, {1, 0}}));
    CHECK(is_acyclic(3, {{0, 1}, {1, 2}, {0, 2}}));
    CHECK_FALSE(is_acyclic(1, {{0, 0}}));
    CHECK_THROWS_AS(is_acyclic(2, {{0, 2}}), std::invalid_argument);
}

TEST_CASE("acyclicity agrees with boolean-matrix nilpotency on random digraphs") {
    Rng rng(101);
    int acyclic_count = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = 1 + static_cast<int>(rng.below(8));
        const double density = rng.uniform();
        std::vector<Edge> edges;
        for (int u = 0; u < p; ++u) {
            for (int v = 0; v < p; ++v) {
                if (u != v && rng.uniform() < density) edges.push_back({u, v});
            }
        }
        const bool fast = is_acyclic(p, edges);
        REQUIRE(fast == oracle::nilpotent_acyclic(p, edges));
        acyclic_count += fast ? 1 : 0;
    }
    CHECK(acyclic_count > 100);          // both outcomes exercised
    CHECK(acyclic_count < 900);
}

TEST_CASE("dag construction validates and normalizes") {
    const Dag dag = dag_of(3, {{1, 2}, {0, 2}});
    CHECK(dag.p() == 3);
    CHECK(dag.edge_count() == 2);
    CHECK(dag.has_edge(0, 2));
    CHECK_FALSE(dag.has_edge(2, 0));
    CHECK(dag.adjacent(2, 0));
    CHECK(dag.parents(2) == std::vector<int>{0, 1});
    CHECK(dag.children(0) == std::vector<int>{2});
    CHECK(dag.edges() == std::vector<Edge>{{0, 2}, {1, 2}});

    CHECK_THROWS_AS(dag_of(2, {{0, 1}, {0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(dag_of(2, {{1, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(dag_of(2, {{0, 1}, {1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(dag_of(2, {{0, 3}}), std::invalid_argument);
    CHECK(dag == dag_of(3, {{0, 2}, {1, 2}}));
    CHECK_FALSE(dag == dag_of(3, {{0, 2}}));
}

TEST_CASE("topological order is the index-minimal one") {
    CHECK(topological_order(dag_of(3, {{0, 1}, {1, 2}})) == std::vector<int>{0, 1, 2});
    CHECK(topological_order(Dag(3)) == std::vector<int>{0, 1, 2});
    CHECK(topological_order(dag_of(3, {{2, 0}, {2, 1}})) == std::vector<int>{2, 0, 1});
}

TEST_CASE("topological order is valid for every four-vertex dag") {
    for_each_dag(4, [](const Dag& dag) {
        const auto order = topological_order(dag);
        REQUIRE(order.size() == 4);
        REQUIRE(order_respects_edges(dag, order));
    });
}

TEST_CASE("legal moves on the frozen cases") {
    const auto empty_moves = legal_moves(Dag(3));
    CHECK(empty_moves.size() == 6);
    for (const Move& m : empty_moves) CHECK(m.kind == MoveKind::add);

    const auto single = legal_moves(dag_of(2, {{0, 1}}));
    REQUIRE(single.size() == 2);
    CHECK(single[0] == Move{MoveKind::remove, {0, 1}});
    CHECK(single[1] == Move{MoveKind::reverse, {0, 1}});

    // Complete graph on the order 0, 1, 2: only the two order-adjacent
    // reversals keep the graph acyclic.
    const auto complete = legal_moves(dag_of(3, {{0, 1}, {0, 2}, {1, 2}}));
    std::vector<Move> expected = {
        {MoveKind::remove, {0, 1}},  {MoveKind::remove, {0, 2}}, {MoveKind::remove, {1, 2}},
        {MoveKind::reverse, {0, 1}}, {MoveKind::reverse, {1, 2}},
    };
    CHECK(complete == expected);
}

TEST_CASE("legal moves match the brute-force legality filter on every p=3 dag") {
    for_each_dag(3, [](const Dag& dag) {
        std::set<Move> expected;
        for (int u = 0; u < 3; ++u) {
            for (int v = 0; v < 3; ++v) {
                if (u == v) continue;
                auto edges = dag.edges();
                if (!dag.has_edge(u, v) && !dag.has_edge(v, u)) {
                    edges.push_back({u, v});
                    if (oracle::nilpotent_acyclic(3, edges)) {
                        expected.insert({MoveKind::add, {u, v}});
                    }
                } else if (dag.has_edge(u, v)) {
                    expected.insert({MoveKind::remove, {u, v}});
                    auto reversed = dag.edges();
                    std::erase(reversed, Edge{u, v});
                    reversed.push_back({v, u});
                    if (oracle::nilpotent_acyclic(3, reversed)) {
                        expected.insert({MoveKind::reverse, {u, v}});
                    }
                }
            }
        }
        const auto moves = legal_moves(dag);
        REQUIRE(std::set<Move>(moves.begin(), moves.end()) == expected);
        REQUIRE(moves.size() == expected.size());
    });
}

TEST_CASE("apply and inverse round-trip") {
    const Dag one = dag_of(2, {{0, 1}});
    CHECK(apply_move(one, {MoveKind::reverse, {0, 1}}) == dag_of(2, {{1, 0}}));
    CHECK(apply_move(one, {MoveKind::remove, {0, 1}}) == Dag(2));
    CHECK(apply_move(Dag(2), {MoveKind::add, {0, 1}}) == one);
    CHECK_THROWS_AS(apply_move(one, {MoveKind::add, {0, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_move(one, {MoveKind::add, {1, 0}}), std::invalid_argument);
    CHECK_THROWS_AS(apply_move(Dag(2), {MoveKind::remove, {0, 1}}), std::invalid_argument);

    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        Dag dag(4);
        for (int step = 0; step < 6; ++step) {
            const auto moves = legal_moves(dag);
            const Move move = moves[rng.below(moves.size())];
            const Dag next = apply_move(dag, move);
            REQUIRE(is_acyclic(4, next.edges()));
            REQUIRE(apply_move(next, inverse_move(move)) == dag);
            dag = next;
        }
    }
}

TEST_CASE("enumeration counts match the subset brute force") {
    CHECK(count_dags(1) == 1);
    CHECK(count_dags(2) == 3);
    CHECK(count_dags(3) == 25);
    CHECK(count_dags(4) == 543);
    CHECK(count_dags(2) == static_cast<std::uint64_t>(oracle::count_dags_brute(2)));
    CHECK(count_dags(3) == static_cast<std::uint64_t>(oracle::count_dags_brute(3)));
    CHECK(count_dags(4) == static_cast<std::uint64_t>(oracle::count_dags_brute(4)));
    CHECK(count_dags(5) == 29281);

    CHECK_THROWS_AS(count_dags(6), std::invalid_argument);
    CHECK(count_dags(6, 6) == 3781503);
    CHECK_THROWS_AS(count_dags(9, 9), std::invalid_argument);
}

TEST_CASE("enumerated dags are distinct, valid, and complete") {
    std::set<std::vector<Edge>> seen;
    for_each_dag(4, [&](const Dag& dag) {
        REQUIRE(dag.p() == 4);
        REQUIRE(is_acyclic(4, dag.edges()));
        REQUIRE(seen.insert(dag.edges()).second);
    });
    const auto expected = oracle::all_dag_edge_sets(4);
    REQUIRE(seen.size() == expected.size());
    for (auto edges : expected) {
        std::sort(edges.begin(), edges.end());
        REQUIRE(seen.count(edges) == 1);
    }
}

TEST_CASE("pair indexing round-trips") {
    for (int p = 2; p <= 8; ++p) {
        CHECK(pair_count(p) == p * (p - 1));
        std::set<int> indices;
        for (int u = 0; u < p; ++u) {
            for (int v = 0; v < p; ++v) {
                if (u == v) continue;
                const int idx = pair_index(p, u, v);
                CHECK(idx >= 0);
                CHECK(idx < pair_count(p));
                indices.insert(idx);
                const Edge e = pair_from_index(p, idx);
                CHECK(e.parent == u);
                CHECK(e.child == v);
            }
        }
        CHECK(static_cast<int>(indices.size()) == pair_count(p));
    }
}

TEST_CASE("mask enumeration matches for_each_dag") {
    const auto masks = acyclic_edge_masks(4);
    CHECK(masks.size() == 543);
    std::set<std::vector<Edge>> from_masks;
    for (const auto mask : masks) from_masks.insert(dag_from_mask(4, mask).edges());
    std::set<std::vector<Edge>> from_walk;
    for_each_dag(4, [&](const Dag& dag) { from_walk.insert(dag.edges()); });
    CHECK(from_masks == from_walk);
}

TEST_CASE("cpdag of the frozen three-node shapes") {
    const Cpdag chain = to_cpdag(dag_of(3, {{0, 1}, {1, 2}}));
    CHECK(chain.directed().empty());
    CHECK(chain.undirected() == std::set<std::pair<int, int>>{{0, 1}, {1, 2}});

    const Cpdag collider = to_cpdag(dag_of(3, {{0, 2}, {1, 2}}));
    CHECK(collider.directed() == std::set<Edge>{{0, 2}, {1, 2}});
    CHECK(collider.undirected().empty());

    const Cpdag lone = to_cpdag(dag_of(2, {{0, 1}}));
    CHECK(lone.directed().empty());
    CHECK(lone.undirected() == std::set<std::pair<int, int>>{{0, 1}});

    const Cpdag direct = Cpdag::from_dag(dag_of(3, {{0, 1}, {1, 2}}));
    CHECK(direct.directed() == std::set<Edge>{{0, 1}, {1, 2}});
    CHECK(direct.undirected().empty());
}

TEST_CASE("cpdag equals the class intersection orientation for every p=3 dag") {
    const auto all = oracle::all_dag_edge_sets(3);
    for (const auto& edges : all) {
        const Cpdag fast = to_cpdag(Dag(3, edges));
        const Cpdag slow = oracle::class_cpdag(3, edges, all);
        REQUIRE(fast == slow);
    }
}

TEST_CASE("structural hamming distance cases and symmetry") {
    const Cpdag a = Cpdag::from_dag(dag_of(2, {{0, 1}}));
    const Cpdag b = Cpdag::from_dag(dag_of(2, {{1, 0}}));
    const Cpdag none = Cpdag::from_dag(Dag(2));
    const Cpdag undirected = to_cpdag(dag_of(2, {{0, 1}}));
    CHECK(shd(a, a) == 0);
    CHECK(shd(a, b) == 2);
    CHECK(shd(a, none) == 1);
    CHECK(shd(a, undirected) == 1);
    CHECK(shd(undirected, none) == 1);
    CHECK_THROWS_AS(shd(a, Cpdag::from_dag(Dag(3))), std::invalid_argument);

    Rng rng(5150);
    const auto all = oracle::all_dag_edge_sets(4);
    for (int trial = 0; trial < 200; ++trial) {
        const auto& x = all[rng.below(all.size())];
        const auto& y = all[rng.below(all.size())];
        const Cpdag cx = to_cpdag(Dag(4, x));
        const Cpdag cy = to_cpdag(Dag(4, y));
        REQUIRE(shd(cx, cy) == shd(cy, cx));
        REQUIRE(shd(cx, cy) >= 0);
        if (x == y) REQUIRE(shd(cx, cy) == 0);
    }
}

TEST_CASE("edge list round-trips with and without weights") {
    const Dag dag = dag_of(3, {{0, 1}, {2, 1}});
    std::ostringstream plain;
    write_edge_list(plain, dag);
    std::istringstream back(plain.str());
    const EdgeListFile file = read_edge_list(back);
    CHECK(file.declared_p == 3);
    CHECK(dag_from_edge_list(file) == dag);

    std::ostringstream weighted;
    write_edge_list(weighted, dag, [](int parent, int child) { return parent + 10.0 * child; });
    std::istringstream wback(weighted.str());
    const EdgeListFile wfile = read_edge_list(wback);
    REQUIRE(wfile.entries.size() == 2);
    CHECK(wfile.entries[0].weight == 10.0);
    CHECK(wfile.entries[1].weight == 12.0);
    CHECK(dag_from_edge_list(wfile) == dag);
}

TEST_CASE("edge list parsing is strict") {
    const auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return read_edge_list(in);
    };
    CHECK_THROWS_AS(parse("0 x\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("0 1 2 3\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse("# p = 2\n# p = 3\n"), std::invalid_argument);

    const auto file = parse("# a comment\n\n# p = 4\n0 1\n2 3 -1.5\n");
    CHECK(file.declared_p == 4);
    REQUIRE(file.entries.size() == 2);
    CHECK_FALSE(file.entries[0].weight.has_value());
    CHECK(file.entries[1].weight == -1.5);

    CHECK(dag_from_edge_list(parse("# p = 5\n"), {}) == Dag(5));
    CHECK_THROWS_AS(dag_from_edge_list(parse(""), {}), std::invalid_argument);
    CHECK(dag_from_edge_list(parse("0 3\n"), {}) == dag_of(4, {{0, 3}}));
    CHECK(dag_from_edge_list(parse("0 3\n"), 6) == dag_of(6, {{0, 3}}));
    CHECK_THROWS_AS(dag_from_edge_list(parse("0 3\n"), 2), std::invalid_argument);
    CHECK_THROWS_AS(dag_from_edge_list(parse("0 1\n1 0\n"), {}), std::invalid_argument);
}

TEST_CASE("dot export marks directed and undirected edges") {
    const std::string directed = to_dot(dag_of(2, {{0, 1}}), {"left", "right"});
    CHECK(directed.find("\"left\" -> \"right\"") != std::string::npos);
    CHECK(directed.find("digraph") != std::string::npos);

    const std::string mixed = to_dot(to_cpdag(dag_of(3, {{0, 1}, {1, 2}})));
    CHECK(mixed.find("dir=none") != std::string::npos);
    CHECK(mixed.find("\"X0\"") != std::string::npos);
}
