#include "dglearn/equivalence.hpp"

#include <algorithm>
#include <set>

#include "dglearn/errors.hpp"
#include "dglearn/graph.hpp"
#include "dglearn/rng.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace dglearn;

namespace {

SupportMatrix make_support(int p, const std::vector<std::vector<int>>& rows) {
    SupportMatrix m(p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            if (rows[i][j]) m.set(i, j, true);
    return m;
}

// Worked three-vertex example graphs (all 0-based).
const DirectedGraph kG1(3, {{0, 1}, {0, 2}, {2, 1}});          // xi1 = [[x,x,x],[0,x,0],[0,x,x]]
const DirectedGraph kG2(3, {{0, 1}, {1, 0}, {2, 1}});          // xi2 = [[x,x,0],[x,x,0],[0,x,x]]
const DirectedGraph kG4(3, {{0, 1}, {1, 0}, {0, 2}, {2, 1}});  // xi4 = [[x,x,x],[x,x,0],[0,x,x]]

const DirectedGraph kChain(3, {{0, 1}, {1, 2}});
const DirectedGraph kChainRev(3, {{2, 1}, {1, 0}});
const DirectedGraph kCollider(3, {{0, 1}, {2, 1}});

}  // namespace

TEST_CASE("classify_rotation covers the four effect cases") {
    auto xi1 = support_of_graph(kG1);
    // A(1,3,1) in 1-based indexing
    CHECK(classify_rotation(xi1, 0, 2, 0) == RotationKind::ReversibleAcute);

    CHECK(classify_rotation(xi1, 1, 0, 2) == RotationKind::NoEffect);  // xi_{2,1} = 0

    auto two = make_support(2, {{1, 1}, {1, 1}});
    CHECK(classify_rotation(two, 0, 1, 0) == RotationKind::Reduction);

    CHECK(classify_rotation(xi1, 0, 1, 0) == RotationKind::IrreversibleAcute);
    CHECK(classify_rotation(xi1, 2, 1, 0) == RotationKind::ColumnSwap);  // xi_{3,2}=x, xi_{3,1}=0

    CHECK_THROWS_AS(classify_rotation(xi1, 0, 1, 1), IndexOutOfRange);
    CHECK_THROWS_AS(classify_rotation(xi1, 3, 0, 1), IndexOutOfRange);
}

TEST_CASE("worked example rotation sequence, forward direction") {
    auto xi1 = support_of_graph(kG1);
    auto step1 = apply_support_rotation(xi1, 0, 2, 0);  // A(1,3,1)
    CHECK(step1 == make_support(3, {{1, 1, 0}, {0, 1, 0}, {1, 1, 1}}));
    auto step2 = apply_support_rotation(step1, 2, 0, 1);  // A(3,1,2)
    CHECK(step2 == make_support(3, {{1, 1, 0}, {1, 1, 0}, {0, 1, 1}}));
    CHECK(step2.is_subset_of(support_of_graph(kG2)));
}

TEST_CASE("worked example rotation sequence, reverse direction") {
    auto xi2 = support_of_graph(kG2);
    auto step1 = apply_support_rotation(xi2, 1, 0, 1);  // A(2,1,2)
    CHECK(step1 == make_support(3, {{1, 1, 0}, {0, 1, 0}, {1, 1, 1}}));
    auto step2 = apply_support_rotation(step1, 2, 0, 2);  // A(3,1,3)
    CHECK(step2 == make_support(3, {{1, 1, 1}, {0, 1, 0}, {0, 1, 1}}));
    CHECK(step2.is_subset_of(support_of_graph(kG1)));
}

TEST_CASE("reducible example rotation sequence") {
    auto xi4 = support_of_graph(kG4);
    auto step1 = apply_support_rotation(xi4, 1, 0, 1);  // A(2,1,2)
    CHECK(step1 == make_support(3, {{1, 1, 1}, {0, 1, 0}, {1, 1, 1}}));
    auto step2 = apply_support_rotation(step1, 2, 0, 2);  // A(3,1,3)
    CHECK(step2 == support_of_graph(kG1));
}

TEST_CASE("chain example rotation sequences") {
    auto xi1 = support_of_graph(kChain);
    auto a = apply_support_rotation(xi1, 0, 1, 0);  // A(1,2,1)
    CHECK(a == make_support(3, {{1, 0, 0}, {1, 1, 1}, {0, 0, 1}}));
    auto b = apply_support_rotation(a, 1, 2, 1);  // A(2,3,2)
    CHECK(b == make_support(3, {{1, 0, 0}, {1, 1, 0}, {0, 1, 1}}));
    CHECK(b.is_subset_of(support_of_graph(kChainRev)));

    auto xi2 = support_of_graph(kChainRev);
    auto c = apply_support_rotation(xi2, 2, 1, 2);  // A(3,2,3)
    CHECK(c == make_support(3, {{1, 0, 0}, {1, 1, 1}, {0, 0, 1}}));
    auto d = apply_support_rotation(c, 1, 0, 1);  // A(2,1,2)
    CHECK(d == support_of_graph(kChain));
}

TEST_CASE("reversible acute rotations can be undone") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        int p = rng.uniform_int(2, 6);
        auto xi = support_of_graph(testutil::random_graph(rng, p, 0.4));
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                for (int k = 0; k < p; ++k) {
                    if (j == k) continue;
                    if (classify_rotation(xi, i, j, k) != RotationKind::ReversibleAcute) continue;
                    int diff_row = xi.column_diff_rows(j, k)[0];
                    if (xi.get(diff_row, j)) continue;  // inverse exists when the j side was 0
                    auto xi2 = apply_support_rotation(xi, i, j, k);
                    CHECK(apply_support_rotation(xi2, diff_row, j, k) == xi);
                }
    }
}

TEST_CASE("column swap pairs undo each other") {
    Rng rng(29);
    for (int trial = 0; trial < 100; ++trial) {
        int p = rng.uniform_int(2, 6);
        auto xi = support_of_graph(testutil::random_graph(rng, p, 0.4));
        for (int i = 0; i < p; ++i)
            for (int j = 0; j < p; ++j)
                for (int k = 0; k < p; ++k) {
                    if (j == k || classify_rotation(xi, i, j, k) != RotationKind::ColumnSwap)
                        continue;
                    auto swapped = apply_support_rotation(xi, i, j, k);
                    CHECK(apply_support_rotation(swapped, i, k, j) == xi);
                }
    }
}

TEST_CASE("find_rotations on the identity is empty") {
    CHECK(find_rotations(SupportMatrix::identity(3)).empty());
}

TEST_CASE("find_rotations on a 2-cycle reduces either entry") {
    auto two = make_support(2, {{1, 1}, {1, 1}});
    auto got = find_rotations(two);
    std::set<std::string> printed;
    for (const auto& m : got) printed.insert(m.pretty());
    CHECK(printed == std::set<std::string>{make_support(2, {{1, 0}, {1, 1}}).pretty(),
                                           make_support(2, {{1, 1}, {0, 1}}).pretty()});
}

TEST_CASE("find_rotations of xi2 contains the displayed acute result") {
    auto xi2 = support_of_graph(kG2);
    auto got = find_rotations(xi2);
    auto expect = make_support(3, {{1, 1, 0}, {0, 1, 0}, {1, 1, 1}});
    CHECK(std::find(got.begin(), got.end(), expect) != got.end());
}

TEST_CASE("find_rotations never zeroes a diagonal and stays lossless in count") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        int p = rng.uniform_int(2, 6);
        auto xi = support_of_graph(testutil::random_graph(rng, p, 0.4));
        for (auto& [mv, m] : find_rotation_moves(xi)) {
            CHECK(m.graph_representable());
            CHECK(mv.i != mv.j);  // zeroed entry is off-diagonal
            if (mv.kind == RotationKind::Reduction) CHECK(m.count() == xi.count() - 1);
            if (mv.kind == RotationKind::ReversibleAcute) CHECK(m.count() == xi.count());
        }
    }
}

TEST_CASE("reverse_cycle matches the proposition's example") {
    // 3-cycle X1->X2->X3->X1 with an extra X4->X1
    DirectedGraph left(4, {{0, 1}, {1, 2}, {2, 0}, {3, 0}});
    DirectedGraph right(4, {{1, 0}, {2, 1}, {0, 2}, {3, 2}});
    CHECK(reverse_cycle(left, {0, 1, 2}) == right);

    DirectedGraph two(2, {{0, 1}, {1, 0}});
    CHECK(reverse_cycle(two, {0, 1}) == two);

    CHECK_THROWS_AS(reverse_cycle(left, std::vector<int>{0, 2}), NotACycle);
}

TEST_CASE("reverse_cycle equals the column permutation of the support") {
    Rng rng(37);
    int done = 0;
    while (done < 100) {
        int p = rng.uniform_int(3, 6);
        auto g = testutil::random_graph(rng, p, 0.35);
        auto cycles = simple_cycles(g);
        if (cycles.empty()) continue;
        ++done;
        for (const auto& c : cycles) {
            auto xi = support_of_graph(g);
            SupportMatrix permuted = xi;
            for (std::size_t t = 0; t < c.size(); ++t) {
                int dst = c[t], src = c[(t + 1) % c.size()];
                for (int i = 0; i < p; ++i) permuted.set(i, dst, xi.get(i, src));
            }
            CHECK(support_of_graph(reverse_cycle(g, c)) == permuted);
        }
    }
}

TEST_CASE("enumerate_equivalence_class basics") {
    auto empty_cls = enumerate_equivalence_class(SupportMatrix::identity(3));
    CHECK(empty_cls.members.size() == 1);
    CHECK(empty_cls.exhausted);

    auto chain_cls = enumerate_equivalence_class(support_of_graph(kChain));
    CHECK(chain_cls.exhausted);
    REQUIRE(chain_cls.members.size() == 3);
    CHECK(chain_cls.contains(support_of_graph(kChain)));
    CHECK(chain_cls.contains(support_of_graph(kChainRev)));
    CHECK(chain_cls.contains(support_of_graph(DirectedGraph(3, {{1, 0}, {1, 2}}))));

    auto two_cls = enumerate_equivalence_class(make_support(2, {{1, 1}, {1, 1}}));
    CHECK(two_cls.exhausted);
    CHECK(two_cls.members.size() == 3);
    CHECK(two_cls.contains(make_support(2, {{1, 1}, {1, 1}})));
    CHECK(two_cls.contains(make_support(2, {{1, 0}, {1, 1}})));
    CHECK(two_cls.contains(make_support(2, {{1, 1}, {0, 1}})));
}

TEST_CASE("chain class equals its Markov class over all 3-vertex DAGs") {
    auto cls = enumerate_equivalence_class(support_of_graph(kChain));
    std::set<std::string> got;
    for (const auto& m : cls.members) got.insert(m.pretty());

    std::set<std::string> expect;
    for (const auto& dag : testutil::all_dags(3))
        if (dag_markov_equivalent(dag, kChain)) expect.insert(support_of_graph(dag).pretty());
    CHECK(got == expect);
}

TEST_CASE("budget exhaustion is reported, not raised") {
    auto cls = enumerate_equivalence_class(support_of_graph(kG4), 2);
    CHECK_FALSE(cls.exhausted);
    CHECK(cls.members.size() >= 1);
    CHECK(cls.members[0] == support_of_graph(kG4));
}

TEST_CASE("check_equivalent reproduces the worked example verdicts") {
    CHECK(check_equivalent(kG1, kG2).verdict == EquivVerdict::Equivalent);
    CHECK(check_equivalent(kG1, kG4).verdict == EquivVerdict::Equivalent);
    CHECK(check_equivalent(kChain, kChainRev).verdict == EquivVerdict::Equivalent);
    CHECK(check_equivalent(kChain, kCollider).verdict == EquivVerdict::NotEquivalent);
    CHECK_THROWS_AS(check_equivalent(kG1, DirectedGraph(4)), DimensionMismatch);
}

TEST_CASE("check_equivalent witness replays to a subset") {
    auto res = check_equivalent(kG1, kG2);
    REQUIRE(res.verdict == EquivVerdict::Equivalent);
    REQUIRE(res.witness_from == 1);
    SupportMatrix cur = support_of_graph(kG1);
    for (const auto& step : res.witness) {
        if (step.is_cycle_reversion())
            cur = support_of_graph(reverse_cycle(graph_of_support(cur), step.cycle));
        else
            cur = apply_support_rotation(cur, step.rotation.i, step.rotation.j, step.rotation.k);
    }
    CHECK(cur.is_subset_of(support_of_graph(kG2)));
}

TEST_CASE("check_equivalent agrees with the DAG Markov oracle at p=3") {
    auto dags = testutil::all_dags(3);
    REQUIRE(dags.size() == 25);
    for (const auto& a : dags)
        for (const auto& b : dags) {
            bool markov = dag_markov_equivalent(a, b);
            auto verdict = check_equivalent(a, b).verdict;
            CHECK(verdict == (markov ? EquivVerdict::Equivalent : EquivVerdict::NotEquivalent));
        }
}

TEST_CASE("check_equivalent agrees with the DAG Markov oracle on random p=4,5 pairs") {
    Rng rng(41);
    for (int trial = 0; trial < 60; ++trial) {
        int p = 4 + trial % 2;
        auto a = testutil::random_dag(rng, p, 0.4);
        auto b = testutil::random_dag(rng, p, 0.4);
        bool markov = dag_markov_equivalent(a, b);
        auto verdict = check_equivalent(a, b).verdict;
        CHECK(verdict == (markov ? EquivVerdict::Equivalent : EquivVerdict::NotEquivalent));
    }
}

TEST_CASE("cycle reversal always yields an equivalent graph") {
    Rng rng(43);
    int done = 0;
    while (done < 30) {
        int p = rng.uniform_int(3, 5);
        auto g = testutil::random_sparse_graph(rng, p, p + 2);
        auto cycles = simple_cycles(g);
        if (cycles.empty()) continue;
        ++done;
        for (const auto& c : cycles)
            CHECK(check_equivalent(g, reverse_cycle(g, c)).verdict == EquivVerdict::Equivalent);
    }
}

TEST_CASE("class members are column permutations when columns are well separated") {
    Rng rng(47);
    int done = 0;
    while (done < 40) {
        int p = rng.uniform_int(3, 5);
        auto g = testutil::random_sparse_graph(rng, p, p + 2);
        auto xi = support_of_graph(g);
        bool separated = true;
        for (int j = 0; j < p && separated; ++j)
            for (int k = j + 1; k < p && separated; ++k)
                if (xi.column_distance(j, k) < 2) separated = false;
        if (!separated) continue;
        ++done;

        auto column_key = [p](const SupportMatrix& m) {
            std::vector<std::vector<int>> cols(p);
            for (int j = 0; j < p; ++j)
                for (int i = 0; i < p; ++i)
                    if (m.get(i, j)) cols[j].push_back(i);
            std::sort(cols.begin(), cols.end());
            return cols;
        };
        auto key = column_key(xi);
        for (const auto& m : enumerate_equivalence_class(xi).members)
            CHECK(column_key(m) == key);
    }
}

TEST_CASE("check_equivalent is reflexive and symmetric") {
    Rng rng(53);
    for (int trial = 0; trial < 25; ++trial) {
        int p = rng.uniform_int(2, 4);
        auto a = testutil::random_sparse_graph(rng, p, p + 1);
        auto b = testutil::random_sparse_graph(rng, p, p + 1);
        CHECK(check_equivalent(a, a).verdict == EquivVerdict::Equivalent);
        auto ab = check_equivalent(a, b).verdict;
        auto ba = check_equivalent(b, a).verdict;
        CHECK(ab == ba);
    }
}

TEST_CASE("is_reducible") {
    Rng rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        auto dag = testutil::random_dag(rng, rng.uniform_int(2, 5), 0.4);
        CHECK(is_reducible(dag).verdict == ReducibleVerdict::Irreducible);
    }

    auto res = is_reducible(kG4);
    REQUIRE(res.verdict == ReducibleVerdict::Reducible);
    REQUIRE(res.reduced.has_value());
    CHECK(res.reduced->edge_count() == 3);
    CHECK(check_equivalent(*res.reduced, kG4).verdict == EquivVerdict::Equivalent);
    CHECK(check_equivalent(*res.reduced, kG1).verdict == EquivVerdict::Equivalent);
    for (const auto& e : res.reduced->edges()) CHECK(kG4.edges().count(e) == 1);
    // dropping the extra X2->X1 edge in particular is a legal reduction
    DirectedGraph g4_minus(kG4);
    g4_minus.remove_edge(1, 0);
    CHECK(check_equivalent(kG4, g4_minus).verdict == EquivVerdict::Equivalent);

    DirectedGraph two(2, {{0, 1}, {1, 0}});
    auto res2 = is_reducible(two);
    REQUIRE(res2.verdict == ReducibleVerdict::Reducible);
    CHECK(res2.reduced->edge_count() == 1);
}

TEST_CASE("parent_exchange flips a chain edge") {
    auto flipped = parent_exchange(kChain, 0, 1, {0, 1});
    CHECK(flipped == DirectedGraph(3, {{1, 0}, {1, 2}}));

    CHECK_THROWS_AS(parent_exchange(kChain, 0, 2, {0, 2}), NotExchangeable);
    CHECK_THROWS_AS(parent_exchange(kChain, 0, 1, {1, 1}), IllegalTarget);
}

TEST_CASE("parent_exchange matches the support rotation") {
    Rng rng(61);
    int done = 0;
    while (done < 150) {
        int p = rng.uniform_int(2, 6);
        auto g = testutil::random_sparse_graph(rng, p, p + 2);
        auto xi = support_of_graph(g);
        for (int j = 0; j < p; ++j)
            for (int k = 0; k < p; ++k) {
                if (j == k || xi.column_distance(j, k) != 1) continue;
                for (const auto& [u, v] : g.edges()) {
                    if (v != j && v != k) continue;
                    ++done;
                    auto exchanged = parent_exchange(g, j, k, {u, v});
                    int other = (v == j) ? k : j;
                    CHECK(support_of_graph(exchanged) ==
                          apply_support_rotation(xi, u, v, other));
                    // exchanges are lossless
                    CHECK(check_equivalent(g, exchanged).verdict == EquivVerdict::Equivalent);
                }
            }
    }
}

TEST_CASE("parent_reduction removes a redundant 2-cycle edge") {
    DirectedGraph two(2, {{0, 1}, {1, 0}});
    auto red = parent_reduction(two, 0, 1, {1, 0});
    CHECK(red == DirectedGraph(2, {{0, 1}}));
    CHECK(check_equivalent(two, red).verdict == EquivVerdict::Equivalent);

    CHECK_THROWS_AS(parent_reduction(kChain, 0, 1, {0, 1}), NotReducible);

    // 2-cycle plus a shared parent: columns stay identical, removal stays legal
    DirectedGraph g(3, {{0, 1}, {1, 0}, {2, 0}, {2, 1}});
    auto red2 = parent_reduction(g, 0, 1, {0, 1});
    CHECK(red2 == DirectedGraph(3, {{1, 0}, {2, 0}, {2, 1}}));
    CHECK(check_equivalent(g, red2).verdict == EquivVerdict::Equivalent);
}
