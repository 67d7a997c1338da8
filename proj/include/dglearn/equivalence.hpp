#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dglearn/graph.hpp"

namespace dglearn {

// A support rotation in the (j, k) column plane that zeroes entry (i, j),
// classified by its effect on the pattern.
enum class RotationKind {
    NoEffect,
    Reduction,
    ReversibleAcute,
    IrreversibleAcute,
    ColumnSwap,
};

std::string to_string(RotationKind k);

struct RotationMove {
    RotationKind kind;
    int i, j, k;
};

RotationKind classify_rotation(const SupportMatrix& xi, int i, int j, int k);
SupportMatrix apply_support_rotation(const SupportMatrix& xi, int i, int j, int k);

/// One step of a witness sequence: either a support rotation or a cycle
/// reversion (recorded by the cycle it reverses).
struct WitnessStep {
    RotationMove rotation{RotationKind::NoEffect, -1, -1, -1};
    std::vector<int> cycle;  // non-empty iff this step is a cycle reversion
    bool is_cycle_reversion() const { return !cycle.empty(); }
};

/// Legal lossless rotations of a pattern: reductions over identical column
/// pairs and reversible acute rotations over column pairs at Hamming
/// distance one, never zeroing a diagonal entry. Returns the distinct
/// resulting patterns together with the move that produced each.
std::vector<std::pair<RotationMove, SupportMatrix>> find_rotation_moves(const SupportMatrix& xi);
std::vector<SupportMatrix> find_rotations(const SupportMatrix& xi);

/// Reverses directed cycle c of g: cycle edges flip, and every edge into a
/// cycle vertex from outside the cycle's arcs is retargeted to that vertex's
/// predecessor on c. Equivalent to permuting the columns of the support
/// matrix along the cycle.
DirectedGraph reverse_cycle(const DirectedGraph& g, const std::vector<int>& cycle);

struct EquivalenceClass {
    std::vector<SupportMatrix> members;  // discovery order; seed first
    bool exhausted = true;
    std::size_t node_budget_used = 0;

    bool contains(const SupportMatrix& xi) const;
};

inline constexpr std::uint64_t kDefaultBudget = 1'000'000;

/// Depth-first closure of {xi} under legal rotations, then closure of every
/// member under single-cycle reversions (newly found members re-expanded
/// under cycle reversions only). Hitting the node budget yields
/// exhausted = false with a partial class.
EquivalenceClass enumerate_equivalence_class(const SupportMatrix& xi,
                                             std::uint64_t budget = kDefaultBudget);

enum class EquivVerdict { Equivalent, NotEquivalent, Inconclusive };

std::string to_string(EquivVerdict v);

struct EquivResult {
    EquivVerdict verdict;
    std::size_t class_size_g1 = 0;  // members enumerated from g1's support
    std::size_t class_size_g2 = 0;
    // Witness mapping one support to a subset of the other, when equivalent.
    std::vector<WitnessStep> witness;
    int witness_from = 0;  // 1 if the witness starts at g1, 2 if at g2
};

/// Distribution equivalence test: g1 == g2 iff some enumerated member of
/// g1's class is a subset of g2's support and vice versa.
EquivResult check_equivalent(const DirectedGraph& g1, const DirectedGraph& g2,
                             std::uint64_t budget = kDefaultBudget);

enum class ReducibleVerdict { Reducible, Irreducible, Inconclusive };

struct ReducibilityResult {
    ReducibleVerdict verdict;
    std::optional<DirectedGraph> reduced;  // irreducible equivalent, when reducible
};

/// A graph with no 2-cycle is irreducible immediately; otherwise the class
/// closure is searched for an equivalent pattern with fewer entries, which is
/// mapped back to a subgraph and reduced recursively until irreducible.
ReducibilityResult is_reducible(const DirectedGraph& g, std::uint64_t budget = kDefaultBudget);

/// Removes target_edge (an edge into j or k) and adds the edge from the
/// symmetric-difference vertex of {Pa(j) u {j}, Pa(k) u {k}} to the column
/// missing it. Requires the two parent sets to differ in exactly one vertex.
DirectedGraph parent_exchange(const DirectedGraph& g, int j, int k,
                              std::pair<int, int> target_edge);

/// Removes target_edge when Pa(j) u {j} == Pa(k) u {k}; the removal is a
/// reduction, so the result is equivalent to g.
DirectedGraph parent_reduction(const DirectedGraph& g, int j, int k,
                               std::pair<int, int> target_edge);

}  // namespace dglearn
