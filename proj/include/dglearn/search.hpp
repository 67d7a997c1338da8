#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dglearn/graph.hpp"
#include "dglearn/scoring.hpp"
#include "dglearn/sem.hpp"

namespace dglearn {

enum class MoveKind { Add, Delete, Reverse, VirtualCase1, VirtualCase2 };

std::string to_string(MoveKind k);

/// A single local change. Add/Delete/Reverse carry the edge (u, v). The
/// virtual-edge moves carry the triangle vertices: case 1 deletes the i-j
/// edge, orients i -> k and turns `path` (connecting j to k) into a directed
/// cycle through j -> k; case 2 deletes the i-j and l-k edges and adds k -> j.
struct Move {
    MoveKind kind;
    int u = -1, v = -1;
    int i = -1, j = -1, k = -1, l = -1;
    std::vector<int> path;
};

/// All applicable moves of g, in deterministic order: Adds, Deletes,
/// Reverses (skipping reversals that would collide with an existing
/// opposite edge), then the virtual-edge moves.
std::vector<Move> neighbors(const DirectedGraph& g);

DirectedGraph apply_move(const DirectedGraph& g, const Move& m);

DirectedGraph apply_virtual_case1(const DirectedGraph& g, int i, int j, int k,
                                  const std::vector<int>& path);
DirectedGraph apply_virtual_case2(const DirectedGraph& g, int i, int j, int k, int l);

enum class SearchAlgorithm { HillClimb, Tabu };

struct SearchConfig {
    SearchAlgorithm algorithm = SearchAlgorithm::Tabu;
    int tabu_length = 5;
    int patience = 5;
    int restarts = 5;  // per-block fitting restarts
    std::uint64_t seed = 0;
    int max_iterations = 500;
    std::optional<double> lambda;  // default 0.5 log n
    bool use_virtual_ops = true;
    int threads = 1;
    // Virtual moves must leave the likelihood essentially unchanged; the
    // tolerance scales with the sample size.
    double virtual_nll_tol = 1e-3;
};

/// Best strictly-improving move until none remains, then a reduction pass so
/// the output is never reducible.
ScoredModel hill_climb(const Dataset& data, const DirectedGraph& init, const SearchConfig& cfg);

/// Best-of-neighborhood search accepting non-improving moves, with recently
/// visited structures tabu for `tabu_length` iterations and termination after
/// `patience` consecutive iterations without a new global best.
ScoredModel tabu_search(const Dataset& data, const DirectedGraph& init, const SearchConfig& cfg);

/// Dispatch on cfg.algorithm.
ScoredModel run_search(const Dataset& data, const DirectedGraph& init, const SearchConfig& cfg);

}  // namespace dglearn
