#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace dglearn {

/// Directed graph on vertices 0..p-1, no self loops. Edge (i, j) reads
/// X_i -> X_j (i is a parent of j). Treat instances as immutable values once
/// constructed; all operations below take const inputs and are safe to call
/// concurrently on shared graphs.
class DirectedGraph {
public:
    explicit DirectedGraph(int p);
    DirectedGraph(int p, const std::vector<std::pair<int, int>>& edges);

    int p() const { return p_; }
    const std::set<std::pair<int, int>>& edges() const { return edges_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }

    bool has_edge(int u, int v) const;
    bool adjacent(int u, int v) const { return has_edge(u, v) || has_edge(v, u); }
    void add_edge(int u, int v);
    void remove_edge(int u, int v);

    std::vector<int> parents(int v) const;
    std::vector<int> children(int u) const;
    int degree(int v) const;  // in + out

    bool operator==(const DirectedGraph&) const = default;

private:
    void check_vertex(int v) const;

    int p_;
    std::set<std::pair<int, int>> edges_;
};

/// Binary support pattern of a p x p matrix, entries in {0, x}. Column k
/// collects the parents of X_k plus X_k itself when the matrix comes from a
/// graph. Graph-representable iff the whole diagonal is nonzero.
class SupportMatrix {
public:
    SupportMatrix() = default;
    explicit SupportMatrix(int p);
    static SupportMatrix identity(int p);

    int p() const { return p_; }
    bool get(int i, int j) const;
    void set(int i, int j, bool value);
    int count() const;

    bool graph_representable() const;
    bool is_subset_of(const SupportMatrix& other) const;
    void swap_columns(int j, int k);

    int column_distance(int j, int k) const;
    std::vector<int> column_diff_rows(int j, int k) const;

    std::string pretty() const;
    std::size_t hash() const;

    bool operator==(const SupportMatrix& o) const { return p_ == o.p_ && bits_ == o.bits_; }

    struct Hasher {
        std::size_t operator()(const SupportMatrix& m) const { return m.hash(); }
    };

private:
    int p_ = 0;
    std::vector<std::uint64_t> bits_;  // row-major
};

SupportMatrix support_of_graph(const DirectedGraph& g);
DirectedGraph graph_of_support(const SupportMatrix& xi);

/// Maximal strongly connected subgraphs, topologically ordered over the
/// condensation; each block sorted ascending.
struct MSCSPartition {
    std::vector<std::vector<int>> blocks;
    std::vector<int> block_of;
};

MSCSPartition find_mscs(const DirectedGraph& g);

/// All distinct simple directed cycles (length >= 2), each rotated so its
/// smallest vertex leads, the list sorted lexicographically.
std::vector<std::vector<int>> simple_cycles(const DirectedGraph& g);

bool is_acyclic(const DirectedGraph& g);
bool has_two_cycle(const DirectedGraph& g);

/// Structural Hamming distance counting ordered pairs, so a reversed edge
/// costs 2.
int shd(const DirectedGraph& a, const DirectedGraph& b);

std::set<std::pair<int, int>> skeleton(const DirectedGraph& g);            // pairs u < v
std::set<std::array<int, 3>> v_structures(const DirectedGraph& g);         // (a, b, c): a->c<-b, a<b, a,b non-adjacent
bool dag_markov_equivalent(const DirectedGraph& a, const DirectedGraph& b);

/// Vertices outside `block` with an edge into it, sorted ascending.
std::vector<int> external_parents(const DirectedGraph& g, const std::vector<int>& block);

namespace detail {
/// simple_cycles over raw adjacency lists (each list sorted ascending).
std::vector<std::vector<int>> simple_cycles_adj(const std::vector<std::vector<int>>& adj);
}  // namespace detail

}  // namespace dglearn
