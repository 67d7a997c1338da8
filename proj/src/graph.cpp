#include "dglearn/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "dglearn/errors.hpp"

namespace dglearn {

DirectedGraph::DirectedGraph(int p) : p_(p) {
    if (p < 1) throw InfeasibleConstraints("vertex count must be positive");
}

DirectedGraph::DirectedGraph(int p, const std::vector<std::pair<int, int>>& edges)
    : DirectedGraph(p) {
    for (const auto& [u, v] : edges) add_edge(u, v);
}

void DirectedGraph::check_vertex(int v) const {
    if (v < 0 || v >= p_) throw IndexOutOfRange("vertex index out of range");
}

bool DirectedGraph::has_edge(int u, int v) const {
    return edges_.count({u, v}) > 0;
}

void DirectedGraph::add_edge(int u, int v) {
    check_vertex(u);
    check_vertex(v);
    if (u == v) throw IndexOutOfRange("self loops are not allowed");
    edges_.insert({u, v});
}

void DirectedGraph::remove_edge(int u, int v) {
    edges_.erase({u, v});
}

std::vector<int> DirectedGraph::parents(int v) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges_)
        if (b == v) out.push_back(a);
    return out;
}

std::vector<int> DirectedGraph::children(int u) const {
    std::vector<int> out;
    for (const auto& [a, b] : edges_)
        if (a == u) out.push_back(b);
    return out;
}

int DirectedGraph::degree(int v) const {
    int d = 0;
    for (const auto& [a, b] : edges_)
        if (a == v || b == v) ++d;
    return d;
}

// ---------------------------------------------------------------------------

SupportMatrix::SupportMatrix(int p) : p_(p) {
    if (p < 1) throw InfeasibleConstraints("support matrix dimension must be positive");
    bits_.assign((static_cast<std::size_t>(p) * p + 63) / 64, 0);
}

SupportMatrix SupportMatrix::identity(int p) {
    SupportMatrix m(p);
    for (int i = 0; i < p; ++i) m.set(i, i, true);
    return m;
}

bool SupportMatrix::get(int i, int j) const {
    if (i < 0 || i >= p_ || j < 0 || j >= p_) throw IndexOutOfRange("support index out of range");
    std::size_t idx = static_cast<std::size_t>(i) * p_ + j;
    return (bits_[idx / 64] >> (idx % 64)) & 1u;
}

void SupportMatrix::set(int i, int j, bool value) {
    if (i < 0 || i >= p_ || j < 0 || j >= p_) throw IndexOutOfRange("support index out of range");
    std::size_t idx = static_cast<std::size_t>(i) * p_ + j;
    if (value)
        bits_[idx / 64] |= (1ull << (idx % 64));
    else
        bits_[idx / 64] &= ~(1ull << (idx % 64));
}

int SupportMatrix::count() const {
    int c = 0;
    for (auto w : bits_) c += __builtin_popcountll(w);
    return c;
}

bool SupportMatrix::graph_representable() const {
    for (int i = 0; i < p_; ++i)
        if (!get(i, i)) return false;
    return true;
}

bool SupportMatrix::is_subset_of(const SupportMatrix& other) const {
    if (p_ != other.p_) throw DimensionMismatch("support matrices differ in dimension");
    for (std::size_t w = 0; w < bits_.size(); ++w)
        if (bits_[w] & ~other.bits_[w]) return false;
    return true;
}

void SupportMatrix::swap_columns(int j, int k) {
    for (int i = 0; i < p_; ++i) {
        bool a = get(i, j), b = get(i, k);
        set(i, j, b);
        set(i, k, a);
    }
}

int SupportMatrix::column_distance(int j, int k) const {
    int d = 0;
    for (int i = 0; i < p_; ++i)
        if (get(i, j) != get(i, k)) ++d;
    return d;
}

std::vector<int> SupportMatrix::column_diff_rows(int j, int k) const {
    std::vector<int> rows;
    for (int i = 0; i < p_; ++i)
        if (get(i, j) != get(i, k)) rows.push_back(i);
    return rows;
}

std::string SupportMatrix::pretty() const {
    std::ostringstream os;
    for (int i = 0; i < p_; ++i) {
        for (int j = 0; j < p_; ++j) os << (get(i, j) ? 'x' : '0') << (j + 1 < p_ ? ' ' : '\n');
    }
    return os.str();
}

std::size_t SupportMatrix::hash() const {
    std::uint64_t h = 0x9e3779b97f4a7c15ull ^ static_cast<std::uint64_t>(p_);
    for (auto w : bits_) {
        h ^= w + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
}

// ---------------------------------------------------------------------------

SupportMatrix support_of_graph(const DirectedGraph& g) {
    SupportMatrix m = SupportMatrix::identity(g.p());
    for (const auto& [u, v] : g.edges()) m.set(u, v, true);
    return m;
}

DirectedGraph graph_of_support(const SupportMatrix& xi) {
    if (!xi.graph_representable())
        throw NotGraphRepresentable("support matrix has a zero diagonal entry");
    DirectedGraph g(xi.p());
    for (int i = 0; i < xi.p(); ++i)
        for (int j = 0; j < xi.p(); ++j)
            if (i != j && xi.get(i, j)) g.add_edge(i, j);
    return g;
}

// --- strongly connected components (Tarjan) --------------------------------

namespace {

struct TarjanState {
    const std::vector<std::vector<int>>& adj;
    std::vector<int> index, low, stack;
    std::vector<bool> on_stack;
    std::vector<std::vector<int>> components;  // reverse topological order
    int next_index = 0;

    explicit TarjanState(const std::vector<std::vector<int>>& a)
        : adj(a), index(a.size(), -1), low(a.size(), 0), on_stack(a.size(), false) {}

    void run(int v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = true;
        for (int w : adj[v]) {
            if (index[w] < 0) {
                run(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::vector<int> comp;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            components.push_back(std::move(comp));
        }
    }
};

std::vector<std::vector<int>> adjacency(const DirectedGraph& g) {
    std::vector<std::vector<int>> adj(g.p());
    for (const auto& [u, v] : g.edges()) adj[u].push_back(v);
    for (auto& a : adj) std::sort(a.begin(), a.end());
    return adj;
}

}  // namespace

MSCSPartition find_mscs(const DirectedGraph& g) {
    auto adj = adjacency(g);
    TarjanState t(adj);
    for (int v = 0; v < g.p(); ++v)
        if (t.index[v] < 0) t.run(v);

    // Tarjan emits components in reverse topological order of the condensation.
    std::reverse(t.components.begin(), t.components.end());
    MSCSPartition part;
    part.blocks = std::move(t.components);
    part.block_of.assign(g.p(), -1);
    for (std::size_t b = 0; b < part.blocks.size(); ++b)
        for (int v : part.blocks[b]) part.block_of[v] = static_cast<int>(b);
    return part;
}

// --- simple cycle enumeration (Johnson) -------------------------------------

namespace {

struct JohnsonState {
    const std::vector<std::vector<int>>& adj;
    int start = 0;
    std::vector<bool> blocked, in_component;
    std::vector<std::set<int>> block_map;
    std::vector<int> path;
    std::vector<std::vector<int>>& out;

    JohnsonState(const std::vector<std::vector<int>>& a, std::vector<std::vector<int>>& o)
        : adj(a),
          blocked(a.size(), false),
          in_component(a.size(), false),
          block_map(a.size()),
          out(o) {}

    void unblock(int v) {
        blocked[v] = false;
        auto pending = std::move(block_map[v]);
        block_map[v].clear();
        for (int w : pending)
            if (blocked[w]) unblock(w);
    }

    bool circuit(int v) {
        bool found = false;
        path.push_back(v);
        blocked[v] = true;
        for (int w : adj[v]) {
            if (!in_component[w]) continue;
            if (w == start) {
                out.push_back(path);
                found = true;
            } else if (!blocked[w]) {
                if (circuit(w)) found = true;
            }
        }
        if (found) {
            unblock(v);
        } else {
            for (int w : adj[v])
                if (in_component[w]) block_map[w].insert(v);
        }
        path.pop_back();
        return found;
    }
};

// SCC of `anchor` within the subgraph induced on vertices >= anchor,
// via a light two-pass reachability walk.
std::vector<bool> anchored_component(const std::vector<std::vector<int>>& adj, int anchor) {
    int p = static_cast<int>(adj.size());
    std::vector<bool> fwd(p, false), bwd(p, false);
    std::vector<int> stack{anchor};
    fwd[anchor] = true;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (w >= anchor && !fwd[w]) {
                fwd[w] = true;
                stack.push_back(w);
            }
    }
    std::vector<std::vector<int>> radj(p);
    for (int v = anchor; v < p; ++v)
        for (int w : adj[v])
            if (w >= anchor) radj[w].push_back(v);
    stack = {anchor};
    bwd[anchor] = true;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : radj[v])
            if (!bwd[w]) {
                bwd[w] = true;
                stack.push_back(w);
            }
    }
    std::vector<bool> comp(p, false);
    for (int v = anchor; v < p; ++v) comp[v] = fwd[v] && bwd[v];
    return comp;
}

}  // namespace

namespace detail {

std::vector<std::vector<int>> simple_cycles_adj(const std::vector<std::vector<int>>& adj) {
    int p = static_cast<int>(adj.size());
    std::vector<std::vector<int>> cycles;
    for (int s = 0; s < p; ++s) {
        auto comp = anchored_component(adj, s);
        int size = 0;
        for (int v = 0; v < p; ++v)
            if (comp[v]) ++size;
        if (size < 2) continue;

        JohnsonState js(adj, cycles);
        js.start = s;
        for (int v = 0; v < p; ++v) js.in_component[v] = comp[v];
        js.circuit(s);
        // vertices < s are never visited: circuit only walks in_component,
        // and the component lives in {s, ..., p-1}
    }
    std::sort(cycles.begin(), cycles.end());
    return cycles;
}

}  // namespace detail

std::vector<std::vector<int>> simple_cycles(const DirectedGraph& g) {
    return detail::simple_cycles_adj(adjacency(g));
}

bool is_acyclic(const DirectedGraph& g) {
    const auto part = find_mscs(g);
    for (const auto& b : part.blocks)
        if (b.size() > 1) return false;
    return true;
}

bool has_two_cycle(const DirectedGraph& g) {
    for (const auto& [u, v] : g.edges())
        if (u < v && g.has_edge(v, u)) return true;
    return false;
}

int shd(const DirectedGraph& a, const DirectedGraph& b) {
    if (a.p() != b.p()) throw DimensionMismatch("graphs differ in vertex count");
    int d = 0;
    for (const auto& e : a.edges())
        if (!b.edges().count(e)) ++d;
    for (const auto& e : b.edges())
        if (!a.edges().count(e)) ++d;
    return d;
}

std::set<std::pair<int, int>> skeleton(const DirectedGraph& g) {
    std::set<std::pair<int, int>> sk;
    for (const auto& [u, v] : g.edges()) sk.insert({std::min(u, v), std::max(u, v)});
    return sk;
}

std::set<std::array<int, 3>> v_structures(const DirectedGraph& g) {
    std::set<std::array<int, 3>> vs;
    for (int c = 0; c < g.p(); ++c) {
        auto pa = g.parents(c);
        for (std::size_t x = 0; x < pa.size(); ++x)
            for (std::size_t y = x + 1; y < pa.size(); ++y) {
                int a = std::min(pa[x], pa[y]), b = std::max(pa[x], pa[y]);
                if (!g.adjacent(a, b)) vs.insert({a, b, c});
            }
    }
    return vs;
}

bool dag_markov_equivalent(const DirectedGraph& a, const DirectedGraph& b) {
    if (a.p() != b.p()) throw DimensionMismatch("graphs differ in vertex count");
    if (!is_acyclic(a) || !is_acyclic(b)) throw NotAcyclic("inputs must be acyclic");
    return skeleton(a) == skeleton(b) && v_structures(a) == v_structures(b);
}

std::vector<int> external_parents(const DirectedGraph& g, const std::vector<int>& block) {
    std::set<int> inside(block.begin(), block.end());
    std::set<int> pa;
    for (const auto& [u, v] : g.edges())
        if (inside.count(v) && !inside.count(u)) pa.insert(u);
    return {pa.begin(), pa.end()};
}

}  // namespace dglearn
