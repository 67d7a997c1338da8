#include "dglearn/equivalence.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "dglearn/errors.hpp"

namespace dglearn {

std::string to_string(RotationKind k) {
    switch (k) {
        case RotationKind::NoEffect: return "no_effect";
        case RotationKind::Reduction: return "reduction";
        case RotationKind::ReversibleAcute: return "reversible_acute";
        case RotationKind::IrreversibleAcute: return "irreversible_acute";
        case RotationKind::ColumnSwap: return "column_swap";
    }
    return "?";
}

std::string to_string(EquivVerdict v) {
    switch (v) {
        case EquivVerdict::Equivalent: return "equivalent";
        case EquivVerdict::NotEquivalent: return "not_equivalent";
        case EquivVerdict::Inconclusive: return "inconclusive";
    }
    return "?";
}

RotationKind classify_rotation(const SupportMatrix& xi, int i, int j, int k) {
    if (i < 0 || i >= xi.p() || j < 0 || j >= xi.p() || k < 0 || k >= xi.p() || j == k)
        throw IndexOutOfRange("rotation indices out of range");
    if (!xi.get(i, j)) return RotationKind::NoEffect;
    if (!xi.get(i, k)) return RotationKind::ColumnSwap;
    int diff = 0;
    for (int l = 0; l < xi.p(); ++l)
        if (l != i && xi.get(l, j) != xi.get(l, k)) ++diff;
    if (diff == 0) return RotationKind::Reduction;
    if (diff == 1) return RotationKind::ReversibleAcute;
    return RotationKind::IrreversibleAcute;
}

SupportMatrix apply_support_rotation(const SupportMatrix& xi, int i, int j, int k) {
    SupportMatrix out = xi;
    switch (classify_rotation(xi, i, j, k)) {
        case RotationKind::NoEffect:
            break;
        case RotationKind::ColumnSwap:
            out.swap_columns(j, k);
            break;
        case RotationKind::Reduction:
            out.set(i, j, false);
            break;
        case RotationKind::ReversibleAcute:
        case RotationKind::IrreversibleAcute:
            out.set(i, j, false);
            for (int l = 0; l < xi.p(); ++l)
                if (l != i && xi.get(l, j) != xi.get(l, k)) {
                    out.set(l, j, true);
                    out.set(l, k, true);
                }
            break;
    }
    return out;
}

std::vector<std::pair<RotationMove, SupportMatrix>> find_rotation_moves(const SupportMatrix& xi) {
    std::vector<std::pair<RotationMove, SupportMatrix>> out;
    const int p = xi.p();
    for (int j = 0; j < p; ++j) {
        for (int k = j + 1; k < p; ++k) {
            int dist = xi.column_distance(j, k);
            if (dist == 0) {
                // identical columns: any off-diagonal entry of either column
                // can be zeroed outright
                for (int i = 0; i < p; ++i) {
                    if (!xi.get(i, j)) continue;
                    if (i != j) {
                        RotationMove mv{RotationKind::Reduction, i, j, k};
                        out.push_back({mv, apply_support_rotation(xi, i, j, k)});
                    }
                    if (i != k) {
                        RotationMove mv{RotationKind::Reduction, i, k, j};
                        out.push_back({mv, apply_support_rotation(xi, i, k, j)});
                    }
                }
            } else if (dist == 1) {
                // columns differ in one row: zeroing any shared entry fills
                // the disagreeing row in both columns
                int l = xi.column_diff_rows(j, k)[0];
                for (int i = 0; i < p; ++i) {
                    if (i == l || !xi.get(i, j)) continue;
                    if (i != j) {
                        RotationMove mv{RotationKind::ReversibleAcute, i, j, k};
                        out.push_back({mv, apply_support_rotation(xi, i, j, k)});
                    }
                    if (i != k) {
                        RotationMove mv{RotationKind::ReversibleAcute, i, k, j};
                        out.push_back({mv, apply_support_rotation(xi, i, k, j)});
                    }
                }
            }
        }
    }
    return out;
}

std::vector<SupportMatrix> find_rotations(const SupportMatrix& xi) {
    std::vector<SupportMatrix> out;
    for (const auto& [mv, m] : find_rotation_moves(xi))
        if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
    return out;
}

DirectedGraph reverse_cycle(const DirectedGraph& g, const std::vector<int>& cycle) {
    const std::size_t m = cycle.size();
    if (m < 2) throw NotACycle("cycle must have length >= 2");
    std::set<int> distinct(cycle.begin(), cycle.end());
    if (distinct.size() != m) throw NotACycle("cycle vertices must be distinct");
    std::set<std::pair<int, int>> arcs;
    std::map<int, int> pred;
    for (std::size_t t = 0; t < m; ++t) {
        int u = cycle[t], v = cycle[(t + 1) % m];
        if (!g.has_edge(u, v)) throw NotACycle("sequence is not a directed cycle of the graph");
        arcs.insert({u, v});
        pred[v] = u;
    }

    DirectedGraph out(g.p());
    for (const auto& [u, v] : g.edges()) {
        if (arcs.count({u, v}))
            out.add_edge(v, u);
        else if (pred.count(v))
            out.add_edge(u, pred[v]);  // in-edge of a cycle vertex: retarget to its predecessor
        else
            out.add_edge(u, v);
    }
    return out;
}

bool EquivalenceClass::contains(const SupportMatrix& xi) const {
    return std::find(members.begin(), members.end(), xi) != members.end();
}

// --- class enumeration ------------------------------------------------------

namespace {

struct EnumState {
    std::vector<SupportMatrix> members;
    std::unordered_map<SupportMatrix, int, SupportMatrix::Hasher> index;
    std::vector<int> parent;
    std::vector<WitnessStep> step;
    std::uint64_t visited = 0;
    std::uint64_t budget;
    bool exhausted = true;

    explicit EnumState(std::uint64_t b) : budget(b) {}

    int add(const SupportMatrix& m, int from, WitnessStep s) {
        auto it = index.find(m);
        if (it != index.end()) return -1;
        int idx = static_cast<int>(members.size());
        members.push_back(m);
        index.emplace(m, idx);
        parent.push_back(from);
        step.push_back(std::move(s));
        return idx;
    }
};

std::vector<std::pair<WitnessStep, SupportMatrix>> reversion_neighbors(const SupportMatrix& xi) {
    std::vector<std::pair<WitnessStep, SupportMatrix>> out;
    const int p = xi.p();
    std::vector<std::vector<int>> adj(p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
            if (i != j && xi.get(i, j)) adj[i].push_back(j);
    for (const auto& c : detail::simple_cycles_adj(adj)) {
        // reversing a cycle permutes columns: each member takes its successor's
        SupportMatrix permuted = xi;
        for (std::size_t t = 0; t < c.size(); ++t) {
            int dst = c[t], src = c[(t + 1) % c.size()];
            for (int i = 0; i < p; ++i) permuted.set(i, dst, xi.get(i, src));
        }
        WitnessStep s;
        s.cycle = c;
        out.push_back({s, permuted});
    }
    return out;
}

// Depth-first closure from `roots` under `expand`; newly found members keep
// getting expanded with the same neighborhood function.
template <typename ExpandFn>
void dfs_closure(EnumState& st, std::vector<int> work, std::vector<bool>& expanded,
                 ExpandFn&& expand) {
    while (!work.empty()) {
        int idx = work.back();
        work.pop_back();
        if (expanded[idx]) continue;
        if (st.visited >= st.budget) {
            st.exhausted = false;
            return;
        }
        ++st.visited;
        expanded[idx] = true;
        for (auto& [s, m] : expand(st.members[idx])) {
            int added = st.add(m, idx, s);
            if (added >= 0) {
                expanded.push_back(false);
                work.push_back(added);
            }
        }
    }
}

EnumState enumerate_state(const SupportMatrix& xi, std::uint64_t budget) {
    if (!xi.graph_representable())
        throw NotGraphRepresentable("seed support matrix must have a nonzero diagonal");
    EnumState st(budget);
    st.add(xi, -1, WitnessStep{});

    // Stage 1: rotation closure.
    std::vector<bool> rot_expanded(1, false);
    dfs_closure(st, {0}, rot_expanded, [](const SupportMatrix& m) {
        std::vector<std::pair<WitnessStep, SupportMatrix>> out;
        for (auto& [mv, res] : find_rotation_moves(m)) {
            WitnessStep s;
            s.rotation = mv;
            out.push_back({s, res});
        }
        return out;
    });

    // Stage 2: cycle-reversion closure of every rotation-closure member;
    // members found here are re-expanded under reversions only.
    std::size_t stage1_count = st.members.size();
    std::vector<bool> rev_expanded(st.members.size(), false);
    for (std::size_t t = 0; t < stage1_count && st.exhausted; ++t) {
        dfs_closure(st, {static_cast<int>(t)}, rev_expanded,
                    [](const SupportMatrix& m) { return reversion_neighbors(m); });
    }
    return st;
}

std::vector<WitnessStep> reconstruct(const EnumState& st, int idx) {
    std::vector<WitnessStep> steps;
    for (int cur = idx; st.parent[cur] >= 0; cur = st.parent[cur]) steps.push_back(st.step[cur]);
    std::reverse(steps.begin(), steps.end());
    return steps;
}

struct DirectionResult {
    bool witness_found = false;
    bool exhausted = true;
    std::size_t size = 0;
    std::vector<WitnessStep> steps;
};

// Is some member of the class of `from` a subset of `to`?
DirectionResult subset_witness(const SupportMatrix& from, const SupportMatrix& to,
                               std::uint64_t budget) {
    EnumState st = enumerate_state(from, budget);
    DirectionResult r;
    r.exhausted = st.exhausted;
    r.size = st.members.size();
    for (std::size_t i = 0; i < st.members.size(); ++i) {
        if (st.members[i].is_subset_of(to)) {
            r.witness_found = true;
            r.steps = reconstruct(st, static_cast<int>(i));
            break;
        }
    }
    return r;
}

}  // namespace

EquivalenceClass enumerate_equivalence_class(const SupportMatrix& xi, std::uint64_t budget) {
    EnumState st = enumerate_state(xi, budget);
    EquivalenceClass cls;
    cls.members = std::move(st.members);
    cls.exhausted = st.exhausted;
    cls.node_budget_used = st.visited;
    return cls;
}

EquivResult check_equivalent(const DirectedGraph& g1, const DirectedGraph& g2,
                             std::uint64_t budget) {
    if (g1.p() != g2.p()) throw DimensionMismatch("graphs differ in vertex count");
    const SupportMatrix xi1 = support_of_graph(g1);
    const SupportMatrix xi2 = support_of_graph(g2);

    // Enumerate from the sparser seed first: its class is the cheaper one, and
    // a completed enumeration without a witness settles the verdict.
    const bool g1_first = g1.edge_count() <= g2.edge_count();
    const SupportMatrix& a = g1_first ? xi1 : xi2;
    const SupportMatrix& b = g1_first ? xi2 : xi1;

    EquivResult res{EquivVerdict::Inconclusive};
    DirectionResult da = subset_witness(a, b, budget);
    (g1_first ? res.class_size_g1 : res.class_size_g2) = da.size;
    if (!da.witness_found && da.exhausted) {
        res.verdict = EquivVerdict::NotEquivalent;
        return res;
    }
    DirectionResult db = subset_witness(b, a, budget);
    (g1_first ? res.class_size_g2 : res.class_size_g1) = db.size;
    if (!db.witness_found && db.exhausted) {
        res.verdict = EquivVerdict::NotEquivalent;
        return res;
    }
    if (da.witness_found && db.witness_found) {
        res.verdict = EquivVerdict::Equivalent;
        // report the witness that starts at g1 when available
        if (g1_first) {
            res.witness = std::move(da.steps);
            res.witness_from = 1;
        } else {
            res.witness = std::move(db.steps);
            res.witness_from = 1;
        }
    }
    return res;
}

ReducibilityResult is_reducible(const DirectedGraph& g, std::uint64_t budget) {
    if (!has_two_cycle(g)) return {ReducibleVerdict::Irreducible, std::nullopt};

    const SupportMatrix xi = support_of_graph(g);
    EquivalenceClass cls = enumerate_equivalence_class(xi, budget);

    int best_subset = -1, best_any = -1;
    for (std::size_t i = 0; i < cls.members.size(); ++i) {
        const auto& m = cls.members[i];
        if (m.count() >= xi.count()) continue;
        if (best_any < 0 || m.count() < cls.members[best_any].count())
            best_any = static_cast<int>(i);
        if (m.is_subset_of(xi) &&
            (best_subset < 0 || m.count() < cls.members[best_subset].count()))
            best_subset = static_cast<int>(i);
    }
    int pick = best_subset >= 0 ? best_subset : best_any;
    if (pick < 0)
        return {cls.exhausted ? ReducibleVerdict::Irreducible : ReducibleVerdict::Inconclusive,
                std::nullopt};

    DirectedGraph reduced = graph_of_support(cls.members[pick]);
    auto rec = is_reducible(reduced, budget);
    if (rec.verdict == ReducibleVerdict::Reducible) reduced = *rec.reduced;
    return {ReducibleVerdict::Reducible, reduced};
}

// --- graphical operations ---------------------------------------------------

namespace {

std::set<int> closed_parent_set(const DirectedGraph& g, int v) {
    auto pa = g.parents(v);
    std::set<int> out(pa.begin(), pa.end());
    out.insert(v);
    return out;
}

void validate_target(const DirectedGraph& g, int j, int k, std::pair<int, int> target) {
    auto [u, v] = target;
    if (u == v) throw IllegalTarget("target must not be a diagonal entry");
    if (v != j && v != k) throw IllegalTarget("target edge must point into one of the two columns");
    if (!g.has_edge(u, v)) throw IllegalTarget("target edge is not present");
}

}  // namespace

DirectedGraph parent_exchange(const DirectedGraph& g, int j, int k,
                              std::pair<int, int> target_edge) {
    if (j == k || j < 0 || k < 0 || j >= g.p() || k >= g.p())
        throw IndexOutOfRange("column indices out of range");
    auto pj = closed_parent_set(g, j);
    auto pk = closed_parent_set(g, k);
    std::vector<int> sym;
    std::set_symmetric_difference(pj.begin(), pj.end(), pk.begin(), pk.end(),
                                  std::back_inserter(sym));
    if (sym.size() != 1)
        throw NotExchangeable("closed parent sets must differ in exactly one vertex");
    validate_target(g, j, k, target_edge);

    int w = sym[0];
    int t = pj.count(w) ? k : j;  // the column missing w gains the edge
    DirectedGraph out = g;
    out.remove_edge(target_edge.first, target_edge.second);
    out.add_edge(w, t);
    return out;
}

DirectedGraph parent_reduction(const DirectedGraph& g, int j, int k,
                               std::pair<int, int> target_edge) {
    if (j == k || j < 0 || k < 0 || j >= g.p() || k >= g.p())
        throw IndexOutOfRange("column indices out of range");
    if (closed_parent_set(g, j) != closed_parent_set(g, k))
        throw NotReducible("closed parent sets must coincide");
    validate_target(g, j, k, target_edge);

    DirectedGraph out = g;
    out.remove_edge(target_edge.first, target_edge.second);
    return out;
}

}  // namespace dglearn
