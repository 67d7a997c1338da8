#include "dglearn/search.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <thread>
#include <unordered_map>

#include "dglearn/equivalence.hpp"
#include "dglearn/errors.hpp"

namespace dglearn {

std::string to_string(MoveKind k) {
    switch (k) {
        case MoveKind::Add: return "add";
        case MoveKind::Delete: return "delete";
        case MoveKind::Reverse: return "reverse";
        case MoveKind::VirtualCase1: return "virtual_case1";
        case MoveKind::VirtualCase2: return "virtual_case2";
    }
    return "?";
}

namespace {

// Shortest undirected path from j to k avoiding vertex `avoid` and the direct
// j-k step; deterministic BFS. Empty when none exists.
std::vector<int> connecting_path(const DirectedGraph& g, int j, int k, int avoid) {
    const int p = g.p();
    std::vector<int> parent(p, -2);
    std::deque<int> queue{j};
    parent[j] = -1;
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int w = 0; w < p; ++w) {
            if (w == avoid || parent[w] != -2 || !g.adjacent(v, w)) continue;
            if (v == j && w == k) continue;  // the direct edge is not a sequence
            parent[w] = v;
            if (w == k) {
                std::vector<int> path{k};
                for (int cur = v; cur != -1; cur = parent[cur]) path.push_back(cur);
                std::reverse(path.begin(), path.end());
                return path;
            }
            queue.push_back(w);
        }
    }
    return {};
}

void ensure_oriented(DirectedGraph& g, int from, int to) {
    if (g.has_edge(from, to)) return;
    if (g.has_edge(to, from)) {
        g.remove_edge(to, from);
        g.add_edge(from, to);
        return;
    }
    throw PreconditionViolated("required adjacency is missing");
}

void delete_between(DirectedGraph& g, int a, int b) {
    g.remove_edge(a, b);
    g.remove_edge(b, a);
}

}  // namespace

std::vector<Move> neighbors(const DirectedGraph& g) {
    std::vector<Move> out;
    const int p = g.p();

    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v)
            if (u != v && !g.has_edge(u, v)) {
                Move m{MoveKind::Add};
                m.u = u;
                m.v = v;
                out.push_back(std::move(m));
            }
    for (const auto& [u, v] : g.edges()) {
        Move m{MoveKind::Delete};
        m.u = u;
        m.v = v;
        out.push_back(std::move(m));
    }
    // reversing one arc of a 2-cycle would collide with the opposite edge
    for (const auto& [u, v] : g.edges())
        if (!g.has_edge(v, u)) {
            Move m{MoveKind::Reverse};
            m.u = u;
            m.v = v;
            out.push_back(std::move(m));
        }

    // triangles, in every role assignment: i loses its edge to j, and the
    // j -> k edge becomes part of a directed cycle along a connecting path
    for (int a = 0; a < p; ++a)
        for (int b = a + 1; b < p; ++b)
            for (int c = b + 1; c < p; ++c) {
                if (!(g.adjacent(a, b) && g.adjacent(a, c) && g.adjacent(b, c))) continue;
                const int tri[3] = {a, b, c};
                for (int ii = 0; ii < 3; ++ii)
                    for (int jj = 0; jj < 3; ++jj) {
                        if (jj == ii) continue;
                        int kk = 3 - ii - jj;
                        int i = tri[ii], j = tri[jj], k = tri[kk];
                        auto path = connecting_path(g, j, k, i);
                        if (path.size() < 3) continue;
                        Move m{MoveKind::VirtualCase1};
                        m.i = i;
                        m.j = j;
                        m.k = k;
                        m.path = std::move(path);
                        out.push_back(std::move(m));
                    }
            }

    for (int j = 0; j < p; ++j)
        for (int k = 0; k < p; ++k) {
            if (j == k || !g.has_edge(j, k) || g.has_edge(k, j)) continue;
            for (int i = 0; i < p; ++i) {
                if (i == j || i == k || !g.adjacent(i, j) || !g.adjacent(i, k)) continue;
                for (int l = 0; l < p; ++l) {
                    if (l == i || l == j || l == k || !g.adjacent(l, j) || !g.adjacent(l, k))
                        continue;
                    Move m{MoveKind::VirtualCase2};
                    m.i = i;
                    m.j = j;
                    m.k = k;
                    m.l = l;
                    out.push_back(std::move(m));
                }
            }
        }
    return out;
}

DirectedGraph apply_virtual_case1(const DirectedGraph& g, int i, int j, int k,
                                  const std::vector<int>& path) {
    if (!(g.adjacent(i, j) && g.adjacent(i, k) && g.adjacent(j, k)))
        throw PreconditionViolated("vertices i, j, k must form a triangle");
    if (path.size() < 2 || path.front() != j || path.back() != k)
        throw PreconditionViolated("path must connect j to k");
    std::set<int> seen;
    for (int v : path) {
        if (v == i) throw PreconditionViolated("path must avoid vertex i");
        if (!seen.insert(v).second) throw PreconditionViolated("path vertices must be distinct");
    }
    for (std::size_t t = 0; t + 1 < path.size(); ++t)
        if (!g.adjacent(path[t], path[t + 1]))
            throw PreconditionViolated("path steps must be adjacent");

    if (path.size() == 2) {
        // the connecting sequence is the direct edge, so the oriented cycle
        // would be a 2-cycle: that is the second operator's configuration
        if (g.has_edge(j, k) && !g.has_edge(k, j)) {
            for (int l = 0; l < g.p(); ++l) {
                if (l == i || l == j || l == k || !g.adjacent(l, j) || !g.adjacent(l, k)) continue;
                return apply_virtual_case2(g, i, j, k, l);
            }
        }
        throw PreconditionViolated("no second triangle available for the 2-cycle case");
    }

    DirectedGraph out = g;
    ensure_oriented(out, j, k);
    for (std::size_t t = 0; t + 1 < path.size(); ++t)
        ensure_oriented(out, path[t + 1], path[t]);  // cycle runs k -> ... -> j
    delete_between(out, i, j);
    ensure_oriented(out, i, k);
    return out;
}

DirectedGraph apply_virtual_case2(const DirectedGraph& g, int i, int j, int k, int l) {
    if (i == j || i == k || i == l || j == k || j == l || k == l)
        throw PreconditionViolated("vertices must be distinct");
    if (!g.has_edge(j, k) || g.has_edge(k, j))
        throw PreconditionViolated("exactly the j -> k edge must be present");
    if (!(g.adjacent(i, j) && g.adjacent(i, k) && g.adjacent(l, j) && g.adjacent(l, k)))
        throw PreconditionViolated("i and l must each be adjacent to both j and k");

    DirectedGraph out = g;
    delete_between(out, i, j);
    delete_between(out, l, k);
    out.add_edge(k, j);
    return out;
}

DirectedGraph apply_move(const DirectedGraph& g, const Move& m) {
    DirectedGraph out = g;
    switch (m.kind) {
        case MoveKind::Add:
            if (g.has_edge(m.u, m.v)) throw PreconditionViolated("edge already present");
            out.add_edge(m.u, m.v);
            return out;
        case MoveKind::Delete:
            if (!g.has_edge(m.u, m.v)) throw PreconditionViolated("edge not present");
            out.remove_edge(m.u, m.v);
            return out;
        case MoveKind::Reverse:
            if (!g.has_edge(m.u, m.v) || g.has_edge(m.v, m.u))
                throw PreconditionViolated("edge not reversible");
            out.remove_edge(m.u, m.v);
            out.add_edge(m.v, m.u);
            return out;
        case MoveKind::VirtualCase1:
            return apply_virtual_case1(g, m.i, m.j, m.k, m.path);
        case MoveKind::VirtualCase2:
            return apply_virtual_case2(g, m.i, m.j, m.k, m.l);
    }
    throw PreconditionViolated("unknown move kind");
}

// --- search loops ---------------------------------------------------------------

namespace {

struct Candidate {
    bool valid = false;
    double score = 0.0;
    double nll = 0.0;
    DirectedGraph graph{1};
};

std::vector<Candidate> score_neighborhood(const Scorer& scorer, const DirectedGraph& g,
                                          const std::vector<Move>& moves, int threads) {
    std::vector<Candidate> out(moves.size());
    auto work = [&](std::size_t start, std::size_t stride) {
        for (std::size_t idx = start; idx < moves.size(); idx += stride) {
            DirectedGraph cand(1);
            try {
                cand = apply_move(g, moves[idx]);
            } catch (const PreconditionViolated&) {
                continue;
            }
            if (cand == g) continue;
            auto scored = scorer.try_score(cand);
            if (!scored) continue;
            out[idx].valid = true;
            out[idx].score = scored->score;
            out[idx].nll = scored->nll;
            out[idx].graph = std::move(cand);
        }
    };

    threads = std::max(1, threads);
    if (threads == 1 || moves.size() < 2) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    return out;
}

bool passes_virtual_guard(const Move& m, const Candidate& cand, double cur_nll, double n,
                          double tol) {
    if (m.kind != MoveKind::VirtualCase1 && m.kind != MoveKind::VirtualCase2) return true;
    return cand.nll - cur_nll <= tol * n;
}

ScoredModel finalize_with_reduction(const Scorer& scorer, ScoredModel model) {
    auto red = is_reducible(model.graph);
    if (red.verdict == ReducibleVerdict::Reducible && red.reduced) {
        if (auto reduced = scorer.try_score(*red.reduced)) return *reduced;
    }
    return model;
}

Scorer make_scorer(const Dataset& data, const SearchConfig& cfg) {
    FitOptions fo;
    fo.restarts = cfg.restarts;
    fo.seed = cfg.seed;
    double lambda = cfg.lambda.value_or(default_lambda(static_cast<double>(data.n())));
    return Scorer(data, lambda, fo);
}

std::vector<Move> applicable_moves(const DirectedGraph& g, bool virtual_ops) {
    auto moves = neighbors(g);
    if (!virtual_ops) {
        std::erase_if(moves, [](const Move& m) {
            return m.kind == MoveKind::VirtualCase1 || m.kind == MoveKind::VirtualCase2;
        });
    }
    return moves;
}

}  // namespace

ScoredModel hill_climb(const Dataset& data, const DirectedGraph& init, const SearchConfig& cfg) {
    Scorer scorer = make_scorer(data, cfg);
    ScoredModel cur = scorer.score(init);
    const double n = static_cast<double>(data.n());

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        auto moves = applicable_moves(cur.graph, cfg.use_virtual_ops);
        auto cands = score_neighborhood(scorer, cur.graph, moves, cfg.threads);

        int best = -1;
        for (std::size_t idx = 0; idx < cands.size(); ++idx) {
            if (!cands[idx].valid) continue;
            if (!passes_virtual_guard(moves[idx], cands[idx], cur.nll, n, cfg.virtual_nll_tol))
                continue;
            if (best < 0 || cands[idx].score < cands[best].score) best = static_cast<int>(idx);
        }
        double eps = 1e-9 * std::max(1.0, std::abs(cur.score));
        if (best < 0 || cands[best].score >= cur.score - eps) break;
        cur = scorer.score(cands[best].graph);
    }
    return finalize_with_reduction(scorer, std::move(cur));
}

ScoredModel tabu_search(const Dataset& data, const DirectedGraph& init, const SearchConfig& cfg) {
    Scorer scorer = make_scorer(data, cfg);
    ScoredModel cur = scorer.score(init);
    ScoredModel best = cur;
    const double n = static_cast<double>(data.n());

    std::unordered_map<SupportMatrix, int, SupportMatrix::Hasher> tabu;
    int no_improve = 0;

    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        tabu[support_of_graph(cur.graph)] = iter + cfg.tabu_length;

        auto moves = applicable_moves(cur.graph, cfg.use_virtual_ops);
        auto cands = score_neighborhood(scorer, cur.graph, moves, cfg.threads);

        int pick = -1;
        for (std::size_t idx = 0; idx < cands.size(); ++idx) {
            if (!cands[idx].valid) continue;
            if (!passes_virtual_guard(moves[idx], cands[idx], cur.nll, n, cfg.virtual_nll_tol))
                continue;
            auto it = tabu.find(support_of_graph(cands[idx].graph));
            if (it != tabu.end() && iter < it->second) continue;
            if (pick < 0 || cands[idx].score < cands[pick].score) pick = static_cast<int>(idx);
        }
        if (pick < 0) break;

        cur = scorer.score(cands[pick].graph);
        double eps = 1e-9 * std::max(1.0, std::abs(best.score));
        if (cur.score < best.score - eps) {
            best = cur;
            no_improve = 0;
        } else if (++no_improve >= cfg.patience) {
            break;
        }
    }
    return finalize_with_reduction(scorer, std::move(best));
}

ScoredModel run_search(const Dataset& data, const DirectedGraph& init, const SearchConfig& cfg) {
    return cfg.algorithm == SearchAlgorithm::HillClimb ? hill_climb(data, init, cfg)
                                                       : tabu_search(data, init, cfg);
}

}  // namespace dglearn
