#include "dglearn/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dglearn/errors.hpp"
#include "dglearn/optim.hpp"
#include "dglearn/rng.hpp"

namespace dglearn {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double variance_floor(double s_vv) { return std::max(1e-300, 1e-13 * std::max(s_vv, 1.0)); }

Eigen::MatrixXd submatrix(const Eigen::MatrixXd& m, const std::vector<int>& rows,
                          const std::vector<int>& cols) {
    Eigen::MatrixXd out(rows.size(), cols.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
    return out;
}

}  // namespace

BlockObjective::BlockObjective(MomentModel mm, std::vector<int> block,
                               std::vector<std::pair<int, int>> free_entries,
                               bool enforce_stability)
    : mm_(std::move(mm)),
      block_(std::move(block)),
      free_(std::move(free_entries)),
      enforce_stability_(enforce_stability) {
    std::sort(block_.begin(), block_.end());
    std::sort(free_.begin(), free_.end());

    const int p = static_cast<int>(mm_.s.rows());
    col_local_.assign(p, -1);
    for (std::size_t c = 0; c < block_.size(); ++c) col_local_[block_[c]] = static_cast<int>(c);

    std::vector<bool> present(p, false);
    for (int v : block_) present[v] = true;
    for (const auto& [u, v] : free_) {
        if (u < 0 || u >= p || v < 0 || v >= p || col_local_[v] < 0 || u == v)
            throw IndexOutOfRange("free entry outside the block's columns");
        present[u] = true;
    }
    for (int v = 0; v < p; ++v)
        if (present[v]) rows_.push_back(v);
    row_local_.assign(p, -1);
    for (std::size_t r = 0; r < rows_.size(); ++r) row_local_[rows_[r]] = static_cast<int>(r);

    s_rr_ = submatrix(mm_.s, rows_, rows_);
    s_rc_ = submatrix(mm_.s, rows_, block_);
    s_cc_.resize(block_.size());
    for (std::size_t c = 0; c < block_.size(); ++c) s_cc_(c) = mm_.s(block_[c], block_[c]);
}

Eigen::MatrixXd BlockObjective::scatter(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(rows_.size(), block_.size());
    for (std::size_t e = 0; e < free_.size(); ++e)
        b(row_local_[free_[e].first], col_local_[free_[e].second]) = x(e);
    return b;
}

double BlockObjective::value_and_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
    const auto s = static_cast<int>(block_.size());
    const double n = mm_.n;
    Eigen::MatrixXd bcols = scatter(x);

    Eigen::MatrixXd bss = Eigen::MatrixXd::Zero(s, s);
    for (std::size_t e = 0; e < free_.size(); ++e) {
        int u = free_[e].first, v = free_[e].second;
        if (col_local_[u] >= 0) bss(col_local_[u], col_local_[v]) = x(e);
    }
    if (s > 1 && enforce_stability_ && !is_stable(bss)) return kInf;

    double logdet = 0.0;
    Eigen::MatrixXd minv;
    if (s > 1) {
        Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(s, s) - bss);
        double det = lu.determinant();
        // stable weights keep det(I - B) positive; without the stability
        // constraint any nonzero determinant is admissible
        if (enforce_stability_ ? !(det > 0.0) : !(std::abs(det) > 1e-300)) return kInf;
        logdet = std::log(std::abs(det));
        if (grad) minv = lu.inverse();
    }

    double f = -n * logdet;
    if (grad) grad->setZero(free_.size());
    for (int c = 0; c < s; ++c) {
        Eigen::VectorXd bv = bcols.col(c);
        double q = s_cc_(c) - 2.0 * bv.dot(s_rc_.col(c)) + bv.dot(s_rr_ * bv);
        if (!(q > variance_floor(s_cc_(c)))) return kInf;
        f += 0.5 * n * std::log(q);
        if (grad) {
            Eigen::VectorXd resid = s_rr_ * bv - s_rc_.col(c);
            for (std::size_t e = 0; e < free_.size(); ++e) {
                if (col_local_[free_[e].second] != c) continue;
                int u = free_[e].first;
                double term = n * resid(row_local_[u]) / q;
                if (col_local_[u] >= 0 && s > 1) term += n * minv(c, col_local_[u]);
                (*grad)(e) += term;
            }
        }
    }
    return f;
}

Eigen::VectorXd BlockObjective::residual_variances(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd bcols = scatter(x);
    Eigen::VectorXd out(block_.size());
    for (std::size_t c = 0; c < block_.size(); ++c) {
        Eigen::VectorXd bv = bcols.col(c);
        double q = s_cc_(c) - 2.0 * bv.dot(s_rc_.col(c)) + bv.dot(s_rr_ * bv);
        out(c) = std::max(q, variance_floor(s_cc_(c)));
    }
    return out;
}

Eigen::VectorXd BlockObjective::least_squares_init() const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(free_.size());
    for (std::size_t c = 0; c < block_.size(); ++c) {
        std::vector<int> pa;
        std::vector<int> entry_idx;
        for (std::size_t e = 0; e < free_.size(); ++e)
            if (free_[e].second == block_[c]) {
                pa.push_back(free_[e].first);
                entry_idx.push_back(static_cast<int>(e));
            }
        if (pa.empty()) continue;
        Eigen::MatrixXd spp = submatrix(mm_.s, pa, pa);
        Eigen::VectorXd spv(pa.size());
        for (std::size_t i = 0; i < pa.size(); ++i) spv(i) = mm_.s(pa[i], block_[c]);
        Eigen::VectorXd b = spp.ldlt().solve(spv);
        for (std::size_t i = 0; i < pa.size(); ++i) x(entry_idx[i]) = b(i);
    }
    return x;
}

Eigen::VectorXd BlockObjective::project_to_stable(Eigen::VectorXd x) const {
    const auto s = static_cast<int>(block_.size());
    if (s < 2 || !enforce_stability_) return x;
    Eigen::MatrixXd bss = Eigen::MatrixXd::Zero(s, s);
    for (std::size_t e = 0; e < free_.size(); ++e) {
        int u = free_[e].first, v = free_[e].second;
        if (col_local_[u] >= 0) bss(col_local_[u], col_local_[v]) = x(e);
    }
    double rho = spectral_radius(bss);
    if (rho >= 0.95) {
        double scale = 0.95 / rho;
        for (std::size_t e = 0; e < free_.size(); ++e)
            if (col_local_[free_[e].first] >= 0) x(e) *= scale;
    }
    return x;
}

// --- joint and per-block likelihood ------------------------------------------

double nll(const Dataset& data, const Parameterization& params) {
    if (data.p() != params.p()) throw DimensionMismatch("data and parameters disagree in p");
    const int p = data.p();
    const double n = data.n();
    const Eigen::MatrixXd& s = data.moments();

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(p, p) - params.B);
    double det = std::abs(lu.determinant());
    if (!(det > 0.0)) throw SingularSystem("I - B is singular");

    double out = -n * std::log(det);
    for (int i = 0; i < p; ++i) {
        Eigen::VectorXd bi = params.B.col(i);
        double q = s(i, i) - 2.0 * bi.dot(s.col(i)) + bi.dot(s * bi);
        out += 0.5 * n * std::log(params.omega(i)) + 0.5 * n * q / params.omega(i);
    }
    return out;
}

std::vector<std::pair<std::vector<int>, double>> block_nll(const Dataset& data,
                                                           const Parameterization& params,
                                                           const MSCSPartition& partition) {
    const double n = data.n();
    const Eigen::MatrixXd& shat = data.moments();
    Eigen::MatrixXd sigma = covariance_of(params);

    DirectedGraph gs(params.p());
    for (int u = 0; u < params.p(); ++u)
        for (int v = 0; v < params.p(); ++v)
            if (u != v && params.B(u, v) != 0.0) gs.add_edge(u, v);

    std::vector<std::pair<std::vector<int>, double>> out;
    for (const auto& block : partition.blocks) {
        std::vector<int> pa = external_parents(gs, block);

        Eigen::MatrixXd cond_cov;   // model-implied conditional covariance
        Eigen::MatrixXd resid_mom;  // empirical second moment of the residual
        if (pa.empty()) {
            cond_cov = submatrix(sigma, block, block);
            resid_mom = submatrix(shat, block, block);
        } else {
            Eigen::MatrixXd ssp = submatrix(sigma, block, pa);
            Eigen::MatrixXd spp = submatrix(sigma, pa, pa);
            Eigen::MatrixXd m = spp.ldlt().solve(ssp.transpose()).transpose();  // |S| x |P|
            cond_cov = submatrix(sigma, block, block) - m * ssp.transpose();

            Eigen::MatrixXd hss = submatrix(shat, block, block);
            Eigen::MatrixXd hsp = submatrix(shat, block, pa);
            Eigen::MatrixXd hpp = submatrix(shat, pa, pa);
            resid_mom = hss - m * hsp.transpose() - hsp * m.transpose() + m * hpp * m.transpose();
        }
        Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (cond_cov + cond_cov.transpose()));
        if (llt.info() != Eigen::Success)
            throw SingularSystem("conditional covariance is not positive definite");
        double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
        double quad = llt.solve(resid_mom).trace();
        out.push_back({block, 0.5 * n * (logdet + quad)});
    }
    return out;
}

// --- block fitting -------------------------------------------------------------

namespace detail_fit {

struct BlockFitResult {
    std::vector<std::pair<std::pair<int, int>, double>> entries;
    std::vector<double> sigma2;  // block order
    double fvalue = kInf;        // concentrated objective at the optimum
    bool ok = false;
};

BlockFitResult fit_block_moments(const MomentModel& mm, const std::vector<int>& block,
                                 const std::vector<std::pair<int, int>>& in_edges,
                                 const FitOptions& opts, std::uint64_t block_seed) {
    BlockFitResult out;
    const double n = mm.n;

    if (block.size() == 1) {
        int v = block[0];
        std::vector<int> pa;
        for (const auto& [u, w] : in_edges)
            if (w == v) pa.push_back(u);
        std::sort(pa.begin(), pa.end());

        double q;
        if (pa.empty()) {
            q = mm.s(v, v);
        } else {
            Eigen::MatrixXd spp = submatrix(mm.s, pa, pa);
            Eigen::VectorXd spv(pa.size());
            for (std::size_t i = 0; i < pa.size(); ++i) spv(i) = mm.s(pa[i], v);
            Eigen::VectorXd b = spp.ldlt().solve(spv);
            q = mm.s(v, v) - 2.0 * b.dot(spv) + b.dot(spp * b);
            for (std::size_t i = 0; i < pa.size(); ++i)
                out.entries.push_back({{pa[i], v}, b(i)});
        }
        q = std::max(q, variance_floor(mm.s(v, v)));
        out.sigma2 = {q};
        out.fvalue = 0.5 * n * std::log(q);
        out.ok = true;
        return out;
    }

    BlockObjective obj(mm, block, in_edges, opts.enforce_stability);
    const auto& free = obj.free_entries();

    std::vector<Eigen::VectorXd> candidates;
    if (opts.init_b) {
        Eigen::VectorXd x0(free.size());
        for (std::size_t e = 0; e < free.size(); ++e)
            x0(e) = (*opts.init_b)(free[e].first, free[e].second);
        candidates.push_back(obj.project_to_stable(std::move(x0)));
    }
    Eigen::VectorXd ls = obj.least_squares_init();
    candidates.push_back(obj.project_to_stable(ls));

    if (!opts.enforce_stability) {
        // A 2-cycle admits a second exact representation with weights
        // (1/b_vu, 1/b_uv), whose product magnitude exceeds one; seed that
        // basin explicitly, since random starts rarely cross det(I - B) = 0.
        std::vector<std::pair<std::size_t, std::size_t>> two_cycles;
        for (std::size_t a = 0; a < free.size(); ++a)
            for (std::size_t b = a + 1; b < free.size(); ++b)
                if (free[a].first == free[b].second && free[a].second == free[b].first)
                    two_cycles.push_back({a, b});
        std::size_t combos = std::min<std::size_t>(1ull << two_cycles.size(), 8);
        for (std::size_t mask = 1; mask < combos; ++mask) {
            Eigen::VectorXd x0 = ls;
            for (std::size_t c = 0; c < two_cycles.size(); ++c) {
                if (!(mask & (1ull << c))) continue;
                auto [a, b] = two_cycles[c];
                double wa = ls(a), wb = ls(b);
                if (std::abs(wa) < 1e-4 || std::abs(wb) < 1e-4) continue;
                x0(a) = 1.0 / wb;
                x0(b) = 1.0 / wa;
            }
            candidates.push_back(std::move(x0));
        }
    }

    Rng rng(block_seed);
    for (int r = 1; r < opts.restarts; ++r) {
        // unconstrained fits explore wider starts: the optimum can sit in a
        // region where det(I - B_SS) is negative, unreachable from small inits
        double scale = opts.enforce_stability ? 0.5 : 0.5 * (1 + (r - 1) % 4);
        Eigen::VectorXd x0(free.size());
        for (std::size_t e = 0; e < free.size(); ++e) x0(e) = rng.uniform(-scale, scale);
        candidates.push_back(obj.project_to_stable(std::move(x0)));
    }

    OptimOptions oo;
    oo.max_iter = opts.max_iter;
    oo.grad_tol = opts.grad_tol;
    auto fn = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
        return obj.value_and_grad(x, &g);
    };

    Eigen::VectorXd best_x;
    for (const auto& x0 : candidates) {
        auto res = minimize_lbfgs(fn, x0, oo);
        if (std::isfinite(res.f) && res.f < out.fvalue) {
            out.fvalue = res.f;
            best_x = res.x;
        }
    }
    if (!std::isfinite(out.fvalue)) return out;

    out.ok = true;
    Eigen::VectorXd sig = obj.residual_variances(best_x);
    out.sigma2.assign(sig.data(), sig.data() + sig.size());
    for (std::size_t e = 0; e < free.size(); ++e)
        out.entries.push_back({free[e], best_x(e)});
    return out;
}

std::string block_signature(const std::vector<int>& block,
                            const std::vector<std::pair<int, int>>& in_edges) {
    std::ostringstream os;
    for (int v : block) os << v << ',';
    os << '|';
    for (const auto& [u, v] : in_edges) os << u << '>' << v << ';';
    return os.str();
}

std::vector<std::pair<int, int>> edges_into(const DirectedGraph& g,
                                            const std::vector<int>& block) {
    std::vector<bool> inside(g.p(), false);
    for (int v : block) inside[v] = true;
    std::vector<std::pair<int, int>> out;
    for (const auto& e : g.edges())
        if (inside[e.second]) out.push_back(e);
    return out;
}

}  // namespace detail_fit

// --- Scorer ---------------------------------------------------------------------

Scorer::Scorer(const Dataset& data, double lambda, FitOptions opts)
    : mm_{data.moments(), static_cast<double>(data.n())},
      lambda_(lambda),
      opts_(std::move(opts)) {}

std::size_t Scorer::cache_size() const {
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.size();
}

Scorer::BlockFit Scorer::fit_block(const std::vector<int>& block, const DirectedGraph& g) const {
    auto in_edges = detail_fit::edges_into(g, block);
    std::string sig = detail_fit::block_signature(block, in_edges);

    if (cache_enabled_) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = cache_.find(sig);
        if (it != cache_.end()) return it->second;
    }

    std::uint64_t block_seed =
        splitmix64(opts_.seed ^ splitmix64(std::hash<std::string>{}(sig)));
    auto fitted = detail_fit::fit_block_moments(mm_, block, in_edges, opts_, block_seed);

    BlockFit out;
    out.ok = fitted.ok;
    out.entries = std::move(fitted.entries);
    out.sigma2 = std::move(fitted.sigma2);
    out.nll = fitted.fvalue + 0.5 * mm_.n * static_cast<double>(block.size());

    if (cache_enabled_ && out.ok) {
        std::lock_guard<std::mutex> lock(mu_);
        cache_.emplace(sig, out);
    }
    return out;
}

std::optional<ScoredModel> Scorer::try_score(const DirectedGraph& g) const {
    const int p = g.p();
    auto partition = find_mscs(g);

    ScoredModel model;
    model.graph = g;
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd omega = Eigen::VectorXd::Ones(p);

    double total = 0.0;
    for (const auto& block : partition.blocks) {
        BlockFit fit = fit_block(block, g);
        if (!fit.ok) return std::nullopt;
        for (const auto& [entry, w] : fit.entries) b(entry.first, entry.second) = w;
        for (std::size_t c = 0; c < block.size(); ++c) omega(block[c]) = fit.sigma2[c];
        model.per_block_nll.push_back({block, fit.nll});
        total += fit.nll;
    }

    model.params = Parameterization(std::move(b), std::move(omega));
    model.nll = total;
    model.penalty = lambda_ * g.edge_count();
    model.score = model.nll + model.penalty;
    return model;
}

ScoredModel Scorer::score(const DirectedGraph& g) const {
    auto m = try_score(g);
    if (!m)
        throw UnstableOptimum("no stable parameterization found for a strongly connected block");
    return *m;
}

// --- public fitting entry points --------------------------------------------------

Parameterization fit_mle(const Dataset& data, const DirectedGraph& g, const FitOptions& opts) {
    Scorer scorer(data, 0.0, opts);
    scorer.set_cache_enabled(false);
    return scorer.score(g).params;
}

ScoredModel l0_score(const Dataset& data, const DirectedGraph& g, const FitOptions& opts,
                     std::optional<double> lambda) {
    double lam = lambda.value_or(default_lambda(static_cast<double>(data.n())));
    Scorer scorer(data, lam, opts);
    scorer.set_cache_enabled(false);
    return scorer.score(g);
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> fit_l1(const Dataset& data, const L1Options& opts) {
    const int p = data.p();
    // per-sample scaling: population-style objective plus lambda1 * ||B||_1
    MomentModel mm{data.moments(), 1.0};

    std::vector<int> all(p);
    for (int i = 0; i < p; ++i) all[i] = i;
    std::vector<std::pair<int, int>> free;
    for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v)
            if (u != v) free.push_back({u, v});
    BlockObjective obj(mm, all, free);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(free.size());
    Eigen::VectorXd g(free.size());
    double f = obj.value_and_grad(x, &g);
    double step = 1.0;

    auto soft = [](double z, double t) {
        if (z > t) return z - t;
        if (z < -t) return z + t;
        return 0.0;
    };

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        bool accepted = false;
        Eigen::VectorXd x_new(free.size());
        double f_new = kInf;
        for (int ls = 0; ls < 60; ++ls) {
            for (int e = 0; e < x.size(); ++e)
                x_new(e) = soft(x(e) - step * g(e), step * opts.lambda1);
            f_new = obj.value(x_new);
            Eigen::VectorXd d = x_new - x;
            if (std::isfinite(f_new) &&
                f_new <= f + g.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-12) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        double delta = (x_new - x).cwiseAbs().maxCoeff();
        x = std::move(x_new);
        f = obj.value_and_grad(x, &g);
        step *= 1.2;
        if (delta < opts.tol) break;
    }

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t e = 0; e < free.size(); ++e)
        if (std::abs(x(e)) >= opts.threshold) b(free[e].first, free[e].second) = x(e);

    // refit the variances at the thresholded weights
    Eigen::VectorXd omega(p);
    const Eigen::MatrixXd& s = data.moments();
    for (int i = 0; i < p; ++i) {
        Eigen::VectorXd bi = b.col(i);
        double q = s(i, i) - 2.0 * bi.dot(s.col(i)) + bi.dot(s * bi);
        omega(i) = std::max(q, variance_floor(s(i, i)));
    }
    return {b, omega};
}

KlFitResult fit_kl(const DirectedGraph& g, const Eigen::MatrixXd& sigma_target,
                   const FitOptions& opts) {
    if (sigma_target.rows() != sigma_target.cols() || sigma_target.rows() != g.p())
        throw DimensionMismatch("target covariance does not match the graph");
    Eigen::LLT<Eigen::MatrixXd> llt(sigma_target);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite("target covariance must be positive definite");
    double logdet_target = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

    // population fits benefit from tight convergence; the KL left at the
    // optimum is quadratic in the residual gradient
    FitOptions tight = opts;
    tight.grad_tol = std::min(opts.grad_tol, 1e-9);
    tight.max_iter = std::max(opts.max_iter, 800);
    tight.enforce_stability = false;

    MomentModel mm{sigma_target, 1.0};
    const int p = g.p();
    auto partition = find_mscs(g);

    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd omega = Eigen::VectorXd::Ones(p);
    double f_total = 0.0;
    for (const auto& block : partition.blocks) {
        auto in_edges = detail_fit::edges_into(g, block);
        std::uint64_t seed =
            splitmix64(tight.seed ^ splitmix64(std::hash<std::string>{}(
                                       detail_fit::block_signature(block, in_edges))));
        auto fit = detail_fit::fit_block_moments(mm, block, in_edges, tight, seed);
        if (!fit.ok) throw OptimizationFailed("population block fit failed");
        for (const auto& [entry, w] : fit.entries) b(entry.first, entry.second) = w;
        for (std::size_t c = 0; c < block.size(); ++c) omega(block[c]) = fit.sigma2[c];
        f_total += fit.fvalue;
    }

    KlFitResult out;
    out.params = Parameterization(std::move(b), std::move(omega));
    out.kl = f_total - 0.5 * logdet_target;
    return out;
}

}  // namespace dglearn
