#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dglearn/graph.hpp"
#include "dglearn/sem.hpp"

namespace dglearn {

// All likelihood values in this module follow the same convention: the
// additive (n p / 2) log(2 pi) constant is dropped throughout, so sums of
// conditional pieces remain directly comparable to the joint value.

/// Second-moment view of the data: S = X^T X / n with the sample count, or a
/// population covariance with n = 1.
struct MomentModel {
    Eigen::MatrixXd s;
    double n = 1.0;
};

inline double default_lambda(double n) { return 0.5 * std::log(n); }

struct FitOptions {
    int restarts = 5;
    std::uint64_t seed = 0;
    int max_iter = 500;
    double grad_tol = 1e-7;
    std::optional<Eigen::MatrixXd> init_b;  // extra warm-start candidate
    // Data fits are constrained to the stable region. Population KL fits
    // switch this off: a graph's distribution set is defined over all
    // support-conforming weights, and reproducing another graph's covariance
    // can genuinely require a spectral radius beyond one.
    bool enforce_stability = true;
};

/// Concentrated negative log-likelihood of one strongly connected block with
/// the noise variances profiled out:
///   f(B) = -n log|det(I - B_SS)| + (n/2) sum_{v in S} log q_v(B),
/// where q_v is the mean-square residual of column v. Free coordinates are
/// the given (row, col) entries of B with col in the block. Evaluations
/// outside the stable region return +inf.
class BlockObjective {
public:
    BlockObjective(MomentModel mm, std::vector<int> block,
                   std::vector<std::pair<int, int>> free_entries,
                   bool enforce_stability = true);

    double value_and_grad(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const;
    double value(const Eigen::VectorXd& x) const { return value_and_grad(x, nullptr); }

    /// Mean-square residuals q_v for each block vertex at x (the profiled
    /// sigma^2), in block order.
    Eigen::VectorXd residual_variances(const Eigen::VectorXd& x) const;

    const std::vector<std::pair<int, int>>& free_entries() const { return free_; }
    const std::vector<int>& block() const { return block_; }

    /// Per-column least-squares coefficients, a det-blind starting point.
    Eigen::VectorXd least_squares_init() const;

    /// Scales within-block coordinates down when the block spectral radius
    /// is at or beyond 0.95.
    Eigen::VectorXd project_to_stable(Eigen::VectorXd x) const;

private:
    Eigen::MatrixXd scatter(const Eigen::VectorXd& x) const;  // rows x block cols

    MomentModel mm_;
    std::vector<int> block_;                      // sorted block vertices
    std::vector<std::pair<int, int>> free_;       // (row, col) with col in block
    bool enforce_stability_ = true;
    std::vector<int> rows_;                       // sorted union of involved rows
    std::vector<int> row_local_, col_local_;      // global -> local (-1 when absent)
    Eigen::MatrixXd s_rr_;                        // moments on rows_
    Eigen::MatrixXd s_rc_;                        // moments rows_ x block
    Eigen::VectorXd s_cc_;                        // diagonal moments of block vertices
};

/// Negative log-likelihood of the data under the parameterization:
///   -n log|det(I - B)| + sum_i [ (n/2) log sigma_i^2 + ||X_i - X B_i||^2 / (2 sigma_i^2) ].
double nll(const Dataset& data, const Parameterization& params);

/// Per-block conditional NLL implied by the model covariance: each strongly
/// connected block conditioned on its external parents, computed through the
/// Gaussian conditional (Schur complement) rather than the determinant
/// factorization, so it can serve as an independent cross-check. Blocks sum
/// to nll().
std::vector<std::pair<std::vector<int>, double>> block_nll(const Dataset& data,
                                                           const Parameterization& params,
                                                           const MSCSPartition& partition);

struct ScoredModel {
    DirectedGraph graph{1};
    Parameterization params;
    double nll = 0.0;
    double penalty = 0.0;
    double score = 0.0;
    std::vector<std::pair<std::vector<int>, double>> per_block_nll;
};

/// Support-constrained maximum likelihood: acyclic blocks in closed form,
/// cyclic blocks by multi-restart quasi-Newton descent on the concentrated
/// objective, constrained to the stable region.
Parameterization fit_mle(const Dataset& data, const DirectedGraph& g,
                         const FitOptions& opts = {});

/// fit_mle plus the l0 score with lambda = 0.5 log n (overridable).
ScoredModel l0_score(const Dataset& data, const DirectedGraph& g, const FitOptions& opts = {},
                     std::optional<double> lambda = std::nullopt);

struct L1Options {
    double lambda1 = 0.1;
    double threshold = 0.05;
    int max_iter = 2000;
    double tol = 1e-9;
};

/// l1-penalized MLE by proximal gradient on the per-sample concentrated
/// objective; the learned B is hard-thresholded and the variances refit.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> fit_l1(const Dataset& data,
                                                   const L1Options& opts = {});

struct KlFitResult {
    Parameterization params;
    double kl = 0.0;
};

/// Support-constrained stable parameters minimizing
/// KL(N(0, sigma_target) || N(0, Sigma(B, Omega))); the population-moment MLE
/// up to an additive constant, so it reuses the block fitting machinery.
KlFitResult fit_kl(const DirectedGraph& g, const Eigen::MatrixXd& sigma_target,
                   const FitOptions& opts = {});

/// Graph scorer with per-block memoization. A block's fit depends only on
/// the block's vertex set and its incoming edges, so local-search rescoring
/// after a move only refits the blocks that changed. Thread-safe; fits are
/// deterministic given (seed, block signature) regardless of cache state.
class Scorer {
public:
    Scorer(const Dataset& data, double lambda, FitOptions opts = {});

    std::optional<ScoredModel> try_score(const DirectedGraph& g) const;
    ScoredModel score(const DirectedGraph& g) const;  // throws on fit failure

    double lambda() const { return lambda_; }
    double n() const { return mm_.n; }
    void set_cache_enabled(bool enabled) { cache_enabled_ = enabled; }
    std::size_t cache_size() const;

private:
    struct BlockFit {
        std::vector<std::pair<std::pair<int, int>, double>> entries;
        std::vector<double> sigma2;  // block order
        double nll = 0.0;
        bool ok = false;
    };

    BlockFit fit_block(const std::vector<int>& block, const DirectedGraph& g) const;

    MomentModel mm_;
    double lambda_;
    FitOptions opts_;
    bool cache_enabled_ = true;
    mutable std::mutex mu_;
    mutable std::unordered_map<std::string, BlockFit> cache_;
};

}  // namespace dglearn
