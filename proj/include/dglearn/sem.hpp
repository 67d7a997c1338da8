#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "dglearn/graph.hpp"
#include "dglearn/rng.hpp"

namespace dglearn {

/// Linear Gaussian model: X_i = sum_j B(j,i) X_j + N_i with Var(N_i) =
/// omega(i). Entry (j,i) of B weights the edge X_j -> X_i, so column i holds
/// the parent weights of X_i.
struct Parameterization {
    Eigen::MatrixXd B;
    Eigen::VectorXd omega;

    Parameterization() = default;
    Parameterization(Eigen::MatrixXd b, Eigen::VectorXd om);

    int p() const { return static_cast<int>(omega.size()); }
};

struct PrecisionMatrix {
    Eigen::MatrixXd theta;
};

/// Theta = (I - B) Omega^{-1} (I - B)^T.
PrecisionMatrix precision_of(const Parameterization& params);

/// The factor Q = (I - B) Omega^{-1/2}, so Theta = Q Q^T.
Eigen::MatrixXd factor_q(const Parameterization& params);

/// Sigma = Theta^{-1}.
Eigen::MatrixXd covariance_of(const Parameterization& params);

/// Right-multiplication by the planar rotation: column j becomes
/// cos(t)*col_j + sin(t)*col_k and column k becomes -sin(t)*col_j +
/// cos(t)*col_k. Preserves Q Q^T.
Eigen::MatrixXd apply_givens(const Eigen::MatrixXd& q, int j, int k, double theta);

double spectral_radius(const Eigen::MatrixXd& b);

inline constexpr double kStabilityMargin = 1e-6;

/// True iff the spectral radius of B stays below 1 by the stability margin.
bool is_stable(const Eigen::MatrixXd& b);

/// n x p sample matrix with cached second moments S = X^T X / n.
class Dataset {
public:
    explicit Dataset(Eigen::MatrixXd x);

    int n() const { return static_cast<int>(x_.rows()); }
    int p() const { return static_cast<int>(x_.cols()); }
    const Eigen::MatrixXd& x() const { return x_; }
    const Eigen::MatrixXd& moments() const { return moments_; }

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd moments_;
};

struct WeightRanges {
    double weight_low = 0.2;
    double weight_high = 0.8;
    double var_low = 1.0;
    double var_high = 3.0;
    int max_rejects = 10000;
    bool negative_weights = true;  // false restricts draws to [low, high]
};

/// Edge weights drawn uniformly from [-hi,-lo] u [lo,hi], noise variances
/// uniformly from [var_low, var_high]; B is resampled wholesale until stable.
Parameterization sample_parameters(const DirectedGraph& g, Rng& rng,
                                   const WeightRanges& ranges = {});

/// Rows i.i.d. N(0, Sigma) for the model's Sigma; seeded rng gives
/// bit-identical output.
Dataset sample_data(const Parameterization& params, int n, Rng& rng);

struct RandomDgOptions {
    int edge_target = -1;     // default: floor(1.2 * p)
    int proposal_budget = -1; // default: 50 * p * p
};

/// Random graph with per-vertex total degree <= max_degree and no simple
/// cycle longer than max_cycle_len. Edges are proposed uniformly at random
/// and kept when the constraints stay satisfied, until the edge target or
/// the proposal budget is reached.
DirectedGraph random_dg(int p, int max_degree, int max_cycle_len, Rng& rng,
                        const RandomDgOptions& opts = {});

/// KL(N(0, sigma_true) || N(0, sigma_fit)) in nats.
double kl_gaussian(const Eigen::MatrixXd& sigma_true, const Eigen::MatrixXd& sigma_fit);

}  // namespace dglearn
