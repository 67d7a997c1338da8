#include "dglearn/sem.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "dglearn/errors.hpp"

namespace dglearn {

Parameterization::Parameterization(Eigen::MatrixXd b, Eigen::VectorXd om)
    : B(std::move(b)), omega(std::move(om)) {
    if (B.rows() != B.cols() || B.rows() != omega.size())
        throw DimensionMismatch("weight matrix and variance vector sizes disagree");
    for (int i = 0; i < B.rows(); ++i) {
        if (B(i, i) != 0.0)
            throw DomainError("invalid_parameterization", "diagonal of B must be zero");
        if (!(omega(i) > 0.0))
            throw DomainError("invalid_parameterization", "noise variances must be positive");
    }
}

namespace {

void check_invertible(const Eigen::MatrixXd& m, const char* what) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw SingularSystem(what);
}

}  // namespace

PrecisionMatrix precision_of(const Parameterization& params) {
    const int p = params.p();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - params.B;
    check_invertible(m, "I - B is numerically singular");
    Eigen::MatrixXd theta = m * params.omega.cwiseInverse().asDiagonal() * m.transpose();
    return {0.5 * (theta + theta.transpose())};
}

Eigen::MatrixXd factor_q(const Parameterization& params) {
    const int p = params.p();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - params.B;
    return m * params.omega.cwiseSqrt().cwiseInverse().asDiagonal();
}

Eigen::MatrixXd covariance_of(const Parameterization& params) {
    Eigen::MatrixXd theta = precision_of(params).theta;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(theta);
    if (ldlt.info() != Eigen::Success)
        throw SingularSystem("precision matrix is not invertible");
    Eigen::MatrixXd sigma = ldlt.solve(Eigen::MatrixXd::Identity(theta.rows(), theta.cols()));
    return 0.5 * (sigma + sigma.transpose());
}

Eigen::MatrixXd apply_givens(const Eigen::MatrixXd& q, int j, int k, double theta) {
    if (j == k || j < 0 || k < 0 || j >= q.cols() || k >= q.cols())
        throw IndexOutOfRange("rotation plane indices out of range");
    Eigen::MatrixXd out = q;
    const double c = std::cos(theta), s = std::sin(theta);
    out.col(j) = c * q.col(j) + s * q.col(k);
    out.col(k) = -s * q.col(j) + c * q.col(k);
    return out;
}

double spectral_radius(const Eigen::MatrixXd& b) {
    if (b.rows() != b.cols()) throw DimensionMismatch("matrix must be square");
    if (b.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(b, /*computeEigenvectors=*/false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool is_stable(const Eigen::MatrixXd& b) {
    return spectral_radius(b) < 1.0 - kStabilityMargin;
}

Dataset::Dataset(Eigen::MatrixXd x) : x_(std::move(x)) {
    if (x_.rows() < 1 || x_.cols() < 1)
        throw InfeasibleConstraints("dataset must have at least one row and column");
    moments_ = (x_.transpose() * x_) / static_cast<double>(x_.rows());
}

Parameterization sample_parameters(const DirectedGraph& g, Rng& rng, const WeightRanges& ranges) {
    const int p = g.p();
    Eigen::VectorXd omega(p);
    for (int i = 0; i < p; ++i) omega(i) = rng.uniform(ranges.var_low, ranges.var_high);

    for (int attempt = 0; attempt < ranges.max_rejects; ++attempt) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
        for (const auto& [u, v] : g.edges()) {
            double mag = rng.uniform(ranges.weight_low, ranges.weight_high);
            b(u, v) = (!ranges.negative_weights || rng.bernoulli(0.5)) ? mag : -mag;
        }
        if (is_stable(b)) return Parameterization(std::move(b), omega);
    }
    throw StabilityRejectionLimit("no stable weight draw within the rejection limit");
}

Dataset sample_data(const Parameterization& params, int n, Rng& rng) {
    if (n < 1) throw InfeasibleConstraints("sample count must be positive");
    const int p = params.p();
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(p, p) - params.B;
    check_invertible(m, "I - B is numerically singular");

    Eigen::VectorXd sd = params.omega.cwiseSqrt();
    Eigen::MatrixXd noise(n, p);
    for (int t = 0; t < n; ++t)
        for (int i = 0; i < p; ++i) noise(t, i) = rng.normal() * sd(i);

    // X = N (I - B)^{-1}, solved as (I - B)^T X^T = N^T
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(m.transpose());
    Eigen::MatrixXd xt = lu.solve(noise.transpose());
    return Dataset(xt.transpose());
}

namespace {

// Detects a simple src -> dst path of edge-length >= limit (such a path plus
// the proposed dst -> src edge would close an over-long cycle).
bool has_path_of_length(const DirectedGraph& g, int src, int dst, int limit,
                        std::vector<bool>& used, int depth, long& steps) {
    if (++steps > 2'000'000) return true;  // conservative bail-out on pathological graphs
    used[src] = true;
    for (int w : g.children(src)) {
        if (w == dst) {
            if (depth + 1 >= limit) {
                used[src] = false;
                return true;
            }
            continue;
        }
        if (!used[w] && has_path_of_length(g, w, dst, limit, used, depth + 1, steps)) {
            used[src] = false;
            return true;
        }
    }
    used[src] = false;
    return false;
}

}  // namespace

DirectedGraph random_dg(int p, int max_degree, int max_cycle_len, Rng& rng,
                        const RandomDgOptions& opts) {
    if (p < 1) throw InfeasibleConstraints("vertex count must be positive");
    if (max_degree < 0) throw InfeasibleConstraints("max degree must be nonnegative");
    if (max_cycle_len < 1) throw InfeasibleConstraints("max cycle length must be at least 1");

    const int edge_target =
        opts.edge_target >= 0 ? opts.edge_target : static_cast<int>(1.2 * p);
    const int budget = opts.proposal_budget >= 0 ? opts.proposal_budget : 50 * p * p;

    DirectedGraph g(p);
    std::vector<bool> used(p, false);
    for (int proposal = 0; proposal < budget && g.edge_count() < edge_target; ++proposal) {
        int u = rng.uniform_int(0, p - 1);
        int v = rng.uniform_int(0, p - 1);
        if (u == v || g.has_edge(u, v)) continue;
        if (g.degree(u) + 1 > max_degree || g.degree(v) + 1 > max_degree) continue;

        long steps = 0;
        if (has_path_of_length(g, v, u, max_cycle_len, used, 0, steps)) continue;
        g.add_edge(u, v);
    }
    return g;
}

double kl_gaussian(const Eigen::MatrixXd& sigma_true, const Eigen::MatrixXd& sigma_fit) {
    if (sigma_true.rows() != sigma_true.cols() || sigma_fit.rows() != sigma_fit.cols() ||
        sigma_true.rows() != sigma_fit.rows())
        throw DimensionMismatch("covariance matrices must be square and equal-sized");
    const int p = static_cast<int>(sigma_true.rows());

    Eigen::LLT<Eigen::MatrixXd> llt_fit(sigma_fit);
    Eigen::LLT<Eigen::MatrixXd> llt_true(sigma_true);
    if (llt_fit.info() != Eigen::Success || llt_true.info() != Eigen::Success)
        throw NotPositiveDefinite("covariance matrices must be positive definite");

    double trace = llt_fit.solve(sigma_true).trace();
    auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
        return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    };
    return 0.5 * (trace - p + logdet(llt_fit) - logdet(llt_true));
}

}  // namespace dglearn
