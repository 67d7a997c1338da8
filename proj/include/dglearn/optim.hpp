#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>

namespace dglearn {

struct OptimOptions {
    int max_iter = 500;
    double grad_tol = 1e-7;  // infinity norm
    int memory = 10;
    double armijo_c1 = 1e-4;
};

struct OptimResult {
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    double grad_inf_norm = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Limited-memory BFGS with Armijo backtracking. `fn` returns the objective
/// value and fills the gradient; a non-finite return marks the point
/// infeasible and the line search backtracks, which is how constraints such
/// as spectral-radius bounds are enforced.
inline OptimResult minimize_lbfgs(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& fn,
    Eigen::VectorXd x0, const OptimOptions& opts = {}) {
    OptimResult res;
    const auto dim = x0.size();
    Eigen::VectorXd g(dim), g_new(dim);
    double f = fn(x0, g);
    if (!std::isfinite(f)) {
        res.x = std::move(x0);
        return res;
    }

    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;
    Eigen::VectorXd x = std::move(x0);

    for (int iter = 0; iter < opts.max_iter; ++iter) {
        res.iterations = iter;
        double gnorm = dim > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
        if (gnorm < opts.grad_tol) {
            res.converged = true;
            break;
        }

        // two-loop recursion
        Eigen::VectorXd d = -g;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(d);
            d -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            d *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(d);
            d += (alpha[i] - beta) * s_hist[i];
        }

        double dir_deriv = g.dot(d);
        if (!(dir_deriv < 0)) {  // fall back to steepest descent
            d = -g;
            dir_deriv = g.dot(d);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        double step = 1.0;
        double f_new = std::numeric_limits<double>::infinity();
        Eigen::VectorXd x_new;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * d;
            f_new = fn(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= f + opts.armijo_c1 * step * dir_deriv) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no usable step; report the best point so far

        Eigen::VectorXd s = x_new - x;
        Eigen::VectorXd y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > opts.memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        x = std::move(x_new);
        f = f_new;
        g = g_new;
    }

    res.x = std::move(x);
    res.f = f;
    res.grad_inf_norm = dim > 0 ? g.cwiseAbs().maxCoeff() : 0.0;
    if (res.grad_inf_norm < opts.grad_tol) res.converged = true;
    return res;
}

}  // namespace dglearn
