#include "dglearn/scoring.hpp"

#include <cmath>

#include "dglearn/equivalence.hpp"
#include "dglearn/errors.hpp"
#include "dglearn/graph.hpp"
#include "dglearn/rng.hpp"
#include "dglearn/sem.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace dglearn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

Dataset white_noise(int n, int p, Rng& rng) {
    Parameterization params(MatrixXd::Zero(p, p), VectorXd::Ones(p));
    return sample_data(params, n, rng);
}

double logdet(const MatrixXd& m) {
    Eigen::LLT<MatrixXd> llt(m);
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace

TEST_CASE("nll of the trivial model is half the squared Frobenius norm") {
    Rng rng(301);
    auto data = white_noise(50, 3, rng);
    Parameterization params(MatrixXd::Zero(3, 3), VectorXd::Ones(3));
    CHECK(nll(data, params) == doctest::Approx(0.5 * data.x().squaredNorm()).epsilon(1e-12));
}

TEST_CASE("nll per sample approaches the model's entropy rate") {
    Rng rng(303);
    for (int trial = 0; trial < 3; ++trial) {
        auto g = random_dg(4, 4, 4, rng);
        auto params = sample_parameters(g, rng);
        auto data = sample_data(params, 100000, rng);
        // closed-form limit of the likelihood under its own model
        double expect = 0.5 * logdet(covariance_of(params)) + 0.5 * 4;
        CHECK(nll(data, params) / data.n() == doctest::Approx(expect).epsilon(0.01));
    }
}

TEST_CASE("nll of a DAG equals the sum of per-node regression terms") {
    Rng rng(307);
    auto g = testutil::random_dag(rng, 5, 0.4);
    auto params = sample_parameters(g, rng);
    auto data = sample_data(params, 500, rng);

    const MatrixXd& s = data.moments();
    double n = data.n();
    double total = 0.0;
    for (int i = 0; i < 5; ++i) {
        VectorXd bi = params.B.col(i);
        double q = s(i, i) - 2.0 * bi.dot(s.col(i)) + bi.dot(s * bi);
        total += 0.5 * n * std::log(params.omega(i)) + 0.5 * n * q / params.omega(i);
    }
    CHECK(nll(data, params) == doctest::Approx(total).epsilon(1e-12));
}

TEST_CASE("concentrated gradient matches central finite differences") {
    Rng rng(311);
    int done = 0;
    while (done < 30) {
        int p = rng.uniform_int(2, 6);
        auto g = testutil::random_graph(rng, p, 0.5);
        if (g.edge_count() == 0) continue;
        ++done;
        auto data = white_noise(200, p, rng);

        std::vector<int> all(p);
        for (int i = 0; i < p; ++i) all[i] = i;
        std::vector<std::pair<int, int>> free(g.edges().begin(), g.edges().end());
        BlockObjective obj({data.moments(), static_cast<double>(data.n())}, all, free);

        VectorXd x(static_cast<int>(free.size()));
        for (int e = 0; e < x.size(); ++e) x(e) = rng.uniform(-0.4, 0.4);
        x = obj.project_to_stable(x);

        VectorXd grad(x.size());
        double f0 = obj.value_and_grad(x, &grad);
        REQUIRE(std::isfinite(f0));

        double worst = 0.0;
        for (int e = 0; e < x.size(); ++e) {
            double h = 1e-6 * std::max(1.0, std::abs(x(e)));
            VectorXd xp = x, xm = x;
            xp(e) += h;
            xm(e) -= h;
            double fd = (obj.value(xp) - obj.value(xm)) / (2 * h);
            worst = std::max(worst, std::abs(fd - grad(e)) / std::max(1.0, std::abs(grad(e))));
        }
        CHECK(worst < 1e-5);
    }
}

TEST_CASE("fit_mle closed forms and consistency") {
    Rng rng(313);

    auto data = white_noise(400, 3, rng);
    auto fit = fit_mle(data, DirectedGraph(3));
    CHECK(fit.B.isZero());
    for (int i = 0; i < 3; ++i)
        CHECK(fit.omega(i) ==
              doctest::Approx(data.x().col(i).squaredNorm() / data.n()).epsilon(1e-12));

    // chain recovery at n = 1e5
    DirectedGraph chain(3, {{0, 1}, {1, 2}});
    auto params = sample_parameters(chain, rng);
    auto chain_data = sample_data(params, 100000, rng);
    auto fitted = fit_mle(chain_data, chain);
    for (const auto& [u, v] : chain.edges())
        CHECK(fitted.B(u, v) == doctest::Approx(params.B(u, v)).epsilon(0.02));
    CHECK(is_stable(fitted.B));
}

TEST_CASE("larger support never fits worse") {
    Rng rng(317);
    DirectedGraph single(2, {{0, 1}});
    auto params = sample_parameters(single, rng);
    auto data = sample_data(params, 10000, rng);

    DirectedGraph two(2, {{0, 1}, {1, 0}});
    auto m_single = l0_score(data, single);
    FitOptions warm;
    warm.init_b = m_single.params.B;
    auto m_two = l0_score(data, two, warm);
    CHECK(m_two.nll <= m_single.nll + 1e-6 * std::abs(m_single.nll));
}

TEST_CASE("monotone nesting with warm starts on random pairs") {
    Rng rng(319);
    for (int trial = 0; trial < 10; ++trial) {
        int p = rng.uniform_int(3, 5);
        auto g1 = testutil::random_sparse_graph(rng, p, p + 1);
        DirectedGraph g2 = g1;
        for (int extra = 0; extra < 2; ++extra) {
            int u = rng.uniform_int(0, p - 1), v = rng.uniform_int(0, p - 1);
            if (u != v) g2.add_edge(u, v);
        }
        auto gen = sample_parameters(g2, rng);
        auto data = sample_data(gen, 2000, rng);

        auto m1 = l0_score(data, g1);
        FitOptions warm;
        warm.init_b = m1.params.B;
        auto m2 = l0_score(data, g2, warm);
        CHECK(m2.nll <= m1.nll + 1e-6 * std::abs(m1.nll));
    }
}

TEST_CASE("l0 penalty follows 0.5 log n per edge") {
    Rng rng(331);
    auto data = white_noise(10000, 2, rng);
    auto empty = l0_score(data, DirectedGraph(2));
    CHECK(empty.penalty == 0.0);

    auto single = l0_score(data, DirectedGraph(2, {{0, 1}}));
    CHECK(single.penalty == doctest::Approx(0.5 * std::log(1e4)).epsilon(1e-12));
    CHECK(single.penalty == doctest::Approx(4.60517).epsilon(1e-5));
    CHECK(single.score == doctest::Approx(single.nll + single.penalty).epsilon(1e-12));
}

TEST_CASE("a reducible 2-cycle scores worse than its reduction") {
    Rng rng(337);
    DirectedGraph single(2, {{0, 1}});
    auto gen = sample_parameters(single, rng);
    auto data = sample_data(gen, 10000, rng);

    auto m_red = l0_score(data, single);
    auto m_two = l0_score(data, DirectedGraph(2, {{0, 1}, {1, 0}}));
    CHECK(m_red.score < m_two.score);
    // same achievable likelihood, one lambda less in the penalty
    CHECK(std::abs(m_red.nll - m_two.nll) < 0.1 * default_lambda(1e4));
}

TEST_CASE("block NLLs sum to the joint NLL") {
    Rng rng(347);

    // one strongly connected cycle: a single block carrying everything
    DirectedGraph loop(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}});
    auto loop_params = sample_parameters(loop, rng);
    auto loop_data = sample_data(loop_params, 300, rng);
    auto loop_blocks = block_nll(loop_data, loop_params, find_mscs(loop));
    REQUIRE(loop_blocks.size() == 1);
    CHECK(loop_blocks[0].second == doctest::Approx(nll(loop_data, loop_params)).epsilon(1e-9));

    // two upstream vertices feeding a 3-cycle
    DirectedGraph mixed(5, {{0, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 2}});
    auto mixed_params = sample_parameters(mixed, rng);
    auto mixed_data = sample_data(mixed_params, 300, rng);
    auto blocks = block_nll(mixed_data, mixed_params, find_mscs(mixed));
    CHECK(blocks.size() == 3);
    double sum = 0.0;
    for (auto& [bl, v] : blocks) sum += v;
    CHECK(sum == doctest::Approx(nll(mixed_data, mixed_params)).epsilon(1e-9));
}

TEST_CASE("block decomposition holds on random graphs") {
    Rng rng(349);
    for (int trial = 0; trial < 40; ++trial) {
        int p = rng.uniform_int(2, 8);
        auto g = testutil::random_sparse_graph(rng, p, static_cast<int>(1.5 * p));
        Parameterization params = [&] {
            try {
                return sample_parameters(g, rng);
            } catch (const StabilityRejectionLimit&) {
                return Parameterization(MatrixXd::Zero(p, p), VectorXd::Ones(p));
            }
        }();
        auto data = sample_data(params, 200, rng);
        auto blocks = block_nll(data, params, find_mscs(g));
        double sum = 0.0;
        for (auto& [bl, v] : blocks) sum += v;
        double joint = nll(data, params);
        CHECK(std::abs(sum - joint) <= 1e-6 * std::max(1.0, std::abs(joint)));
    }
}

TEST_CASE("fitted per-block NLLs also sum to the fitted joint") {
    Rng rng(353);
    DirectedGraph g(5, {{0, 2}, {1, 3}, {2, 3}, {3, 4}, {4, 2}});
    auto gen = sample_parameters(g, rng);
    auto data = sample_data(gen, 5000, rng);
    auto model = l0_score(data, g);
    double sum = 0.0;
    for (auto& [bl, v] : model.per_block_nll) sum += v;
    CHECK(sum == doctest::Approx(model.nll).epsilon(1e-12));
    CHECK(model.nll == doctest::Approx(nll(data, model.params)).epsilon(1e-9));
}

TEST_CASE("fit_l1 shrinks to zero when warranted") {
    Rng rng(359);
    auto data = white_noise(5000, 4, rng);
    auto [b, omega] = fit_l1(data);
    CHECK(b.isZero());

    DirectedGraph g(3, {{0, 1}, {1, 2}});
    auto gen = sample_parameters(g, rng);
    auto edge_data = sample_data(gen, 5000, rng);
    L1Options heavy;
    heavy.lambda1 = 1e4;
    auto [b2, om2] = fit_l1(edge_data, heavy);
    CHECK(b2.isZero());

    // moderate penalty keeps the true skeleton (orientation is not
    // l1-identifiable: either direction of an edge can carry the weight)
    auto [b3, om3] = fit_l1(edge_data);
    CHECK((b3(0, 1) != 0.0 || b3(1, 0) != 0.0));
    CHECK((b3(1, 2) != 0.0 || b3(2, 1) != 0.0));
    CHECK(b3(0, 2) == 0.0);
    CHECK(b3(2, 0) == 0.0);
}

TEST_CASE("fit_kl closed-form and feasibility checks") {
    Rng rng(367);

    DirectedGraph chain(3, {{0, 1}, {1, 2}});
    auto gen = sample_parameters(chain, rng);
    MatrixXd target = covariance_of(gen);
    FitOptions opts;
    opts.restarts = 8;
    auto res = fit_kl(chain, target, opts);
    CHECK(res.kl < 1e-8);

    // best diagonal fit to a correlated pair
    MatrixXd corr(2, 2);
    corr << 1.0, 0.5, 0.5, 1.0;
    auto diag_fit = fit_kl(DirectedGraph(2), corr);
    CHECK(diag_fit.kl == doctest::Approx(-0.5 * std::log(0.75)).epsilon(1e-9));
    CHECK(diag_fit.kl == doctest::Approx(0.143841).epsilon(1e-5));
}

TEST_CASE("equivalent graphs reach the same minimal KL") {
    Rng rng(373);
    DirectedGraph chain(3, {{0, 1}, {1, 2}});
    DirectedGraph chain_rev(3, {{2, 1}, {1, 0}});
    DirectedGraph fork(3, {{1, 0}, {1, 2}});
    FitOptions opts;
    opts.restarts = 10;

    for (int trial = 0; trial < 5; ++trial) {
        auto noise = sample_parameters(testutil::random_graph(rng, 3, 0.5), rng);
        MatrixXd target = covariance_of(noise);
        double k1 = fit_kl(chain, target, opts).kl;
        double k2 = fit_kl(chain_rev, target, opts).kl;
        double k3 = fit_kl(fork, target, opts).kl;
        CHECK(std::abs(k1 - k2) < 1e-6);
        CHECK(std::abs(k1 - k3) < 1e-6);
    }
}

TEST_CASE("cross-fitting equivalent cyclic pairs attains zero KL") {
    Rng rng(379);
    FitOptions opts;
    opts.restarts = 8;

    DirectedGraph two(2, {{0, 1}, {1, 0}});
    DirectedGraph single(2, {{0, 1}});
    auto gen = sample_parameters(single, rng);
    MatrixXd target = covariance_of(gen);
    CHECK(fit_kl(two, target, opts).kl < 1e-8);

    // the 2-cycle reduces to either single edge, so a single edge fits it back
    auto gen2 = sample_parameters(two, rng);
    MatrixXd target2 = covariance_of(gen2);
    CHECK(fit_kl(single, target2, opts).kl < 1e-8);
}

TEST_CASE("cached rescoring equals from-scratch scoring over move sequences") {
    Rng rng(383);
    for (int trial = 0; trial < 4; ++trial) {
        int p = 6;
        auto truth = random_dg(p, 4, 4, rng);
        auto gen = sample_parameters(truth, rng);
        auto data = sample_data(gen, 2000, rng);

        FitOptions fo;
        fo.seed = 99;
        Scorer warm(data, default_lambda(2000), fo);
        DirectedGraph g(p);
        for (int step = 0; step < 20; ++step) {
            int u = rng.uniform_int(0, p - 1), v = rng.uniform_int(0, p - 1);
            if (u == v) continue;
            if (g.has_edge(u, v))
                g.remove_edge(u, v);
            else
                g.add_edge(u, v);

            auto incremental = warm.try_score(g);
            Scorer cold(data, default_lambda(2000), fo);
            cold.set_cache_enabled(false);
            auto fresh = cold.try_score(g);
            REQUIRE(incremental.has_value() == fresh.has_value());
            if (incremental)
                CHECK(std::abs(incremental->score - fresh->score) <=
                      1e-6 * std::max(1.0, std::abs(fresh->score)));
        }
        CHECK(warm.cache_size() > 0);
    }
}
