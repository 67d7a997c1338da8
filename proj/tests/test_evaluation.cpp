#include "dglearn/evaluation.hpp"

#include <algorithm>

#include "dglearn/equivalence.hpp"
#include "dglearn/errors.hpp"
#include "dglearn/graph.hpp"
#include "dglearn/rng.hpp"
#include "dglearn/scoring.hpp"
#include "dglearn/sem.hpp"
#include "doctest.h"
#include "testutil.hpp"

using namespace dglearn;

namespace {

const DirectedGraph kChain(3, {{0, 1}, {1, 2}});
const DirectedGraph kCollider(3, {{0, 1}, {2, 1}});

}  // namespace

TEST_CASE("shd_to_class basics") {
    auto cls = enumerate_equivalence_class(support_of_graph(kChain));

    CHECK(shd_to_class(kChain, cls).shd == 0);
    CHECK(shd_to_class(DirectedGraph(3, {{2, 1}, {1, 0}}), cls).shd == 0);

    // brute-force the collider's distance over the 3-member class
    int oracle = -1;
    for (const auto& m : cls.members) {
        int d = shd(kCollider, graph_of_support(m));
        if (oracle < 0 || d < oracle) oracle = d;
    }
    CHECK(oracle == 2);
    CHECK(shd_to_class(kCollider, cls).shd == oracle);
    CHECK(shd_to_class(kCollider, cls).exact);
}

TEST_CASE("shd_to_class is zero on every member for random sparse graphs") {
    Rng rng(501);
    for (int trial = 0; trial < 20; ++trial) {
        int p = rng.uniform_int(2, 5);
        auto g = testutil::random_sparse_graph(rng, p, p + 1);
        auto cls = enumerate_equivalence_class(support_of_graph(g));
        if (!cls.exhausted) continue;
        for (const auto& m : cls.members)
            CHECK(shd_to_class(graph_of_support(m), cls).shd == 0);
    }
}

TEST_CASE("multi-domain success of the oracle learner is total") {
    DirectedGraph truth(3, {{0, 1}, {1, 2}});
    Learner oracle = [&truth](const Dataset&, std::uint64_t) { return truth; };
    MultiDomainConfig cfg;
    cfg.d = 4;
    cfg.n_samples = 200;
    cfg.kl_restarts = 6;
    auto rates = multi_domain_eval(truth, oracle, cfg, Rng(11));
    REQUIRE(rates.size() == 4);
    for (double r : rates) CHECK(r == 1.0);
}

TEST_CASE("multi-domain success of the empty learner is null on a connected truth") {
    DirectedGraph truth(3, {{0, 1}, {1, 2}});
    Learner empty = [](const Dataset& data, std::uint64_t) { return DirectedGraph(data.p()); };
    MultiDomainConfig cfg;
    cfg.d = 4;
    cfg.n_samples = 200;
    cfg.kl_restarts = 4;
    auto rates = multi_domain_eval(truth, empty, cfg, Rng(13));
    for (double r : rates) CHECK(r == 0.0);
}

TEST_CASE("success rates do not depend on domain order") {
    Rng rng(17);
    DirectedGraph truth(3, {{0, 1}, {1, 2}});
    DirectedGraph output(3, {{1, 0}, {1, 2}});

    std::vector<Eigen::MatrixXd> sigmas;
    for (int j = 0; j < 5; ++j) {
        auto params = sample_parameters(truth, rng);
        sigmas.push_back(covariance_of(params));
    }
    FitOptions fo;
    fo.restarts = 6;
    double eta = 3e-3;
    auto rate_over = [&](const std::vector<Eigen::MatrixXd>& order) {
        int hits = 0;
        for (const auto& s : order)
            if (fit_kl(output, s, fo).kl < eta) ++hits;
        return static_cast<double>(hits) / order.size();
    };
    auto shuffled = sigmas;
    std::reverse(shuffled.begin(), shuffled.end());
    CHECK(rate_over(sigmas) == rate_over(shuffled));
}

TEST_CASE("equivalent outputs receive identical shd and matching success") {
    auto cls = enumerate_equivalence_class(support_of_graph(kChain));
    DirectedGraph reversed(3, {{2, 1}, {1, 0}});
    CHECK(shd_to_class(kChain, cls).shd == shd_to_class(reversed, cls).shd);
}

TEST_CASE("run_experiment produces a deterministic, well-formed report") {
    ExperimentConfig cfg;
    cfg.p = 3;
    cfg.n_graphs = 2;
    cfg.n_samples = 500;
    cfg.d = 2;
    cfg.kl_restarts = 4;
    cfg.algorithms = {"hill"};
    cfg.seed = 77;

    auto a = run_experiment(cfg);
    auto b = run_experiment(cfg);
    REQUIRE(a.records.size() == 2);
    for (std::size_t gi = 0; gi < a.records.size(); ++gi) {
        CHECK(a.records[gi].truth == b.records[gi].truth);
        REQUIRE(a.records[gi].results.size() == 1);
        const auto& ra = a.records[gi].results[0];
        const auto& rb = b.records[gi].results[0];
        CHECK(ra.error.empty());
        CHECK(ra.output == rb.output);
        CHECK(ra.shd == rb.shd);
        CHECK(ra.success_rates == rb.success_rates);
        CHECK(ra.shd >= 0);
        for (double r : ra.success_rates) {
            CHECK(r >= 0.0);
            CHECK(r <= 1.0);
        }
    }

    auto curve = shd_curve(a, "hill", 5);
    for (std::size_t s = 1; s < curve.size(); ++s) CHECK(curve[s] >= curve[s - 1]);
    CHECK(curve.back() == 1.0);

    std::vector<double> thresholds{0.0, 0.5, 1.0};
    auto sc = success_curve(a, "hill", thresholds);
    for (std::size_t t = 1; t < sc.size(); ++t) CHECK(sc[t] <= sc[t - 1]);
    CHECK(sc[0] == 1.0);
}

TEST_CASE("experiment records failures without aborting") {
    ExperimentConfig cfg;
    cfg.p = 3;
    cfg.n_graphs = 1;
    cfg.n_samples = 100;
    cfg.d = 1;
    cfg.algorithms = {"nonexistent"};
    cfg.seed = 5;
    auto report = run_experiment(cfg);
    REQUIRE(report.records.size() == 1);
    REQUIRE(report.records[0].results.size() == 1);
    CHECK_FALSE(report.records[0].results[0].error.empty());
}
