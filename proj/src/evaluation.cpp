#include "dglearn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "dglearn/errors.hpp"
#include "dglearn/scoring.hpp"

namespace dglearn {

ShdToClass shd_to_class(const DirectedGraph& g_hat, const EquivalenceClass& cls) {
    if (cls.members.empty()) throw DimensionMismatch("equivalence class is empty");
    int best = -1;
    for (const auto& m : cls.members) {
        int d = shd(g_hat, graph_of_support(m));
        if (best < 0 || d < best) best = d;
    }
    return {best, cls.exhausted};
}

namespace {

double resolve_eta(double eta, int p) { return eta > 0 ? eta : p * 1e-3; }

// Steps of the domain-transfer protocol, with an optional preset domain 0
// (its parameters, data and learned output) so the experiment runner can
// reuse the primary run.
struct PresetDomain {
    Parameterization params;
    Dataset data;
    DirectedGraph output;
};

std::vector<double> multi_domain_impl(const DirectedGraph& g_star, const Learner& learner,
                                      const MultiDomainConfig& cfg, const Rng& rng,
                                      const PresetDomain* preset) {
    const int d = cfg.d;
    const double eta = resolve_eta(cfg.eta, g_star.p());

    std::vector<Parameterization> params;
    std::vector<Eigen::MatrixXd> sigmas;
    std::vector<DirectedGraph> outputs;
    params.reserve(d);
    for (int j = 0; j < d; ++j) {
        if (preset && j == 0) {
            params.push_back(preset->params);
        } else {
            Rng stream = rng.split(1000 + j);
            params.push_back(sample_parameters(g_star, stream, cfg.ranges));
        }
        sigmas.push_back(covariance_of(params.back()));
    }
    for (int i = 0; i < d; ++i) {
        if (preset && i == 0) {
            outputs.push_back(preset->output);
            continue;
        }
        Rng stream = rng.split(2000 + i);
        Dataset data = sample_data(params[i], cfg.n_samples, stream);
        outputs.push_back(learner(data, rng.split(3000 + i).seed()));
    }

    FitOptions fo;
    fo.restarts = cfg.kl_restarts;
    std::vector<double> rates(d, 0.0);
    for (int i = 0; i < d; ++i) {
        int hits = 0;
        for (int j = 0; j < d; ++j) {
            fo.seed = rng.split(4000 + i * d + j).seed();
            double kl = std::numeric_limits<double>::infinity();
            try {
                kl = fit_kl(outputs[i], sigmas[j], fo).kl;
            } catch (const DomainError&) {
            }
            if (kl < eta) ++hits;
        }
        rates[i] = static_cast<double>(hits) / d;
    }
    return rates;
}

}  // namespace

std::vector<double> multi_domain_eval(const DirectedGraph& g_star, const Learner& learner,
                                      const MultiDomainConfig& cfg, const Rng& rng) {
    return multi_domain_impl(g_star, learner, cfg, rng, nullptr);
}

Learner make_learner(const std::string& algo, const ExperimentConfig& cfg) {
    if (algo == "tabu" || algo == "hill") {
        SearchConfig sc;
        sc.algorithm = algo == "tabu" ? SearchAlgorithm::Tabu : SearchAlgorithm::HillClimb;
        sc.tabu_length = cfg.tabu_length;
        sc.patience = cfg.patience;
        sc.restarts = cfg.restarts;
        sc.use_virtual_ops = cfg.use_virtual_ops;
        return [sc](const Dataset& data, std::uint64_t seed) {
            SearchConfig local = sc;
            local.seed = seed;
            return run_search(data, DirectedGraph(data.p()), local).graph;
        };
    }
    if (algo == "l1") {
        L1Options lo;
        lo.lambda1 = cfg.lambda1;
        return [lo](const Dataset& data, std::uint64_t) {
            auto [b, omega] = fit_l1(data, lo);
            DirectedGraph g(data.p());
            for (int u = 0; u < data.p(); ++u)
                for (int v = 0; v < data.p(); ++v)
                    if (u != v && b(u, v) != 0.0) g.add_edge(u, v);
            return g;
        };
    }
    throw InfeasibleConstraints("unknown algorithm: " + algo);
}

namespace {

GraphRecord run_one_graph(const ExperimentConfig& cfg, int graph_index) {
    Rng rng = Rng(cfg.seed).split(graph_index);
    GraphRecord record;

    RandomDgOptions dg_opts;
    dg_opts.edge_target = cfg.edge_target;
    Rng truth_rng = rng.split(1);
    record.truth = random_dg(cfg.p, cfg.max_degree, cfg.max_cycle_len, truth_rng, dg_opts);

    Rng param_rng = rng.split(2);
    Parameterization truth_params = sample_parameters(record.truth, param_rng);
    Rng data_rng = rng.split(3);
    Dataset data = sample_data(truth_params, cfg.n_samples, data_rng);

    EquivalenceClass cls = enumerate_equivalence_class(support_of_graph(record.truth), cfg.budget);
    record.class_size = cls.members.size();
    record.class_exhausted = cls.exhausted;

    for (const auto& algo : cfg.algorithms) {
        AlgorithmResult result;
        result.algorithm = algo;
        auto start = std::chrono::steady_clock::now();
        try {
            Learner learner = make_learner(algo, cfg);
            result.output = learner(data, rng.split(4).seed());

            auto dist = shd_to_class(result.output, cls);
            result.shd = dist.shd;
            result.shd_exact = dist.exact;

            MultiDomainConfig md;
            md.d = cfg.d;
            md.eta = cfg.eta;
            md.n_samples = cfg.n_samples;
            md.kl_restarts = cfg.kl_restarts;
            PresetDomain preset{truth_params, data, result.output};
            result.success_rates =
                multi_domain_impl(record.truth, learner, md, rng.split(5), &preset);
        } catch (const std::exception& e) {
            result.error = e.what();
        }
        result.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        record.results.push_back(std::move(result));
    }
    return record;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& cfg) {
    EvalReport report;
    report.config = cfg;
    report.records.resize(cfg.n_graphs, GraphRecord{});

    ExperimentConfig inner = cfg;
    int outer_threads = std::max(1, cfg.threads);
    if (outer_threads > 1) inner.threads = 1;

    auto work = [&](int start, int stride) {
        for (int gi = start; gi < cfg.n_graphs; gi += stride)
            report.records[gi] = run_one_graph(inner, gi);
    };
    if (outer_threads == 1 || cfg.n_graphs < 2) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(outer_threads);
        for (int t = 0; t < outer_threads; ++t) pool.emplace_back(work, t, outer_threads);
        for (auto& th : pool) th.join();
    }
    return report;
}

std::vector<double> shd_curve(const EvalReport& report, const std::string& algo, int max_shd) {
    std::vector<int> shds;
    for (const auto& rec : report.records)
        for (const auto& res : rec.results)
            if (res.algorithm == algo && res.error.empty()) shds.push_back(res.shd);

    std::vector<double> out(max_shd + 1, 0.0);
    if (shds.empty()) return out;
    for (int s = 0; s <= max_shd; ++s) {
        int count = static_cast<int>(std::count_if(shds.begin(), shds.end(),
                                                   [s](int d) { return d <= s; }));
        out[s] = static_cast<double>(count) / shds.size();
    }
    return out;
}

std::vector<double> success_curve(const EvalReport& report, const std::string& algo,
                                  const std::vector<double>& thresholds) {
    std::vector<double> rates;
    for (const auto& rec : report.records)
        for (const auto& res : rec.results)
            if (res.algorithm == algo && res.error.empty())
                rates.insert(rates.end(), res.success_rates.begin(), res.success_rates.end());

    std::vector<double> out(thresholds.size(), 0.0);
    if (rates.empty()) return out;
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        int count = static_cast<int>(std::count_if(
            rates.begin(), rates.end(), [&](double r) { return r >= thresholds[t] - 1e-12; }));
        out[t] = static_cast<double>(count) / rates.size();
    }
    return out;
}

}  // namespace dglearn
