#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dglearn/equivalence.hpp"
#include "dglearn/graph.hpp"
#include "dglearn/search.hpp"
#include "dglearn/sem.hpp"

namespace dglearn {

struct ShdToClass {
    int shd = 0;
    bool exact = true;  // false when the class enumeration hit its budget,
                        // making the distance an upper bound
};

/// Smallest SHD between g_hat and any member of the (possibly partial)
/// equivalence class.
ShdToClass shd_to_class(const DirectedGraph& g_hat, const EquivalenceClass& cls);

/// A structure learner: consumes one domain's data with a seed, returns a
/// graph.
using Learner = std::function<DirectedGraph(const Dataset&, std::uint64_t)>;

struct MultiDomainConfig {
    int d = 50;
    double eta = -1.0;  // <= 0 selects p * 1e-3
    int n_samples = 10000;
    int kl_restarts = 10;
    WeightRanges ranges;
};

/// Domain-transfer evaluation: d random parameterizations of g_star give d
/// covariances; the learner is run on data from each domain, and every output
/// is fit to every domain's population covariance. An output's success rate
/// is the fraction of domains it fits below eta.
std::vector<double> multi_domain_eval(const DirectedGraph& g_star, const Learner& learner,
                                      const MultiDomainConfig& cfg, const Rng& rng);

struct ExperimentConfig {
    int p = 5;
    int n_graphs = 20;
    int max_degree = 4;
    int max_cycle_len = 5;
    int n_samples = 10000;
    int d = 10;
    double eta = -1.0;  // <= 0 selects p * 1e-3
    std::vector<std::string> algorithms = {"tabu"};
    std::uint64_t seed = 0;
    int tabu_length = 5;
    int patience = 5;
    int restarts = 5;
    std::uint64_t budget = kDefaultBudget;
    int threads = 1;
    int kl_restarts = 10;
    int edge_target = -1;  // < 0 selects floor(1.2 p)
    double lambda1 = 0.1;
    bool use_virtual_ops = true;
};

/// Builds the learner named by `algo` ("tabu", "hill", "l1") with the
/// experiment's hyperparameters.
Learner make_learner(const std::string& algo, const ExperimentConfig& cfg);

struct AlgorithmResult {
    std::string algorithm;
    DirectedGraph output{1};
    int shd = -1;
    bool shd_exact = true;
    std::vector<double> success_rates;  // one per domain-learned output
    double runtime_seconds = 0.0;
    std::string error;  // non-empty when this run failed
};

struct GraphRecord {
    DirectedGraph truth{1};
    std::size_t class_size = 0;
    bool class_exhausted = true;
    std::vector<AlgorithmResult> results;
};

struct EvalReport {
    ExperimentConfig config;
    std::vector<GraphRecord> records;
};

/// Full protocol: sample ground truths, data, run every algorithm, evaluate
/// SHD against the enumerated class and domain-transfer success rates.
/// Per-graph failures are recorded in the report, not raised.
EvalReport run_experiment(const ExperimentConfig& cfg);

/// Fraction of outputs with SHD <= s, for s = 0..max_shd.
std::vector<double> shd_curve(const EvalReport& report, const std::string& algo, int max_shd);

/// Fraction of outputs with success rate >= t for each threshold.
std::vector<double> success_curve(const EvalReport& report, const std::string& algo,
                                  const std::vector<double>& thresholds);

}  // namespace dglearn
