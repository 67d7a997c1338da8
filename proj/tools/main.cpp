#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dglearn/equivalence.hpp"
#include "dglearn/errors.hpp"
#include "dglearn/evaluation.hpp"
#include "dglearn/graph.hpp"
#include "dglearn/io.hpp"
#include "dglearn/scoring.hpp"
#include "dglearn/search.hpp"
#include "dglearn/sem.hpp"

using json = nlohmann::json;
using namespace dglearn;

namespace {

constexpr const char* kVersion = "dglearn 0.1.0";

int env_threads() {
    const char* env = std::getenv("DGLEARN_THREADS");
    if (!env) return 1;
    int t = std::atoi(env);
    return t > 0 ? t : 1;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

json witness_to_json(const std::vector<WitnessStep>& steps) {
    json out = json::array();
    for (const auto& s : steps) {
        if (s.is_cycle_reversion())
            out.push_back(json{{"kind", "cycle_reversion"}, {"cycle", s.cycle}});
        else
            out.push_back(json{{"kind", to_string(s.rotation.kind)},
                               {"i", s.rotation.i},
                               {"j", s.rotation.j},
                               {"k", s.rotation.k}});
    }
    return out;
}

json score_to_json(const ScoredModel& model) {
    json blocks = json::array();
    for (const auto& [block, value] : model.per_block_nll)
        blocks.push_back(json{{"block", block}, {"nll", value}});
    return json{{"nll", model.nll},
                {"penalty", model.penalty},
                {"score", model.score},
                {"edges", model.graph.edge_count()},
                {"per_block", blocks}};
}

struct CliState {
    // equiv
    std::string g1_path, g2_path, graph_path;
    std::uint64_t budget = kDefaultBudget;
    // simulate
    int p = 5, max_degree = 4, max_cycle_len = 5, n = 10000, edge_target = -1;
    std::uint64_t seed = 0;
    std::string params_path, out_path;
    double weight_low = 0.2, weight_high = 0.8, var_low = 1.0, var_high = 3.0;
    // learn
    std::string data_path, algo = "tabu", init_path;
    int tabu_length = 5, patience = 5, restarts = 5, threads = env_threads();
    std::optional<double> lambda_override;
    double lambda1 = 0.1;
    bool no_virtual = false;
    // evaluate
    std::string truth_path, output_path;
    int d = 50;
    std::string eta = "auto";
    int kl_restarts = 10;
    // experiment
    std::string config_path, curves_path;
    bool verbose = false;
};

double resolve_eta_flag(const std::string& eta, int p) {
    if (eta == "auto") return p * 1e-3;
    try {
        return std::stod(eta);
    } catch (const std::exception&) {
        throw ParseError("--eta expects a number or 'auto'");
    }
}

int run_equiv_check(const CliState& st) {
    auto g1 = load_graph(st.g1_path);
    auto g2 = load_graph(st.g2_path);
    auto res = check_equivalent(g1, g2, st.budget);
    json out{{"verdict", to_string(res.verdict)},
             {"class_sizes", json::array({res.class_size_g1, res.class_size_g2})},
             {"budget", st.budget}};
    if (res.verdict == EquivVerdict::Equivalent) {
        out["witness_from"] = res.witness_from == 1 ? "g1" : "g2";
        out["witness_sequence"] = witness_to_json(res.witness);
    }
    emit(out);
    return 0;
}

int run_equiv_enumerate(const CliState& st) {
    auto g = load_graph(st.graph_path);
    auto cls = enumerate_equivalence_class(support_of_graph(g), st.budget);
    if (!cls.exhausted)
        std::cerr << "warning: node budget reached, class is partial\n";
    json out = json::array();
    for (const auto& m : cls.members) out.push_back(graph_to_json(graph_of_support(m)));
    emit(out);
    return 0;
}

int run_equiv_reduce(const CliState& st) {
    auto g = load_graph(st.graph_path);
    auto res = is_reducible(g, st.budget);
    if (res.verdict == ReducibleVerdict::Inconclusive)
        throw DomainError("budget", "node budget too small to settle reducibility");
    if (res.verdict == ReducibleVerdict::Reducible) {
        std::cerr << "reduced " << g.edge_count() << " -> " << res.reduced->edge_count()
                  << " edges\n";
        emit(graph_to_json(*res.reduced));
    } else {
        std::cerr << "graph is irreducible\n";
        emit(graph_to_json(g));
    }
    return 0;
}

int run_simulate_graph(const CliState& st) {
    Rng rng(st.seed);
    RandomDgOptions opts;
    opts.edge_target = st.edge_target;
    auto g = random_dg(st.p, st.max_degree, st.max_cycle_len, rng, opts);
    if (!st.out_path.empty()) save_graph(g, st.out_path);
    emit(graph_to_json(g));
    return 0;
}

int run_simulate_params(const CliState& st) {
    auto g = load_graph(st.graph_path);
    Rng rng(st.seed);
    WeightRanges ranges;
    ranges.weight_low = st.weight_low;
    ranges.weight_high = st.weight_high;
    ranges.var_low = st.var_low;
    ranges.var_high = st.var_high;
    auto params = sample_parameters(g, rng, ranges);
    if (!st.out_path.empty()) save_params(params, st.out_path);
    emit(params_to_json(params));
    return 0;
}

int run_simulate_data(const CliState& st) {
    auto params = load_params(st.params_path);
    Rng rng(st.seed);
    auto data = sample_data(params, st.n, rng);
    save_dataset_csv(data, st.out_path);
    emit(json{{"n", data.n()}, {"p", data.p()}, {"path", st.out_path}});
    return 0;
}

int run_learn(const CliState& st) {
    auto data = load_dataset_csv(st.data_path);
    DirectedGraph init =
        st.init_path.empty() ? DirectedGraph(data.p()) : load_graph(st.init_path);

    json out{{"algorithm", st.algo}, {"seed", st.seed}};
    if (st.algo == "l1") {
        L1Options lo;
        lo.lambda1 = st.lambda1;
        auto [b, omega] = fit_l1(data, lo);
        DirectedGraph g(data.p());
        for (int u = 0; u < data.p(); ++u)
            for (int v = 0; v < data.p(); ++v)
                if (u != v && b(u, v) != 0.0) g.add_edge(u, v);
        Parameterization params(b, omega);
        out["graph"] = graph_to_json(g);
        out["params"] = params_to_json(params);
        out["score"] =
            json{{"nll", nll(data, params)},
                 {"penalty", default_lambda(data.n()) * g.edge_count()},
                 {"edges", g.edge_count()}};
    } else {
        SearchConfig cfg;
        cfg.algorithm = st.algo == "hill" ? SearchAlgorithm::HillClimb : SearchAlgorithm::Tabu;
        cfg.tabu_length = st.tabu_length;
        cfg.patience = st.patience;
        cfg.restarts = st.restarts;
        cfg.seed = st.seed;
        cfg.lambda = st.lambda_override;
        cfg.use_virtual_ops = !st.no_virtual;
        cfg.threads = st.threads;
        auto model = run_search(data, init, cfg);
        out["graph"] = graph_to_json(model.graph);
        out["params"] = params_to_json(model.params);
        out["score"] = score_to_json(model);
        if (st.verbose)
            std::cerr << "learned " << model.graph.edge_count() << " edges, score "
                      << model.score << "\n";
    }
    emit(out);
    return 0;
}

int run_evaluate_shd(const CliState& st) {
    auto truth = load_graph(st.truth_path);
    auto output = load_graph(st.output_path);
    auto cls = enumerate_equivalence_class(support_of_graph(truth), st.budget);
    auto res = shd_to_class(output, cls);
    emit(json{{"shd", res.shd},
              {"exact", res.exact},
              {"upper_bound", !res.exact},
              {"class_size", cls.members.size()}});
    return 0;
}

int run_evaluate_multidomain(const CliState& st) {
    auto truth = load_graph(st.truth_path);
    ExperimentConfig ec;
    ec.tabu_length = st.tabu_length;
    ec.patience = st.patience;
    ec.restarts = st.restarts;
    ec.lambda1 = st.lambda1;
    ec.use_virtual_ops = !st.no_virtual;
    Learner learner = make_learner(st.algo, ec);

    MultiDomainConfig md;
    md.d = st.d;
    md.eta = resolve_eta_flag(st.eta, truth.p());
    md.n_samples = st.n;
    md.kl_restarts = st.kl_restarts;
    auto rates = multi_domain_eval(truth, learner, md, Rng(st.seed));

    double mean = 0.0;
    for (double r : rates) mean += r;
    mean /= rates.empty() ? 1.0 : rates.size();
    emit(json{{"d", st.d},
              {"eta", md.eta},
              {"success_rates", rates},
              {"mean_success_rate", mean}});
    return 0;
}

int run_experiment_cmd(const CliState& st) {
    auto cfg = experiment_config_from_json(json_from_file(st.config_path));
    if (st.threads > 1) cfg.threads = st.threads;
    auto report = run_experiment(cfg);
    if (!st.out_path.empty())
        json_to_file(report_to_json(report, /*include_runtimes=*/true), st.out_path);
    if (!st.curves_path.empty()) {
        std::ofstream out(st.curves_path);
        if (!out) throw ParseError("cannot write file: " + st.curves_path);
        out << curves_to_csv(report);
    }
    emit(report_summary_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear Gaussian directed graphs: equivalence, learning, evaluation"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    CliState st;
    app.add_flag("--verbose", st.verbose, "human-readable notes on stderr");
    app.add_option("--threads", st.threads, "worker threads (default: DGLEARN_THREADS or 1)");

    int (*handler)(const CliState&) = nullptr;

    auto* equiv = app.add_subcommand("equiv", "distribution-equivalence queries");
    equiv->require_subcommand(1);
    auto* check = equiv->add_subcommand("check", "decide equivalence of two graphs");
    check->add_option("--g1", st.g1_path)->required();
    check->add_option("--g2", st.g2_path)->required();
    check->add_option("--budget", st.budget);
    check->callback([&] { handler = run_equiv_check; });
    auto* enumerate = equiv->add_subcommand("enumerate", "enumerate the equivalence class");
    enumerate->add_option("--graph", st.graph_path)->required();
    enumerate->add_option("--budget", st.budget);
    enumerate->callback([&] { handler = run_equiv_enumerate; });
    auto* reduce = equiv->add_subcommand("reduce", "remove redundant edges");
    reduce->add_option("--graph", st.graph_path)->required();
    reduce->add_option("--budget", st.budget);
    reduce->callback([&] { handler = run_equiv_reduce; });

    auto* simulate = app.add_subcommand("simulate", "sample graphs, parameters, data");
    simulate->require_subcommand(1);
    auto* sim_graph = simulate->add_subcommand("graph", "random graph under constraints");
    sim_graph->add_option("--p", st.p)->required();
    sim_graph->add_option("--max-degree", st.max_degree);
    sim_graph->add_option("--max-cycle-len", st.max_cycle_len);
    sim_graph->add_option("--edge-target", st.edge_target);
    sim_graph->add_option("--seed", st.seed)->required();
    sim_graph->add_option("--out", st.out_path);
    sim_graph->callback([&] { handler = run_simulate_graph; });
    auto* sim_params = simulate->add_subcommand("params", "stable random parameters");
    sim_params->add_option("--graph", st.graph_path)->required();
    sim_params->add_option("--seed", st.seed)->required();
    sim_params->add_option("--weight-low", st.weight_low);
    sim_params->add_option("--weight-high", st.weight_high);
    sim_params->add_option("--var-low", st.var_low);
    sim_params->add_option("--var-high", st.var_high);
    sim_params->add_option("--out", st.out_path);
    sim_params->callback([&] { handler = run_simulate_params; });
    auto* sim_data = simulate->add_subcommand("data", "sample a dataset to CSV");
    sim_data->add_option("--params", st.params_path)->required();
    sim_data->add_option("--n", st.n)->required();
    sim_data->add_option("--seed", st.seed)->required();
    sim_data->add_option("--out", st.out_path)->required();
    sim_data->callback([&] { handler = run_simulate_data; });

    auto* learn = app.add_subcommand("learn", "structure learning from a dataset");
    learn->add_option("--data", st.data_path)->required();
    learn->add_option("--algo", st.algo)->check(CLI::IsMember({"tabu", "hill", "l1"}));
    learn->add_option("--tabu-length", st.tabu_length);
    learn->add_option("--patience", st.patience);
    learn->add_option("--restarts", st.restarts);
    learn->add_option("--seed", st.seed)->required();
    learn->add_option("--init", st.init_path);
    learn->add_option("--lambda", [&st](const std::vector<std::string>& vals) {
        st.lambda_override = std::stod(vals[0]);
        return true;
    }, "penalty per edge (default 0.5 log n)");
    learn->add_option("--lambda1", st.lambda1, "l1 regularization weight");
    learn->add_flag("--no-virtual", st.no_virtual, "disable the virtual-edge operators");
    learn->callback([&] { handler = run_learn; });

    auto* evaluate = app.add_subcommand("evaluate", "evaluation protocols");
    evaluate->require_subcommand(1);
    auto* eshd = evaluate->add_subcommand("shd", "SHD to the truth's equivalence class");
    eshd->add_option("--truth", st.truth_path)->required();
    eshd->add_option("--output", st.output_path)->required();
    eshd->add_option("--budget", st.budget);
    eshd->callback([&] { handler = run_evaluate_shd; });
    auto* emd = evaluate->add_subcommand("multidomain", "domain-transfer success rates");
    emd->add_option("--truth", st.truth_path)->required();
    emd->add_option("--algo", st.algo)->check(CLI::IsMember({"tabu", "hill", "l1"}));
    emd->add_option("--d", st.d);
    emd->add_option("--eta", st.eta, "threshold or 'auto' (= p*1e-3)");
    emd->add_option("--n", st.n);
    emd->add_option("--kl-restarts", st.kl_restarts);
    emd->add_option("--tabu-length", st.tabu_length);
    emd->add_option("--patience", st.patience);
    emd->add_option("--seed", st.seed)->required();
    emd->callback([&] { handler = run_evaluate_multidomain; });

    auto* experiment = app.add_subcommand("experiment", "end-to-end experiment runs");
    experiment->require_subcommand(1);
    auto* exp_run = experiment->add_subcommand("run", "run an experiment config");
    exp_run->add_option("--config", st.config_path)->required();
    exp_run->add_option("--out", st.out_path, "full report JSON (includes runtimes)");
    exp_run->add_option("--emit-curves", st.curves_path, "curve CSV output");
    exp_run->callback([&] { handler = run_experiment_cmd; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return handler ? handler(st) : 2;
    } catch (const DomainError& e) {
        emit(json{{"error", e.kind()}, {"message", e.what()}});
        return 1;
    } catch (const std::exception& e) {
        emit(json{{"error", "internal"}, {"message", e.what()}});
        return 1;
    }
}
