#include "dglearn/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "dglearn/errors.hpp"

namespace dglearn {

using nlohmann::json;

namespace {

json read_json_checked(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace

json json_from_file(const std::string& path) { return read_json_checked(path); }

void json_to_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

json graph_to_json(const DirectedGraph& g) {
    json edges = json::array();
    for (const auto& [u, v] : g.edges()) edges.push_back({u, v});
    return json{{"p", g.p()}, {"edges", edges}};
}

DirectedGraph graph_from_json(const json& j) {
    try {
        if (!j.is_object() || !j.contains("p") || !j.contains("edges"))
            throw ParseError("graph JSON must carry \"p\" and \"edges\"");
        int p = j.at("p").get<int>();
        if (p < 1) throw ParseError("graph JSON: p must be positive");
        DirectedGraph g(p);
        for (const auto& e : j.at("edges")) {
            if (!e.is_array() || e.size() != 2) throw ParseError("graph JSON: malformed edge");
            g.add_edge(e[0].get<int>(), e[1].get<int>());
        }
        return g;
    } catch (const json::exception& e) {
        throw ParseError(std::string("graph JSON: ") + e.what());
    } catch (const IndexOutOfRange& e) {
        throw ParseError(std::string("graph JSON: ") + e.what());
    }
}

DirectedGraph load_graph(const std::string& path) {
    return graph_from_json(read_json_checked(path));
}

void save_graph(const DirectedGraph& g, const std::string& path) {
    json_to_file(graph_to_json(g), path);
}

json params_to_json(const Parameterization& params) {
    const int p = params.p();
    json b = json::array();
    for (int i = 0; i < p; ++i) {
        json row = json::array();
        for (int j = 0; j < p; ++j) row.push_back(params.B(i, j));
        b.push_back(row);
    }
    json omega = json::array();
    for (int i = 0; i < p; ++i) omega.push_back(params.omega(i));
    return json{{"B", b}, {"omega", omega}};
}

Parameterization params_from_json(const json& j) {
    try {
        const auto& b = j.at("B");
        const auto& om = j.at("omega");
        int p = static_cast<int>(om.size());
        if (p < 1 || static_cast<int>(b.size()) != p)
            throw ParseError("parameter JSON: B and omega sizes disagree");
        Eigen::MatrixXd bm(p, p);
        for (int i = 0; i < p; ++i) {
            if (static_cast<int>(b[i].size()) != p)
                throw ParseError("parameter JSON: B must be square");
            for (int k = 0; k < p; ++k) bm(i, k) = b[i][k].get<double>();
        }
        Eigen::VectorXd ov(p);
        for (int i = 0; i < p; ++i) ov(i) = om[i].get<double>();
        return Parameterization(std::move(bm), std::move(ov));
    } catch (const json::exception& e) {
        throw ParseError(std::string("parameter JSON: ") + e.what());
    } catch (const DomainError& e) {
        if (e.kind() == "parse") throw;
        throw ParseError(std::string("parameter JSON: ") + e.what());
    }
}

Parameterization load_params(const std::string& path) {
    return params_from_json(read_json_checked(path));
}

void save_params(const Parameterization& params, const std::string& path) {
    json_to_file(params_to_json(params), path);
}

Dataset load_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);

    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first && line.find_first_not_of("0123456789+-.eE, \t\r") != std::string::npos) {
            first = false;  // header row
            continue;
        }
        first = false;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ParseError("dataset CSV: non-numeric cell '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("dataset CSV: ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("dataset CSV: no data rows");

    Eigen::MatrixXd x(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) x(i, j) = rows[i][j];
    return Dataset(std::move(x));
}

void save_dataset_csv(const Dataset& data, const std::string& path, bool header) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write file: " + path);
    if (header) {
        for (int j = 0; j < data.p(); ++j) out << (j ? "," : "") << "x" << (j + 1);
        out << "\n";
    }
    char buf[64];
    for (int i = 0; i < data.n(); ++i) {
        for (int j = 0; j < data.p(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.x()(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    try {
        cfg.p = j.at("p").get<int>();
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.n_graphs = j.value("n_graphs", cfg.n_graphs);
        cfg.max_degree = j.value("max_degree", cfg.max_degree);
        cfg.max_cycle_len = j.value("max_cycle_len", cfg.max_cycle_len);
        cfg.n_samples = j.value("n_samples", cfg.n_samples);
        cfg.d = j.value("d", cfg.d);
        if (j.contains("eta") && !j.at("eta").is_string())
            cfg.eta = j.at("eta").get<double>();  // "auto" or absent keeps p*1e-3
        if (j.contains("algorithms"))
            cfg.algorithms = j.at("algorithms").get<std::vector<std::string>>();
        cfg.tabu_length = j.value("tabu_length", cfg.tabu_length);
        cfg.patience = j.value("patience", cfg.patience);
        cfg.restarts = j.value("restarts", cfg.restarts);
        cfg.budget = j.value("budget", cfg.budget);
        cfg.threads = j.value("threads", cfg.threads);
        cfg.kl_restarts = j.value("kl_restarts", cfg.kl_restarts);
        cfg.edge_target = j.value("edge_target", cfg.edge_target);
        cfg.lambda1 = j.value("lambda1", cfg.lambda1);
        cfg.use_virtual_ops = j.value("use_virtual_ops", cfg.use_virtual_ops);
    } catch (const json::exception& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
    return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
    return json{{"p", cfg.p},
                {"n_graphs", cfg.n_graphs},
                {"max_degree", cfg.max_degree},
                {"max_cycle_len", cfg.max_cycle_len},
                {"n_samples", cfg.n_samples},
                {"d", cfg.d},
                {"eta", cfg.eta > 0 ? json(cfg.eta) : json("auto")},
                {"algorithms", cfg.algorithms},
                {"seed", cfg.seed},
                {"tabu_length", cfg.tabu_length},
                {"patience", cfg.patience},
                {"restarts", cfg.restarts},
                {"budget", cfg.budget},
                {"threads", cfg.threads},
                {"kl_restarts", cfg.kl_restarts},
                {"edge_target", cfg.edge_target},
                {"lambda1", cfg.lambda1},
                {"use_virtual_ops", cfg.use_virtual_ops}};
}

json report_to_json(const EvalReport& report, bool include_runtimes) {
    json records = json::array();
    for (const auto& rec : report.records) {
        json results = json::array();
        for (const auto& res : rec.results) {
            json r{{"algorithm", res.algorithm},
                   {"output", graph_to_json(res.output)},
                   {"shd", res.shd},
                   {"shd_exact", res.shd_exact},
                   {"success_rates", res.success_rates},
                   {"error", res.error}};
            if (include_runtimes) r["runtime_seconds"] = res.runtime_seconds;
            results.push_back(std::move(r));
        }
        records.push_back(json{{"truth", graph_to_json(rec.truth)},
                               {"class_size", rec.class_size},
                               {"class_exhausted", rec.class_exhausted},
                               {"results", results}});
    }
    return json{{"config", experiment_config_to_json(report.config)},
                {"records", records}};
}

json report_summary_json(const EvalReport& report) {
    json algos = json::object();
    for (const auto& algo : report.config.algorithms) {
        std::vector<int> shds;
        std::vector<double> rates;
        int failures = 0;
        for (const auto& rec : report.records)
            for (const auto& res : rec.results) {
                if (res.algorithm != algo) continue;
                if (!res.error.empty()) {
                    ++failures;
                    continue;
                }
                shds.push_back(res.shd);
                rates.insert(rates.end(), res.success_rates.begin(), res.success_rates.end());
            }

        json entry;
        entry["runs"] = shds.size();
        entry["failures"] = failures;
        if (!shds.empty()) {
            std::sort(shds.begin(), shds.end());
            entry["median_shd"] = shds[shds.size() / 2];
            entry["mean_shd"] =
                std::accumulate(shds.begin(), shds.end(), 0.0) / shds.size();
        }
        if (!rates.empty()) {
            entry["mean_success_rate"] =
                std::accumulate(rates.begin(), rates.end(), 0.0) / rates.size();
            entry["fraction_success_ge_half"] =
                static_cast<double>(std::count_if(rates.begin(), rates.end(),
                                                  [](double r) { return r >= 0.5; })) /
                rates.size();
        }
        int max_shd = shds.empty() ? 0 : shds.back();
        entry["shd_curve"] = shd_curve(report, algo, max_shd);
        std::vector<double> thresholds;
        for (int t = 0; t <= 10; ++t) thresholds.push_back(t / 10.0);
        entry["success_curve"] = success_curve(report, algo, thresholds);
        algos[algo] = std::move(entry);
    }
    return json{{"algorithms", algos}, {"n_graphs", report.config.n_graphs}};
}

std::string curves_to_csv(const EvalReport& report) {
    std::ostringstream os;
    os << "algorithm,metric,x,value\n";
    char buf[64];
    for (const auto& algo : report.config.algorithms) {
        int max_shd = 0;
        for (const auto& rec : report.records)
            for (const auto& res : rec.results)
                if (res.algorithm == algo && res.error.empty()) max_shd = std::max(max_shd, res.shd);
        auto sc = shd_curve(report, algo, max_shd);
        for (std::size_t s = 0; s < sc.size(); ++s) {
            std::snprintf(buf, sizeof(buf), "%.17g", sc[s]);
            os << algo << ",shd," << s << "," << buf << "\n";
        }
        std::vector<double> thresholds;
        for (int t = 0; t <= 20; ++t) thresholds.push_back(t / 20.0);
        auto uc = success_curve(report, algo, thresholds);
        for (std::size_t t = 0; t < uc.size(); ++t) {
            std::snprintf(buf, sizeof(buf), "%.17g", uc[t]);
            os << algo << ",success," << thresholds[t] << "," << buf << "\n";
        }
    }
    return os.str();
}

}  // namespace dglearn
