#pragma once

#include <string>

#include "json.hpp"

#include "dglearn/evaluation.hpp"
#include "dglearn/graph.hpp"
#include "dglearn/sem.hpp"

namespace dglearn {

// Graph JSON: {"p": int, "edges": [[i, j], ...]} with 0-based indices.
nlohmann::json graph_to_json(const DirectedGraph& g);
DirectedGraph graph_from_json(const nlohmann::json& j);
DirectedGraph load_graph(const std::string& path);
void save_graph(const DirectedGraph& g, const std::string& path);

// Parameterization JSON: {"B": [[...]], "omega": [...]}.
nlohmann::json params_to_json(const Parameterization& params);
Parameterization params_from_json(const nlohmann::json& j);
Parameterization load_params(const std::string& path);
void save_params(const Parameterization& params, const std::string& path);

// Dataset CSV: n rows of p comma-separated decimals, optional x1,...,xp header.
Dataset load_dataset_csv(const std::string& path);
void save_dataset_csv(const Dataset& data, const std::string& path, bool header = true);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& cfg);

/// Full per-graph report; runtimes are included only when requested so that
/// seeded invocations stay byte-identical on stdout.
nlohmann::json report_to_json(const EvalReport& report, bool include_runtimes);

/// Aggregate summary (medians, curve vectors) - deterministic under a seed.
nlohmann::json report_summary_json(const EvalReport& report);

/// Fig-style curve table: algorithm,metric,x,value rows.
std::string curves_to_csv(const EvalReport& report);

nlohmann::json json_from_file(const std::string& path);
void json_to_file(const nlohmann::json& j, const std::string& path);

}  // namespace dglearn
