#pragma once

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sandlab/experiments.hpp"
#include "sandlab/graph.hpp"

namespace sandlab {

/// 17 significant digits, so every double round-trips exactly.
std::string format_number(double v);

/// Shortest decimal that round-trips, for human-facing output ("0.5", "4").
std::string format_short(double v);

/// JSON text in which every floating-point number carries 17 significant
/// digits. Integers are written as integers; non-finite values as null.
std::string dump_json(const nlohmann::json& j, int indent = 2);

/// Header `index,x1,...,xd,value`, then one row per vertex. Coordinates are
/// omitted for general graphs.
void write_field_csv(std::ostream& out, const Graph& g, std::span<const double> values);

struct LagValue {
  VertexCoord lag;
  double value = 0.0;
};

/// Header `l1,...,ld,norm2,value`, then one row per lag.
void write_lag_csv(std::ostream& out, std::span<const LagValue> rows);

/// Header `trial,value`, then one row per trial.
void write_trial_csv(std::ostream& out, std::span<const double> values);

/// Top-level report {config, results, seeds, timing}.
nlohmann::json report_document(const nlohmann::json& config, const ExperimentReport& report);

/// `<id>_<seed>.<extension>` inside dir.
std::filesystem::path report_path(const std::filesystem::path& dir, const std::string& id,
                                  std::uint64_t seed, const std::string& extension);

/// Writes text to path, creating parent directories. Throws
/// std::runtime_error on failure.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sandlab
