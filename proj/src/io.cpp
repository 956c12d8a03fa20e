#include "sandlab/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "sandlab/parallel.hpp"

namespace sandlab {

using nlohmann::json;

std::string format_number(double v) {
  std::array<char, 32> buf{};
  const int len = std::snprintf(buf.data(), buf.size(), "%.17g", v);
  return std::string(buf.data(), static_cast<std::size_t>(len));
}

std::string format_short(double v) {
  std::array<char, 32> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), end);
}

namespace {

void emit(std::string& out, const json& j, int indent, int depth) {
  const bool pretty = indent >= 0;
  auto newline = [&](int level) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += json(key).dump();
        out += pretty ? ": " : ":";
        emit(out, value, indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += '[';
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        emit(out, value, indent, depth + 1);
      }
      newline(depth);
      out += ']';
      return;
    }
    case json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : "null";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_json(const json& j, int indent) {
  std::string out;
  emit(out, j, indent, 0);
  if (indent >= 0) out += '\n';
  return out;
}

void write_field_csv(std::ostream& out, const Graph& g, std::span<const double> values) {
  if (values.size() != g.vertex_count()) throw std::invalid_argument("field does not match the graph");
  const int d = g.is_lattice() ? g.dim() : 0;
  out << "index";
  for (int i = 1; i <= d; ++i) out << ",x" << i;
  out << ",value\n";
  for (Vertex v = 0; v < values.size(); ++v) {
    out << v;
    if (d > 0) {
      for (long c : g.coord(v).values) out << ',' << c;
    }
    out << ',' << format_number(values[v]) << '\n';
  }
}

void write_lag_csv(std::ostream& out, std::span<const LagValue> rows) {
  const std::size_t d = rows.empty() ? 0 : rows.front().lag.dim();
  for (std::size_t i = 1; i <= d; ++i) out << 'l' << i << ',';
  out << "norm2,value\n";
  for (const auto& row : rows) {
    for (long c : row.lag.values) out << c << ',';
    out << format_number(row.lag.norm_2()) << ',' << format_number(row.value) << '\n';
  }
}

void write_trial_csv(std::ostream& out, std::span<const double> values) {
  out << "trial,value\n";
  for (std::size_t t = 0; t < values.size(); ++t) out << t << ',' << format_number(values[t]) << '\n';
}

json report_document(const json& config, const ExperimentReport& report) {
  return json{{"config", config},
              {"results", report.results_json()},
              {"seeds", report.seeds},
              {"timing", {{"wall_seconds", report.wall_seconds}, {"threads", thread_count()}}}};
}

std::filesystem::path report_path(const std::filesystem::path& dir, const std::string& id,
                                  std::uint64_t seed, const std::string& extension) {
  return dir / (id + "_" + std::to_string(seed) + "." + extension);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw std::runtime_error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  f.close();
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace sandlab
