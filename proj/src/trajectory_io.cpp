#include "singarc/trajectory_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace singarc {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    out.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> header_names(int n, bool with_costates) {
  std::vector<std::string> names{"t"};
  for (int i = 1; i <= n; ++i) names.push_back("q" + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back("qd" + std::to_string(i));
  for (int i = 1; i <= n; ++i) names.push_back("u" + std::to_string(i));
  if (with_costates)
    for (int i = 1; i <= 2 * n; ++i) names.push_back("l" + std::to_string(i));
  return names;
}

double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = cell.data() + cell.size();
  if (!cell.empty() && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw SchemaError("cannot parse '" + cell + "' at row " + std::to_string(row) + ", column " +
                      std::to_string(col + 1));
  }
  return value;
}

nlohmann::json meta_to_json(const TrajectoryMeta& meta) {
  nlohmann::json j{{"source", to_string(meta.source)},
                   {"model_hash", meta.model_hash},
                   {"config", meta.config},
                   {"flags", meta.flags}};
  if (meta.abort_reason) {
    j["abort_reason"] = std::string(to_string(*meta.abort_reason));
    j["abort_message"] = meta.abort_message;
  }
  return j;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string trajectory_header(int n, bool with_costates) {
  std::string out;
  for (const auto& name : header_names(n, with_costates)) {
    if (!out.empty()) out += ',';
    out += name;
  }
  return out;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_trajectory(const std::filesystem::path& csv_path, const Trajectory& traj) {
  const int n = traj.control_dim();
  const bool with_costates = traj.has_costates();
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot open " + csv_path.string() + " for writing");
  out << trajectory_header(n, with_costates) << '\n';
  for (const Sample& s : traj.samples) {
    out << format_double(s.t);
    for (Eigen::Index i = 0; i < s.x.size(); ++i) out << ',' << format_double(s.x[i]);
    for (Eigen::Index i = 0; i < s.u.size(); ++i) out << ',' << format_double(s.u[i]);
    if (with_costates)
      for (Eigen::Index i = 0; i < s.lambda->size(); ++i) out << ',' << format_double((*s.lambda)[i]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + csv_path.string());

  std::ofstream meta(metadata_path(csv_path));
  meta << meta_to_json(traj.meta).dump(2) << '\n';
}

Trajectory ingest(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw SchemaError("cannot open " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty file " + csv_path.string());
  const std::vector<std::string> header = split_csv(line);

  const auto cols = static_cast<int>(header.size());
  int n = 0;
  bool with_costates = false;
  if ((cols - 1) % 5 == 0 && cols > 1 && header == header_names((cols - 1) / 5, true)) {
    n = (cols - 1) / 5;
    with_costates = true;
  } else if ((cols - 1) % 3 == 0 && cols > 1 && header == header_names((cols - 1) / 3, false)) {
    n = (cols - 1) / 3;
  } else {
    throw SchemaError("header '" + line + "' does not match t,q1..qn,qd1..qdn,u1..un[,l1..l2n]");
  }

  Trajectory traj;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (static_cast<int>(cells.size()) != cols) {
      throw SchemaError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) + " columns, expected " +
                        std::to_string(cols));
    }
    std::vector<double> v(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) v[c] = parse_cell(cells[c], row, c);
    Sample s;
    s.t = v[0];
    s.x = Eigen::Map<const Eigen::VectorXd>(v.data() + 1, 2 * n);
    s.u = Eigen::Map<const Eigen::VectorXd>(v.data() + 1 + 2 * n, n);
    if (with_costates) s.lambda = Eigen::Map<const Eigen::VectorXd>(v.data() + 1 + 3 * n, 2 * n);
    traj.samples.push_back(std::move(s));
  }
  traj.validate();

  traj.meta.source = TrajectorySource::kIngested;
  const auto meta_file = metadata_path(csv_path);
  if (std::filesystem::exists(meta_file)) {
    std::ifstream mf(meta_file);
    const nlohmann::json j = nlohmann::json::parse(mf, nullptr, /*allow_exceptions=*/false);
    if (j.is_object()) {
      traj.meta.source = source_from_string(j.value("source", std::string("ingested")));
      traj.meta.model_hash = j.value("model_hash", std::string());
      if (j.contains("config")) traj.meta.config = j["config"];
      if (j.contains("flags") && j["flags"].is_array()) traj.meta.flags = j["flags"].get<std::vector<std::string>>();
    }
  }
  if (!with_costates) traj.meta.flags.push_back("no_costates");
  return traj;
}

void write_series_csv(const std::filesystem::path& path, const std::vector<std::string>& names,
                      const std::vector<std::vector<double>>& columns) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << format_double(columns[c][r]);
    out << '\n';
  }
}

}  // namespace singarc
