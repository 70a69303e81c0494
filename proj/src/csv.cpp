#include "mad/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mad/error.hpp"

namespace mad {

namespace {

std::ofstream open_out(const std::string& path, const nlohmann::json& config) {
  std::ofstream out(path);
  if (!out) throw_bad_input("cannot open file for writing", {{"path", path}});
  out << "# mad-csv schema_version=" << kCsvSchemaVersion << ' ' << config.dump() << '\n';
  return out;
}

void coord_header(std::ofstream& out, Eigen::Index d) {
  for (Eigen::Index k = 0; k < d; ++k) out << ",x" << k;
  out << '\n';
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw_bad_input("failed writing file", {{"path", path}});
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_points_csv(const std::string& path, const std::vector<Vec>& points, const nlohmann::json& config) {
  auto out = open_out(path, config);
  const Eigen::Index d = points.empty() ? 0 : points.front().size();
  out << "index";
  coord_header(out, d);
  for (std::size_t i = 0; i < points.size(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_double(points[i](k));
    out << '\n';
  }
  finish(out, path);
}

std::vector<Vec> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_bad_input("cannot open file", {{"path", path}});
  std::vector<Vec> out;
  std::string line;
  bool header = true;
  Eigen::Index dim = -1;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> values;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first) {  // index column
        first = false;
        continue;
      }
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw_bad_input("malformed number in CSV", {{"path", path}, {"line", line_no}, {"cell", cell}});
      }
      values.push_back(v);
    }
    if (dim < 0) dim = static_cast<Eigen::Index>(values.size());
    if (static_cast<Eigen::Index>(values.size()) != dim || dim == 0) {
      throw_bad_input("inconsistent CSV row width", {{"path", path}, {"line", line_no}});
    }
    out.push_back(Eigen::Map<const Vec>(values.data(), dim));
  }
  if (out.empty()) throw_bad_input("CSV has no data rows", {{"path", path}});
  return out;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj, const nlohmann::json& config) {
  auto out = open_out(path, config);
  const Eigen::Index d = traj.iterates.empty() ? 0 : traj.iterates.front().size();
  out << "step,t,gamma,m";
  coord_header(out, d);
  for (std::size_t i = 0; i < traj.iterates.size(); ++i) {
    out << i << ',';
    if (i < traj.steps.size()) {
      const auto& s = traj.steps[i];
      out << format_double(s.t) << ',' << format_double(s.gamma) << ',' << format_double(s.m);
    } else {
      out << "0,,";
    }
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_double(traj.iterates[i](k));
    out << '\n';
  }
  finish(out, path);
}

void write_train_log_csv(const std::string& path, const std::vector<TrainRecord>& curve, const nlohmann::json& config) {
  auto out = open_out(path, config);
  out << "iteration,loss,learning_rate\n";
  for (const auto& r : curve) {
    out << r.iteration << ',' << format_double(r.loss) << ',' << format_double(r.learning_rate) << '\n';
  }
  finish(out, path);
}

}  // namespace mad
