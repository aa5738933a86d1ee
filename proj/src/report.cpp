#include "pipecam/report.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pipecam/errors.hpp"

namespace pipecam {

double ExperimentReport::mean_of(const std::string& metric) const {
  double sum = 0.0;
  long n = 0;
  for (const auto& r : rows)
    if (r.metric == metric) {
      sum += r.value;
      ++n;
    }
  if (n == 0)
    throw std::invalid_argument("report: no rows with metric " + metric);
  return sum / n;
}

double ExperimentReport::aggregate(const std::string& name) const {
  for (const auto& [k, v] : aggregates)
    if (k == name) return v;
  throw std::invalid_argument("report: no aggregate " + name);
}

bool ExperimentReport::has_aggregate(const std::string& name) const {
  for (const auto& [k, v] : aggregates)
    if (k == name) return true;
  return false;
}

void ExperimentReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.precision(17);
  f << "# config_digest=" << config_digest << "\n";
  f << "# weight_digest=" << weight_digest << "\n";
  f << "# dataset_digest=" << dataset_digest << "\n";
  f << "id,metric,value\n";
  for (const auto& r : rows)
    f << r.id << ',' << r.metric << ',' << r.value << "\n";
  for (const auto& [name, value] : aggregates)
    f << "AGGREGATE," << name << ',' << value << "\n";
  if (!f) throw IoError("short write: " + path.string());
}

ExperimentReport ExperimentReport::read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path.string());
  ExperimentReport rep;
  std::string line;
  bool header_seen = false;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "config_digest") rep.config_digest = std::stoull(value);
      else if (key == "weight_digest") rep.weight_digest = std::stoull(value);
      else if (key == "dataset_digest") rep.dataset_digest = std::stoull(value);
      continue;
    }
    if (!header_seen) {
      if (line != "id,metric,value")
        throw FormatError("report: unexpected header in " + path.string());
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string id_field, metric, value_field;
    std::getline(ss, id_field, ',');
    std::getline(ss, metric, ',');
    std::getline(ss, value_field, ',');
    if (id_field == "AGGREGATE")
      rep.aggregates.emplace_back(metric, std::stod(value_field));
    else
      rep.rows.push_back({std::stoull(id_field), metric,
                          std::stod(value_field)});
  }
  return rep;
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (f) {
    f.read(buf, sizeof buf);
    const auto n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

}  // namespace pipecam
