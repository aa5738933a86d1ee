#include "pipecam/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pipecam/errors.hpp"

namespace pipecam {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> kKeys = {
      // optics
      "scene_h", "scene_w", "channels", "sensor_h", "sensor_w", "depths_cm",
      "ref_depth_cm", "blur_sigma0", "blobs_per_column", "blob_width_min",
      "blob_width_max", "optics_seed", "identity_mode",
      // noise
      "read_sigma", "shot_sigma", "noise_enabled",
      // solver
      "lambda", "max_cg_iters", "cg_tol", "tsvd_rank",
      // training
      "epochs", "batch_size", "lr", "shuffle",
      // dataset
      "n", "n_test", "n_classes", "square_px", "field_px",
  };
  return kKeys;
}

RunConfig::RunConfig() = default;

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config " + path.string() + ":" +
                                  std::to_string(line_no) +
                                  ": expected key=value");
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw std::invalid_argument("unknown config key: " + key);
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string RunConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end())
    throw std::invalid_argument("config key not set: " + key);
  return it->second;
}

long RunConfig::get_int(const std::string& key) const {
  const std::string s = get_string(key);
  std::size_t pos = 0;
  const long v = std::stol(s, &pos);
  if (pos != s.size())
    throw std::invalid_argument("config key " + key + ": bad integer '" + s +
                                "'");
  return v;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size())
    throw std::invalid_argument("config key " + key + ": bad number '" + s +
                                "'");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string s = get_string(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("config key " + key + ": bad boolean '" + s +
                              "'");
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::stringstream ss(get_string(key));
  std::vector<double> out;
  std::string item;
  while (std::getline(ss, item, ':')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty())
    throw std::invalid_argument("config key " + key + ": empty list");
  return out;
}

OpticalConfig RunConfig::optical() const {
  OpticalConfig cfg;
  if (has("scene_h")) cfg.scene_h = static_cast<int>(get_int("scene_h"));
  if (has("scene_w")) cfg.scene_w = static_cast<int>(get_int("scene_w"));
  if (has("channels")) cfg.channels = static_cast<int>(get_int("channels"));
  if (has("sensor_h")) cfg.sensor_h = static_cast<int>(get_int("sensor_h"));
  if (has("sensor_w")) cfg.sensor_w = static_cast<int>(get_int("sensor_w"));
  if (has("depths_cm")) cfg.depths_cm = get_double_list("depths_cm");
  if (has("ref_depth_cm")) cfg.ref_depth_cm = get_double("ref_depth_cm");
  if (has("blur_sigma0")) cfg.blur_sigma0 = get_double("blur_sigma0");
  if (has("blobs_per_column"))
    cfg.blobs_per_column = static_cast<int>(get_int("blobs_per_column"));
  if (has("blob_width_min")) cfg.blob_width_min = get_double("blob_width_min");
  if (has("blob_width_max")) cfg.blob_width_max = get_double("blob_width_max");
  if (has("optics_seed"))
    cfg.seed = static_cast<std::uint64_t>(std::stoull(get_string("optics_seed")));
  if (has("identity_mode")) cfg.identity_mode = get_bool("identity_mode");
  cfg.validate();
  return cfg;
}

NoiseParams RunConfig::noise() const {
  NoiseParams n;
  if (has("read_sigma")) n.read_sigma = get_double("read_sigma");
  if (has("shot_sigma")) n.shot_sigma = get_double("shot_sigma");
  if (has("noise_enabled")) n.enabled = get_bool("noise_enabled");
  n.validate();
  return n;
}

void RunConfig::write_echo(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  for (const auto& [k, v] : values_) f << k << "=" << v << "\n";
}

}  // namespace pipecam
