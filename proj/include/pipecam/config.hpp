#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pipecam/optics.hpp"

namespace pipecam {

/// Layered key=value configuration: an optional file ('#' comments) is
/// overridden by flag-supplied pairs. Unknown keys are rejected and the
/// resolved configuration is echoed next to every run's outputs.
class RunConfig {
 public:
  RunConfig();

  void load_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key) const;
  long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  OpticalConfig optical() const;
  NoiseParams noise() const;

  /// Resolved key=value echo, stable order.
  void write_echo(const std::filesystem::path& path) const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace pipecam
