#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvsc/dynamics.hpp"
#include "cvsc/error.hpp"

namespace cvsc::cli {

class ParseError : public Error {
 public:
  explicit ParseError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const noexcept { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct SystemConfig {
  model::NetworkModel network;
  std::vector<dynamics::WpgUnit> units;

  dynamics::SimSystem to_system() const { return dynamics::SimSystem(network, units); }
};

// Sections: [bases], [buses], [branches], [loads], [wpg.N], [cvsc.N].
// Unspecified WPG fields take the data-sheet defaults.
SystemConfig parse_system_config(std::string_view text);
std::string serialize_system_config(const SystemConfig& config);

// Dotted path such as "wpg.2.k_a" or "bases.f_n".
void apply_override(SystemConfig& config, std::string_view path, std::string_view value);
std::pair<std::string, std::string> split_assignment(std::string_view text);

// [scenario] t_end, dt, outputs; [events] rows "time kind key=value ...".
dynamics::Scenario parse_scenario(std::string_view text);
std::string serialize_scenario(const dynamics::Scenario& scenario);

std::string read_file(const std::string& path);

}  // namespace cvsc::cli
