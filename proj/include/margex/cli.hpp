#pragma once

#include <string>
#include <vector>

namespace margex {

int cmd_oracle(const std::string& config_path, const std::string& out_path);
int cmd_simulate(const std::string& config_path, const std::string& out_path);
int cmd_estimate(const std::string& config_path, const std::string& data_path,
                 const std::string& out_path);
int cmd_mc(const std::string& config_path, const std::string& out_path);

// Full argv-style entry point (without the program name).
int run_cli(const std::vector<std::string>& args);

} // namespace margex
