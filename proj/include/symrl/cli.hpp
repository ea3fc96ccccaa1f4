#pragma once

#include <string>

namespace symrl {

// Exit-code contract: 0 success, 1 property violation, 2 usage/config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

int cmd_train(const std::string& config_path);
int cmd_eval(const std::string& checkpoint, int episodes, std::uint64_t seed,
             const std::string& csv_out);
int cmd_make_dataset(const std::string& config_path);
int cmd_augment(const std::string& dataset_path, const std::string& output);
int cmd_check_symmetry(const std::string& config_path);
int cmd_aggregate(const std::string& run_dir, const std::string& metric,
                  const std::string& output);

}  // namespace symrl
