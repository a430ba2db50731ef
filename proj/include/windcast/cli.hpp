#pragma once

#include <string>
#include <vector>

#include "windcast/error.hpp"

namespace windcast::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumerical = 4;

int exit_code(ErrorClass c) noexcept;

// Runs `windcast <args...>`; never throws. Commands: backtest, simulate, map,
// power.
int run(const std::vector<std::string>& args);

}  // namespace windcast::cli
