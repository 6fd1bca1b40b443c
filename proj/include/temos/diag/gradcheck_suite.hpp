#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "temos/nn/gradcheck.hpp"

namespace temos::diag {

// Names of every registered check, in run order.
std::vector<std::string> gradcheck_names();

// Runs each registered differentiable op (and the composed training loss) on
// random 64-bit inputs drawn from `seed`.
std::vector<nn::GradCheckResult> run_gradchecks(std::uint64_t seed, const nn::GradCheckOptions& options = {});

}  // namespace temos::diag
