#pragma once

#include <cstdint>

#include "trisoup/core/config.hpp"
#include "trisoup/scene/triangle_soup.hpp"

namespace trisoup {

/// Bias-corrected Adam over one parameter array. `t` is the 1-based step
/// count. Non-finite gradients skip their parameter (moments untouched);
/// the count of skipped entries is returned.
std::size_t adam_step(ParamArray& arr, double lr, double beta1, double beta2, double eps,
                      std::int64_t t);

/// Exponential decay from lr_mu_init to lr_mu_final over cfg.iterations.
double lr_mu_schedule(std::int64_t iteration, const TrainConfig& cfg);

}  // namespace trisoup
