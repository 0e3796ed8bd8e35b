#include "trisoup/train/adam.hpp"

#include <cmath>

namespace trisoup {

std::size_t adam_step(ParamArray& arr, double lr, double beta1, double beta2, double eps,
                      std::int64_t t) {
  const double bias1 = 1.0 - std::pow(beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(beta2, static_cast<double>(t));
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < arr.value.size(); ++i) {
    const double g = arr.grad[i];
    if (!std::isfinite(g)) {
      ++skipped;
      continue;
    }
    arr.m1[i] = beta1 * arr.m1[i] + (1.0 - beta1) * g;
    arr.m2[i] = beta2 * arr.m2[i] + (1.0 - beta2) * g * g;
    const double m_hat = arr.m1[i] / bias1;
    const double v_hat = arr.m2[i] / bias2;
    arr.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
  return skipped;
}

double lr_mu_schedule(std::int64_t iteration, const TrainConfig& cfg) {
  if (cfg.iterations <= 0) return cfg.lr_mu_init;
  const double t = std::clamp(
      static_cast<double>(iteration) / static_cast<double>(cfg.iterations), 0.0, 1.0);
  return cfg.lr_mu_init * std::pow(cfg.lr_mu_final / cfg.lr_mu_init, t);
}

}  // namespace trisoup
