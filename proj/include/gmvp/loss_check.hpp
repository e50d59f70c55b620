#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "gmvp/grad_check.hpp"
#include "gmvp/objectives.hpp"

namespace gmvp {

// Loss names accepted by check_loss_gradients.
const std::vector<std::string_view>& checkable_losses();  // infonce ebm_nce vrr rr attr_mask combined

struct LossCheckOptions {
  std::size_t batch = 4;
  std::size_t hidden_dim = 16;
  std::size_t num_layers = 2;
  double eps = 1e-5;
};

// Finite-difference check of `loss` on a seeded random molecule batch passed through
// both encoders. Every random draw inside the objective is pinned to `seed`.
GradCheckResult check_loss_gradients(std::string_view loss, Variant variant, std::uint64_t seed,
                                     const LossCheckOptions& options = {});

}  // namespace gmvp
