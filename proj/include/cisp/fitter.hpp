#pragma once

// Direct optimization of the 19 pipeline parameters against reference
// renders: per image ("upper bound") or one set shared by many pairs
// ("fixed params"). Both optimizers start from the initial parameters and
// use central differences: Levenberg-Marquardt on the per-sample residual
// Jacobian (default) or Adam on the loss gradient. After every step each
// parameter is clipped to a soft box and the CCM rows are normalized.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "cisp/image.hpp"
#include "cisp/params.hpp"

namespace cisp {

struct ParamBounds {
  IspParams::Vector lower{};
  IspParams::Vector upper{};
};

/// Test-set ranges of gain and WB widened multiplicatively by 2, offsets in
/// [-0.5, 0.5], exponents in [0.1, 8], CCM entries in [-2, 3], tone_s in [-4, 8].
ParamBounds default_fit_bounds() noexcept;

enum class FitMethod { kLevenbergMarquardt, kAdam };
std::string_view method_name(FitMethod m) noexcept;

struct FitConfig {
  FitMethod method = FitMethod::kLevenbergMarquardt;
  std::size_t max_iters = 500;
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double fd_step = 1e-4;
  double tolerance = 1e-10;
  /// Adam: step the strictly positive parameters in log space.
  bool log_positive = true;
  /// Levenberg-Marquardt damping: starting value, and the cap past which a
  /// step is abandoned.
  double lm_initial_damping = 100.0;
  double lm_max_damping = 1e10;
  ParamBounds bounds = default_fit_bounds();

  /// Throws kArgument when an invariant does not hold.
  void validate() const;
};

enum class FitTermination { kConverged, kMaxIters, kDegenerate };
std::string_view termination_name(FitTermination t) noexcept;

struct FitTrace {
  std::vector<double> losses;  // loss at each iterate, in order
  double final_loss = 0.0;     // loss of the returned (best) parameters
  std::size_t iterations = 0;
  FitTermination reason = FitTermination::kMaxIters;
  std::size_t skipped_projections = 0;  // steps rejected for a degenerate CCM
};

struct FitResult {
  IspParams params;
  FitTrace trace;
};

struct ImagePair {
  const ImageBuffer* input;
  const ImageBuffer* reference;
};

using Objective = std::function<double(const IspParams&)>;

/// Same as metrics::mse; kept under the fitter's name for callers.
double mse_loss(const ImageBuffer& out, const ImageBuffer& ref);

/// Central differences over the 19 flat parameters. The objective sees the
/// raw perturbed parameters; callers that need the CCM constraint project
/// inside the objective. Throws kNumeric on a non-finite objective value.
IspParams::Vector numerical_gradient(const Objective& objective, const IspParams& params,
                                     double h);

/// Clip to the box, then normalize CCM rows; repeated until both hold.
/// Throws kDegenerateConstraint if a row sum collapses.
IspParams project_feasible(const IspParams& p, const ParamBounds& bounds);

/// Mean over pairs of mse(apply_pipeline(input, normalize(params)), reference).
Objective make_pair_objective(std::span<const ImagePair> pairs);

/// Minimize `objective` from the initial parameters.
FitResult fit_objective(const Objective& objective, const FitConfig& cfg);

FitResult fit_params(const ImageBuffer& input, const ImageBuffer& reference,
                     const FitConfig& cfg = {});
/// Throws kArgument for an empty list, kShape for a mismatched pair.
FitResult fit_fixed_params(std::span<const ImagePair> pairs, const FitConfig& cfg = {});

}  // namespace cisp
