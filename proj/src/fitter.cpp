#include "cisp/fitter.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "cisp/error.hpp"
#include "cisp/metrics.hpp"
#include "cisp/pipeline.hpp"

namespace cisp {

namespace {

// dg, wb_r, wb_b, gamma, tone_p1, tone_p2
constexpr std::array<bool, IspParams::kCount> kPositive{
    true, true, true, false, false, false, false, false, false, false,
    false, false, false, false, false, true, false, true, true};

}  // namespace

ParamBounds default_fit_bounds() noexcept {
  ParamBounds b;
  auto set = [&b](std::size_t i, double lo, double hi) {
    b.lower[i] = lo;
    b.upper[i] = hi;
  };
  set(0, 0.85 / 2, 2.17 * 2);  // dg
  set(1, 0.73 / 2, 1.07 * 2);  // wb_r
  set(2, 0.80 / 2, 2.41 * 2);  // wb_b
  for (std::size_t i = 3; i < 12; ++i) set(i, -2.0, 3.0);
  for (std::size_t i = 12; i < 15; ++i) set(i, -0.5, 0.5);
  set(15, 0.1, 8.0);   // gamma
  set(16, -4.0, 8.0);  // tone_s
  set(17, 0.1, 8.0);   // tone_p1
  set(18, 0.1, 8.0);   // tone_p2
  return b;
}

void FitConfig::validate() const {
  if (max_iters < 1) throw Error(Errc::kArgument, "max_iters must be >= 1");
  if (!(fd_step > 0.0)) throw Error(Errc::kArgument, "finite-difference step must be > 0");
  if (!(step_size > 0.0)) throw Error(Errc::kArgument, "step size must be > 0");
  if (!(lm_max_damping > 0.0)) throw Error(Errc::kArgument, "damping cap must be > 0");
  if (!(tolerance >= 0.0)) throw Error(Errc::kArgument, "tolerance must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(Errc::kArgument, "Adam betas must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < IspParams::kCount; ++i) {
    if (!(bounds.lower[i] < bounds.upper[i])) {
      throw Error(Errc::kArgument,
                  "bounds for " + std::string(param_names()[i]) + " are empty");
    }
  }
}

std::string_view termination_name(FitTermination t) noexcept {
  switch (t) {
    case FitTermination::kConverged: return "converged";
    case FitTermination::kMaxIters: return "max_iters";
    case FitTermination::kDegenerate: return "degenerate";
  }
  return "unknown";
}

double mse_loss(const ImageBuffer& out, const ImageBuffer& ref) { return mse(out, ref); }

IspParams::Vector numerical_gradient(const Objective& objective, const IspParams& params,
                                     double h) {
  if (!(h > 0.0)) throw Error(Errc::kArgument, "numerical_gradient: h must be > 0");
  const auto base = params.to_vector();
  IspParams::Vector grad{};
  for (std::size_t i = 0; i < base.size(); ++i) {
    auto plus = base;
    auto minus = base;
    plus[i] += h;
    minus[i] -= h;
    const double fp = objective(IspParams::from_vector(plus));
    const double fm = objective(IspParams::from_vector(minus));
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw Error(Errc::kNumeric, "objective is not finite near " +
                                      std::string(param_names()[i]));
    }
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

IspParams project_feasible(const IspParams& p, const ParamBounds& bounds) {
  auto v = p.to_vector();
  for (int round = 0; round < 16; ++round) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], bounds.lower[i], bounds.upper[i]);
    v = normalize_ccm_rows(IspParams::from_vector(v)).to_vector();
    bool inside = true;
    for (std::size_t i = 3; i < 12; ++i) {
      inside = inside && v[i] >= bounds.lower[i] && v[i] <= bounds.upper[i];
    }
    if (inside) break;
  }
  return IspParams::from_vector(v);
}

Objective make_pair_objective(std::span<const ImagePair> pairs) {
  if (pairs.empty()) throw Error(Errc::kArgument, "need at least one image pair");
  for (const auto& pair : pairs) {
    if (!pair.input->same_shape(*pair.reference)) {
      throw Error(Errc::kShape, "input and reference dimensions differ");
    }
  }
  // Scratch buffers are reused across calls; the objective is not reentrant.
  auto scratch = std::make_shared<std::vector<ImageBuffer>>(pairs.size());
  std::vector<ImagePair> owned(pairs.begin(), pairs.end());
  return [owned, scratch](const IspParams& raw) {
    const IspParams p = normalize_ccm_rows(raw);
    double sum = 0.0;
    for (std::size_t i = 0; i < owned.size(); ++i) {
      apply_pipeline_into(*owned[i].input, p, (*scratch)[i]);
      sum += mse((*scratch)[i], *owned[i].reference);
    }
    return sum / static_cast<double>(owned.size());
  };
}

FitResult fit_objective(const Objective& objective, const FitConfig& cfg) {
  cfg.validate();
  FitResult result;
  FitTrace& trace = result.trace;

  IspParams current = project_feasible(default_params(), cfg.bounds);
  IspParams best = current;
  double best_loss = std::numeric_limits<double>::infinity();
  IspParams::Vector m{}, v{};
  double beta1_pow = 1.0, beta2_pow = 1.0;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    double loss = 0.0;
    try {
      loss = objective(current);
    } catch (const Error& e) {
      if (e.code() != Errc::kDegenerateConstraint && e.code() != Errc::kParameterDomain) throw;
      loss = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(loss)) {
      trace.reason = FitTermination::kDegenerate;
      break;
    }
    trace.losses.push_back(loss);
    trace.iterations = it + 1;
    if (loss < best_loss) {
      best_loss = loss;
      best = current;
    }
    const bool tiny = loss <= cfg.tolerance;
    const bool stalled =
        trace.losses.size() > 1 &&
        std::fabs(trace.losses[trace.losses.size() - 2] - loss) < cfg.tolerance;
    if (tiny || stalled) {
      trace.reason = FitTermination::kConverged;
      break;
    }
    if (it + 1 == cfg.max_iters) {
      trace.reason = FitTermination::kMaxIters;
      break;
    }

    IspParams::Vector grad;
    try {
      grad = numerical_gradient(objective, current, cfg.fd_step);
    } catch (const Error& e) {
      if (e.code() != Errc::kNumeric && e.code() != Errc::kDegenerateConstraint &&
          e.code() != Errc::kParameterDomain) {
        throw;
      }
      trace.reason = FitTermination::kDegenerate;
      break;
    }

    beta1_pow *= cfg.beta1;
    beta2_pow *= cfg.beta2;
    auto x = current.to_vector();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const bool log_space = cfg.log_positive && kPositive[i];
      const double g = log_space ? grad[i] * x[i] : grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / (1.0 - beta1_pow);
      const double v_hat = v[i] / (1.0 - beta2_pow);
      const double step = cfg.step_size * m_hat / (std::sqrt(v_hat) + cfg.adam_epsilon);
      x[i] = log_space ? x[i] * std::exp(-step) : x[i] - step;
    }
    try {
      current = project_feasible(IspParams::from_vector(x), cfg.bounds);
    } catch (const Error& e) {
      if (e.code() != Errc::kDegenerateConstraint) throw;
      ++trace.skipped_projections;
    }
  }

  result.params = best;
  trace.final_loss = best_loss;
  return result;
}

namespace {

using Matrix19 = Eigen::Matrix<double, IspParams::kCount, IspParams::kCount>;
using Vector19 = Eigen::Matrix<double, IspParams::kCount, 1>;
using BlockJacobian = Eigen::Matrix<double, Eigen::Dynamic, IspParams::kCount>;

constexpr std::size_t kJacobianBlockPixels = 1024;

struct NormalEquations {
  Matrix19 jtj = Matrix19::Zero();
  Vector19 jtr = Vector19::Zero();
};

// Gauss-Newton normal equations of the weighted pair residuals
// (render - reference) / sqrt(pairs * samples), so that |r|^2 is the mean
// per-pair MSE. Jacobian columns are central differences of the projected
// renders, accumulated block by block.
NormalEquations linearize(std::span<const ImagePair> pairs, const IspParams& p, double h) {
  const auto base = p.to_vector();
  std::vector<IspParams> plus(IspParams::kCount), minus(IspParams::kCount);
  for (std::size_t j = 0; j < IspParams::kCount; ++j) {
    auto up = base;
    auto down = base;
    up[j] += h;
    down[j] -= h;
    plus[j] = normalize_ccm_rows(IspParams::from_vector(up));
    minus[j] = normalize_ccm_rows(IspParams::from_vector(down));
  }

  NormalEquations ne;
  const std::size_t block_samples = kJacobianBlockPixels * 3;
  std::vector<double> out(block_samples), hi(block_samples), lo(block_samples);
  BlockJacobian jac(block_samples, IspParams::kCount);
  Eigen::VectorXd res(block_samples);
  for (const auto& pair : pairs) {
    const auto src = pair.input->samples();
    const auto ref = pair.reference->samples();
    const double weight = 1.0 / std::sqrt(static_cast<double>(pairs.size()) *
                                          static_cast<double>(src.size()));
    for (std::size_t begin = 0; begin < src.size(); begin += block_samples) {
      const std::size_t n = std::min(block_samples, src.size() - begin);
      const auto in = src.subspan(begin, n);
      if (static_cast<std::size_t>(jac.rows()) != n) {
        jac.resize(static_cast<Eigen::Index>(n), Eigen::NoChange);
        res.resize(static_cast<Eigen::Index>(n));
      }
      render_samples(in, p, std::span<double>(out.data(), n));
      for (std::size_t i = 0; i < n; ++i) res[i] = (out[i] - ref[begin + i]) * weight;
      for (std::size_t j = 0; j < IspParams::kCount; ++j) {
        render_samples(in, plus[j], std::span<double>(hi.data(), n));
        render_samples(in, minus[j], std::span<double>(lo.data(), n));
        const double scale = weight / (2.0 * h);
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (hi[i] - lo[i]) * scale;
      }
      ne.jtj.noalias() += jac.transpose() * jac;
      ne.jtr.noalias() += jac.transpose() * res;
    }
  }
  return ne;
}

bool is_degenerate(const Error& e) {
  return e.code() == Errc::kDegenerateConstraint || e.code() == Errc::kParameterDomain ||
         e.code() == Errc::kNumeric;
}

FitResult fit_levenberg_marquardt(std::span<const ImagePair> pairs, const FitConfig& cfg) {
  const Objective objective = make_pair_objective(pairs);
  FitResult result;
  FitTrace& trace = result.trace;
  IspParams current = project_feasible(default_params(), cfg.bounds);
  double loss = objective(current);
  double lambda = cfg.lm_initial_damping;

  for (std::size_t it = 0; it < cfg.max_iters; ++it) {
    if (!std::isfinite(loss)) {
      trace.reason = FitTermination::kDegenerate;
      break;
    }
    trace.losses.push_back(loss);
    trace.iterations = it + 1;
    const bool stalled = trace.losses.size() > 1 &&
                         std::fabs(trace.losses[trace.losses.size() - 2] - loss) < cfg.tolerance;
    if (loss <= cfg.tolerance || stalled) {
      trace.reason = FitTermination::kConverged;
      break;
    }
    if (it + 1 == cfg.max_iters) {
      trace.reason = FitTermination::kMaxIters;
      break;
    }

    NormalEquations ne;
    try {
      ne = linearize(pairs, current, cfg.fd_step);
    } catch (const Error& e) {
      if (!is_degenerate(e)) throw;
      trace.reason = FitTermination::kDegenerate;
      break;
    }
    const Vector19 diag = ne.jtj.diagonal();
    const double ridge = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    const auto x = current.to_vector();
    bool accepted = false;
    while (lambda <= cfg.lm_max_damping) {
      Matrix19 a = ne.jtj;
      for (std::size_t i = 0; i < IspParams::kCount; ++i) a(i, i) += lambda * diag[i] + ridge;
      const Vector19 delta = a.ldlt().solve(-ne.jtr);
      IspParams::Vector trial_x{};
      for (std::size_t i = 0; i < trial_x.size(); ++i) trial_x[i] = x[i] + delta[i];
      double trial_loss = std::numeric_limits<double>::quiet_NaN();
      IspParams trial;
      try {
        trial = project_feasible(IspParams::from_vector(trial_x), cfg.bounds);
        trial_loss = objective(trial);
      } catch (const Error& e) {
        if (!is_degenerate(e)) throw;
        ++trace.skipped_projections;
      }
      if (std::isfinite(trial_loss) && trial_loss < loss) {
        current = trial;
        loss = trial_loss;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) {
      trace.reason = FitTermination::kConverged;
      break;
    }
  }

  result.params = current;
  trace.final_loss = trace.losses.empty() ? loss : *std::min_element(trace.losses.begin(), trace.losses.end());
  return result;
}

}  // namespace

std::string_view method_name(FitMethod m) noexcept {
  switch (m) {
    case FitMethod::kLevenbergMarquardt: return "lm";
    case FitMethod::kAdam: return "adam";
  }
  return "unknown";
}

FitResult fit_fixed_params(std::span<const ImagePair> pairs, const FitConfig& cfg) {
  cfg.validate();
  if (cfg.method == FitMethod::kLevenbergMarquardt) return fit_levenberg_marquardt(pairs, cfg);
  return fit_objective(make_pair_objective(pairs), cfg);
}

FitResult fit_params(const ImageBuffer& input, const ImageBuffer& reference,
                     const FitConfig& cfg) {
  const ImagePair pair{&input, &reference};
  return fit_fixed_params(std::span<const ImagePair>(&pair, 1), cfg);
}

}  // namespace cisp
