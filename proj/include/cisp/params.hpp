#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

namespace cisp {

/// The 19 controllable pipeline parameters.
///
/// Flat order (used by the decoder output, the fitter, and X-Params):
///   dg, wb_r, wb_b, ccm_11..ccm_33 (row-major), offset_1..offset_3,
///   gamma, tone_s, tone_p1, tone_p2
struct IspParams {
  static constexpr std::size_t kCount = 19;
  using Vector = std::array<double, kCount>;
  using Matrix3 = std::array<std::array<double, 3>, 3>;

  double dg = 1.2;
  double wb_r = 1.0;
  double wb_b = 1.0;
  Matrix3 ccm{{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  std::array<double, 3> offset{0.0, 0.0, 0.0};
  double gamma = 1.0 / 2.2;
  double tone_s = 3.0;
  double tone_p1 = 2.0;
  double tone_p2 = 3.0;

  Vector to_vector() const noexcept;
  static IspParams from_vector(const Vector& v) noexcept;

  bool operator==(const IspParams&) const = default;
};

/// Field names in flat order.
const std::array<std::string_view, IspParams::kCount>& param_names() noexcept;

/// The fixed initialization: gain 1.2, identity WB/CCM, zero offsets,
/// gamma 1/2.2, tone (3, 2, 3).
IspParams default_params() noexcept;

/// Throws kParameterDomain if any field is non-finite or a strictly positive
/// field (dg, wb_r, wb_b, gamma, tone_p1, tone_p2) is not.
void validate_params(const IspParams& p);

/// Divides each CCM row by its sum. Throws kDegenerateConstraint when
/// |row sum| <= 1e-3.
IspParams normalize_ccm_rows(const IspParams& p);

/// True when every CCM row sums to 1 within `tol`.
bool ccm_rows_normalized(const IspParams& p, double tol = 1e-6) noexcept;

inline constexpr double kCcmDegenerateSum = 1e-3;
inline constexpr double kCcmRowTolerance = 1e-6;

// Structured-text form: 19 named scalars plus "format_version": 1.
nlohmann::json params_to_json(const IspParams& p);
IspParams params_from_json(const nlohmann::json& doc);

/// Comma-separated flat vector with round-trip precision.
std::string params_to_csv(const IspParams& p);

}  // namespace cisp
