#include "cisp/params.hpp"

#include <cmath>
#include <cstdio>

#include "cisp/error.hpp"

namespace cisp {

IspParams::Vector IspParams::to_vector() const noexcept {
  return {dg,        wb_r,      wb_b,      ccm[0][0], ccm[0][1], ccm[0][2], ccm[1][0],
          ccm[1][1], ccm[1][2], ccm[2][0], ccm[2][1], ccm[2][2], offset[0], offset[1],
          offset[2], gamma,     tone_s,    tone_p1,   tone_p2};
}

IspParams IspParams::from_vector(const Vector& v) noexcept {
  IspParams p;
  p.dg = v[0];
  p.wb_r = v[1];
  p.wb_b = v[2];
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 3; ++c) p.ccm[r][c] = v[3 + r * 3 + c];
  for (std::size_t i = 0; i < 3; ++i) p.offset[i] = v[12 + i];
  p.gamma = v[15];
  p.tone_s = v[16];
  p.tone_p1 = v[17];
  p.tone_p2 = v[18];
  return p;
}

const std::array<std::string_view, IspParams::kCount>& param_names() noexcept {
  static constexpr std::array<std::string_view, IspParams::kCount> names{
      "dg",     "wb_r",   "wb_b",   "ccm_11",   "ccm_12",   "ccm_13",   "ccm_21",
      "ccm_22", "ccm_23", "ccm_31", "ccm_32",   "ccm_33",   "offset_1", "offset_2",
      "offset_3", "gamma", "tone_s", "tone_p1", "tone_p2"};
  return names;
}

IspParams default_params() noexcept { return IspParams{}; }

void validate_params(const IspParams& p) {
  const auto v = p.to_vector();
  const auto& names = param_names();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) {
      throw Error(Errc::kParameterDomain, std::string(names[i]) + " is not finite");
    }
  }
  auto positive = [](double x, std::string_view name) {
    if (!(x > 0.0)) throw Error(Errc::kParameterDomain, std::string(name) + " must be > 0");
  };
  positive(p.dg, "dg");
  positive(p.wb_r, "wb_r");
  positive(p.wb_b, "wb_b");
  positive(p.gamma, "gamma");
  positive(p.tone_p1, "tone_p1");
  positive(p.tone_p2, "tone_p2");
}

IspParams normalize_ccm_rows(const IspParams& p) {
  IspParams out = p;
  for (std::size_t r = 0; r < 3; ++r) {
    const double sum = p.ccm[r][0] + p.ccm[r][1] + p.ccm[r][2];
    if (!(std::fabs(sum) > kCcmDegenerateSum)) {
      throw Error(Errc::kDegenerateConstraint,
                  "CCM row " + std::to_string(r + 1) + " sums to ~0; cannot normalize");
    }
    for (std::size_t c = 0; c < 3; ++c) out.ccm[r][c] = p.ccm[r][c] / sum;
  }
  return out;
}

bool ccm_rows_normalized(const IspParams& p, double tol) noexcept {
  for (const auto& row : p.ccm) {
    if (!(std::fabs(row[0] + row[1] + row[2] - 1.0) <= tol)) return false;
  }
  return true;
}

nlohmann::json params_to_json(const IspParams& p) {
  nlohmann::json doc;
  doc["format_version"] = 1;
  const auto v = p.to_vector();
  const auto& names = param_names();
  for (std::size_t i = 0; i < v.size(); ++i) doc[std::string(names[i])] = v[i];
  return doc;
}

IspParams params_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Errc::kParse, "parameter document must be an object");
  if (!doc.contains("format_version") || doc["format_version"] != 1) {
    throw Error(Errc::kParse, "parameter document: format_version must be 1");
  }
  IspParams::Vector v{};
  const auto& names = param_names();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string key(names[i]);
    if (!doc.contains(key)) throw Error(Errc::kParse, "parameter document: missing " + key);
    const auto& field = doc[key];
    if (field.is_null()) throw Error(Errc::kParameterDomain, key + " is not finite");
    if (!field.is_number()) throw Error(Errc::kParse, "parameter document: " + key + " not a number");
    v[i] = field.get<double>();
  }
  auto p = IspParams::from_vector(v);
  validate_params(p);
  return p;
}

std::string params_to_csv(const IspParams& p) {
  std::string out;
  char buf[32];
  for (double x : p.to_vector()) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    if (!out.empty()) out += ',';
    out += buf;
  }
  return out;
}

}  // namespace cisp
