#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>

#include "cisp/error.hpp"
#include "cisp/params.hpp"
#include "cisp/pipeline.hpp"
#include "support/synthetic.hpp"

using namespace cisp;
using cisp::testing::uniform;

namespace {

constexpr double kTol = 1e-9;

ImageBuffer single_pixel(double r, double g, double b) {
  ImageBuffer img(1, 1);
  double* px = img.pixel(0, 0);
  px[0] = r;
  px[1] = g;
  px[2] = b;
  return img;
}

std::vector<double> samples_of(const ImageBuffer& img) { return {img.samples().begin(), img.samples().end()}; }

ImageBuffer gray(double v) { return single_pixel(v, v, v); }

bool bit_equal(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.sample_count(); ++i) {
    if (std::bit_cast<std::uint64_t>(a.samples()[i]) != std::bit_cast<std::uint64_t>(b.samples()[i]))
      return false;
  }
  return true;
}

Errc error_code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected cisp::Error");
  return Errc::kIo;
}

}  // namespace

TEST_CASE("IspParams layout") {
  CHECK(IspParams::kCount == 19);
  CHECK(param_names().size() == 19);
  const auto p = default_params();
  CHECK(IspParams::from_vector(p.to_vector()) == p);
  auto v = p.to_vector();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i) + 0.5;
  CHECK(IspParams::from_vector(v).to_vector() == v);
}

TEST_CASE("default_params matches the initialization") {
  const auto p = default_params();
  CHECK(p.dg == 1.2);
  CHECK(p.gamma == 1.0 / 2.2);
  CHECK(p.wb_r == 1.0);
  CHECK(p.wb_b == 1.0);
  CHECK(p.tone_s == 3.0);
  CHECK(p.tone_p1 == 2.0);
  CHECK(p.tone_p2 == 3.0);
  for (int r = 0; r < 3; ++r) {
    CHECK(p.offset[r] == 0.0);
    for (int c = 0; c < 3; ++c) CHECK(p.ccm[r][c] == (r == c ? 1.0 : 0.0));
  }
  CHECK(normalize_ccm_rows(p) == p);
}

TEST_CASE("digital_gain") {
  CHECK(digital_gain(gray(0.5), 1.2).samples()[0] == doctest::Approx(0.6).epsilon(kTol));
  CHECK(std::fabs(digital_gain(gray(0.4), 2.17).samples()[0] - 0.868) < kTol);
  const auto img = cisp::testing::make_scene(7, 5, 1);
  CHECK(digital_gain(img, 1.0) == img);
  CHECK(error_code_of([&] { digital_gain(img, 0.0); }) == Errc::kParameterDomain);
  CHECK(error_code_of([&] { digital_gain(img, -1.0); }) == Errc::kParameterDomain);
  CHECK(error_code_of([&] { digital_gain(img, NAN); }) == Errc::kParameterDomain);
  // No clamping.
  CHECK(digital_gain(gray(0.9), 2.0).samples()[0] == 1.8);
}

TEST_CASE("white_balance") {
  const auto same = white_balance(single_pixel(0.2, 0.4, 0.6), 1.0, 1.0);
  CHECK(same == single_pixel(0.2, 0.4, 0.6));
  const auto out = white_balance(gray(1.0), 0.73, 2.41);
  CHECK(std::fabs(out.samples()[0] - 0.73) < kTol);
  CHECK(out.samples()[1] == 1.0);
  CHECK(std::fabs(out.samples()[2] - 2.41) < kTol);
  CHECK(error_code_of([] { white_balance(gray(0.5), 0.0, 1.0); }) == Errc::kParameterDomain);
  CHECK(error_code_of([] { white_balance(gray(0.5), 1.0, -2.0); }) == Errc::kParameterDomain);
}

TEST_CASE("white_balance leaves green untouched") {
  std::mt19937_64 rng(5);
  const auto img = cisp::testing::make_scene(16, 9, 2);
  for (int n = 0; n < 50; ++n) {
    const auto out = white_balance(img, uniform(rng, 0.1, 5.0), uniform(rng, 0.1, 5.0));
    for (std::size_t i = 1; i < img.sample_count(); i += 3) {
      REQUIRE(out.samples()[i] == img.samples()[i]);
    }
  }
}

TEST_CASE("color_correct") {
  const auto p = default_params();
  const auto img = cisp::testing::make_scene(6, 6, 3);
  CHECK(color_correct(img, p.ccm, p.offset) == img);

  const IspParams::Matrix3 m{{{1.2, -0.1, -0.1}, {0.0, 1.0, 0.0}, {-0.2, 0.1, 1.1}}};
  const auto out = color_correct(single_pixel(0.2, 0.4, 0.6), m, {0.01, 0.0, -0.01});
  CHECK(std::fabs(out.samples()[0] - 0.15) < kTol);
  CHECK(std::fabs(out.samples()[1] - 0.40) < kTol);
  CHECK(std::fabs(out.samples()[2] - 0.65) < kTol);

  const IspParams::Matrix3 bad{{{2.0, 1.0, 1.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  CHECK(error_code_of([&] { color_correct(img, bad, {0, 0, 0}); }) == Errc::kConstraintViolation);
}

TEST_CASE("gray preservation under row-normalized CCM") {
  std::mt19937_64 rng(17);
  for (int n = 0; n < 100; ++n) {
    IspParams p;
    for (auto& row : p.ccm)
      for (double& v : row) v = uniform(rng, -1.0, 2.0);
    for (auto& row : p.ccm) row[0] += 2.0;  // keep row sums away from zero
    p = normalize_ccm_rows(p);
    const double g = uniform(rng, 0.0, 1.0);
    const auto out = color_correct(gray(g), p.ccm, {0, 0, 0});
    for (double v : out.samples()) CHECK(v == doctest::Approx(g).epsilon(1e-12));
  }
  // Exact for dyadic entries.
  IspParams p;
  p.ccm = {{{0.5, 0.25, 0.25}, {0.125, 0.75, 0.125}, {1.5, -0.25, -0.25}}};
  const auto out = color_correct(gray(0.375), p.ccm, {0, 0, 0});
  for (double v : out.samples()) CHECK(v == 0.375);
}

TEST_CASE("gamma_correct") {
  std::mt19937_64 rng(2);
  for (int n = 0; n < 20; ++n) {
    CHECK(gamma_correct(gray(1.0), uniform(rng, 0.1, 8.0)).samples()[0] == 1.0);
  }
  CHECK(std::fabs(gamma_correct(gray(0.25), 0.5).samples()[0] - 0.5) < kTol);
  const double floor_val = gamma_correct(gray(0.0), 1.0 / 2.2).samples()[0];
  CHECK(std::fabs(floor_val - std::pow(1e-8, 1.0 / 2.2)) < kTol);
  CHECK(floor_val == doctest::Approx(2.31e-4).epsilon(2e-3));
  CHECK(error_code_of([] { gamma_correct(gray(0.5), 0.0); }) == Errc::kParameterDomain);
}

TEST_CASE("tone_map") {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 50; ++n) {
    const double s = uniform(rng, -4.0, 8.0);
    CHECK(tone_map(gray(1.0), s, uniform(rng, 0.1, 8.0), uniform(rng, 0.1, 8.0)).samples()[0] == 1.0);
  }
  CHECK(std::fabs(tone_map(gray(0.5), 3, 2, 3).samples()[0] - 0.5) < kTol);
  CHECK(std::fabs(tone_map(gray(1e-8), 3, 2, 3).samples()[0]) < 1e-15);
  CHECK(error_code_of([] { tone_map(gray(0.5), 3, 0, 3); }) == Errc::kParameterDomain);
  CHECK(error_code_of([] { tone_map(gray(0.5), 3, 2, -1); }) == Errc::kParameterDomain);
}

TEST_CASE("curve endpoint and monotonicity properties") {
  std::mt19937_64 rng(99);
  std::vector<double> xs(1024);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    xs[j] = 1e-8 + (1.0 - 1e-8) * static_cast<double>(j) / 1023.0;
  }
  ImageBuffer ramp(xs.size(), 1);
  for (std::size_t j = 0; j < xs.size(); ++j)
    for (int c = 0; c < 3; ++c) ramp.pixel(j, 0)[c] = xs[j];

  for (int n = 0; n < 100; ++n) {
    const double g = uniform(rng, 0.1, 8.0);
    const auto gout = samples_of(gamma_correct(ramp, g));
    for (std::size_t i = 3; i < gout.size(); i += 3) REQUIRE(gout[i] > gout[i - 3]);

    // Endpoints: exponents >= 2 keep s*eps^p1 below 1e-12 for |s| <= 8.
    const double s = uniform(rng, -4.0, 8.0);
    const double p1 = uniform(rng, 2.0, 8.0);
    const double p2 = uniform(rng, 2.0, 8.0);
    const auto tout = samples_of(tone_map(ramp, s, p1, p2));
    CHECK(tout[tout.size() - 1] == 1.0);
    CHECK(std::fabs(tout[0]) < 1e-12);

    // Monotone family: p2 > p1 and 1 <= s <= p2 / (p2 - p1).
    const double q1 = uniform(rng, 1.0, 3.0);
    const double q2 = q1 + uniform(rng, 0.5, 3.0);
    const double qs = uniform(rng, 1.0, q2 / (q2 - q1));
    const auto mout = samples_of(tone_map(ramp, qs, q1, q2));
    for (std::size_t i = 3; i < mout.size(); i += 3) REQUIRE(mout[i] >= mout[i - 3]);
  }
  const auto init = samples_of(tone_map(ramp, 3, 2, 3));
  for (std::size_t i = 3; i < init.size(); i += 3) REQUIRE(init[i] > init[i - 3]);
}

TEST_CASE("apply_pipeline hand-composed example") {
  const auto out = apply_pipeline(gray(0.5), default_params());
  const double gained = 0.6;
  const double g = std::pow(gained, 1.0 / 2.2);
  const double expected = 3 * g * g - 2 * g * g * g;
  CHECK(std::fabs(g - 0.7927) < 1e-4);
  for (double v : out.samples()) {
    CHECK(std::fabs(v - expected) < kTol);
    CHECK(std::fabs(v - 0.889) < 5e-4);
  }
}

TEST_CASE("apply_pipeline identity configuration") {
  IspParams p = default_params();
  p.dg = 1.0;
  p.gamma = 1.0;
  p.tone_s = p.tone_p1 = p.tone_p2 = 1.0;
  const auto img = cisp::testing::make_scene(32, 16, 4);
  const auto out = apply_pipeline(img, p);
  for (std::size_t i = 0; i < img.sample_count(); ++i) {
    CHECK(std::fabs(out.samples()[i] - img.samples()[i]) < 1e-14);
  }
}

TEST_CASE("apply_pipeline equals the stage composition bit for bit") {
  std::mt19937_64 rng(123);
  for (int n = 0; n < 20; ++n) {
    const auto img = cisp::testing::make_scene(37 + n, 11 + n, 500 + n);
    const IspParams p = cisp::testing::random_style(rng);
    auto staged = digital_gain(img, p.dg);
    staged = white_balance(staged, p.wb_r, p.wb_b);
    staged = color_correct(staged, p.ccm, p.offset);
    staged = gamma_correct(staged, p.gamma);
    staged = tone_map(staged, p.tone_s, p.tone_p1, p.tone_p2);
    staged = clamp_unit(staged);
    CHECK(bit_equal(apply_pipeline(img, p), staged));
  }
}

TEST_CASE("apply_pipeline output is clamped and deterministic") {
  IspParams p = default_params();
  p.dg = 3.0;
  p.offset = {-0.4, 0.0, 0.4};
  const auto img = cisp::testing::make_scene(64, 64, 9);
  const auto a = apply_pipeline(img, p);
  const auto b = apply_pipeline(img, p);
  CHECK(bit_equal(a, b));
  for (double v : a.samples()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("apply_pipeline is backend independent") {
  std::mt19937_64 rng(77);
  const auto img = cisp::testing::make_scene(41, 23, 10);
  const auto p = cisp::testing::random_style(rng);
  const auto before = active_kernels().backend;
  set_kernel_backend(KernelBackend::kScalar);
  const auto ref = apply_pipeline(img, p);
  for (auto b : available_backends()) {
    set_kernel_backend(b);
    CHECK(bit_equal(apply_pipeline(img, p), ref));
  }
  set_kernel_backend(before);
}

TEST_CASE("apply_pipeline rejects unnormalized CCM") {
  IspParams p = default_params();
  p.ccm[1] = {0.5, 0.5, 0.5};
  CHECK(error_code_of([&] { apply_pipeline(gray(0.5), p); }) == Errc::kConstraintViolation);
  p = default_params();
  p.gamma = -1.0;
  CHECK(error_code_of([&] { apply_pipeline(gray(0.5), p); }) == Errc::kParameterDomain);
}

TEST_CASE("normalize_ccm_rows") {
  IspParams p = default_params();
  p.ccm[0] = {2.0, 1.0, 1.0};
  const auto n = normalize_ccm_rows(p);
  CHECK(n.ccm[0][0] == 0.5);
  CHECK(n.ccm[0][1] == 0.25);
  CHECK(n.ccm[0][2] == 0.25);
  CHECK(n.ccm[1] == p.ccm[1]);
  CHECK(ccm_rows_normalized(n));

  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    IspParams q;
    for (auto& row : q.ccm)
      for (double& v : row) v = uniform(rng, 0.1, 3.0);
    const auto once = normalize_ccm_rows(q);
    const auto twice = normalize_ccm_rows(once);
    CHECK(ccm_rows_normalized(once, 1e-12));
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(twice.ccm[r][c] == doctest::Approx(once.ccm[r][c]).epsilon(1e-15));
  }

  p.ccm[2] = {1.0, -0.5, -0.4999};
  CHECK(error_code_of([&] { normalize_ccm_rows(p); }) == Errc::kDegenerateConstraint);
}

TEST_CASE("estimate_flops") {
  CHECK(flops::kPerPixel < 100);
  CHECK(estimate_flops(1, 1) == flops::kPerPixel);
  const auto total = estimate_flops(500, 333);
  CHECK(total >= 9'700'000);
  CHECK(total <= 16'100'000);
  CHECK(error_code_of([] { estimate_flops(0, 3); }) == Errc::kArgument);
}

TEST_CASE("sample_curves") {
  const auto c5 = sample_curves(default_params(), 5);
  CHECK(c5.x == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(std::fabs(c5.tone.back() - 1.0) < 1e-9);
  CHECK(std::fabs(c5.tone.front()) < 1e-12);

  IspParams lin = default_params();
  lin.gamma = 1.0;
  const auto cl = sample_curves(lin, 17);
  for (std::size_t j = 0; j < cl.x.size(); ++j) {
    CHECK(std::fabs(cl.gamma[j] - std::max(cl.x[j], 1e-8)) < 1e-15);
  }
  const auto c3 = sample_curves(default_params(), 3);
  CHECK(std::fabs(c3.tone[1] - 0.5) < 1e-12);
  // Linear stages on a gray ramp: gain only for the initial parameters.
  CHECK(c3.ccm[0][2] == doctest::Approx(1.2));
  CHECK(error_code_of([] { sample_curves(default_params(), 1); }) == Errc::kArgument);
}

TEST_CASE("params json round trip and validation") {
  std::mt19937_64 rng(4);
  const auto p = cisp::testing::random_style(rng);
  const auto doc = params_to_json(p);
  CHECK(doc["format_version"] == 1);
  CHECK(doc.size() == 20);
  CHECK(params_from_json(nlohmann::json::parse(doc.dump())) == p);

  auto missing = doc;
  missing.erase("gamma");
  CHECK(error_code_of([&] { params_from_json(missing); }) == Errc::kParse);
  auto negative = doc;
  negative["dg"] = -1.0;
  CHECK(error_code_of([&] { params_from_json(negative); }) == Errc::kParameterDomain);
  CHECK(params_to_csv(default_params()).find("1.2,1,1,1,0,0") == 0);
}
