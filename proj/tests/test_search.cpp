#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "cisp/error.hpp"
#include "cisp/metrics.hpp"
#include "cisp/pipeline.hpp"
#include "cisp/search.hpp"
#include "support/reference_search.hpp"
#include "support/synthetic.hpp"

using namespace cisp;
using cisp::testing::reference_greedy_search;
using cisp::testing::random_oracle;

namespace {

struct Fixture {
  DecoderWeights w = synth_weights(42, 1.0);
  ImageBuffer input = cisp::testing::make_input_scene(40, 32, 77);

  ImageBuffer render(const TaskVector& t) const { return apply_pipeline(input, decode(t, w)); }
};

std::size_t count_branch(const SearchTrace& trace, SearchBranch b) {
  std::size_t n = 0;
  for (const auto& e : trace) n += e.branch == b;
  return n;
}

}  // namespace

TEST_CASE("is_failure treats ties and NaN as failures") {
  CHECK_FALSE(is_failure(INFINITY, 1.0));
  CHECK_FALSE(is_failure(2.0, 1.0));
  CHECK(is_failure(1.0, 2.0));
  CHECK(is_failure(1.0, 1.0));
  CHECK(is_failure(1.0, NAN));
  CHECK(is_failure(INFINITY, INFINITY));
}

TEST_CASE("first step from a fresh state succeeds") {
  SearchConfig cfg;
  const auto oracle = [](const TaskVector& t) { return t[0] + 5.0; };
  const auto s = search_step(SearchState::fresh(cfg), cfg, oracle);
  CHECK(s.evaluations == 1);
  CHECK(s.best_error == 5.0);
  CHECK(s.best_t == cfg.t_init);
  CHECK(s.k == 0);
  CHECK(s.t == TaskVector({0.1, 0.0, 0.0}));
}

TEST_CASE("a failure increments k by exactly one") {
  SearchConfig cfg;
  const auto oracle = [](const TaskVector& t) { return t[0] + t[1] + t[2]; };
  auto s = search_step(SearchState::fresh(cfg), cfg, oracle);
  SearchTrace trace;
  const auto next = search_step(s, cfg, oracle, &trace);
  CHECK(next.k == s.k + 1);
  CHECK(next.i == 1);
  CHECK(next.d == 1);
  CHECK(trace.back().branch == SearchBranch::kFail);
  CHECK(next.t == TaskVector({0.0, 0.1, 0.0}));
}

TEST_CASE("diagonal jump after D consecutive failures") {
  SearchConfig cfg;
  cfg.stop_after = 10;
  const auto oracle = [](const TaskVector& t) { return t[0] + t[1] + t[2]; };
  SearchTrace trace;
  auto s = SearchState::fresh(cfg);
  for (int n = 0; n < 4; ++n) s = search_step(s, cfg, oracle, &trace);
  CHECK(trace[3].branch == SearchBranch::kFailDiagonal);
  CHECK(s.i == 0);
  CHECK(s.d == 0);
  // Reverted all three probes, then stepped every coordinate and probed t[0].
  CHECK(s.t[0] == doctest::Approx(0.2));
  CHECK(s.t[1] == doctest::Approx(0.1));
  CHECK(s.t[2] == doctest::Approx(0.1));
}

TEST_CASE("K = 0 stops after the first failure") {
  SearchConfig cfg;
  cfg.stop_after = 0;
  const auto r = greedy_search([](const TaskVector& t) { return t[0] + t[1] + t[2]; }, cfg);
  CHECK(r.trace.size() == 2);
  CHECK(r.final_state.k == 1);
  CHECK(r.best_t == cfg.t_init);
}

TEST_CASE("optimum at the start terminates after K+1 failures") {
  Fixture f;
  SearchConfig cfg;
  cfg.stop_after = 7;
  const auto reference = f.render(cfg.t_init);
  const auto r = greedy_search(f.input, reference, f.w, cfg);
  CHECK(r.best_error == 0.0);
  CHECK(r.best_t == cfg.t_init);
  CHECK(r.trace.size() == 1 + cfg.stop_after + 1);
  CHECK(count_branch(r.trace, SearchBranch::kImprove) == 1);
}

TEST_CASE("recovers a grid target and agrees with a brute-force sweep") {
  Fixture f;
  const TaskVector target({0.3, 0.0, 0.0});
  const auto reference = f.render(target);

  TaskVector grid_best;
  double grid_error = INFINITY;
  ImageBuffer scratch;
  for (int a = 0; a <= 10; ++a)
    for (int b = 0; b <= 10; ++b)
      for (int c = 0; c <= 10; ++c) {
        const TaskVector t({a / 10.0, b / 10.0, c / 10.0});
        apply_pipeline_into(f.input, decode(t, f.w), scratch);
        const double e = mse(scratch, reference);
        if (e < grid_error) {
          grid_error = e;
          grid_best = t;
        }
      }
  CHECK(grid_best == target);
  CHECK(grid_error == 0.0);

  SearchConfig cfg;
  cfg.stop_after = 10;
  const auto r = greedy_search(f.input, reference, f.w, cfg);
  CHECK(r.best_error <= 1e-12);
  for (std::size_t d = 0; d < 3; ++d) CHECK(std::fabs(r.best_t[d] - target[d]) < 1e-9);
}

TEST_CASE("best error is monotone and the trace length counts evaluations") {
  Fixture f;
  const auto reference = f.render(TaskVector({0.5, 0.2, 0.7}));
  SearchConfig cfg;
  cfg.stop_after = 20;
  const auto r = greedy_search(f.input, reference, f.w, cfg);
  CHECK(r.trace.size() == r.final_state.evaluations);
  double best = INFINITY;
  for (const auto& e : r.trace) {
    if (e.branch == SearchBranch::kImprove) {
      CHECK(e.error < best);
      best = e.error;
    } else {
      CHECK_FALSE(e.error < best);
    }
  }
  CHECK(best == r.best_error);
}

TEST_CASE("fold of search_step reproduces greedy_search") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto oracle = random_oracle(seed);
    SearchConfig cfg;
    cfg.stop_after = 12;
    const auto whole = greedy_search(oracle, cfg);
    SearchTrace trace;
    auto state = SearchState::fresh(cfg);
    while (should_continue(state, cfg)) state = search_step(state, cfg, oracle, &trace);
    CHECK(state == whole.final_state);
    REQUIRE(trace.size() == whole.trace.size());
    for (std::size_t n = 0; n < trace.size(); ++n) {
      CHECK(trace[n].t == whole.trace[n].t);
      CHECK(std::bit_cast<std::uint64_t>(trace[n].error) ==
            std::bit_cast<std::uint64_t>(whole.trace[n].error));
      CHECK(trace[n].branch == whole.trace[n].branch);
    }
    CHECK_THROWS_AS(search_step(state, cfg, oracle), Error);
  }
}

TEST_CASE("agrees with a straight-line transcription on random oracles") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto oracle = random_oracle(seed);
    SearchConfig cfg;
    cfg.stop_after = 1 + seed % 15;
    cfg.step = 0.05 + 0.01 * static_cast<double>(seed % 7);
    cfg.t_init = TaskVector({0.1 * static_cast<double>(seed % 3), 0.0, 0.2});
    const auto got = greedy_search(oracle, cfg);
    const auto want = reference_greedy_search(oracle, cfg.t_init, cfg.step, cfg.stop_after);
    REQUIRE(got.trace.size() == want.evaluated.size());
    for (std::size_t n = 0; n < want.evaluated.size(); ++n) {
      CHECK(got.trace[n].t == want.evaluated[n]);
      CHECK(got.trace[n].error == want.errors[n]);
    }
    CHECK(got.best_error == want.best_error);
    CHECK(got.best_t == want.best_t);
  }
}

TEST_CASE("plateaus terminate") {
  SearchConfig cfg;
  cfg.stop_after = 5;
  const auto r = greedy_search([](const TaskVector&) { return 1.0; }, cfg);
  CHECK(r.trace.size() == 7);
  const auto nan = greedy_search([](const TaskVector&) { return NAN; }, cfg);
  CHECK(nan.trace.size() == 6);
}

TEST_CASE("evaluation cap") {
  SearchConfig cfg;
  cfg.max_evaluations = 4;
  const auto r = greedy_search([](const TaskVector& t) { return -t[0] - t[1] - t[2]; }, cfg);
  CHECK(r.trace.size() == 4);
}

TEST_CASE("small budget from (3,3,3) with s = 3") {
  Fixture f;
  SearchConfig cfg;
  cfg.t_init = TaskVector({3, 3, 3});
  cfg.step = 3;
  cfg.stop_after = 4;
  for (double a : {3.0, 6.0, 9.0}) {
    const TaskVector target({a, 3.0, 6.0});
    const auto r = greedy_search(f.input, f.render(target), f.w, cfg);
    CHECK(r.trace.size() <= 30);
    CHECK(r.best_error <= r.trace.front().error);
  }
}

TEST_CASE("config validation") {
  SearchConfig cfg;
  cfg.step = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.step = NAN;
  CHECK_THROWS_AS(greedy_search([](const TaskVector&) { return 0.0; }, cfg), Error);
  Fixture f;
  SearchConfig wrong_dim;
  wrong_dim.t_init = TaskVector::zeros(2);
  CHECK_THROWS_AS(greedy_search(f.input, f.input, f.w, wrong_dim), Error);
}

TEST_CASE("best_of_candidates") {
  Fixture f;
  const TaskVector star({3, 0, 6});
  const auto reference = f.render(star);
  const RenderMetric by_psnr = [&](const ImageBuffer& img) { return psnr(img, reference); };

  CHECK(best_of_candidates(f.input, {TaskVector({1, 1, 1})}, f.w, by_psnr) == TaskVector({1, 1, 1}));
  CHECK(best_of_candidates(f.input, {TaskVector({9, 9, 0}), star}, f.w, by_psnr) == star);
  CHECK_THROWS_AS(best_of_candidates(f.input, {}, f.w, by_psnr), Error);

  std::vector<TaskVector> grid;
  for (double a : {0.0, 3.0, 6.0})
    for (double b : {0.0, 3.0, 6.0})
      for (double c : {0.0, 3.0, 6.0}) grid.emplace_back(std::vector<double>{a, b, c});
  const auto reference2 = f.render(TaskVector({2.0, 4.0, 5.0}));
  const RenderMetric metric = [&](const ImageBuffer& img) { return psnr(img, reference2); };
  std::size_t brute = 0;
  double brute_score = -INFINITY;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double score = psnr(f.render(grid[m]), reference2);
    if (score > brute_score) {
      brute_score = score;
      brute = m;
    }
  }
  CHECK(best_candidate_index(f.input, grid, f.w, metric) == brute);

  // Invariant under strictly increasing transforms of the metric.
  const RenderMetric squashed = [&](const ImageBuffer& img) { return std::atan(psnr(img, reference2)); };
  CHECK(best_candidate_index(f.input, grid, f.w, squashed) == brute);

  // Ties go to the lowest index.
  const RenderMetric flat = [](const ImageBuffer&) { return 1.0; };
  CHECK(best_candidate_index(f.input, grid, f.w, flat) == 0);
  std::vector<TaskVector> dup{TaskVector({1, 2, 3}), star, star};
  CHECK(best_candidate_index(f.input, dup, f.w, by_psnr) == 1);
}

TEST_CASE("trace export") {
  SearchConfig cfg;
  cfg.stop_after = 1;
  const auto r = greedy_search([](const TaskVector& t) { return t[0] + 1.0; }, cfg);
  std::ostringstream out;
  write_trace(out, r.trace);
  const std::string text = out.str();
  CHECK(text.rfind("# eval t error branch\n", 0) == 0);
  CHECK(text.find("0 0,0,0 1 improve\n") != std::string::npos);
  CHECK(text.find(" fail\n") != std::string::npos);
}
