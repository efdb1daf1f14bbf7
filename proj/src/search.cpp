#include "cisp/search.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <ostream>

#include "cisp/error.hpp"
#include "cisp/metrics.hpp"
#include "cisp/pipeline.hpp"

namespace cisp {

void SearchConfig::validate() const {
  if (!std::isfinite(step) || !(step > 0.0)) {
    throw Error(Errc::kArgument, "search step size must be finite and > 0");
  }
  if (t_init.dim() == 0) throw Error(Errc::kArgument, "initial task vector is empty");
}

std::string_view branch_name(SearchBranch b) noexcept {
  switch (b) {
    case SearchBranch::kImprove: return "improve";
    case SearchBranch::kFail: return "fail";
    case SearchBranch::kFailDiagonal: return "fail+diagonal";
  }
  return "unknown";
}

SearchState SearchState::fresh(const SearchConfig& cfg) {
  SearchState s;
  s.t = cfg.t_init;
  s.best_t = cfg.t_init;
  return s;
}

bool is_failure(double best, double error) noexcept { return !(error < best); }

bool should_continue(const SearchState& state, const SearchConfig& cfg) noexcept {
  if (cfg.max_evaluations != 0 && state.evaluations >= cfg.max_evaluations) return false;
  return state.k <= cfg.stop_after;
}

SearchState search_step(SearchState state, const SearchConfig& cfg, const ErrorOracle& oracle,
                        SearchTrace* trace) {
  if (!should_continue(state, cfg)) {
    throw Error(Errc::kArgument, "search has already terminated");
  }
  const std::size_t dim = state.t.dim();
  const TaskVector evaluated = state.t;
  const double error = oracle(evaluated);
  ++state.evaluations;

  SearchBranch branch = SearchBranch::kImprove;
  if (is_failure(state.best_error, error)) {
    branch = SearchBranch::kFail;
    state.t[state.d] -= cfg.step;
    state.d = (state.d + 1) % dim;
    ++state.i;
    ++state.k;
    if (state.i == dim) {
      for (std::size_t j = 0; j < dim; ++j) state.t[j] += cfg.step;
      state.i = 0;
      branch = SearchBranch::kFailDiagonal;
    }
  } else {
    state.best_error = error;
    state.best_t = evaluated;
    state.i = 0;
    state.k = 0;
  }
  state.t[state.d] += cfg.step;

  if (trace != nullptr) trace->push_back({evaluated, error, branch});
  return state;
}

SearchResult greedy_search(const ErrorOracle& oracle, const SearchConfig& cfg) {
  cfg.validate();
  SearchResult result;
  SearchState state = SearchState::fresh(cfg);
  while (should_continue(state, cfg)) {
    state = search_step(std::move(state), cfg, oracle, &result.trace);
  }
  result.best_t = state.best_t;
  result.best_error = state.best_error;
  result.final_state = std::move(state);
  return result;
}

ErrorOracle make_render_oracle(const ImageBuffer& input, const ImageBuffer& reference,
                               const DecoderWeights& w) {
  if (!input.same_shape(reference)) {
    throw Error(Errc::kShape, "input and reference dimensions differ");
  }
  auto scratch = std::make_shared<ImageBuffer>();
  return [&input, &reference, &w, scratch](const TaskVector& t) {
    apply_pipeline_into(input, decode(t, w), *scratch);
    return mse(*scratch, reference);
  };
}

SearchResult greedy_search(const ImageBuffer& input, const ImageBuffer& reference,
                           const DecoderWeights& w, const SearchConfig& cfg) {
  if (cfg.t_init.dim() != w.task_dim()) {
    throw Error(Errc::kShape, "initial task vector dimension does not match the decoder");
  }
  return greedy_search(make_render_oracle(input, reference, w), cfg);
}

std::size_t best_candidate_index(const ImageBuffer& input,
                                 const std::vector<TaskVector>& candidates,
                                 const DecoderWeights& w, const RenderMetric& metric) {
  if (candidates.empty()) throw Error(Errc::kArgument, "no candidate task vectors");
  // Distinct parameter sets are rendered once and share a score.
  std::map<IspParams::Vector, double> scored;
  ImageBuffer scratch;
  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t m = 0; m < candidates.size(); ++m) {
    const IspParams p = decode(candidates[m], w);
    const auto key = p.to_vector();
    auto it = scored.find(key);
    if (it == scored.end()) {
      apply_pipeline_into(input, p, scratch);
      it = scored.emplace(key, metric(scratch)).first;
    }
    if (m == 0 || it->second > best_score) {
      best = m;
      best_score = it->second;
    }
  }
  return best;
}

TaskVector best_of_candidates(const ImageBuffer& input, const std::vector<TaskVector>& candidates,
                              const DecoderWeights& w, const RenderMetric& metric) {
  return candidates[best_candidate_index(input, candidates, w, metric)];
}

void write_trace(std::ostream& out, const SearchTrace& trace) {
  out << "# eval t error branch\n";
  char buf[40];
  for (std::size_t n = 0; n < trace.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g", trace[n].error);
    out << n << ' ' << trace[n].t.to_string() << ' ' << buf << ' '
        << branch_name(trace[n].branch) << '\n';
  }
}

}  // namespace cisp
