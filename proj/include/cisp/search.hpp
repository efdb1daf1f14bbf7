#pragma once

// Greedy task-vector search and best-of-candidates selection.
//
// One loop body of the greedy search, given the error E(t) of the current t:
//   failure (E(t) is not below the best error e):
//     t[d] -= s; d = (d + 1) % D; i += 1; k += 1
//     if i == D: t += s on every coordinate; i = 0
//   success:
//     e = E(t); i = 0; k = 0
//   always: t[d] += s
// The loop runs while k <= K, so it stops after K+1 consecutive failures.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string_view>
#include <vector>

#include "cisp/decoder.hpp"
#include "cisp/image.hpp"

namespace cisp {

struct SearchConfig {
  TaskVector t_init = TaskVector::zeros(3);
  double step = 0.1;           // s
  std::size_t stop_after = 100;  // K
  /// Optional hard cap on oracle calls; 0 means unlimited.
  std::size_t max_evaluations = 0;

  /// Throws kArgument for a non-positive or non-finite step.
  void validate() const;
};

enum class SearchBranch { kImprove, kFail, kFailDiagonal };
std::string_view branch_name(SearchBranch b) noexcept;

struct SearchTraceEntry {
  TaskVector t;  // the vector that was evaluated
  double error = 0.0;
  SearchBranch branch = SearchBranch::kImprove;
};

using SearchTrace = std::vector<SearchTraceEntry>;

struct SearchState {
  TaskVector t;
  TaskVector best_t;
  double best_error = std::numeric_limits<double>::infinity();
  std::size_t d = 0;  // coordinate being stepped
  std::size_t i = 0;  // failures since the last diagonal jump or success
  std::size_t k = 0;  // consecutive failures
  std::size_t evaluations = 0;

  static SearchState fresh(const SearchConfig& cfg);
  bool operator==(const SearchState&) const = default;
};

/// Error of a task vector; smaller is better.
using ErrorOracle = std::function<double(const TaskVector&)>;

/// True when `error` does not improve on `best`. Ties and NaN count as
/// failures, which guarantees termination on flat error landscapes.
bool is_failure(double best, double error) noexcept;
/// The loop condition: k <= K (and the optional evaluation cap).
bool should_continue(const SearchState& state, const SearchConfig& cfg) noexcept;

/// One loop body. Throws kArgument if the search has already terminated.
SearchState search_step(SearchState state, const SearchConfig& cfg, const ErrorOracle& oracle,
                        SearchTrace* trace = nullptr);

struct SearchResult {
  TaskVector best_t;
  double best_error = std::numeric_limits<double>::infinity();
  SearchTrace trace;
  SearchState final_state;
};

SearchResult greedy_search(const ErrorOracle& oracle, const SearchConfig& cfg);

/// MSE of apply_pipeline(input, decode(t, w)) against `reference`.
/// Holds references to its arguments; keep them alive.
ErrorOracle make_render_oracle(const ImageBuffer& input, const ImageBuffer& reference,
                               const DecoderWeights& w);

SearchResult greedy_search(const ImageBuffer& input, const ImageBuffer& reference,
                           const DecoderWeights& w, const SearchConfig& cfg);

/// Score of a render; larger is better.
using RenderMetric = std::function<double(const ImageBuffer&)>;

/// Index of the candidate whose render maximizes `metric`; lowest index wins
/// ties. Candidates that decode to identical parameters are rendered once.
std::size_t best_candidate_index(const ImageBuffer& input, const std::vector<TaskVector>& candidates,
                                 const DecoderWeights& w, const RenderMetric& metric);
TaskVector best_of_candidates(const ImageBuffer& input, const std::vector<TaskVector>& candidates,
                              const DecoderWeights& w, const RenderMetric& metric);

/// Line-oriented trace: "eval t error branch", one evaluation per line.
void write_trace(std::ostream& out, const SearchTrace& trace);

}  // namespace cisp
