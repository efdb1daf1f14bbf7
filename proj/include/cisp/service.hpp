#pragma once

// HTTP/JSON facade under /v1:
//   POST /v1/images         raw PNG or PPM body            -> {"image_id"}
//   POST /v1/render         {image_id, task | params}      -> PNG, X-Params, X-Flops-Per-Pixel
//   POST /v1/search/start   {image_id, reference_id, t_init, s, K} -> {session, state}
//   POST /v1/search/step    {session, n}                   -> {state, trace}
//   GET  /v1/curves         ?task=a,b,c | ?params=init|csv  &n=N
// Errors are JSON {"error", "code"} with 400, 404, 409, 413, 415 or 422.

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

#include "cisp/decoder.hpp"

namespace cisp {

struct ServiceOptions {
  std::chrono::milliseconds idle_timeout = std::chrono::minutes(30);
  std::size_t max_upload_bytes = std::size_t{32} << 20;
};

class Service {
 public:
  explicit Service(DecoderWeights weights, ServiceOptions opts = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the listening socket; port 0 picks an ephemeral port. Returns the
  /// bound port. Throws kIo when the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves requests until stop(). Requires a prior bind().
  void listen();
  void stop();

  /// Live sessions and stored images after evicting idle entries.
  std::size_t session_count();
  std::size_t image_count();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cisp
