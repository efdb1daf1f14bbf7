#include "cisp/service.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <httplib.h>
#include <json.hpp>

#include "cisp/error.hpp"
#include "cisp/imageio.hpp"
#include "cisp/metrics.hpp"
#include "cisp/pipeline.hpp"
#include "cisp/search.hpp"

namespace cisp {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct HttpError {
  int status;
  std::string message;
  std::string code;
};

[[noreturn]] void fail(int status, std::string message, std::string code = "request") {
  throw HttpError{status, std::move(message), std::move(code)};
}

int status_for(const Error& e) {
  switch (e.code()) {
    case Errc::kUnsupportedFormat:
    case Errc::kUnsupportedBitDepth:
      return 415;
    case Errc::kMalformedHeader:
    case Errc::kMalformedPayload:
    case Errc::kFileNotFound:
    case Errc::kIo:
      return 400;
    default:
      return 422;
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const TaskVector& t) { return json(std::vector<double>(t.values().begin(), t.values().end())); }

json state_json(const SearchState& s, const SearchConfig& cfg) {
  const double p = psnr_from_mse(s.best_error);
  return {{"t", vector_json(s.t)},
          {"best_t", vector_json(s.best_t)},
          {"best_error", number_or_null(s.best_error)},
          {"best_psnr", std::isinf(p) && p > 0 ? json("inf") : number_or_null(p)},
          {"d", s.d},
          {"i", s.i},
          {"k", s.k},
          {"evaluations", s.evaluations},
          {"terminated", !should_continue(s, cfg)}};
}

json parse_body(const httplib::Request& req) {
  try {
    auto doc = json::parse(req.body);
    if (!doc.is_object()) fail(400, "request body must be a JSON object");
    return doc;
  } catch (const json::exception& e) {
    fail(400, std::string("malformed JSON: ") + e.what());
  }
}

std::string require_string(const json& doc, const char* key) {
  if (!doc.contains(key) || !doc[key].is_string()) fail(422, std::string("missing string field ") + key);
  return doc[key].get<std::string>();
}

TaskVector task_from_json(const json& v, const char* key) {
  if (!v.is_array() || v.empty()) fail(422, std::string(key) + " must be a non-empty array of numbers");
  std::vector<double> values;
  for (const auto& x : v) {
    if (!x.is_number()) fail(422, std::string(key) + " must contain numbers");
    values.push_back(x.get<double>());
    if (!std::isfinite(values.back())) fail(422, std::string(key) + " must be finite");
  }
  return TaskVector(std::move(values));
}

IspParams params_from_vector_json(const json& v) {
  if (v.size() != IspParams::kCount) fail(422, "params array must hold 19 numbers");
  IspParams::Vector flat{};
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (!v[i].is_number()) fail(422, "params array must hold numbers");
    flat[i] = v[i].get<double>();
  }
  auto p = IspParams::from_vector(flat);
  validate_params(p);
  return p;
}

// "init", a 19-entry array, or a named-field object.
IspParams params_value(const json& v) {
  if (v.is_string()) {
    if (v.get<std::string>() != "init") fail(422, "params string must be \"init\"");
    return default_params();
  }
  if (v.is_array()) return params_from_vector_json(v);
  if (v.is_object()) {
    json doc = v;
    if (!doc.contains("format_version")) doc["format_version"] = 1;
    return params_from_json(doc);
  }
  fail(422, "params must be \"init\", an array or an object");
}

IspParams params_from_csv(const std::string& text) {
  if (text == "init") return default_params();
  const auto t = TaskVector::parse(text);
  return params_from_vector_json(json(std::vector<double>(t.values().begin(), t.values().end())));
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

struct Service::Impl {
  struct StoredEntry {
    std::shared_ptr<const ImageBuffer> image;
    Clock::time_point last_used;
  };

  struct Session {
    std::mutex mutex;
    std::shared_ptr<const ImageBuffer> input;
    std::shared_ptr<const ImageBuffer> reference;
    SearchConfig cfg;
    SearchState state;
    Clock::time_point last_used;
  };

  DecoderWeights weights;
  ServiceOptions opts;
  httplib::Server server;

  std::mutex store_mutex;
  std::unordered_map<std::string, StoredEntry> images;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t next_session = 1;

  std::mutex run_mutex;
  bool stop_requested = false;
  std::atomic<bool> listening = false;

  Impl(DecoderWeights w, ServiceOptions o) : weights(std::move(w)), opts(o) { routes(); }

  // Callers hold store_mutex.
  void evict_idle(Clock::time_point now) {
    std::erase_if(images, [&](const auto& kv) { return now - kv.second.last_used > opts.idle_timeout; });
    std::erase_if(sessions, [&](const auto& kv) { return now - kv.second->last_used > opts.idle_timeout; });
  }

  std::shared_ptr<const ImageBuffer> find_image(const std::string& id) {
    std::lock_guard lock(store_mutex);
    const auto now = Clock::now();
    evict_idle(now);
    const auto it = images.find(id);
    if (it == images.end()) fail(404, "unknown image " + id, "not_found");
    it->second.last_used = now;
    return it->second.image;
  }

  std::shared_ptr<Session> find_session(const std::string& id) {
    std::lock_guard lock(store_mutex);
    const auto now = Clock::now();
    evict_idle(now);
    const auto it = sessions.find(id);
    if (it == sessions.end()) fail(404, "unknown session " + id, "not_found");
    it->second->last_used = now;
    return it->second;
  }

  IspParams style_from(const json& doc) {
    const bool has_task = doc.contains("task");
    const bool has_params = doc.contains("params");
    if (has_task == has_params) fail(422, "give exactly one of task and params");
    if (has_params) return normalize_ccm_rows(params_value(doc["params"]));
    const auto t = task_from_json(doc["task"], "task");
    if (t.dim() != weights.task_dim()) fail(422, "task vector dimension does not match the weights");
    return decode(t, weights);
  }

  void post_images(const httplib::Request& req, httplib::Response& res) {
    if (req.body.size() > opts.max_upload_bytes) fail(413, "image exceeds the upload limit", "too_large");
    const std::span<const std::uint8_t> bytes(reinterpret_cast<const std::uint8_t*>(req.body.data()),
                                              req.body.size());
    auto image = std::make_shared<const ImageBuffer>(dequantize(decode_image(bytes)));
    char id[32];
    std::snprintf(id, sizeof id, "img-%016llx", static_cast<unsigned long long>(fnv1a(req.body)));
    {
      std::lock_guard lock(store_mutex);
      const auto now = Clock::now();
      evict_idle(now);
      images[id] = StoredEntry{image, now};
    }
    res.set_content(json{{"image_id", id}, {"width", image->width()}, {"height", image->height()}}.dump(),
                    "application/json");
  }

  void post_render(const httplib::Request& req, httplib::Response& res) {
    const auto doc = parse_body(req);
    const auto image = find_image(require_string(doc, "image_id"));
    const auto params = style_from(doc);
    const auto png = encode_png(quantize(apply_pipeline(*image, params)));
    res.set_header("X-Params", params_to_csv(params));
    res.set_header("X-Flops-Per-Pixel", std::to_string(flops::kPerPixel));
    res.set_content(std::string(png.begin(), png.end()), "image/png");
  }

  void post_search_start(const httplib::Request& req, httplib::Response& res) {
    const auto doc = parse_body(req);
    auto session = std::make_shared<Session>();
    session->input = find_image(require_string(doc, "image_id"));
    session->reference = find_image(require_string(doc, "reference_id"));
    if (!session->input->same_shape(*session->reference)) fail(422, "input and reference differ in size");
    if (doc.contains("t_init")) session->cfg.t_init = task_from_json(doc["t_init"], "t_init");
    if (doc.contains("s")) {
      if (!doc["s"].is_number()) fail(422, "s must be a number");
      session->cfg.step = doc["s"].get<double>();
    }
    if (doc.contains("K")) {
      if (!doc["K"].is_number_unsigned()) fail(422, "K must be a non-negative integer");
      session->cfg.stop_after = doc["K"].get<std::size_t>();
    }
    session->cfg.validate();
    if (session->cfg.t_init.dim() != weights.task_dim()) fail(422, "t_init dimension does not match the weights");
    session->state = SearchState::fresh(session->cfg);

    std::string id;
    {
      std::lock_guard lock(store_mutex);
      const auto now = Clock::now();
      evict_idle(now);
      id = "s-" + std::to_string(next_session++);
      session->last_used = now;
      sessions[id] = session;
    }
    res.set_content(json{{"session", id}, {"state", state_json(session->state, session->cfg)}}.dump(),
                    "application/json");
  }

  void post_search_step(const httplib::Request& req, httplib::Response& res) {
    const auto doc = parse_body(req);
    const auto id = require_string(doc, "session");
    std::size_t n = 1;
    if (doc.contains("n")) {
      if (!doc["n"].is_number_unsigned()) fail(422, "n must be a non-negative integer");
      n = doc["n"].get<std::size_t>();
    }
    const auto session = find_session(id);
    std::lock_guard lock(session->mutex);
    if (!should_continue(session->state, session->cfg)) fail(409, "search has terminated", "terminated");
    const auto oracle = make_render_oracle(*session->input, *session->reference, weights);
    SearchTrace delta;
    for (std::size_t step = 0; step < n && should_continue(session->state, session->cfg); ++step) {
      session->state = search_step(session->state, session->cfg, oracle, &delta);
    }
    json trace = json::array();
    for (const auto& e : delta) {
      trace.push_back({{"t", vector_json(e.t)}, {"error", number_or_null(e.error)}, {"branch", branch_name(e.branch)}});
    }
    res.set_content(json{{"session", id}, {"state", state_json(session->state, session->cfg)}, {"trace", trace}}.dump(),
                    "application/json");
  }

  void get_curves(const httplib::Request& req, httplib::Response& res) {
    const bool has_task = req.has_param("task");
    const bool has_params = req.has_param("params");
    if (has_task == has_params) fail(422, "give exactly one of task and params");
    IspParams params;
    if (has_params) {
      params = normalize_ccm_rows(params_from_csv(req.get_param_value("params")));
    } else {
      const auto t = TaskVector::parse(req.get_param_value("task"));
      if (t.dim() != weights.task_dim()) fail(422, "task vector dimension does not match the weights");
      params = decode(t, weights);
    }
    std::size_t n = 256;
    if (req.has_param("n")) {
      const auto text = req.get_param_value("n");
      std::size_t used = 0;
      try {
        n = std::stoul(text, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != text.size() || n > 1'000'000) fail(422, "n must be an integer in [2, 1e6]");
    }
    const auto c = sample_curves(params, n);
    res.set_content(json{{"x", c.x}, {"gamma", c.gamma}, {"tone", c.tone},
                         {"ccm", {c.ccm[0], c.ccm[1], c.ccm[2]}}}.dump(),
                    "application/json");
  }

  using Handler = void (Impl::*)(const httplib::Request&, httplib::Response&);

  httplib::Server::Handler wrap(Handler h) {
    return [this, h](const httplib::Request& req, httplib::Response& res) {
      try {
        (this->*h)(req, res);
      } catch (const HttpError& e) {
        respond_error(res, e.status, e.message, e.code);
      } catch (const Error& e) {
        respond_error(res, status_for(e), e.what(), std::string(errc_name(e.code())));
      } catch (const std::exception& e) {
        respond_error(res, 500, e.what(), "internal");
      }
    };
  }

  static void respond_error(httplib::Response& res, int status, const std::string& message,
                            const std::string& code) {
    res.status = status;
    res.set_content(json{{"error", message}, {"code", code}}.dump(), "application/json");
  }

  void routes() {
    server.set_payload_max_length(opts.max_upload_bytes);
    server.Post("/v1/images", wrap(&Impl::post_images));
    server.Post("/v1/render", wrap(&Impl::post_render));
    server.Post("/v1/search/start", wrap(&Impl::post_search_start));
    server.Post("/v1/search/step", wrap(&Impl::post_search_step));
    server.Get("/v1/curves", wrap(&Impl::get_curves));
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const char* code = res.status == 413 ? "too_large" : res.status == 404 ? "not_found" : "request";
      respond_error(res, res.status, httplib::status_message(res.status), code);
    });
  }
};

Service::Service(DecoderWeights weights, ServiceOptions opts)
    : impl_(std::make_unique<Impl>(std::move(weights), opts)) {}

Service::~Service() { stop(); }

int Service::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void Service::listen() {
  {
    std::lock_guard lock(impl_->run_mutex);
    if (impl_->stop_requested) return;
    impl_->listening = true;
  }
  const bool ok = impl_->server.listen_after_bind();
  impl_->listening = false;
  if (!ok) throw Error(Errc::kIo, "server stopped unexpectedly");
}

void Service::stop() {
  {
    std::lock_guard lock(impl_->run_mutex);
    impl_->stop_requested = true;
  }
  while (impl_->listening && !impl_->server.is_running()) std::this_thread::yield();
  if (impl_->server.is_running()) impl_->server.stop();
}

std::size_t Service::session_count() {
  std::lock_guard lock(impl_->store_mutex);
  impl_->evict_idle(Clock::now());
  return impl_->sessions.size();
}

std::size_t Service::image_count() {
  std::lock_guard lock(impl_->store_mutex);
  impl_->evict_idle(Clock::now());
  return impl_->images.size();
}

}  // namespace cisp
