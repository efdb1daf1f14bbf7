#include "cisp/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "cisp/error.hpp"
#include "cisp/fitter.hpp"
#include "cisp/imageio.hpp"
#include "cisp/metrics.hpp"
#include "cisp/pipeline.hpp"
#include "cisp/search.hpp"
#include "cisp/service.hpp"

namespace cisp::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::uint64_t parse_seed(const std::string& text) {
  std::size_t used = 0;
  std::uint64_t seed = 0;
  try {
    seed = std::stoull(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw UsageError("bad synth seed: " + text);
  return seed;
}

// Exactly one of --task/--params; --task needs --weights.
struct StyleFlags {
  std::string task;
  std::string params;
  std::string weights;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--task", task, "Task vector a,b,c");
    cmd.add_option("--params", params, "Parameter file or \"init\"");
    cmd.add_option("--weights", weights, "Decoder weights file or synth:SEED");
  }

  IspParams resolve() const {
    if (task.empty() == params.empty()) throw UsageError("give exactly one of --task and --params");
    if (!params.empty()) return normalize_ccm_rows(load_params_source(params));
    if (weights.empty()) throw UsageError("--task requires --weights");
    const auto t = TaskVector::parse(task);
    const auto w = load_weights_source(weights);
    if (t.dim() != w.task_dim()) {
      throw Error(Errc::kShape, "task vector has " + std::to_string(t.dim()) +
                                    " entries, weights expect " + std::to_string(w.task_dim()));
    }
    return decode(t, w);
  }
};

int cmd_render(const std::string& input, const std::string& output, const StyleFlags& style,
               std::ostream& out) {
  const auto params = style.resolve();
  const auto img = load_image(input);
  const auto start = std::chrono::steady_clock::now();
  const auto rendered = apply_pipeline(img, params);
  const std::chrono::duration<double, std::milli> elapsed = std::chrono::steady_clock::now() - start;
  save_image(rendered, output);
  out << "flops_per_pixel: " << flops::kPerPixel << '\n'
      << "flops_total: " << estimate_flops(img.width(), img.height()) << '\n'
      << "render_ms: " << fmt(elapsed.count()) << '\n';
  return kExitOk;
}

struct FitFlags {
  std::size_t max_iters = 500;
  std::string optimizer = "lm";
  std::string trace;
};

int cmd_fit(const std::string& input, const std::string& reference, const std::string& output,
            const FitFlags& flags, std::ostream& out) {
  FitConfig cfg;
  cfg.max_iters = flags.max_iters;
  cfg.method = flags.optimizer == "adam" ? FitMethod::kAdam : FitMethod::kLevenbergMarquardt;
  const auto in = load_image(input);
  const auto ref = load_image(reference);
  const auto r = fit_params(in, ref, cfg);
  const auto report = quality_report(apply_pipeline(in, r.params), ref);

  std::ofstream file(output);
  if (!file) throw Error(Errc::kIo, "cannot write " + output);
  file << params_to_json(r.params).dump(2) << '\n';
  if (!file) throw Error(Errc::kIo, "short write to " + output);

  if (!flags.trace.empty()) {
    std::ofstream t(flags.trace);
    if (!t) throw Error(Errc::kIo, "cannot write " + flags.trace);
    t << "# iter loss\n";
    char buf[40];
    for (std::size_t n = 0; n < r.trace.losses.size(); ++n) {
      std::snprintf(buf, sizeof buf, "%.17g", r.trace.losses[n]);
      t << n << ' ' << buf << '\n';
    }
  }

  out << "psnr: " << fmt(report.psnr) << '\n'
      << "ssim: " << fmt(report.ssim) << '\n'
      << "iterations: " << r.trace.iterations << '\n'
      << "trace_entries: " << r.trace.losses.size() << '\n'
      << "termination: " << termination_name(r.trace.reason) << '\n';
  return kExitOk;
}

struct SearchFlags {
  std::string weights;
  std::string t_init = "0,0,0";
  double step = 0.1;
  std::size_t stop_after = 100;
  std::string trace;
};

int cmd_search(const std::string& input, const std::string& reference, const SearchFlags& flags,
               std::ostream& out) {
  SearchConfig cfg;
  cfg.t_init = TaskVector::parse(flags.t_init);
  cfg.step = flags.step;
  cfg.stop_after = flags.stop_after;
  cfg.validate();
  const auto w = load_weights_source(flags.weights);
  const auto in = load_image(input);
  const auto ref = load_image(reference);
  const auto r = greedy_search(in, ref, w, cfg);
  if (!flags.trace.empty()) {
    std::ofstream t(flags.trace);
    if (!t) throw Error(Errc::kIo, "cannot write " + flags.trace);
    write_trace(t, r.trace);
  }
  char err_buf[40];
  std::snprintf(err_buf, sizeof err_buf, "%.17g", r.best_error);
  out << "best_t: " << r.best_t.to_string() << '\n'
      << "best_mse: " << err_buf << '\n'
      << "psnr: " << fmt(psnr_from_mse(r.best_error)) << '\n'
      << "inferences: " << r.trace.size() << '\n';
  return kExitOk;
}

void write_curves_csv(std::ostream& os, const CurveSamples& c) {
  os << "x,gamma,tone,ccm_r,ccm_g,ccm_b\n";
  char buf[160];
  for (std::size_t n = 0; n < c.x.size(); ++n) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", c.x[n], c.gamma[n],
                  c.tone[n], c.ccm[0][n], c.ccm[1][n], c.ccm[2][n]);
    os << buf;
  }
}

int cmd_curves(const StyleFlags& style, std::size_t n, const std::string& format,
               const std::string& output, std::ostream& out) {
  const auto c = sample_curves(style.resolve(), n);
  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw Error(Errc::kIo, "cannot write " + output);
  }
  std::ostream& os = output.empty() ? out : file;
  if (format == "json") {
    nlohmann::json doc{{"x", c.x}, {"gamma", c.gamma}, {"tone", c.tone},
                       {"ccm", {c.ccm[0], c.ccm[1], c.ccm[2]}}};
    os << doc.dump() << '\n';
  } else {
    write_curves_csv(os, c);
  }
  if (!os) throw Error(Errc::kIo, "short write");
  return kExitOk;
}

int cmd_metrics(const std::string& a, const std::string& b, std::ostream& out) {
  out << report_to_json(quality_report(load_image(a), load_image(b))).dump() << '\n';
  return kExitOk;
}

int cmd_weights(const std::string& output, std::uint64_t seed, double scale, std::size_t dim,
                std::ostream& out) {
  const auto w = synth_weights(seed, scale, dim);
  save_weights(w, output);
  out << "parameters: " << count_params(w) << '\n';
  return kExitOk;
}

int cmd_serve(const std::string& host, int port, const std::string& weights, std::ostream& out,
              const ServeReady& on_ready) {
  Service service(load_weights_source(weights));
  const int bound = service.bind(host, port);
  out << "listening on " << host << ':' << bound << '\n' << std::flush;
  if (on_ready) on_ready(bound, [&service] { service.stop(); });
  service.listen();
  return kExitOk;
}

}  // namespace

DecoderWeights load_weights_source(const std::string& source) {
  constexpr std::string_view prefix = "synth:";
  if (source.rfind(prefix, 0) == 0) return synth_weights(parse_seed(source.substr(prefix.size())), 1.0);
  return load_weights(source);
}

IspParams load_params_source(const std::string& source) {
  if (source == "init") return default_params();
  std::ifstream in(source);
  if (!in) throw Error(Errc::kFileNotFound, "cannot open parameter file " + source);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kParse, "parameter file " + source + ": " + e.what());
  }
  return params_from_json(doc);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const ServeReady& on_ready) {
  CLI::App app{"Controllable ISP: render, fit, search, curves, metrics, serve", "cisp"};
  app.require_subcommand(1);
  std::function<int()> action;

  std::string input, output, reference;

  auto* render = app.add_subcommand("render", "Render an image with a task vector or parameters");
  StyleFlags render_style;
  render->add_option("input", input)->required();
  render->add_option("output", output)->required();
  render_style.add_to(*render);
  render->callback([&] { action = [&] { return cmd_render(input, output, render_style, out); }; });

  auto* fit = app.add_subcommand("fit", "Fit the 19 parameters to a reference");
  FitFlags fit_flags;
  fit->add_option("input", input)->required();
  fit->add_option("reference", reference)->required();
  fit->add_option("output", output, "Parameter file to write")->required();
  fit->add_option("--max-iters", fit_flags.max_iters)->check(CLI::PositiveNumber);
  fit->add_option("--optimizer", fit_flags.optimizer)->check(CLI::IsMember({"lm", "adam"}));
  fit->add_option("--trace", fit_flags.trace, "Loss trace file");
  fit->callback([&] { action = [&] { return cmd_fit(input, reference, output, fit_flags, out); }; });

  auto* search = app.add_subcommand("search", "Greedy task-vector search against a reference");
  SearchFlags search_flags;
  search->add_option("input", input)->required();
  search->add_option("reference", reference)->required();
  search->add_option("--weights", search_flags.weights)->required();
  search->add_option("--t-init", search_flags.t_init);
  search->add_option("--s", search_flags.step);
  search->add_option("--K", search_flags.stop_after);
  search->add_option("--trace", search_flags.trace, "Trace file");
  search->callback([&] { action = [&] { return cmd_search(input, reference, search_flags, out); }; });

  auto* curves = app.add_subcommand("curves", "Sample the gamma, tone and color curves");
  StyleFlags curves_style;
  std::size_t curve_n = 256;
  std::string curve_format = "csv";
  curves_style.add_to(*curves);
  curves->add_option("--n", curve_n);
  curves->add_option("--format", curve_format)->check(CLI::IsMember({"csv", "json"}));
  curves->add_option("--out", output);
  curves->callback([&] {
    action = [&] { return cmd_curves(curves_style, curve_n, curve_format, output, out); };
  });

  auto* metrics = app.add_subcommand("metrics", "PSNR and SSIM between two images");
  metrics->add_option("a", input)->required();
  metrics->add_option("b", reference)->required();
  metrics->callback([&] { action = [&] { return cmd_metrics(input, reference, out); }; });

  auto* weights = app.add_subcommand("weights", "Write synthetic decoder weights");
  std::uint64_t seed = 42;
  double scale = 1.0;
  std::size_t dim = 3;
  weights->add_option("output", output)->required();
  weights->add_option("--seed", seed);
  weights->add_option("--scale", scale);
  weights->add_option("--dim", dim)->check(CLI::PositiveNumber);
  weights->callback([&] { action = [&] { return cmd_weights(output, seed, scale, dim, out); }; });

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string serve_weights = "synth:42";
  serve->add_option("--host", host);
  serve->add_option("--port", port)->check(CLI::Range(0, 65535));
  serve->add_option("--weights", serve_weights);
  serve->callback([&] {
    action = [&] { return cmd_serve(host, port, serve_weights, out, on_ready); };
  });

  std::vector<const char*> argv{"cisp"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    return action();
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << errc_name(e.code()) << "): " << e.what() << '\n';
    return e.is_io() ? kExitIo : kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace cisp::cli
