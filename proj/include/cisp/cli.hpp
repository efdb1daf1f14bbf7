#pragma once

// Batch entry point: render, fit, search, curves, metrics, weights, serve.
//
// Exit codes: 0 ok, 2 usage, 3 I/O, 4 numeric or domain error.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cisp/decoder.hpp"
#include "cisp/params.hpp"

namespace cisp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitDomain = 4;

/// Invoked by `serve` once the socket is bound. Calling `stop` ends the
/// serve loop and makes run() return.
using ServeReady = std::function<void(int port, const std::function<void()>& stop)>;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const ServeReady& on_ready = {});

/// "synth:SEED" or a weights file.
DecoderWeights load_weights_source(const std::string& source);

/// "init" or a parameter file.
IspParams load_params_source(const std::string& source);

}  // namespace cisp::cli
