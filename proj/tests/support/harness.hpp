#pragma once

// Scratch directories, in-process CLI runs and a live service on an
// ephemeral port.

#include <unistd.h>

#include <filesystem>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cisp/cli.hpp"
#include "cisp/imageio.hpp"
#include "cisp/service.hpp"

namespace cisp::testing {

class ScratchDir {
 public:
  explicit ScratchDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("cisp_" + name + "_" + std::to_string(::getpid()))) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() { std::filesystem::remove_all(path_); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

inline CliRun run_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

/// Value of a "key: value" line in CLI output; empty when absent.
inline std::string field(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  const std::string prefix = key + ": ";
  while (std::getline(in, line)) {
    if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
  }
  return {};
}

inline std::string file_text(const std::string& path) {
  const auto bytes = read_file(path);
  return {bytes.begin(), bytes.end()};
}

class LiveService {
 public:
  explicit LiveService(DecoderWeights w, ServiceOptions opts = {}) : service_(std::move(w), opts) {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.listen(); });
  }
  ~LiveService() {
    service_.stop();
    thread_.join();
  }
  int port() const { return port_; }
  Service& service() { return service_; }

 private:
  Service service_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace cisp::testing
