// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// HTTP session service.
//
//   POST   /sessions                 image bytes (raw or multipart field "image") -> 201 {"id", "width", "height"}
//   POST   /sessions/{id}/clicks     {"u","v","polarity"} | [..] | {"clicks":[..]} -> 200 full click set
//   POST   /sessions/{id}/remove     {"r","steps","preset","seed","tau","n_max", ...} -> 202
//   GET    /sessions/{id}/result     status, progress or result (PNG when Accept: image/png)
//   DELETE /sessions/{id}            -> 204
//   GET    /healthz                  -> 200 {"status":"ok","presets":{...}}
//
// Removal jobs run one at a time on a single worker thread (one device).

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "clickerase/backbone.hpp"
#include "clickerase/pipeline.hpp"
#include "clickerase/presets.hpp"

namespace httplib {
class Server;
}

namespace clickerase {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::chrono::seconds session_ttl{3600};
  std::size_t max_upload_bytes = 16u << 20;
  int max_image_side = 2048;            // larger uploads are downscaled, aspect kept
  std::string default_preset = "toy";   // click deduplication grid
  std::filesystem::path store_dir;      // empty: a fresh directory under temp

  /// CLICKERASE_BIND (host:port), CLICKERASE_SESSION_TTL (s), CLICKERASE_MAX_UPLOAD (bytes),
  /// CLICKERASE_STORE_DIR. Checkpoints use CLICKERASE_CACHE_DIR via checkpoint_cache_dir().
  static ServiceConfig from_env();
};

enum class SessionStatus { idle, running, done, failed };

std::string_view status_name(SessionStatus status);

struct Progress {
  Stage stage = Stage::untouched;
  int step = 0;
  int total = 0;
};

struct Session {
  std::string id;
  Image original;
  ClickSet clicks;
  std::optional<RemovalResult> result;
  SessionStatus status = SessionStatus::idle;
  Progress progress;
  std::string error;
  std::chrono::steady_clock::time_point created;
  std::chrono::steady_clock::time_point updated;
};

/// Response produced by a handler: HTTP status, body and content type.
struct Reply {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

using BackboneFactory = std::function<std::shared_ptr<const Backbone>(const std::string& preset)>;

class RemovalService {
 public:
  /// An empty factory builds backbones from `registry`.
  RemovalService(ServiceConfig config, PresetRegistry registry, BackboneFactory factory = {});
  ~RemovalService();

  RemovalService(const RemovalService&) = delete;
  RemovalService& operator=(const RemovalService&) = delete;

  // Transport-independent handlers; the HTTP routes forward to these.
  Reply create_session(const std::string& body, const std::string& content_type);
  Reply add_clicks(const std::string& id, const std::string& body);
  Reply start_removal(const std::string& id, const std::string& body);
  Reply get_result(const std::string& id, const std::string& accept);
  Reply delete_session(const std::string& id);
  Reply health();

  /// Drops idle/finished sessions not touched within the TTL. Returns the count removed.
  std::size_t collect_garbage(std::chrono::steady_clock::time_point now);

  /// Binds config.host:config.port (0 picks a free port) and serves on a
  /// background thread. Returns the bound port.
  int start();
  /// Blocks serving on config.host:config.port.
  bool listen();
  void stop();

  [[nodiscard]] const ServiceConfig& config() const { return config_; }
  [[nodiscard]] std::size_t session_count() const;

 private:
  struct Job {
    std::string session_id;
    RemovalRequest request;
  };

  void install_routes();
  void worker_loop();
  void gc_loop();
  std::shared_ptr<const Backbone> backbone_for(const std::string& preset);
  std::filesystem::path session_dir(const std::string& id) const;

  ServiceConfig config_;
  PresetRegistry registry_;
  BackboneFactory factory_;
  GridShape click_grid_;

  mutable std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, std::shared_ptr<const Backbone>> backbones_;
  std::deque<Job> jobs_;
  std::condition_variable jobs_cv_;
  bool stopping_ = false;

  std::unique_ptr<httplib::Server> http_;
  std::thread http_thread_;
  std::thread worker_;
  std::thread gc_;
  std::condition_variable gc_cv_;
};

}  // namespace clickerase
