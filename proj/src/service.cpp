// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/service.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "httplib.h"
#include "json.hpp"

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

Reply json_reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

Reply error_reply(int status, const std::string& message) {
  return json_reply(status, {{"error", message}});
}

std::string new_session_id() {
  static std::mutex mutex;
  static std::mt19937_64 gen{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(gen()),
                static_cast<unsigned long long>(gen()));
  return buf;
}

std::string to_string(const std::vector<std::uint8_t>& bytes) {
  return std::string(bytes.begin(), bytes.end());
}

json clicks_json(const ClickSet& clicks) {
  json out = json::array();
  for (const auto& c : clicks.positives) out.push_back({{"u", c.u}, {"v", c.v}, {"polarity", "+"}});
  for (const auto& c : clicks.negatives) out.push_back({{"u", c.u}, {"v", c.v}, {"polarity", "-"}});
  return out;
}

std::pair<Click, Polarity> parse_click_json(const json& j) {
  if (!j.is_object()) throw ValidationError("each click must be an object");
  if (!j.contains("u") || !j.contains("v") || !j["u"].is_number() || !j["v"].is_number()) {
    throw ValidationError("click needs numeric \"u\" and \"v\"");
  }
  const Click click{j["u"].get<double>(), j["v"].get<double>()};
  if (!(click.u >= 0.0 && click.u <= 1.0 && click.v >= 0.0 && click.v <= 1.0)) {
    throw ValidationError("click coordinates must lie in [0,1]");
  }
  const json polarity = j.value("polarity", json("+"));
  if (!polarity.is_string()) throw ValidationError("polarity must be \"+\" or \"-\"");
  const auto p = polarity.get<std::string>();
  if (p == "+" || p == "positive") return {click, Polarity::positive};
  if (p == "-" || p == "negative") return {click, Polarity::negative};
  throw ValidationError("polarity must be \"+\" or \"-\"");
}

template <typename T>
void read_field(const json& body, const char* key, T& into) {
  if (!body.contains(key)) return;
  const auto& v = body[key];
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ValidationError(std::string(key) + " must be a string");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
      throw ValidationError(std::string(key) + " must be an integer");
    }
  } else {
    if (!v.is_number()) throw ValidationError(std::string(key) + " must be a number");
  }
  into = v.get<T>();
}

std::optional<long long> env_int(const char* name) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return std::nullopt;
  long long value = 0;
  const char* end = raw + std::strlen(raw);
  const auto [ptr, ec] = std::from_chars(raw, end, value);
  if (ec != std::errc() || ptr != end) {
    spdlog::warn("ignoring {}={}: not an integer", name, raw);
    return std::nullopt;
  }
  return value;
}

}  // namespace

std::string_view status_name(SessionStatus status) {
  switch (status) {
    case SessionStatus::idle: return "IDLE";
    case SessionStatus::running: return "RUNNING";
    case SessionStatus::done: return "DONE";
    case SessionStatus::failed: return "FAILED";
  }
  return "UNKNOWN";
}

ServiceConfig ServiceConfig::from_env() {
  ServiceConfig cfg;
  if (const char* bind = std::getenv("CLICKERASE_BIND"); bind != nullptr && *bind != '\0') {
    const std::string text = bind;
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) {
      cfg.host = text;
    } else {
      cfg.host = text.substr(0, colon);
      cfg.port = std::atoi(text.c_str() + colon + 1);
    }
  }
  if (auto ttl = env_int("CLICKERASE_SESSION_TTL"); ttl && *ttl > 0) cfg.session_ttl = std::chrono::seconds(*ttl);
  if (auto max = env_int("CLICKERASE_MAX_UPLOAD"); max && *max > 0) cfg.max_upload_bytes = static_cast<std::size_t>(*max);
  if (const char* dir = std::getenv("CLICKERASE_STORE_DIR"); dir != nullptr && *dir != '\0') cfg.store_dir = dir;
  return cfg;
}

RemovalService::RemovalService(ServiceConfig config, PresetRegistry registry, BackboneFactory factory)
    : config_(std::move(config)), registry_(std::move(registry)), factory_(std::move(factory)) {
  if (!factory_) {
    factory_ = [this](const std::string& preset) { return registry_.make_backbone(preset); };
  }
  if (!registry_.contains(config_.default_preset)) {
    throw ConfigError("default preset '" + config_.default_preset + "' is not registered");
  }
  click_grid_ = registry_.get(config_.default_preset).descriptor.capture_grid();
  if (config_.store_dir.empty()) {
    config_.store_dir = std::filesystem::temp_directory_path() / "clickerase-sessions" / new_session_id();
  }
  std::filesystem::create_directories(config_.store_dir);
  worker_ = std::thread([this] { worker_loop(); });
  gc_ = std::thread([this] { gc_loop(); });
}

RemovalService::~RemovalService() {
  stop();
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  jobs_cv_.notify_all();
  gc_cv_.notify_all();
  if (worker_.joinable()) worker_.join();
  if (gc_.joinable()) gc_.join();
  std::error_code ec;
  for (const auto& [id, session] : sessions_) std::filesystem::remove_all(session_dir(id), ec);
}

std::filesystem::path RemovalService::session_dir(const std::string& id) const {
  return config_.store_dir / id;
}

std::size_t RemovalService::session_count() const {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

Reply RemovalService::create_session(const std::string& body, const std::string& content_type) {
  if (body.size() > config_.max_upload_bytes) {
    return error_reply(413, "upload of " + std::to_string(body.size()) + " bytes exceeds " +
                                std::to_string(config_.max_upload_bytes));
  }
  if (body.empty()) return error_reply(415, "empty upload; expected PNG or JPEG bytes");
  (void)content_type;
  Image image;
  try {
    image = decode_image(std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
  } catch (const ValidationError& e) {
    return error_reply(415, e.what());
  }
  const int longest = std::max(image.width, image.height);
  if (longest > config_.max_image_side) {
    const double scale = static_cast<double>(config_.max_image_side) / longest;
    const int w = std::max(1, static_cast<int>(std::lround(image.width * scale)));
    const int h = std::max(1, static_cast<int>(std::lround(image.height * scale)));
    spdlog::info("upload {}x{} downscaled to {}x{}", image.width, image.height, w, h);
    image = resize_image(image, w, h);
  }

  Session session;
  session.id = new_session_id();
  session.original = std::move(image);
  session.created = session.updated = Clock::now();
  std::filesystem::create_directories(session_dir(session.id));
  write_image(session_dir(session.id) / "original.png", session.original);

  const json out = {{"id", session.id}, {"width", session.original.width}, {"height", session.original.height}};
  std::lock_guard lock(mutex_);
  sessions_.emplace(session.id, std::move(session));
  return json_reply(201, out);
}

Reply RemovalService::add_clicks(const std::string& id, const std::string& body) {
  std::vector<std::pair<Click, Polarity>> parsed;
  try {
    const json j = json::parse(body);
    const json* list = &j;
    if (j.is_object() && j.contains("clicks")) list = &j["clicks"];
    if (list->is_array()) {
      if (list->empty()) throw ValidationError("no clicks given");
      for (const auto& c : *list) parsed.push_back(parse_click_json(c));
    } else {
      parsed.push_back(parse_click_json(*list));
    }
  } catch (const json::exception& e) {
    std::lock_guard lock(mutex_);
    if (!sessions_.contains(id)) return error_reply(404, "unknown session " + id);
    return error_reply(422, std::string("malformed JSON: ") + e.what());
  } catch (const ValidationError& e) {
    std::lock_guard lock(mutex_);
    if (!sessions_.contains(id)) return error_reply(404, "unknown session " + id);
    return error_reply(422, e.what());
  }

  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return error_reply(404, "unknown session " + id);
  Session& s = it->second;
  if (s.status == SessionStatus::running) return error_reply(409, "removal in progress");
  for (const auto& [click, polarity] : parsed) s.clicks.add(click, polarity, click_grid_);
  s.updated = Clock::now();
  return json_reply(200, {{"clicks", clicks_json(s.clicks)},
                          {"positives", s.clicks.positives.size()},
                          {"negatives", s.clicks.negatives.size()}});
}

Reply RemovalService::start_removal(const std::string& id, const std::string& body) {
  RemovalRequest request;
  request.preset = config_.default_preset;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return error_reply(404, "unknown session " + id);
    if (it->second.status == SessionStatus::running) return error_reply(409, "removal in progress");
  }

  try {
    const json j = body.empty() ? json::object() : json::parse(body);
    if (!j.is_object()) throw ValidationError("parameters must be a JSON object");
    read_field(j, "r", request.schedule.r);
    read_field(j, "steps", request.schedule.total_steps);
    read_field(j, "untouched_fraction", request.schedule.untouched_fraction);
    read_field(j, "bg_steps", request.schedule.bg_steps);
    read_field(j, "free_fraction", request.schedule.free_fraction);
    read_field(j, "alpha_start", request.schedule.alpha_start);
    read_field(j, "lambda", request.schedule.lambda);
    read_field(j, "tau", request.propagation.tau);
    read_field(j, "n_max", request.propagation.n_max);
    read_field(j, "seed", request.seed);
    read_field(j, "preset", request.preset);
    request.schedule.validate();
    request.propagation.validate();
    (void)build_stage_plan(request.schedule);
    if (!registry_.contains(request.preset)) throw ValidationError("unknown preset '" + request.preset + "'");
  } catch (const json::exception& e) {
    return error_reply(422, std::string("malformed JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    return error_reply(422, e.what());
  } catch (const ConfigError& e) {
    return error_reply(422, e.what());
  } catch (const ValidationError& e) {
    return error_reply(422, e.what());
  }

  std::shared_ptr<const Backbone> backbone;
  try {
    backbone = backbone_for(request.preset);
  } catch (const std::exception& e) {
    return error_reply(422, e.what());
  }
  if (!backbone->available()) {
    return error_reply(503, "preset '" + request.preset + "' has no runtime in this build");
  }

  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return error_reply(404, "unknown session " + id);
  Session& s = it->second;
  if (s.status == SessionStatus::running) return error_reply(409, "removal in progress");
  if (s.clicks.positives.empty()) return error_reply(412, "add at least one positive click first");
  request.image = s.original;
  request.clicks = s.clicks;
  s.status = SessionStatus::running;
  s.progress = {Stage::untouched, 0, request.schedule.total_steps};
  s.error.clear();
  s.updated = Clock::now();
  jobs_.push_back({id, std::move(request)});
  jobs_cv_.notify_one();
  return json_reply(202, {{"id", id}, {"status", "RUNNING"}});
}

Reply RemovalService::get_result(const std::string& id, const std::string& accept) {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(id);
  if (it == sessions_.end()) return error_reply(404, "unknown session " + id);
  Session& s = it->second;
  s.updated = Clock::now();
  json out = {{"id", id}, {"status", status_name(s.status)}};
  switch (s.status) {
    case SessionStatus::idle:
      out["clicks"] = clicks_json(s.clicks);
      break;
    case SessionStatus::running:
      out["progress"] = {{"stage", stage_name(s.progress.stage)},
                         {"step", s.progress.step},
                         {"total", s.progress.total}};
      break;
    case SessionStatus::failed:
      out["error"] = s.error;
      break;
    case SessionStatus::done: {
      const RemovalResult& r = *s.result;
      const auto png = encode_png(r.output);
      if (accept.find("image/png") != std::string::npos) return {200, to_string(png), "image/png"};
      std::vector<double> mask(r.object_mask.begin(), r.object_mask.end());
      const auto overlay = encode_png(gray_image(mask, r.output.width, r.output.height));
      json stages = json::object();
      for (Stage st : kAllStages) stages[std::string(stage_name(st))] = r.stage_lengths[static_cast<int>(st)];
      json steps = json::array();
      for (const auto& rec : r.steps) {
        steps.push_back({{"step", rec.step},
                         {"stage", stage_name(rec.stage)},
                         {"alpha", rec.alpha},
                         {"modulated", rec.modulated}});
      }
      json flags = json::array();
      if (r.no_object_found) flags.push_back("NO_OBJECT_FOUND");
      out["width"] = r.output.width;
      out["height"] = r.output.height;
      out["image"] = httplib::detail::base64_encode(to_string(png));
      out["overlay"] = httplib::detail::base64_encode(to_string(overlay));
      out["encoding"] = "png;base64";
      out["log"] = {{"stages", stages}, {"steps", steps}};
      out["duration_ms"] = std::chrono::duration<double, std::milli>(r.duration).count();
      out["flags"] = flags;
      out["clicks"] = clicks_json(r.clicks);
      break;
    }
  }
  return json_reply(200, out);
}

Reply RemovalService::delete_session(const std::string& id) {
  std::lock_guard lock(mutex_);
  if (sessions_.erase(id) == 0) return error_reply(404, "unknown session " + id);
  std::error_code ec;
  std::filesystem::remove_all(session_dir(id), ec);
  return {204, "", "application/json"};
}

Reply RemovalService::health() {
  json presets = json::object();
  for (const auto& name : registry_.names()) {
    bool available = false;
    try {
      available = backbone_for(name)->available();
    } catch (const std::exception& e) {
      spdlog::warn("preset {}: {}", name, e.what());
    }
    presets[name] = available;
  }
  std::lock_guard lock(mutex_);
  return json_reply(200, {{"status", "ok"},
                          {"presets", presets},
                          {"sessions", sessions_.size()},
                          {"queued_jobs", jobs_.size()}});
}

std::shared_ptr<const Backbone> RemovalService::backbone_for(const std::string& preset) {
  {
    std::lock_guard lock(mutex_);
    if (const auto it = backbones_.find(preset); it != backbones_.end()) return it->second;
  }
  auto backbone = factory_(preset);
  if (!backbone) throw ConfigError("no backbone for preset '" + preset + "'");
  std::lock_guard lock(mutex_);
  return backbones_.emplace(preset, std::move(backbone)).first->second;
}

std::size_t RemovalService::collect_garbage(Clock::time_point now) {
  std::lock_guard lock(mutex_);
  std::size_t removed = 0;
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    const Session& s = it->second;
    if (s.status != SessionStatus::running && now - s.updated > config_.session_ttl) {
      std::error_code ec;
      std::filesystem::remove_all(session_dir(it->first), ec);
      spdlog::info("session {} expired", it->first);
      it = sessions_.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

void RemovalService::gc_loop() {
  const auto period = std::clamp<std::chrono::seconds>(config_.session_ttl / 4, std::chrono::seconds(1),
                                                       std::chrono::seconds(60));
  std::unique_lock lock(mutex_);
  while (!stopping_) {
    gc_cv_.wait_for(lock, period, [this] { return stopping_; });
    if (stopping_) break;
    lock.unlock();
    collect_garbage(Clock::now());
    lock.lock();
  }
}

void RemovalService::worker_loop() {
  std::unique_lock lock(mutex_);
  while (true) {
    jobs_cv_.wait(lock, [this] { return stopping_ || !jobs_.empty(); });
    if (stopping_) return;
    Job job = std::move(jobs_.front());
    jobs_.pop_front();
    lock.unlock();

    std::optional<RemovalResult> result;
    std::string error;
    try {
      const auto backbone = backbone_for(job.request.preset);
      result = remove_object(*backbone, job.request, [&](Stage stage, int step, int total) {
        std::lock_guard progress_lock(mutex_);
        if (auto it = sessions_.find(job.session_id); it != sessions_.end()) {
          it->second.progress = {stage, step, total};
        }
      });
    } catch (const std::exception& e) {
      error = e.what();
      spdlog::error("session {} removal failed: {}", job.session_id, error);
    }

    if (result) {
      std::error_code ec;
      if (std::filesystem::exists(session_dir(job.session_id), ec)) {
        try {
          write_image(session_dir(job.session_id) / "result.png", result->output);
        } catch (const std::exception& e) {
          spdlog::warn("session {}: cannot store result: {}", job.session_id, e.what());
        }
      }
    }

    lock.lock();
    const auto it = sessions_.find(job.session_id);
    if (it == sessions_.end()) continue;  // deleted while running
    Session& s = it->second;
    s.updated = Clock::now();
    if (result) {
      s.result = std::move(result);
      s.status = SessionStatus::done;
    } else {
      s.status = SessionStatus::failed;
      s.error = error;
    }
  }
}

void RemovalService::install_routes() {
  auto send = [](httplib::Response& res, const Reply& reply) {
    res.status = reply.status;
    res.set_content(reply.body, reply.content_type);
  };
  http_->set_payload_max_length(config_.max_upload_bytes);
  http_->Post("/sessions", [this, send](const httplib::Request& req, httplib::Response& res) {
    if (req.is_multipart_form_data()) {
      if (!req.has_file("image")) return send(res, error_reply(415, "multipart upload needs an \"image\" field"));
      return send(res, create_session(req.get_file_value("image").content, req.get_header_value("Content-Type")));
    }
    send(res, create_session(req.body, req.get_header_value("Content-Type")));
  });
  http_->Post("/sessions/:id/clicks", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, add_clicks(req.path_params.at("id"), req.body));
  });
  http_->Post("/sessions/:id/remove", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, start_removal(req.path_params.at("id"), req.body));
  });
  http_->Get("/sessions/:id/result", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, get_result(req.path_params.at("id"), req.get_header_value("Accept")));
  });
  http_->Delete("/sessions/:id", [this, send](const httplib::Request& req, httplib::Response& res) {
    const Reply reply = delete_session(req.path_params.at("id"));
    res.status = reply.status;
    if (!reply.body.empty()) res.set_content(reply.body, reply.content_type);
  });
  http_->Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  http_->set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      const json body = {{"error", httplib::status_message(res.status)}};
      res.set_content(body.dump(), "application/json");
    }
  });
}

int RemovalService::start() {
  if (http_) throw PreconditionError("service already started");
  http_ = std::make_unique<httplib::Server>();
  install_routes();
  const int port = config_.port == 0 ? http_->bind_to_any_port(config_.host)
                                     : (http_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port < 0) {
    http_.reset();
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  config_.port = port;
  http_thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
  spdlog::info("serving on {}:{}", config_.host, port);
  return port;
}

bool RemovalService::listen() {
  start();
  http_thread_.join();
  return true;
}

void RemovalService::stop() {
  if (!http_) return;
  http_->stop();
  if (http_thread_.joinable()) http_thread_.join();
  http_.reset();
}

}  // namespace clickerase
