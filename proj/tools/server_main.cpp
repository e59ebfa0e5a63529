// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include <csignal>
#include <iostream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "clickerase/presets.hpp"
#include "clickerase/service.hpp"

namespace {
clickerase::RemovalService* g_service = nullptr;
void on_signal(int) {
  if (g_service != nullptr) g_service->stop();
}
}  // namespace

int main(int argc, char** argv) {
  clickerase::ServiceConfig config = clickerase::ServiceConfig::from_env();
  std::string preset_dir;
  long long ttl = config.session_ttl.count();
  CLI::App app{"clickerase HTTP service"};
  app.add_option("--host", config.host)->capture_default_str();
  app.add_option("--port", config.port)->capture_default_str();
  app.add_option("--preset-dir", preset_dir, "Directory of preset config files");
  app.add_option("--default-preset", config.default_preset)->capture_default_str();
  app.add_option("--session-ttl", ttl, "Idle session lifetime in seconds")->capture_default_str();
  app.add_option("--max-upload", config.max_upload_bytes, "Upload limit in bytes")->capture_default_str();
  app.add_option("--max-image-side", config.max_image_side)->capture_default_str();
  app.add_option("--store-dir", config.store_dir, "Session image store");
  CLI11_PARSE(app, argc, argv);
  config.session_ttl = std::chrono::seconds(ttl);

  try {
    auto registry = preset_dir.empty() ? clickerase::PresetRegistry::load_default()
                                       : clickerase::PresetRegistry::load(preset_dir);
    clickerase::RemovalService service(config, std::move(registry));
    g_service = &service;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    service.listen();
    g_service = nullptr;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
