// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/cli.hpp"

#include <charconv>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "clickerase/errors.hpp"
#include "clickerase/pipeline.hpp"
#include "clickerase/presets.hpp"

namespace clickerase::cli {

namespace {

struct CliConfig {
  std::string input;
  std::string output;
  std::vector<std::string> clicks;
  std::string preset = "toy";
  std::string preset_dir;
  GuidanceSchedule schedule;
  PropagationConfig propagation;
  std::uint64_t seed = 0;
  bool dump_maps = false;
};

std::optional<double> parse_double(std::string_view s) {
  double value = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return value;
}

std::filesystem::path sibling(const std::filesystem::path& output, const std::string& suffix) {
  return output.parent_path() / (output.stem().string() + suffix + ".png");
}

}  // namespace

std::optional<std::pair<Click, Polarity>> parse_click(const std::string& text) {
  const auto first = text.find(',');
  const auto second = first == std::string::npos ? std::string::npos : text.find(',', first + 1);
  if (second == std::string::npos) return std::nullopt;
  const auto u = parse_double(std::string_view(text).substr(0, first));
  const auto v = parse_double(std::string_view(text).substr(first + 1, second - first - 1));
  const std::string sign = text.substr(second + 1);
  if (!u || !v || *u < 0.0 || *u > 1.0 || *v < 0.0 || *v > 1.0) return std::nullopt;
  if (sign == "+") return std::pair{Click{*u, *v}, Polarity::positive};
  if (sign == "-") return std::pair{Click{*u, *v}, Polarity::negative};
  return std::nullopt;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CliConfig cfg;
  CLI::App app{"Click-driven object removal"};
  app.add_option("-i,--input", cfg.input, "Input PNG/JPEG image")->required();
  app.add_option("-o,--output", cfg.output, "Output PNG path")->required();
  app.add_option("--click", cfg.clicks, "Normalized click u,v,+ (remove) or u,v,- (keep); repeatable")
      ->required();
  app.add_option("--preset", cfg.preset, "Backbone preset")->capture_default_str();
  app.add_option("--preset-dir", cfg.preset_dir, "Directory of preset config files");
  app.add_option("--r", cfg.schedule.r, "Guidance strength in [0,1]")->capture_default_str();
  app.add_option("--steps", cfg.schedule.total_steps, "Denoising steps")->capture_default_str();
  app.add_option("--tau", cfg.propagation.tau, "Relative propagation threshold")->capture_default_str();
  app.add_option("--n-max", cfg.propagation.n_max, "Maximum propagation steps")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Seed")->capture_default_str();
  app.add_option("--untouched-fraction", cfg.schedule.untouched_fraction)->capture_default_str();
  app.add_option("--bg-steps", cfg.schedule.bg_steps)->capture_default_str();
  app.add_option("--free-fraction", cfg.schedule.free_fraction)->capture_default_str();
  app.add_option("--alpha-start", cfg.schedule.alpha_start)->capture_default_str();
  app.add_option("--lambda", cfg.schedule.lambda, "Object-key penalty magnitude")->capture_default_str();
  app.add_flag("--dump-maps", cfg.dump_maps, "Also write M_ob and m_bg_tilde as grayscale PNGs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  RemovalRequest request;
  request.schedule = cfg.schedule;
  request.propagation = cfg.propagation;
  request.preset = cfg.preset;
  request.seed = cfg.seed;
  try {
    request.schedule.validate();
    request.propagation.validate();
  } catch (const ArgumentError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    const PresetRegistry registry = cfg.preset_dir.empty() ? PresetRegistry::load_default()
                                                           : PresetRegistry::load(cfg.preset_dir);
    if (!registry.contains(cfg.preset)) {
      err << "error: unknown preset '" << cfg.preset << "'\n";
      return kExitUsage;
    }
    const auto backbone = registry.make_backbone(cfg.preset);
    const GridShape grid = backbone->descriptor().capture_grid();
    for (const auto& text : cfg.clicks) {
      const auto click = parse_click(text);
      if (!click) {
        err << "error: malformed --click '" << text << "' (expected u,v,+ or u,v,- with u,v in [0,1])\n";
        return kExitUsage;
      }
      request.clicks.add(click->first, click->second, grid);
    }
    if (request.clicks.positives.empty()) {
      err << "error: at least one positive --click is required\n";
      return kExitUsage;
    }

    request.image = read_image(cfg.input);
    const RemovalResult result = remove_object(*backbone, request);
    write_image(cfg.output, result.output);

    nlohmann::json summary = {
        {"output", cfg.output},
        {"preset", cfg.preset},
        {"duration_ms", std::chrono::duration<double, std::milli>(result.duration).count()},
        {"flag", result.no_object_found ? nlohmann::json("NO_OBJECT_FOUND") : nlohmann::json(nullptr)}};
    nlohmann::json stages = nlohmann::json::object();
    for (Stage s : kAllStages) stages[std::string(stage_name(s))] = result.stage_lengths[static_cast<int>(s)];
    summary["stages"] = stages;

    if (cfg.dump_maps) {
      const auto& desc = backbone->descriptor();
      const RemovalMaps maps = resize_maps(result.maps, desc.latent_grid);
      std::vector<double> ob(maps.m_ob.begin(), maps.m_ob.end());
      const auto ob_path = sibling(cfg.output, ".m_ob");
      const auto bg_path = sibling(cfg.output, ".m_bg");
      write_image(ob_path, gray_image(ob, maps.grid.width, maps.grid.height));
      write_image(bg_path, gray_image(maps.m_bg_tilde, maps.grid.width, maps.grid.height));
      summary["maps"] = {{"m_ob", ob_path.string()}, {"m_bg_tilde", bg_path.string()},
                         {"grid", {maps.grid.height, maps.grid.width}}};
    }
    if (result.no_object_found) {
      err << "warning: NO_OBJECT_FOUND, output is a plain reconstruction\n";
    }
    out << summary.dump() << std::endl;
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace clickerase::cli
