// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

// evalctl run   --records r.jsonl --method clickerase|identity|reference --out report.json
// evalctl synth --out dir [--count N] [--seed S]

#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"

#include "clickerase/evaluation.hpp"
#include "clickerase/metrics.hpp"
#include "clickerase/presets.hpp"

int main(int argc, char** argv) {
  using namespace clickerase;
  CLI::App app{"Benchmark driver"};
  app.require_subcommand(1);

  std::string records_path;
  std::string method_name = "clickerase";
  std::string out_path;
  std::string preset = "toy";
  std::string preset_dir;
  std::string crop_mode = "resize_299";
  ClickMethodConfig method_cfg;
  auto* run = app.add_subcommand("run", "Score a method on a records file");
  run->add_option("--records", records_path, "JSONL records file")->required();
  run->add_option("--method", method_name)
      ->check(CLI::IsMember({"clickerase", "identity", "reference"}))
      ->capture_default_str();
  run->add_option("--out", out_path, "Report JSON path")->required();
  run->add_option("--preset", preset)->capture_default_str();
  run->add_option("--preset-dir", preset_dir);
  run->add_option("--steps", method_cfg.schedule.total_steps)->capture_default_str();
  run->add_option("--r", method_cfg.schedule.r)->capture_default_str();
  run->add_option("--seed", method_cfg.seed)->capture_default_str();
  run->add_option("--crop-mode", crop_mode)
      ->check(CLI::IsMember({"resize_299", "native"}))
      ->capture_default_str();

  std::string synth_dir;
  int count = 20;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Write a synthetic benchmark");
  synth->add_option("--out", synth_dir)->required();
  synth->add_option("--count", count)->capture_default_str()->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      std::cout << write_synthetic_benchmark(synth_dir, count, synth_seed).string() << "\n";
      return 0;
    }
    const auto records = read_records(records_path);
    std::unique_ptr<MethodRunner> method;
    if (method_name == "identity") {
      method = std::make_unique<IdentityMethod>();
    } else if (method_name == "reference") {
      method = std::make_unique<ReferenceMethod>();
    } else {
      const auto registry = preset_dir.empty() ? PresetRegistry::load_default() : PresetRegistry::load(preset_dir);
      method = std::make_unique<ClickEraseMethod>(registry.make_backbone(preset), method_cfg);
    }
    BenchmarkOptions options;
    options.crop_mode = crop_mode == "native" ? CropMode::native : CropMode::resize_299;
    const FeatureMetricProvider metrics;
    const MetricReport report = run_benchmark(records, *method, metrics, options);
    const std::string text = report_to_json(report);
    std::ofstream(out_path) << text << "\n";
    std::cout << text << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
