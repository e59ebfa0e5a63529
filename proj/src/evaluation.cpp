// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/evaluation.hpp"

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include <spdlog/spdlog.h>

#include "clickerase/errors.hpp"
#include "json.hpp"

namespace clickerase {

namespace {

using nlohmann::json;

double peak_memory_gb() {
  rusage usage{};
  if (getrusage(RUSAGE_SELF, &usage) != 0) return 0.0;
  return static_cast<double>(usage.ru_maxrss) / (1024.0 * 1024.0);  // ru_maxrss is KiB on Linux
}

Polarity parse_polarity(const std::string& s) {
  if (s == "+" || s == "positive") return Polarity::positive;
  if (s == "-" || s == "negative") return Polarity::negative;
  throw ValidationError("polarity must be \"+\" or \"-\", got \"" + s + "\"");
}

Image prepare_crop(const Image& image, const BoundingBox& bbox, CropMode mode) {
  Image crop = local_crop(image, bbox);
  if (mode == CropMode::resize_299) crop = resize_image(crop, kLocalCropMinSide, kLocalCropMinSide);
  return crop;
}

}  // namespace

CropRect local_crop_rect(int image_width, int image_height, const BoundingBox& bbox) {
  if (bbox.width < 1 || bbox.height < 1 || bbox.x < 0 || bbox.y < 0 ||
      bbox.x + bbox.width > image_width || bbox.y + bbox.height > image_height) {
    throw ValidationError("bbox [" + std::to_string(bbox.x) + ", " + std::to_string(bbox.y) + ", " +
                          std::to_string(bbox.width) + ", " + std::to_string(bbox.height) +
                          "] is empty or outside the " + std::to_string(image_width) + "x" +
                          std::to_string(image_height) + " image");
  }
  const int wanted = std::max(std::max(bbox.width, bbox.height), kLocalCropMinSide);
  const int side = std::min(wanted, std::min(image_width, image_height));
  const double cx = bbox.x + bbox.width / 2.0;
  const double cy = bbox.y + bbox.height / 2.0;
  const int x = std::clamp(static_cast<int>(std::lround(cx - side / 2.0)), 0, image_width - side);
  const int y = std::clamp(static_cast<int>(std::lround(cy - side / 2.0)), 0, image_height - side);
  return {x, y, side};
}

Image local_crop(const Image& image, const BoundingBox& bbox) {
  const CropRect rect = local_crop_rect(image.width, image.height, bbox);
  return crop_image(image, rect.x, rect.y, rect.side, rect.side);
}

std::vector<BenchmarkRecord> read_records(const std::filesystem::path& jsonl) {
  std::ifstream in(jsonl);
  if (!in) throw ValidationError("cannot open records file " + jsonl.string());
  const std::filesystem::path base = jsonl.parent_path();
  std::vector<BenchmarkRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      BenchmarkRecord r;
      r.id = j.contains("id") ? j["id"].get<std::string>() : std::to_string(line_no);
      r.source = base / j.at("source").get<std::string>();
      r.reference = base / j.at("reference").get<std::string>();
      for (const auto& c : j.value("clicks", json::array())) {
        const Click click{c.at("u").get<double>(), c.at("v").get<double>()};
        auto& list = parse_polarity(c.value("polarity", std::string("+"))) == Polarity::positive
                         ? r.clicks.positives
                         : r.clicks.negatives;
        list.push_back(click);
      }
      r.clicks.validate();
      const auto& b = j.at("bbox");
      r.bbox = {b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ValidationError(jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ValidationError(jsonl.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void write_records(const std::filesystem::path& jsonl, std::span<const BenchmarkRecord> records) {
  std::ofstream out(jsonl);
  if (!out) throw std::runtime_error("cannot write " + jsonl.string());
  const std::filesystem::path base = jsonl.parent_path();
  for (const auto& r : records) {
    json clicks = json::array();
    for (const auto& c : r.clicks.positives) clicks.push_back({{"u", c.u}, {"v", c.v}, {"polarity", "+"}});
    for (const auto& c : r.clicks.negatives) clicks.push_back({{"u", c.u}, {"v", c.v}, {"polarity", "-"}});
    const json j = {{"id", r.id},
                    {"source", std::filesystem::relative(r.source, base).generic_string()},
                    {"reference", std::filesystem::relative(r.reference, base).generic_string()},
                    {"clicks", clicks},
                    {"bbox", {r.bbox.x, r.bbox.y, r.bbox.width, r.bbox.height}}};
    out << j.dump() << '\n';
  }
}

ClickEraseMethod::ClickEraseMethod(std::shared_ptr<const Backbone> backbone,
                                       ClickMethodConfig config)
    : backbone_(std::move(backbone)), config_(std::move(config)) {}

Image ClickEraseMethod::run(const BenchmarkRecord& record, const Image& source) {
  RemovalRequest request;
  request.image = source;
  request.clicks = record.clicks;
  request.schedule = config_.schedule;
  request.propagation = config_.propagation;
  request.preset = backbone_->descriptor().preset;
  request.seed = config_.seed;
  return remove_object(*backbone_, request).output;
}

MetricReport run_benchmark(std::span<const BenchmarkRecord> records, MethodRunner& method,
                           const MetricProvider& metrics, const BenchmarkOptions& options) {
  MetricReport report;
  report.method = method.name();
  report.interaction = method.interaction();
  report.extra_training = method.extra_training();
  report.metric_provider = metrics.name();

  std::vector<Image> outputs;
  std::vector<Image> references;
  std::vector<Image> output_crops;
  std::vector<Image> reference_crops;
  double runtime_total = 0.0;

  for (const auto& record : records) {
    const auto skip = [&](const std::string& why) {
      spdlog::warn("record {} skipped: {}", record.id, why);
      report.skipped.push_back(record.id + ": " + why);
    };
    if (!std::filesystem::exists(record.source)) { skip("missing source " + record.source.string()); continue; }
    if (!std::filesystem::exists(record.reference)) { skip("missing reference " + record.reference.string()); continue; }
    try {
      const Image source = read_image(record.source);
      const Image reference = read_image(record.reference);
      if (source.width != reference.width || source.height != reference.height) {
        skip("reference size differs from source");
        continue;
      }
      (void)local_crop_rect(source.width, source.height, record.bbox);

      const auto started = std::chrono::steady_clock::now();
      Image output = method.run(record, source);
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      if (output.width != source.width || output.height != source.height) {
        output = resize_image(output, source.width, source.height);
      }
      spdlog::info("record {}: {:.3f} s", record.id, secs);
      report.timings.push_back({record.id, secs});
      runtime_total += secs;

      output_crops.push_back(prepare_crop(output, record.bbox, options.crop_mode));
      reference_crops.push_back(prepare_crop(reference, record.bbox, options.crop_mode));
      outputs.push_back(std::move(output));
      references.push_back(reference);
    } catch (const ValidationError& e) {
      skip(e.what());
    }
  }

  report.skipped_count = static_cast<int>(report.skipped.size());
  report.sample_count = static_cast<int>(outputs.size());
  if (outputs.empty()) throw ValidationError("no valid benchmark records");
  if (outputs.size() < 2) throw ValidationError("FID/KID need at least two valid records");

  report.fid = metrics.fid(outputs, references);
  report.kid_x1e3 = metrics.kid(outputs, references) * 1e3;
  report.local_fid = metrics.fid(output_crops, reference_crops);
  report.mean_runtime_s = runtime_total / report.sample_count;
  report.peak_memory_gb = peak_memory_gb();
  return report;
}

std::string report_to_json(const MetricReport& report) {
  json timings = json::array();
  for (const auto& t : report.timings) timings.push_back({{"id", t.id}, {"runtime_s", t.runtime_s}});
  const json j = {{"method", report.method},
                  {"interaction", report.interaction},
                  {"extra_training", report.extra_training},
                  {"metric_provider", report.metric_provider},
                  {"fid", report.fid},
                  {"kid_x1e3", report.kid_x1e3},
                  {"local_fid", report.local_fid},
                  {"inference_time_s", report.mean_runtime_s},
                  {"memory_gb", report.peak_memory_gb},
                  {"samples", report.sample_count},
                  {"skipped", report.skipped_count},
                  {"skipped_records", report.skipped},
                  {"per_record", timings}};
  return j.dump(2);
}

std::filesystem::path write_synthetic_benchmark(const std::filesystem::path& dir, int count,
                                                std::uint64_t seed) {
  constexpr int kSide = 64;
  constexpr int kCell = 8;
  constexpr int kObject = 16;
  std::filesystem::create_directories(dir / "source");
  std::filesystem::create_directories(dir / "reference");
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> tone(40, 200);
  std::uniform_int_distribution<int> cell(0, (kSide - kObject) / kCell);

  std::vector<BenchmarkRecord> records;
  for (int i = 0; i < count; ++i) {
    const std::uint8_t bg[3] = {static_cast<std::uint8_t>(tone(gen)), static_cast<std::uint8_t>(tone(gen)),
                                static_cast<std::uint8_t>(tone(gen))};
    std::uint8_t fg[3];
    for (int c = 0; c < 3; ++c) fg[c] = static_cast<std::uint8_t>(bg[c] > 128 ? bg[c] - 100 : bg[c] + 50);
    const int ox = cell(gen) * kCell;
    const int oy = cell(gen) * kCell;

    Image reference(kSide, kSide);
    for (int y = 0; y < kSide; ++y) {
      for (int x = 0; x < kSide; ++x) {
        for (int c = 0; c < 3; ++c) reference.at(x, y, c) = bg[c];
      }
    }
    Image source = reference;
    for (int y = oy; y < oy + kObject; ++y) {
      for (int x = ox; x < ox + kObject; ++x) {
        for (int c = 0; c < 3; ++c) source.at(x, y, c) = fg[c];
      }
    }

    char id[16];
    std::snprintf(id, sizeof id, "%04d", i);
    BenchmarkRecord r;
    r.id = id;
    r.source = dir / "source" / (r.id + ".png");
    r.reference = dir / "reference" / (r.id + ".png");
    r.clicks.positives.push_back({(ox + kObject / 2.0) / kSide, (oy + kObject / 2.0) / kSide});
    r.bbox = {ox, oy, kObject, kObject};
    write_image(r.source, source);
    write_image(r.reference, reference);
    records.push_back(std::move(r));
  }
  const auto path = dir / "records.jsonl";
  write_records(path, records);
  return path;
}

}  // namespace clickerase
