// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Object-removal benchmark harness. Generated images are compared with
// target-free reference images globally (FID, KID) and on square crops around
// the annotated object box (Local-FID).
//
// Record schema, one JSON object per line:
//   {"id": "0001", "source": "src/0001.png", "reference": "ref/0001.png",
//    "clicks": [{"u": 0.41, "v": 0.52, "polarity": "+"}],
//    "bbox": [x, y, w, h]}
// Relative paths resolve against the records file's directory.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clickerase/backbone.hpp"
#include "clickerase/image.hpp"
#include "clickerase/metrics.hpp"
#include "clickerase/pipeline.hpp"
#include "clickerase/semantic_map.hpp"

namespace clickerase {

inline constexpr int kLocalCropMinSide = 299;

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct CropRect {
  int x = 0;
  int y = 0;
  int side = 0;

  friend bool operator==(const CropRect&, const CropRect&) = default;
};

/// Square of side min(max(longer bbox side, 299), shorter image side),
/// centered on the box and translated back inside the image.
/// Throws ValidationError when the box is empty or leaves the image.
CropRect local_crop_rect(int image_width, int image_height, const BoundingBox& bbox);
Image local_crop(const Image& image, const BoundingBox& bbox);

struct BenchmarkRecord {
  std::string id;
  std::filesystem::path source;
  std::filesystem::path reference;
  ClickSet clicks;
  BoundingBox bbox;
};

/// Throws ValidationError naming the offending line.
std::vector<BenchmarkRecord> read_records(const std::filesystem::path& jsonl);
void write_records(const std::filesystem::path& jsonl, std::span<const BenchmarkRecord> records);

class MethodRunner {
 public:
  virtual ~MethodRunner() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::string interaction() const = 0;  // "C" click, "M" mask, "T" text
  [[nodiscard]] virtual bool extra_training() const = 0;
  [[nodiscard]] virtual Image run(const BenchmarkRecord& record, const Image& source) = 0;
};

struct ClickMethodConfig {
  GuidanceSchedule schedule;
  PropagationConfig propagation;
  std::uint64_t seed = 0;
};

/// Click-driven removal through a backbone.
class ClickEraseMethod final : public MethodRunner {
 public:
  ClickEraseMethod(std::shared_ptr<const Backbone> backbone, ClickMethodConfig config);
  [[nodiscard]] std::string name() const override { return "clickerase-" + backbone_->descriptor().preset; }
  [[nodiscard]] std::string interaction() const override { return "C"; }
  [[nodiscard]] bool extra_training() const override { return false; }
  [[nodiscard]] Image run(const BenchmarkRecord& record, const Image& source) override;

 private:
  std::shared_ptr<const Backbone> backbone_;
  ClickMethodConfig config_;
};

/// Returns the source unchanged (lower bound on removal).
class IdentityMethod final : public MethodRunner {
 public:
  [[nodiscard]] std::string name() const override { return "identity"; }
  [[nodiscard]] std::string interaction() const override { return "M"; }
  [[nodiscard]] bool extra_training() const override { return false; }
  [[nodiscard]] Image run(const BenchmarkRecord&, const Image& source) override { return source; }
};

/// Returns the reference image (metric sanity check: all distances zero).
class ReferenceMethod final : public MethodRunner {
 public:
  [[nodiscard]] std::string name() const override { return "reference"; }
  [[nodiscard]] std::string interaction() const override { return "M"; }
  [[nodiscard]] bool extra_training() const override { return false; }
  [[nodiscard]] Image run(const BenchmarkRecord& record, const Image&) override {
    return read_image(record.reference);
  }
};

enum class CropMode { resize_299, native };

struct BenchmarkOptions {
  CropMode crop_mode = CropMode::resize_299;
};

struct RecordTiming {
  std::string id;
  double runtime_s = 0.0;
};

struct MetricReport {
  std::string method;
  std::string interaction;
  bool extra_training = false;
  std::string metric_provider;
  double fid = 0.0;
  double kid_x1e3 = 0.0;
  double local_fid = 0.0;
  double mean_runtime_s = 0.0;
  double peak_memory_gb = 0.0;
  int sample_count = 0;
  int skipped_count = 0;
  std::vector<std::string> skipped;  // "id: reason"
  std::vector<RecordTiming> timings;
};

/// Throws ValidationError when no record is usable.
MetricReport run_benchmark(std::span<const BenchmarkRecord> records, MethodRunner& method,
                           const MetricProvider& metrics, const BenchmarkOptions& options = {});

std::string report_to_json(const MetricReport& report);

/// Writes `count` synthetic 64x64 scenes (flat background + one square object),
/// their object-free references and a records.jsonl into `dir`.
std::filesystem::path write_synthetic_benchmark(const std::filesystem::path& dir, int count,
                                                std::uint64_t seed);

}  // namespace clickerase
