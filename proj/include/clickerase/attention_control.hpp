// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "clickerase/grid.hpp"
#include "clickerase/semantic_map.hpp"

namespace clickerase {

enum class Stage { untouched = 0, object_and_bg = 1, object_only = 2, free = 3 };

inline constexpr std::array<Stage, 4> kAllStages = {Stage::untouched, Stage::object_and_bg,
                                                    Stage::object_only, Stage::free};

/// "UNTOUCHED", "OBJECT_AND_BG", "OBJECT_ONLY", "FREE".
std::string_view stage_name(Stage stage);

/// Denoising-time control of attention redirection and output blending.
struct GuidanceSchedule {
  int total_steps = 50;
  double untouched_fraction = 0.2;
  int bg_steps = 8;
  double free_fraction = 0.2;
  double alpha_start = 0.2;
  double lambda = 1e4;
  double r = 0.8;

  /// Throws ArgumentError on out-of-domain fields; warns if bg_steps is outside 5..10.
  void validate() const;
};

struct StagePlan {
  std::vector<Stage> stages;  // one per denoising step
  std::vector<double> alpha;  // 1 outside OBJECT_AND_BG

  [[nodiscard]] std::array<int, 4> lengths() const;
  [[nodiscard]] int length(Stage stage) const { return lengths()[static_cast<int>(stage)]; }
};

/// UNTOUCHED takes ceil(untouched_fraction*T) steps, OBJECT_AND_BG bg_steps,
/// FREE floor(free_fraction*T), OBJECT_ONLY the remainder. Alpha rises
/// linearly from alpha_start to 1 across OBJECT_AND_BG. Throws ConfigError
/// when the fixed stages do not fit in total_steps.
StagePlan build_stage_plan(const GuidanceSchedule& schedule);

/// Key-axis modulation for one attention resolution.
struct LogitModulation {
  GridShape grid;
  std::vector<double> g_bg;  // multiplicative, (0,1]
  std::vector<double> p_ob;  // additive, {0, -lambda}

  [[nodiscard]] bool is_identity() const;
};

/// g_bg = 1 - (1 - alpha) * m_bg_tilde, p_ob = -lambda * m_ob.
LogitModulation modulation_for(const RemovalMaps& maps, double alpha, double lambda);

/// S'[q,k] = S[q,k] * g_bg[k] + p_ob[k]. Keys with g_bg = 1 and p_ob = 0 are
/// left bit-identical.
void redirect_logits_inplace(Eigen::Ref<Eigen::MatrixXd> logits, const LogitModulation& mod);
Eigen::MatrixXd redirect_logits(const Eigen::MatrixXd& logits, const LogitModulation& mod);

}  // namespace clickerase
