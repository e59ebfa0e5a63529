// Copyright 2026 The clickerase Authors
// SPDX-License-Identifier: Apache-2.0

#include "clickerase/attention_control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "clickerase/errors.hpp"

namespace clickerase {

namespace {

// Fractions like 0.2 * 50 land a few ulps off an integer.
constexpr double kRoundingSlack = 1e-9;

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::untouched: return "UNTOUCHED";
    case Stage::object_and_bg: return "OBJECT_AND_BG";
    case Stage::object_only: return "OBJECT_ONLY";
    case Stage::free: return "FREE";
  }
  return "UNKNOWN";
}

void GuidanceSchedule::validate() const {
  if (!(untouched_fraction >= 0.0 && untouched_fraction < 1.0)) {
    throw ArgumentError("untouched_fraction must lie in [0,1), got " +
                        std::to_string(untouched_fraction));
  }
  if (!(free_fraction >= 0.0 && free_fraction < 1.0)) {
    throw ArgumentError("free_fraction must lie in [0,1), got " + std::to_string(free_fraction));
  }
  if (bg_steps < 0) throw ArgumentError("bg_steps must be >= 0");
  if (!(alpha_start >= 0.0 && alpha_start < 1.0)) {
    throw ArgumentError("alpha_start must lie in [0,1), got " + std::to_string(alpha_start));
  }
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be > 0");
  if (!(r >= 0.0 && r <= 1.0)) throw ArgumentError("r must lie in [0,1], got " + std::to_string(r));
  if (bg_steps < 5 || bg_steps > 10) {
    spdlog::warn("bg_steps={} is outside the usual 5..10 range", bg_steps);
  }
}

std::array<int, 4> StagePlan::lengths() const {
  std::array<int, 4> out{};
  for (Stage s : stages) ++out[static_cast<int>(s)];
  return out;
}

StagePlan build_stage_plan(const GuidanceSchedule& schedule) {
  schedule.validate();
  const int total = schedule.total_steps;
  if (total < 4) throw ConfigError("total_steps must be >= 4, got " + std::to_string(total));

  const int untouched =
      static_cast<int>(std::ceil(schedule.untouched_fraction * total - kRoundingSlack));
  const int free = static_cast<int>(std::floor(schedule.free_fraction * total + kRoundingSlack));
  const int bg = schedule.bg_steps;
  const int object_only = total - untouched - bg - free;
  if (object_only < 0) {
    throw ConfigError("untouched_fraction, bg_steps and free_fraction need " +
                      std::to_string(untouched + bg + free) + " steps but total_steps is " +
                      std::to_string(total));
  }

  StagePlan plan;
  plan.stages.reserve(static_cast<std::size_t>(total));
  plan.alpha.reserve(static_cast<std::size_t>(total));
  auto append = [&](Stage s, int n) {
    for (int i = 0; i < n; ++i) {
      plan.stages.push_back(s);
      plan.alpha.push_back(1.0);
    }
  };
  append(Stage::untouched, untouched);
  for (int k = 0; k < bg; ++k) {
    plan.stages.push_back(Stage::object_and_bg);
    const double frac = bg > 1 ? static_cast<double>(k) / (bg - 1) : 1.0;
    plan.alpha.push_back(schedule.alpha_start + (1.0 - schedule.alpha_start) * frac);
  }
  append(Stage::object_only, object_only);
  append(Stage::free, free);
  return plan;
}

bool LogitModulation::is_identity() const {
  return std::all_of(g_bg.begin(), g_bg.end(), [](double g) { return g == 1.0; }) &&
         std::all_of(p_ob.begin(), p_ob.end(), [](double p) { return p == 0.0; });
}

LogitModulation modulation_for(const RemovalMaps& maps, double alpha, double lambda) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ArgumentError("alpha must lie in [0,1], got " + std::to_string(alpha));
  }
  if (!(lambda > 0.0)) throw ArgumentError("lambda must be > 0");
  LogitModulation mod{maps.grid, std::vector<double>(maps.grid.size()),
                      std::vector<double>(maps.grid.size())};
  for (std::size_t i = 0; i < maps.grid.size(); ++i) {
    mod.g_bg[i] = 1.0 - (1.0 - alpha) * maps.m_bg_tilde[i];
    mod.p_ob[i] = maps.m_ob[i] ? -lambda : 0.0;
  }
  return mod;
}

void redirect_logits_inplace(Eigen::Ref<Eigen::MatrixXd> logits, const LogitModulation& mod) {
  if (static_cast<std::size_t>(logits.cols()) != mod.grid.size()) {
    throw ShapeError("logits have " + std::to_string(logits.cols()) + " keys but modulation is " +
                     mod.grid.str());
  }
  for (Eigen::Index k = 0; k < logits.cols(); ++k) {
    const double g = mod.g_bg[static_cast<std::size_t>(k)];
    const double p = mod.p_ob[static_cast<std::size_t>(k)];
    if (g != 1.0) {
      // Masked keys stay -inf (-inf * 0 would be NaN).
      logits.col(k) = logits.col(k).unaryExpr([g](double v) { return std::isinf(v) ? v : v * g; });
    }
    if (p != 0.0) logits.col(k).array() += p;
  }
}

Eigen::MatrixXd redirect_logits(const Eigen::MatrixXd& logits, const LogitModulation& mod) {
  Eigen::MatrixXd out = logits;
  redirect_logits_inplace(out, mod);
  return out;
}

}  // namespace clickerase
