// Report writers: delimited tables with deterministic formatting. Anything
// time-dependent (wall clock, timestamps) goes to the metadata file only, so
// identical config + seed reproduces the data files byte for byte.
#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lmtp/density_ratio.hpp"
#include "lmtp/estimators.hpp"
#include "lmtp/simulation.hpp"

namespace lmtp {

inline std::string format_value(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline std::ofstream open_report(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write report file " + path);
  return out;
}

struct LabeledEstimate {
  std::string policy;
  Estimate estimate;
};

inline void write_estimates_csv(const std::string& path,
                                const std::vector<LabeledEstimate>& rows) {
  auto out = open_report(path);
  out << "policy,estimator,estimate,se,ci_low,ci_high,alpha,truncation_quantile,folds,"
         "degenerate,note\n";
  for (const auto& r : rows) {
    const Estimate& e = r.estimate;
    out << r.policy << "," << e.estimator << "," << format_value(e.psi) << ","
        << format_value(e.se) << "," << format_value(e.ci_low) << ","
        << format_value(e.ci_high) << "," << format_value(e.alpha) << ","
        << format_value(e.truncation_quantile) << "," << e.folds << ","
        << (e.degenerate ? 1 : 0) << "," << e.note << "\n";
  }
}

inline void write_positivity_csv(const std::string& path, const PositivitySummary& sum) {
  auto out = open_report(path);
  out << "time,min,q25,median,q75,max,mean,alerts,alert_threshold\n";
  for (const auto& r : sum.rows)
    out << r.t << "," << format_value(r.min) << "," << format_value(r.q25) << ","
        << format_value(r.median) << "," << format_value(r.q75) << ","
        << format_value(r.max) << "," << format_value(r.mean) << "," << r.alerts << ","
        << format_value(sum.alert_threshold) << "\n";
}

inline void write_scenarios_csv(const std::string& path,
                                const std::vector<ScenarioCell>& cells) {
  auto out = open_report(path);
  out << "scenario,estimator,truth,bias,mc_sd,mean_se,coverage,replicates\n";
  for (const auto& c : cells)
    out << c.scenario << "," << c.estimator << "," << format_value(c.truth) << ","
        << format_value(c.bias) << "," << format_value(c.mc_sd) << ","
        << format_value(c.mean_se) << "," << format_value(c.coverage) << ","
        << c.replicates << "\n";
}

inline void write_curve_csv(const std::string& path, const SurvivalCurve& curve) {
  auto out = open_report(path);
  out << "horizon,estimate,se,ci_low,ci_high,band_low,band_high\n";
  for (std::size_t h = 0; h < curve.horizons.size(); ++h) {
    const Estimate& e = curve.horizons[h];
    const double bw = curve.band_half_width[h];
    out << (h + 1) << "," << format_value(e.psi) << "," << format_value(e.se) << ","
        << format_value(e.ci_low) << "," << format_value(e.ci_high) << ","
        << format_value(e.psi - bw) << "," << format_value(e.psi + bw) << "\n";
  }
}

// Nuisance provenance: which learners, folds, and data repairs fed the run.
inline void write_provenance_csv(const std::string& path, const NuisanceConfig& cfg,
                                 const std::vector<std::string>& validation_notes) {
  auto out = open_report(path);
  out << "section,detail\n";
  auto describe = [&](const char* role, const std::vector<LearnerSpec>& specs) {
    for (const auto& s : specs) {
      out << role << "," << family_name(s.family);
      if (s.saturated) out << " saturated";
      if (s.ridge > 0) out << " ridge=" << format_value(s.ridge);
      if (s.family == Family::Knn) out << " k=" << s.k;
      if (s.family == Family::Tree)
        out << " max_depth=" << s.max_depth << " min_leaf=" << s.min_leaf;
      if (!s.features.empty()) {
        out << " features=";
        for (std::size_t i = 0; i < s.features.size(); ++i)
          out << (i ? "|" : "") << s.features[i];
      }
      out << "\n";
    }
  };
  describe("outcome-learner", cfg.outcome_learners);
  describe("ratio-learner", cfg.ratio_learners);
  out << "cross-fit-folds," << cfg.cross_fit_folds << "\n";
  out << "cv-folds," << cfg.cv_folds << "\n";
  out << "truncation-quantile," << format_value(cfg.truncation_quantile) << "\n";
  for (const auto& note : validation_notes) out << "data-repair," << note << "\n";
}

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Timestamps and wall time live here and only here.
inline void write_metadata(const std::string& path, const std::string& command,
                           const std::string& config_path, std::uint64_t config_hash,
                           double wall_seconds) {
  auto out = open_report(path);
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[64];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  out << "key,value\n";
  out << "command," << command << "\n";
  out << "config," << config_path << "\n";
  out << "config_hash," << std::hex << config_hash << std::dec << "\n";
  out << "timestamp," << stamp << "\n";
  out << "wall_seconds," << format_value(wall_seconds) << "\n";
}

}  // namespace lmtp
