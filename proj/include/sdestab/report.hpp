#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdestab/rate_analysis.hpp"
#include "sdestab/sde_engine.hpp"

namespace sdestab {

// Everything one experiment reports: measured errors, the fitted rate law,
// and the shape-compatibility verdict, plus enough echo to reproduce it.
struct ExperimentSummary {
  std::string experiment_id;
  std::string family;
  std::string driver;       // "WIENER" or "STABLE"
  bool stable_moment = false;  // true: moment order is alpha-1
  double p = 1.0;
  double alpha = 0.0;
  std::vector<std::int64_t> n_list;
  std::vector<ErrorEstimate> errors;
  std::optional<RateFit> fit;
  std::optional<BoundVerdict> verdict;
  nlohmann::ordered_json config_echo;
  std::uint64_t seed = 0;
};

// Shortest round-trip decimal form; deterministic across reruns.
std::string format_double(double v);

// CSV schema: n,p,terminal_error,terminal_ci,sup_error,sup_ci,replicas,h,seed
void write_error_csv(std::ostream& os, std::span<const ErrorEstimate> rows);
void write_error_csv(const std::filesystem::path& file,
                     std::span<const ErrorEstimate> rows);
std::vector<ErrorEstimate> read_error_csv(const std::filesystem::path& file);

nlohmann::ordered_json summary_to_json(const ExperimentSummary& summary);
void write_summary_json(const std::filesystem::path& file,
                        const ExperimentSummary& summary);

// Plot-data CSV: x/y(/band) series with a leading comment naming the claim
// and axes, for external rendering.
void write_plot_data(const std::filesystem::path& file,
                     const std::string& claim, const std::string& x_label,
                     const std::string& y_label,
                     std::span<const double> x, std::span<const double> y,
                     std::span<const double> band = {});

std::string to_string(RateModel model);
std::string to_string(Verdict verdict);
nlohmann::ordered_json fit_to_json(const RateFit& fit);
nlohmann::ordered_json verdict_to_json(const BoundVerdict& verdict);

}  // namespace sdestab
