#include "sdestab/report.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "sdestab/errors.hpp"

namespace sdestab {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_string(RateModel model) {
  return model == RateModel::LOG_POWER ? "LOG_POWER" : "POWER";
}

std::string to_string(Verdict verdict) {
  return verdict == Verdict::CONSISTENT ? "CONSISTENT" : "VIOLATED";
}

void write_error_csv(std::ostream& os, std::span<const ErrorEstimate> rows) {
  os << "n,p,terminal_error,terminal_ci,sup_error,sup_ci,replicas,h,seed\n";
  for (const auto& e : rows) {
    os << e.n << ',' << format_double(e.p) << ','
       << format_double(e.terminal_error) << ','
       << format_double(e.terminal_ci) << ',' << format_double(e.sup_error)
       << ',' << format_double(e.sup_ci) << ',' << e.replicas << ','
       << format_double(e.h) << ',' << e.seed << '\n';
  }
}

void write_error_csv(const std::filesystem::path& file,
                     std::span<const ErrorEstimate> rows) {
  std::ofstream os(file, std::ios::binary);  // binary: stable line endings
  if (!os) throw SetupError("cannot open for writing: " + file.string());
  write_error_csv(os, rows);
  if (!os) throw SetupError("write failed: " + file.string());
}

std::vector<ErrorEstimate> read_error_csv(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw SetupError("cannot open for reading: " + file.string());
  std::string line;
  if (!std::getline(is, line))
    throw SetupError("empty csv: " + file.string());
  std::vector<ErrorEstimate> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    ErrorEstimate e;
    auto next = [&]() -> std::string {
      if (!std::getline(ls, cell, ','))
        throw SetupError("short csv row in " + file.string());
      return cell;
    };
    e.n = std::stoll(next());
    e.p = std::stod(next());
    e.terminal_error = std::stod(next());
    e.terminal_ci = std::stod(next());
    e.sup_error = std::stod(next());
    e.sup_ci = std::stod(next());
    e.replicas = static_cast<std::size_t>(std::stoull(next()));
    e.h = std::stod(next());
    e.seed = std::stoull(next());
    rows.push_back(e);
  }
  return rows;
}

nlohmann::ordered_json fit_to_json(const RateFit& fit) {
  return nlohmann::ordered_json{{"model", to_string(fit.model)},
                                {"C", fit.C},
                                {"q", fit.q},
                                {"r2", fit.r_squared},
                                {"n_min", fit.n_min},
                                {"n_max", fit.n_max}};
}

nlohmann::ordered_json verdict_to_json(const BoundVerdict& verdict) {
  return nlohmann::ordered_json{{"status", to_string(verdict.status)},
                                {"witness_n", verdict.witness_n},
                                {"C_hat", verdict.c_hat},
                                {"safety", verdict.safety},
                                {"q_claimed", verdict.q_claimed}};
}

nlohmann::ordered_json summary_to_json(const ExperimentSummary& summary) {
  nlohmann::ordered_json j;
  j["experiment_id"] = summary.experiment_id;
  j["family"] = summary.family;
  j["driver"] = summary.driver;
  if (summary.stable_moment) {
    j["alpha"] = summary.alpha;
    j["p"] = summary.alpha - 1.0;
  } else {
    j["p"] = summary.p;
  }
  j["n_list"] = summary.n_list;
  nlohmann::ordered_json errs = nlohmann::ordered_json::array();
  for (const auto& e : summary.errors) {
    errs.push_back(nlohmann::ordered_json{{"n", e.n},
                                          {"p", e.p},
                                          {"terminal_error", e.terminal_error},
                                          {"terminal_ci", e.terminal_ci},
                                          {"sup_error", e.sup_error},
                                          {"sup_ci", e.sup_ci},
                                          {"replicas", e.replicas},
                                          {"h", e.h}});
  }
  j["errors"] = errs;
  if (summary.fit) j["fit"] = fit_to_json(*summary.fit);
  if (summary.verdict) j["verdict"] = verdict_to_json(*summary.verdict);
  j["config_echo"] = summary.config_echo;
  j["seed"] = summary.seed;
  return j;
}

void write_summary_json(const std::filesystem::path& file,
                        const ExperimentSummary& summary) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw SetupError("cannot open for writing: " + file.string());
  os << summary_to_json(summary).dump(2) << '\n';
  if (!os) throw SetupError("write failed: " + file.string());
}

void write_plot_data(const std::filesystem::path& file,
                     const std::string& claim, const std::string& x_label,
                     const std::string& y_label, std::span<const double> x,
                     std::span<const double> y,
                     std::span<const double> band) {
  if (x.size() != y.size() || (!band.empty() && band.size() != x.size()))
    throw InvalidInput("write_plot_data: series length mismatch");
  std::ofstream os(file, std::ios::binary);
  if (!os) throw SetupError("cannot open for writing: " + file.string());
  os << "# claim: " << claim << '\n';
  os << "# x: " << x_label << "  y: " << y_label << '\n';
  os << x_label << ',' << y_label;
  if (!band.empty()) os << ",band95";
  os << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) {
    os << format_double(x[i]) << ',' << format_double(y[i]);
    if (!band.empty()) os << ',' << format_double(band[i]);
    os << '\n';
  }
  if (!os) throw SetupError("write failed: " + file.string());
}

}  // namespace sdestab
