#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdestab/harness.hpp"

using namespace sdestab;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "sdestab_harness" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const json& cfg) {
  const fs::path file = dir / "config.json";
  std::ofstream os(file);
  os << cfg.dump(2) << '\n';
  return file;
}

std::string slurp(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json battery_config(std::uint64_t seed) {
  return json{{"family",
               {{"builder", "mollified_jump"}, {"low", 1.0}, {"high", 2.0}}},
              {"n_list", {4, 8, 16, 32}},
              {"p_list", {1.0}},
              {"replicas", 50},
              {"h", 1.0 / 256},
              {"T", 1.0},
              {"x0", 0.0},
              {"seed", seed}};
}

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run_cli({"definitely-not-a-subcommand"}) == kExitUsage);
  CHECK(run_cli(std::vector<std::string>{}) == kExitUsage);
  CHECK(run_cli({"yw-table", "--no-such-flag"}) == kExitUsage);
  CHECK(run_cli({"simulate"}) == kExitUsage);  // --config is required
  CHECK(run_cli({"--help"}) == kExitOk);
}

TEST_CASE("yw-table writes the diagnostics table") {
  const fs::path dir = fresh_dir("ywtable");
  const fs::path cfg =
      write_config(dir, json{{"m_max", 3}, {"grid_points", 512}});
  CHECK(run_cli({"yw-table", "--config", cfg.string(), "--out",
                 (dir / "out").string()}) == kExitOk);
  const std::string table = slurp(dir / "out" / "yw_table.csv");
  CHECK(table.rfind("m,a_m,mass,envelope_margin,sandwich_margin,uprime_max\n",
                    0) == 0);
  std::istringstream is(table);
  std::string line;
  std::getline(is, line);
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    CHECK(std::stoi(cell) == rows);
    std::getline(ls, cell, ',');  // a_m
    std::getline(ls, cell, ',');  // mass
    CHECK(std::stod(cell) == doctest::Approx(1.0).epsilon(1e-8));
    std::getline(ls, cell, ',');  // envelope margin
    CHECK(std::stod(cell) >= 0.0);
    std::getline(ls, cell, ',');  // sandwich margin
    CHECK(std::stod(cell) >= 0.0);
    std::getline(ls, cell, ',');  // max |u'|
    CHECK(std::stod(cell) <= 1.0 + 1e-12);
  }
  CHECK(rows == 3);

  const auto manifest = json::parse(slurp(dir / "out" / "manifest.json"));
  CHECK(manifest["subcommand"] == "yw-table");
  CHECK(manifest["config"]["m_max"] == 3);
  CHECK(manifest.contains("version"));
  CHECK(manifest.contains("started_at"));
}

TEST_CASE("configuration problems exit 2") {
  const fs::path dir = fresh_dir("config_errors");
  CHECK(run_cli({"simulate", "--config",
                 (dir / "does_not_exist.json").string()}) == kExitConfig);

  const fs::path bad_json = dir / "bad.json";
  std::ofstream(bad_json) << "{ not json";
  CHECK(run_cli({"simulate", "--config", bad_json.string()}) == kExitConfig);

  const fs::path bad_builder = write_config(
      dir, json{{"family", {{"builder", "warp_drive"}}}, {"n", 4},
                {"seed", 1}});
  CHECK(run_cli({"simulate", "--config", bad_builder.string(), "--out",
                 (dir / "o1").string()}) == kExitConfig);

  // simulation subcommands demand a seed (config or --seed)
  const fs::path no_seed = write_config(
      dir,
      json{{"family",
            {{"builder", "mollified_jump"}, {"low", 1.0}, {"high", 2.0}}},
           {"n", 4}});
  CHECK(run_cli({"simulate", "--config", no_seed.string(), "--out",
                 (dir / "o2").string()}) == kExitConfig);

  // wrong driver for the battery type
  json cfg = battery_config(1);
  cfg["driver"] = "STABLE";
  cfg["alpha"] = 1.5;
  const fs::path wrong_driver = write_config(dir, cfg);
  CHECK(run_cli({"stability-rate", "--config", wrong_driver.string(),
                 "--out", (dir / "o3").string()}) == kExitConfig);
}

TEST_CASE("undominated coefficients are refused with exit 3") {
  const fs::path dir = fresh_dir("condition_gate");
  const json fam = {
      {"builder", "step_sigma"}, {"height", 1.0}, {"lo", 0.0}, {"hi", 1.0}};
  const fs::path check_cfg = write_config(dir, json{{"family", fam}});
  CHECK(run_cli({"check-coefficients", "--config", check_cfg.string(),
                 "--out", (dir / "check").string()}) == kExitCondition);
  const auto reports =
      json::parse(slurp(dir / "check" / "condition_reports.json"));
  REQUIRE(reports.is_array());
  REQUIRE(!reports.empty());
  CHECK(reports[0]["target"] == "limit");
  CHECK(reports[0]["pass"] == false);
  CHECK(reports[0]["worst_violation"].get<double>() > 0.0);

  json cfg = battery_config(1);
  cfg["family"] = fam;
  const fs::path battery_cfg = write_config(dir, cfg);
  CHECK(run_cli({"stability-rate", "--config", battery_cfg.string(), "--out",
                 (dir / "battery").string()}) == kExitCondition);

  // a well-behaved family passes the same gate
  const fs::path good = write_config(
      dir, json{{"family", {{"builder", "mollified_jump"}, {"low", 1.0},
                            {"high", 2.0}}},
                {"n_list", {4, 16}}});
  CHECK(run_cli({"check-coefficients", "--config", good.string(), "--out",
                 (dir / "good").string()}) == kExitOk);
}

TEST_CASE("runtime setup failures exit 4") {
  const fs::path dir = fresh_dir("runtime_errors");
  json cfg = battery_config(2);
  cfg["drift"] = {
      {"builder", "step"}, {"height", 0.5}, {"lo", 0.0}, {"hi", 1.0}};
  cfg["box_lo"] = 5.0;  // the transform base point 0 falls outside the box
  cfg["h_exp_min"] = 6;
  cfg["h_exp_max"] = 7;
  const fs::path bad_box = write_config(dir, cfg);
  CHECK(run_cli({"drift-removal", "--config", bad_box.string(), "--out",
                 (dir / "out").string()}) == kExitRuntime);
}

TEST_CASE("simulate writes the coupled path and optional noise dump") {
  const fs::path dir = fresh_dir("simulate");
  const fs::path cfg = write_config(
      dir,
      json{{"family",
            {{"builder", "mollified_jump"}, {"low", 1.0}, {"high", 2.0}}},
           {"n", 8},
           {"h", 1.0 / 64},
           {"T", 1.0},
           {"x0", 0.0},
           {"seed", 9}});
  CHECK(run_cli({"simulate", "--config", cfg.string(), "--out",
                 (dir / "a").string()}) == kExitOk);
  const std::string path_csv = slurp(dir / "a" / "path.csv");
  CHECK(path_csv.rfind("t,x,xn,y\n", 0) == 0);
  CHECK(std::count(path_csv.begin(), path_csv.end(), '\n') == 1 + 65);
  CHECK_FALSE(fs::exists(dir / "a" / "noise.bin"));

  CHECK(run_cli({"simulate", "--config", cfg.string(), "--out",
                 (dir / "b").string(), "--dump-noise"}) == kExitOk);
  CHECK(fs::exists(dir / "b" / "noise.bin"));
  const std::string dump = slurp(dir / "b" / "noise.bin");
  CHECK(dump.size() == 32 + 64 * sizeof(double));
  CHECK(dump.rfind("SDESTAB1", 0) == 0);

  // --seed overrides the config, and the override is echoed back
  CHECK(run_cli({"simulate", "--config", cfg.string(), "--out",
                 (dir / "c").string(), "--seed", "31"}) == kExitOk);
  const auto manifest = json::parse(slurp(dir / "c" / "manifest.json"));
  CHECK(manifest["seed"] == 31);
  CHECK(manifest["config"]["seed"] == 31);
}

TEST_CASE("stability battery artifacts and byte determinism across threads") {
  const fs::path dir = fresh_dir("battery");
  const fs::path cfg = write_config(dir, battery_config(3));
  const fs::path out1 = dir / "run1";
  const fs::path out2 = dir / "run2";
  CHECK(run_cli({"stability-rate", "--config", cfg.string(), "--out",
                 out1.string(), "--threads", "1"}) == kExitOk);
  CHECK(run_cli({"stability-rate", "--config", cfg.string(), "--out",
                 out2.string(), "--threads", "2"}) == kExitOk);

  for (const char* name :
       {"errors_p1.csv", "errors_p1_halfstep.csv", "summary_p1.json",
        "plot_p1.csv", "halving_p1.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(out1 / name));
    REQUIRE(fs::exists(out2 / name));
    CHECK(slurp(out1 / name) == slurp(out2 / name));  // byte identical
  }

  const auto summary = json::parse(slurp(out1 / "summary_p1.json"));
  CHECK(summary["p"] == 1.0);
  CHECK(summary["driver"] == "WIENER");
  CHECK(summary["n_list"] == json({4, 8, 16, 32}));
  REQUIRE(summary["errors"].size() == 4);
  CHECK(summary.contains("fit"));
  CHECK(summary.contains("verdict"));
  CHECK(summary["verdict"]["q_claimed"] == 0.5);

  const auto halving = json::parse(slurp(out1 / "halving_p1.json"));
  CHECK(halving["max_rel_change"].get<double>() >= 0.0);

  // the report subcommand re-emits a summary from the stored CSV
  const fs::path report_cfg =
      write_config(fresh_dir("report"),
                   json{{"input", (out1 / "errors_p1.csv").string()},
                        {"q_claimed", 0.5},
                        {"metric", "terminal"}});
  const fs::path report_out = dir / "report_out";
  CHECK(run_cli({"report", "--config", report_cfg.string(), "--out",
                 report_out.string()}) == kExitOk);
  const auto reemitted =
      json::parse(slurp(report_out / "summary_reemitted.json"));
  CHECK(reemitted["errors"].size() == 4);
  CHECK(reemitted["verdict"]["q_claimed"] == 0.5);
  CHECK(reemitted["seed"] == 3);
}

TEST_CASE("heavy-tail battery labels artifacts by the stable index") {
  const fs::path dir = fresh_dir("stable");
  json cfg = json{{"family", {{"builder", "constant_shift"}, {"sigma0", 1.0}}},
                  {"n_list", {4, 8, 16, 32}},
                  {"replicas", 40},
                  {"h", 1.0 / 256},
                  {"driver", "STABLE"},
                  {"alpha", 1.5},
                  {"x0", 0.0},
                  {"seed", 4}};
  const fs::path cfg_file = write_config(dir, cfg);
  CHECK(run_cli({"stable-rate", "--config", cfg_file.string(), "--out",
                 (dir / "out").string()}) == kExitOk);
  CHECK(fs::exists(dir / "out" / "errors_alpha1_5.csv"));
  CHECK(fs::exists(dir / "out" / "summary_alpha1_5.json"));
  const auto summary =
      json::parse(slurp(dir / "out" / "summary_alpha1_5.json"));
  CHECK(summary["alpha"] == 1.5);
  CHECK(summary["p"] == 0.5);  // reported moment is alpha - 1
  CHECK(summary["driver"] == "STABLE");
}

TEST_CASE("drift-removal battery produces its four artifacts") {
  const fs::path dir = fresh_dir("driftremoval");
  json cfg = battery_config(5);
  cfg["drift"] = {
      {"builder", "step"}, {"height", 0.5}, {"lo", 0.0}, {"hi", 1.0}};
  cfg["replicas"] = 10;
  cfg["h_exp_min"] = 6;
  cfg["h_exp_max"] = 8;
  cfg["grid_points"] = 128;
  const fs::path cfg_file = write_config(dir, cfg);
  CHECK(run_cli({"drift-removal", "--config", cfg_file.string(), "--out",
                 (dir / "out").string()}) == kExitOk);
  const auto lemma = json::parse(slurp(dir / "out" / "lemma_report.json"));
  CHECK(lemma["pass"] == true);
  const std::string dist = slurp(dir / "out" / "transformed_distance.csv");
  CHECK(dist.rfind("n,distance,fitted_C,fitted_q\n", 0) == 0);
  const std::string rt = slurp(dir / "out" / "roundtrip.csv");
  CHECK(std::count(rt.begin(), rt.end(), '\n') == 1 + 3);  // h in 2^-6..2^-8
  const auto summary =
      json::parse(slurp(dir / "out" / "drift_removal_summary.json"));
  CHECK(summary["corollary_fit"].contains("q"));
  CHECK(summary["roundtrip"].size() == 3);
}

TEST_CASE("output directory resolution order") {
  const fs::path dir = fresh_dir("outres");
  // config "output" is used when --out is absent
  json cfg = json{{"m_max", 1}, {"output", (dir / "from_config").string()}};
  CHECK(run_cli({"yw-table", "--config", write_config(dir, cfg).string()}) ==
        kExitOk);
  CHECK(fs::exists(dir / "from_config" / "yw_table.csv"));

  // --out wins over the config value
  CHECK(run_cli({"yw-table", "--config", (dir / "config.json").string(),
                 "--out", (dir / "cli_wins").string()}) == kExitOk);
  CHECK(fs::exists(dir / "cli_wins" / "yw_table.csv"));

  // environment fallback when neither is given
  const fs::path env_dir = dir / "from_env";
  setenv("SDESTAB_OUT", env_dir.string().c_str(), 1);
  CHECK(run_cli({"yw-table"}) == kExitOk);
  unsetenv("SDESTAB_OUT");
  CHECK(fs::exists(env_dir / "yw_table.csv"));
}
