#include <doctest.h>

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nes/scenario.hpp"

using nes::ScenarioConfig;

namespace {

std::string benchmark_path() {
  return std::string(NES_SCENARIO_DIR) + "/benchmark.json";
}

nlohmann::json benchmark_json() {
  std::ifstream in(benchmark_path());
  REQUIRE(in.good());
  nlohmann::json j;
  in >> j;
  return j;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(tok);
  return out;
}

}  // namespace

TEST_CASE("benchmark scenario loads with exact parameters") {
  const ScenarioConfig<double> cfg = nes::load_scenario(benchmark_path());
  CHECK(cfg.game.p1.own_quad == -5.0);
  CHECK(cfg.game.p1.lin_own == 125.0);
  CHECK(cfg.game.p2.lin_own == 75.0);
  CHECK(cfg.dither.amplitude[0] == 0.075);
  CHECK(cfg.dither.amplitude[1] == 0.05);
  CHECK(cfg.dither.omega[0].num == 27);
  CHECK(cfg.dither.omega[1].num == 22);
  CHECK(cfg.policy.sigma[0] == 0.85);
  CHECK(cfg.policy.sigma[1] == 0.95);
  CHECK(cfg.gains[0] == 2.0);
  CHECK(cfg.gains[1] == 5.0);
  CHECK(cfg.theta_hat0[0] == 50.0);
  // the decimal in the file is the nearest double to 110/3
  CHECK(cfg.theta_hat0[1] == 110.0 / 3.0);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.t_final == 250.0);
  CHECK(cfg.mode == nes::Mode::full);
  CHECK(cfg.record_stride == 100);
}

TEST_CASE("missing scenario file") {
  CHECK_THROWS_AS(nes::load_scenario("/nonexistent/nowhere.json"),
                  nes::ParseError);
}

TEST_CASE("structural problems raise parse errors with a field name") {
  auto j = benchmark_json();
  j.erase("sigma");
  try {
    nes::parse_scenario<double>(j);
    FAIL("expected a parse error");
  } catch (const nes::ParseError& e) {
    CHECK(e.field == "scenario.sigma");
  }

  j = benchmark_json();
  j["dt"] = "fast";
  try {
    nes::parse_scenario<double>(j);
    FAIL("expected a parse error");
  } catch (const nes::ParseError& e) {
    CHECK(e.field == "dt");
  }

  j = benchmark_json();
  j["dither"]["frequencies"] = {27, 22};
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ParseError);

  j = benchmark_json();
  j["market"].erase("margins");
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ParseError);

  j = benchmark_json();
  j["mode"] = 3;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ParseError);

  j = benchmark_json();
  j["record_stride"] = 2.5;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ParseError);
}

TEST_CASE("inadmissible values raise validation errors with a field name") {
  auto j = benchmark_json();
  j["sigma"] = {1.5, 0.95};
  try {
    nes::parse_scenario<double>(j);
    FAIL("expected a validation error");
  } catch (const nes::ValidationError& e) {
    CHECK(e.field == "sigma");
  }

  j = benchmark_json();
  j["market"]["price_sensitivity"] = 0.0;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["dither"]["frequencies"] = {{27, 1}, {54, 2}};
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["dither"]["amplitudes"] = {-0.075, 0.05};
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["dt"] = -1e-3;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["t_final"] = 1e-5;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["record_stride"] = 0;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["mode"] = "sideways";
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);

  j = benchmark_json();
  j["mode"] = "periodic";  // without baseline_h
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ParseError);

  j = benchmark_json();
  j["mode"] = "periodic";
  j["baseline_h"] = 1e-5;
  CHECK_THROWS_AS(nes::parse_scenario<double>(j), nes::ValidationError);
}

TEST_CASE("config hash is stable, hex-shaped and parameter-sensitive") {
  const ScenarioConfig<double> cfg = nes::load_scenario(benchmark_path());
  const std::string h1 = nes::config_hash(cfg);
  CHECK(h1.size() == 16);
  for (const char c : h1) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
  CHECK(nes::config_hash(cfg) == h1);
  auto cfg2 = cfg;
  cfg2.dt = 2e-3;
  CHECK(nes::config_hash(cfg2) != h1);
  auto cfg3 = cfg;
  cfg3.policy.sigma[0] = 0.86;
  CHECK(nes::config_hash(cfg3) != h1);
  auto cfg4 = cfg;
  cfg4.dither.omega[0] = nes::Rational{28, 1};
  CHECK(nes::config_hash(cfg4) != h1);
}

TEST_CASE("run summary survives a json round trip") {
  ScenarioConfig<double> cfg = nes::load_scenario(benchmark_path());
  cfg.t_final = 0.05;
  cfg.record_stride = 1;
  const auto report = nes::build_report(cfg.game, cfg.gains, cfg.policy);
  const auto traj = nes::run(cfg);
  const auto summary = nes::summarize(cfg, traj, report);
  const nlohmann::json j = nes::to_json(summary);
  const auto back = nes::run_summary_from_json<double>(
      nlohmann::json::parse(j.dump()));
  CHECK(back.config_hash == summary.config_hash);
  CHECK(back.mode == "full");
  CHECK(back.dt == summary.dt);
  CHECK(back.t_final == summary.t_final);
  CHECK(back.final_theta[0] == summary.final_theta[0]);
  CHECK(back.final_theta_hat[1] == summary.final_theta_hat[1]);
  CHECK(back.final_residual == summary.final_residual);
  CHECK(back.event_counts[0] == summary.event_counts[0]);
  CHECK(back.event_counts[1] == summary.event_counts[1]);
  REQUIRE(back.min_gap[0].has_value() == summary.min_gap[0].has_value());
  if (summary.min_gap[0])
    CHECK(*back.min_gap[0] == *summary.min_gap[0]);
  CHECK(back.stability.tau_star == summary.stability.tau_star);
  CHECK(back.stability.P(0, 1) == summary.stability.P(0, 1));
}

TEST_CASE("summary optional gaps serialize as nulls") {
  ScenarioConfig<double> cfg = nes::load_scenario(benchmark_path());
  cfg.t_final = 0.001;  // one step, no events beyond the initial hold
  cfg.record_stride = 1;
  const auto report = nes::build_report(cfg.game, cfg.gains, cfg.policy);
  const auto traj = nes::run(cfg);
  const auto summary = nes::summarize(cfg, traj, report);
  const nlohmann::json j = nes::to_json(summary);
  if (summary.event_counts[0] < 2) {
    CHECK(j["min_gap"][0].is_null());
    const auto back = nes::run_summary_from_json<double>(j);
    CHECK_FALSE(back.min_gap[0].has_value());
  }
}

TEST_CASE("trajectory csv carries the exact header and round-trip values") {
  ScenarioConfig<double> cfg = nes::load_scenario(benchmark_path());
  cfg.t_final = 0.01;
  cfg.record_stride = 1;
  const auto traj = nes::run(cfg);
  std::stringstream out;
  nes::write_trajectory_csv(out, traj);
  std::string line;
  REQUIRE(std::getline(out, line));
  CHECK(line ==
        "t,theta1,theta2,theta_hat1,theta_hat2,g_hat1,g_hat2,e1,e2,u1,u2,J1,J2");
  std::size_t rows = 0;
  std::size_t k = 0;
  while (std::getline(out, line)) {
    const auto fields = split_line(line);
    REQUIRE(fields.size() == 13);
    if (k < traj.samples.size()) {
      CHECK(std::strtod(fields[0].c_str(), nullptr) == traj.samples[k].t);
      CHECK(std::strtod(fields[3].c_str(), nullptr) ==
            traj.samples[k].theta_hat[0]);
      CHECK(std::strtod(fields[12].c_str(), nullptr) ==
            traj.samples[k].payoffs[1]);
    }
    ++k;
    ++rows;
  }
  CHECK(rows == traj.samples.size());
}

TEST_CASE("event csv is a single timestamp column") {
  std::stringstream out;
  nes::write_events_csv(out, std::vector<double>{0.0, 0.25, 1.0 / 3.0});
  std::string line;
  REQUIRE(std::getline(out, line));
  CHECK(line == "t");
  std::getline(out, line);
  CHECK(line == "0");
  std::getline(out, line);
  CHECK(line == "0.25");
  std::getline(out, line);
  CHECK(std::strtod(line.c_str(), nullptr) == 1.0 / 3.0);
}

TEST_CASE("stability report round trip") {
  const ScenarioConfig<double> cfg = nes::load_scenario(benchmark_path());
  const auto r = nes::build_report(cfg.game, cfg.gains, cfg.policy);
  const auto back =
      nes::stability_report_from_json<double>(nes::to_json(r));
  CHECK(back.alpha == r.alpha);
  CHECK(back.sigma_bar_max == r.sigma_bar_max);
  CHECK(back.sigma_hat == r.sigma_hat);
  CHECK(back.m_theta == r.m_theta);
  CHECK(back.tau_star == r.tau_star);
  CHECK(back.hk_norm == r.hk_norm);
  CHECK(back.P(0, 0) == r.P(0, 0));
  CHECK(back.Q(1, 1) == r.Q(1, 1));
}
