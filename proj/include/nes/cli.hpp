#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nes/analysis.hpp"
#include "nes/scenario.hpp"
#include "nes/sim.hpp"

namespace nes {

// Exit codes, kept coarse so scripts can branch on failure class:
//   0 success
//   2 malformed input (bad JSON, missing field, bad usage)
//   3 well-formed input with inadmissible values
//   4 runtime failure (state blow-up, broken logs)
//   5 output I/O failure
//   6 anything unexpected
namespace detail {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return 0;
  } catch (const ParseError& e) {
    err << "parse error [" << e.field << "]: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "validation error [" << e.field << "]: " << e.what() << "\n";
    return 3;
  } catch (const InvalidMarket& e) {
    err << "invalid market: " << e.what() << "\n";
    return 3;
  } catch (const InvalidParameters& e) {
    err << "invalid parameters: " << e.what() << "\n";
    return 3;
  } catch (const NotHurwitz& e) {
    err << "unstable configuration: " << e.what() << "\n";
    return 3;
  } catch (const SingularHessian& e) {
    err << "singular game: " << e.what() << "\n";
    return 3;
  } catch (const NumericOverflow& e) {
    err << "numeric overflow at t=" << e.time << ": " << e.what() << "\n";
    return 4;
  } catch (const NonMonotoneTime& e) {
    err << "event log corrupt: " << e.what() << "\n";
    return 4;
  } catch (const EmptyLog& e) {
    err << "empty log: " << e.what() << "\n";
    return 4;
  } catch (const NotConverged& e) {
    err << "did not converge: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "filesystem error: " << e.what() << "\n";
    return 5;
  } catch (const std::ios_base::failure& e) {
    err << "io error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 6;
  }
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw std::ios_base::failure("cannot open " + p.string());
  f.exceptions(std::ios_base::badbit | std::ios_base::failbit);
  return f;
}

inline std::vector<double> parse_value_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ValidationError("values", "cannot parse value '" + tok + "'");
    }
    if (used != tok.size())
      throw ValidationError("values", "cannot parse value '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty())
    throw ValidationError("values", "value list must not be empty");
  return out;
}

}  // namespace detail

inline int dispatch(std::vector<std::string> args,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"event-triggered Nash seeking simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir, mode_override;
  double dt_override = 0, tf_override = 0;
  CLI::App* cmd_run = app.add_subcommand("run", "simulate and write artifacts");
  cmd_run->add_option("scenario", scenario_path, "scenario JSON file")
      ->required();
  cmd_run->add_option("--out", out_dir, "output directory")->required();
  cmd_run->add_option("--mode", mode_override,
                      "override mode: full, average or periodic");
  cmd_run->add_option("--dt", dt_override, "override the step size");
  cmd_run->add_option("--t-final", tf_override, "override the horizon");

  std::string sweep_scenario, sweep_out, sweep_param, sweep_values;
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "rerun a scenario over a parameter grid");
  cmd_sweep->add_option("scenario", sweep_scenario, "scenario JSON file")
      ->required();
  cmd_sweep->add_option("--param", sweep_param,
                        "swept parameter: omega_scale or sigma_scale")
      ->required();
  cmd_sweep->add_option("--values", sweep_values, "comma-separated multipliers")
      ->required();
  cmd_sweep->add_option("--out", sweep_out, "output directory")->required();

  std::string report_scenario;
  CLI::App* cmd_report =
      app.add_subcommand("report", "print the stability certificate as JSON");
  cmd_report->add_option("scenario", report_scenario, "scenario JSON file")
      ->required();

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  return detail::guarded(err, [&] {
    namespace fs = std::filesystem;
    if (cmd_run->parsed()) {
      ScenarioConfig<double> cfg = load_scenario(scenario_path);
      if (cmd_run->count("--mode"))
        cfg.mode = mode_from_name(mode_override, "mode");
      if (cmd_run->count("--dt")) {
        if (!(dt_override > 0))
          throw ValidationError("dt", "dt must be positive");
        cfg.dt = dt_override;
      }
      if (cmd_run->count("--t-final")) {
        if (!(tf_override >= cfg.dt))
          throw ValidationError("t_final", "t_final must cover at least one step");
        cfg.t_final = tf_override;
      }
      const StabilityReport<double> report =
          build_report(cfg.game, cfg.gains, cfg.policy);
      const Trajectory<double> traj = run(cfg);
      const RunSummary<double> summary = summarize(cfg, traj, report);
      fs::create_directories(out_dir);
      {
        auto f = detail::open_out(fs::path(out_dir) / "trajectory.csv");
        write_trajectory_csv(f, traj);
      }
      for (int i = 0; i < 2; ++i) {
        auto f = detail::open_out(fs::path(out_dir) /
                                  ("events_p" + std::to_string(i + 1) + ".csv"));
        write_events_csv(f, traj.event_times[i]);
      }
      {
        auto f = detail::open_out(fs::path(out_dir) / "summary.json");
        f << to_json(summary).dump(2) << "\n";
      }
      out << "final_residual=" << shortest_repr(summary.final_residual)
          << " events=" << summary.event_counts[0] << ","
          << summary.event_counts[1] << " hash=" << summary.config_hash
          << "\n";
    } else if (cmd_sweep->parsed()) {
      const ScenarioConfig<double> base = load_scenario(sweep_scenario);
      if (sweep_param != "omega_scale" && sweep_param != "sigma_scale")
        throw ValidationError("param",
                              "param must be omega_scale or sigma_scale");
      const std::vector<double> values = detail::parse_value_list(sweep_values);
      fs::create_directories(sweep_out);
      auto f = detail::open_out(fs::path(sweep_out) / "sweep.csv");
      f << "value,final_residual,event_count_1,event_count_2,min_gap_1,"
           "min_gap_2\n";
      for (const double v : values) {
        ScenarioConfig<double> cfg = base;
        if (sweep_param == "omega_scale") {
          cfg.dither = scaled_frequencies(cfg.dither, rational_from_double(v));
        } else {
          cfg.policy.sigma = {base.policy.sigma[0] * v,
                              base.policy.sigma[1] * v};
          for (const double s : cfg.policy.sigma)
            if (!(s > 0) || !(s < 1))
              throw ValidationError(
                  "values", "scaled threshold leaves (0,1) at multiplier " +
                                shortest_repr(v));
        }
        const Trajectory<double> traj = run(cfg);
        const double residual =
            (traj.samples.back().theta_hat - nash_equilibrium(cfg.game)).norm();
        const InterEventStats<double> s1 = inter_event_stats(traj.event_times[0]);
        const InterEventStats<double> s2 = inter_event_stats(traj.event_times[1]);
        f << csv_repr(v) << ',' << csv_repr(residual) << ',' << s1.count << ','
          << s2.count << ',' << (s1.min_gap ? csv_repr(*s1.min_gap) : "") << ','
          << (s2.min_gap ? csv_repr(*s2.min_gap) : "") << "\n";
      }
      out << "wrote " << (fs::path(sweep_out) / "sweep.csv").string() << "\n";
    } else if (cmd_report->parsed()) {
      const ScenarioConfig<double> cfg = load_scenario(report_scenario);
      out << to_json(build_report(cfg.game, cfg.gains, cfg.policy)).dump(2)
          << "\n";
    }
  });
}

}  // namespace nes
