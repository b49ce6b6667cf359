#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "nes/analysis.hpp"
#include "nes/sim.hpp"
#include "nes/types.hpp"

namespace nes {

inline std::string mode_name(Mode m) {
  switch (m) {
    case Mode::full: return "full";
    case Mode::average: return "average";
    default: return "periodic";
  }
}

inline Mode mode_from_name(const std::string& s, const std::string& field) {
  if (s == "full") return Mode::full;
  if (s == "average") return Mode::average;
  if (s == "periodic") return Mode::periodic;
  throw ValidationError(field, "mode must be full, average or periodic");
}

inline std::string integrator_name(Integrator i) {
  return i == Integrator::euler ? "euler" : "rk4";
}

inline Integrator integrator_from_name(const std::string& s,
                                       const std::string& field) {
  if (s == "euler") return Integrator::euler;
  if (s == "rk4") return Integrator::rk4;
  throw ValidationError(field, "integrator must be euler or rk4");
}

// Shortest decimal that round-trips the value, for hashing and CSV output.
template <typename T>
std::string shortest_repr(T v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Fixed 17 significant digits, enough to reconstruct any double exactly.
template <typename T>
std::string csv_repr(T v) {
  char buf[64];
  const auto res =
      std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j,
                                           const std::string& key,
                                           const std::string& where) {
  if (!j.is_object())
    throw ParseError(where, "expected an object at '" + where + "'");
  const auto it = j.find(key);
  if (it == j.end())
    throw ParseError(where + "." + key, "missing field '" + key + "'");
  return *it;
}

template <typename T>
T number_at(const nlohmann::json& j, const std::string& field) {
  if (!j.is_number())
    throw ParseError(field, "field '" + field + "' must be a number");
  return j.get<T>();
}

template <typename T>
std::array<T, 2> pair_at(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2)
    throw ParseError(field, "field '" + field + "' must be an array of two");
  return {number_at<T>(j[0], field + "[0]"), number_at<T>(j[1], field + "[1]")};
}

inline Rational rational_at(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() ||
      !j[1].is_number_integer())
    throw ParseError(field,
                     "field '" + field + "' must be an integer pair [num, den]");
  const Rational r{j[0].get<std::int64_t>(), j[1].get<std::int64_t>()};
  if (r.num <= 0 || r.den <= 0)
    throw ValidationError(field, "frequency must be a positive ratio");
  return reduced(r);
}

}  // namespace detail

template <typename T = double>
ScenarioConfig<T> parse_scenario(const nlohmann::json& j) {
  using detail::number_at;
  using detail::pair_at;
  using detail::require_field;
  ScenarioConfig<T> cfg;

  const auto& market = require_field(j, "market", "scenario");
  const T total = number_at<T>(require_field(market, "total_demand", "market"),
                               "market.total_demand");
  const T sens =
      number_at<T>(require_field(market, "price_sensitivity", "market"),
                   "market.price_sensitivity");
  if (!(sens > T(0)))
    throw ValidationError("market.price_sensitivity",
                          "price sensitivity must be positive");
  const auto margins = pair_at<T>(require_field(market, "margins", "market"),
                                  "market.margins");
  cfg.game = duopoly_from_market(total, sens, margins[0], margins[1]);

  const auto& dither = require_field(j, "dither", "scenario");
  const auto amps = pair_at<T>(require_field(dither, "amplitudes", "dither"),
                               "dither.amplitudes");
  if (!(amps[0] > T(0)) || !(amps[1] > T(0)))
    throw ValidationError("dither.amplitudes", "amplitudes must be positive");
  cfg.dither.amplitude = amps;
  const auto& freqs = require_field(dither, "frequencies", "dither");
  if (!freqs.is_array() || freqs.size() != 2)
    throw ParseError("dither.frequencies",
                     "field 'dither.frequencies' must hold two ratios");
  cfg.dither.omega = {detail::rational_at(freqs[0], "dither.frequencies[0]"),
                      detail::rational_at(freqs[1], "dither.frequencies[1]")};
  if (same_frequency(cfg.dither.omega[0], cfg.dither.omega[1]))
    throw ValidationError("dither.frequencies",
                          "probe frequencies must be distinct");

  const auto sigma =
      pair_at<T>(require_field(j, "sigma", "scenario"), "sigma");
  for (const T s : sigma)
    if (!(s > T(0)) || !(s < T(1)))
      throw ValidationError("sigma", "thresholds must lie in (0,1)");
  cfg.policy.sigma = sigma;

  const auto gains =
      pair_at<T>(require_field(j, "gains", "scenario"), "gains");
  if (!(gains[0] > T(0)) || !(gains[1] > T(0)))
    throw ValidationError("gains", "gains must be positive");
  cfg.gains = Vec2<T>(gains[0], gains[1]);

  const auto th0 =
      pair_at<T>(require_field(j, "theta_hat0", "scenario"), "theta_hat0");
  cfg.theta_hat0 = Vec2<T>(th0[0], th0[1]);

  cfg.dt = number_at<T>(require_field(j, "dt", "scenario"), "dt");
  if (!(cfg.dt > T(0))) throw ValidationError("dt", "dt must be positive");
  cfg.t_final =
      number_at<T>(require_field(j, "t_final", "scenario"), "t_final");
  if (!(cfg.t_final >= cfg.dt))
    throw ValidationError("t_final", "t_final must cover at least one step");

  if (j.contains("mode")) {
    if (!j["mode"].is_string())
      throw ParseError("mode", "field 'mode' must be a string");
    cfg.mode = mode_from_name(j["mode"].get<std::string>(), "mode");
  }
  if (j.contains("baseline_h")) {
    cfg.baseline_h = number_at<T>(j["baseline_h"], "baseline_h");
    if (!(cfg.baseline_h >= cfg.dt))
      throw ValidationError("baseline_h", "baseline_h must be at least dt");
  } else if (cfg.mode == Mode::periodic) {
    throw ParseError("baseline_h", "periodic mode needs a baseline_h field");
  }
  if (j.contains("record_stride")) {
    if (!j["record_stride"].is_number_integer())
      throw ParseError("record_stride",
                       "field 'record_stride' must be an integer");
    const std::int64_t stride = j["record_stride"].get<std::int64_t>();
    if (stride < 1)
      throw ValidationError("record_stride", "record_stride must be positive");
    cfg.record_stride = static_cast<int>(stride);
  }
  if (j.contains("integrator")) {
    if (!j["integrator"].is_string())
      throw ParseError("integrator", "field 'integrator' must be a string");
    cfg.integrator =
        integrator_from_name(j["integrator"].get<std::string>(), "integrator");
  }

  validate_config(cfg);
  return cfg;
}

template <typename T = double>
ScenarioConfig<T> load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("file", "cannot open scenario file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("file", std::string("scenario is not valid JSON: ") + e.what());
  }
  return parse_scenario<T>(j);
}

namespace detail {

inline void hash_append(std::uint64_t& h, std::string_view s) {
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
}

}  // namespace detail

// FNV-1a over a canonical field-by-field rendering of the resolved config.
// Stable across runs and platforms with the same double format; any change to
// a parameter changes the hash.
template <typename T>
std::string config_hash(const ScenarioConfig<T>& cfg) {
  std::uint64_t h = 14695981039346656037ull;
  auto put = [&h](std::string_view tag, const std::string& v) {
    detail::hash_append(h, tag);
    detail::hash_append(h, "=");
    detail::hash_append(h, v);
    detail::hash_append(h, ";");
  };
  auto putn = [&](std::string_view tag, T v) { put(tag, shortest_repr(v)); };
  const PlayerPayoff<T>* players[2] = {&cfg.game.p1, &cfg.game.p2};
  for (int i = 0; i < 2; ++i) {
    const std::string p = "p" + std::to_string(i + 1) + ".";
    putn(p + "own_quad", players[i]->own_quad);
    putn(p + "other_quad", players[i]->other_quad);
    putn(p + "cross", players[i]->cross);
    putn(p + "lin_own", players[i]->lin_own);
    putn(p + "lin_other", players[i]->lin_other);
    putn(p + "offset", players[i]->offset);
  }
  for (int i = 0; i < 2; ++i) {
    putn("a" + std::to_string(i), cfg.dither.amplitude[i]);
    const Rational w = reduced(cfg.dither.omega[i]);
    put("w" + std::to_string(i),
        std::to_string(w.num) + "/" + std::to_string(w.den));
    putn("sigma" + std::to_string(i), cfg.policy.sigma[i]);
    putn("k" + std::to_string(i), cfg.gains[i]);
    putn("theta_hat0_" + std::to_string(i), cfg.theta_hat0[i]);
  }
  putn("dt", cfg.dt);
  putn("t_final", cfg.t_final);
  put("mode", mode_name(cfg.mode));
  putn("baseline_h", cfg.baseline_h);
  put("record_stride", std::to_string(cfg.record_stride));
  put("integrator", integrator_name(cfg.integrator));
  char buf[17] = "0000000000000000";
  char tmp[17];
  const auto res = std::to_chars(tmp, tmp + sizeof(tmp), h, 16);
  const std::size_t n = static_cast<std::size_t>(res.ptr - tmp);
  for (std::size_t i = 0; i < n; ++i) buf[16 - n + i] = tmp[i];
  return std::string(buf, 16);
}

template <typename T>
struct RunSummary {
  std::string config_hash;
  std::string mode;
  T dt{};
  T t_final{};
  Vec2<T> final_theta{Vec2<T>::Zero()};
  Vec2<T> final_theta_hat{Vec2<T>::Zero()};
  T final_residual{};  // distance of the final estimate from the equilibrium
  std::array<std::size_t, 2> event_counts{};
  std::array<std::optional<T>, 2> min_gap{};
  std::array<std::optional<T>, 2> mean_gap{};
  StabilityReport<T> stability;
};

template <typename T>
RunSummary<T> summarize(const ScenarioConfig<T>& cfg, const Trajectory<T>& traj,
                        const StabilityReport<T>& report) {
  if (traj.samples.empty()) throw EmptyLog("trajectory holds no samples");
  RunSummary<T> s;
  s.config_hash = nes::config_hash(cfg);
  s.mode = mode_name(traj.meta.mode);
  s.dt = traj.meta.dt;
  s.t_final = traj.meta.t_final;
  s.final_theta = traj.samples.back().theta;
  s.final_theta_hat = traj.samples.back().theta_hat;
  s.final_residual = (s.final_theta_hat - nash_equilibrium(cfg.game)).norm();
  for (int i = 0; i < 2; ++i) {
    const InterEventStats<T> st = inter_event_stats(traj.event_times[i]);
    s.event_counts[i] = st.count;
    s.min_gap[i] = st.min_gap;
    s.mean_gap[i] = st.mean_gap;
  }
  s.stability = report;
  return s;
}

template <typename T>
nlohmann::json to_json(const StabilityReport<T>& r) {
  return nlohmann::json{
      {"P", {r.P(0, 0), r.P(0, 1), r.P(1, 0), r.P(1, 1)}},
      {"Q", {r.Q(0, 0), r.Q(0, 1), r.Q(1, 0), r.Q(1, 1)}},
      {"alpha", r.alpha},
      {"sigma_bar_max", r.sigma_bar_max},
      {"sigma_hat", r.sigma_hat},
      {"m_theta", r.m_theta},
      {"tau_star", r.tau_star},
      {"hk_norm", r.hk_norm}};
}

template <typename T>
StabilityReport<T> stability_report_from_json(const nlohmann::json& j) {
  StabilityReport<T> r;
  const auto& p = detail::require_field(j, "P", "stability");
  const auto& q = detail::require_field(j, "Q", "stability");
  if (!p.is_array() || p.size() != 4 || !q.is_array() || q.size() != 4)
    throw ParseError("stability", "P and Q must be arrays of four entries");
  r.P << p[0].get<T>(), p[1].get<T>(), p[2].get<T>(), p[3].get<T>();
  r.Q << q[0].get<T>(), q[1].get<T>(), q[2].get<T>(), q[3].get<T>();
  r.alpha = detail::number_at<T>(detail::require_field(j, "alpha", "stability"),
                                 "alpha");
  r.sigma_bar_max = detail::number_at<T>(
      detail::require_field(j, "sigma_bar_max", "stability"), "sigma_bar_max");
  r.sigma_hat = detail::number_at<T>(
      detail::require_field(j, "sigma_hat", "stability"), "sigma_hat");
  r.m_theta = detail::number_at<T>(
      detail::require_field(j, "m_theta", "stability"), "m_theta");
  r.tau_star = detail::number_at<T>(
      detail::require_field(j, "tau_star", "stability"), "tau_star");
  r.hk_norm = detail::number_at<T>(
      detail::require_field(j, "hk_norm", "stability"), "hk_norm");
  return r;
}

template <typename T>
nlohmann::json to_json(const RunSummary<T>& s) {
  auto opt = [](const std::optional<T>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return nlohmann::json{
      {"config_hash", s.config_hash},
      {"mode", s.mode},
      {"dt", s.dt},
      {"t_final", s.t_final},
      {"final_theta", {s.final_theta[0], s.final_theta[1]}},
      {"final_theta_hat", {s.final_theta_hat[0], s.final_theta_hat[1]}},
      {"final_residual", s.final_residual},
      {"event_counts", {s.event_counts[0], s.event_counts[1]}},
      {"min_gap", {opt(s.min_gap[0]), opt(s.min_gap[1])}},
      {"mean_gap", {opt(s.mean_gap[0]), opt(s.mean_gap[1])}},
      {"stability", to_json(s.stability)}};
}

template <typename T>
RunSummary<T> run_summary_from_json(const nlohmann::json& j) {
  using detail::number_at;
  using detail::require_field;
  RunSummary<T> s;
  const auto& hash = require_field(j, "config_hash", "summary");
  if (!hash.is_string())
    throw ParseError("config_hash", "config_hash must be a string");
  s.config_hash = hash.get<std::string>();
  const auto& mode = require_field(j, "mode", "summary");
  if (!mode.is_string()) throw ParseError("mode", "mode must be a string");
  s.mode = mode.get<std::string>();
  s.dt = number_at<T>(require_field(j, "dt", "summary"), "dt");
  s.t_final = number_at<T>(require_field(j, "t_final", "summary"), "t_final");
  const auto th = detail::pair_at<T>(require_field(j, "final_theta", "summary"),
                                     "final_theta");
  s.final_theta = Vec2<T>(th[0], th[1]);
  const auto thh = detail::pair_at<T>(
      require_field(j, "final_theta_hat", "summary"), "final_theta_hat");
  s.final_theta_hat = Vec2<T>(thh[0], thh[1]);
  s.final_residual =
      number_at<T>(require_field(j, "final_residual", "summary"),
                   "final_residual");
  const auto& counts = require_field(j, "event_counts", "summary");
  if (!counts.is_array() || counts.size() != 2)
    throw ParseError("event_counts", "event_counts must be a pair");
  for (int i = 0; i < 2; ++i)
    s.event_counts[i] = counts[i].get<std::size_t>();
  auto opt_pair = [&](const char* key) {
    const auto& arr = require_field(j, key, "summary");
    if (!arr.is_array() || arr.size() != 2)
      throw ParseError(key, std::string(key) + " must be a pair");
    std::array<std::optional<T>, 2> out;
    for (int i = 0; i < 2; ++i)
      if (!arr[i].is_null()) out[i] = arr[i].get<T>();
    return out;
  };
  s.min_gap = opt_pair("min_gap");
  s.mean_gap = opt_pair("mean_gap");
  s.stability =
      stability_report_from_json<T>(require_field(j, "stability", "summary"));
  return s;
}

inline constexpr const char* kTrajectoryHeader =
    "t,theta1,theta2,theta_hat1,theta_hat2,g_hat1,g_hat2,e1,e2,u1,u2,J1,J2";

template <typename T>
void write_trajectory_csv(std::ostream& out, const Trajectory<T>& traj) {
  out << kTrajectoryHeader << "\n";
  for (const Sample<T>& s : traj.samples) {
    out << csv_repr(s.t) << ',' << csv_repr(s.theta[0]) << ','
        << csv_repr(s.theta[1]) << ',' << csv_repr(s.theta_hat[0]) << ','
        << csv_repr(s.theta_hat[1]) << ',' << csv_repr(s.g_hat[0]) << ','
        << csv_repr(s.g_hat[1]) << ',' << csv_repr(s.dev[0]) << ','
        << csv_repr(s.dev[1]) << ',' << csv_repr(s.u[0]) << ','
        << csv_repr(s.u[1]) << ',' << csv_repr(s.payoffs[0]) << ','
        << csv_repr(s.payoffs[1]) << "\n";
  }
}

template <typename T>
void write_events_csv(std::ostream& out, const std::vector<T>& times) {
  out << "t\n";
  for (const T t : times) out << csv_repr(t) << "\n";
}

}  // namespace nes
