#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mff/errors.hpp"
#include "mff/measure.hpp"
#include "mff/projection.hpp"
#include "mff/schedule.hpp"

namespace mff {

using json = nlohmann::json;

namespace detail {

[[noreturn]] inline void cfg_fail(const std::string& path, const std::string& what) {
  throw config_error(path + ": " + what);
}

inline const json& need(const json& j, const std::string& path, const char* key) {
  if (!j.is_object()) cfg_fail(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) cfg_fail(path + "." + key, "missing");
  return *it;
}

inline const json* opt(const json& j, const char* key) {
  if (!j.is_object()) return nullptr;
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double as_num(const json& j, const std::string& path) {
  if (!j.is_number()) cfg_fail(path, "expected a number");
  return j.get<double>();
}

inline std::uint64_t as_u64(const json& j, const std::string& path) {
  if (!(j.is_number_unsigned() || (j.is_number_integer() && j.get<std::int64_t>() >= 0)))
    cfg_fail(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::string as_str(const json& j, const std::string& path) {
  if (!j.is_string()) cfg_fail(path, "expected a string");
  return j.get<std::string>();
}

// weights come in as decimal strings so the config echo reproduces them
// byte for byte
inline double parse_weight(const json& j, const std::string& path) {
  if (!j.is_string()) cfg_fail(path, "weights are decimal strings, e.g. \"0.25\"");
  const std::string& s = j.get_ref<const std::string&>();
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    cfg_fail(path, "not a decimal number: \"" + s + "\"");
  return v;
}

inline std::vector<double> parse_weights(const json& j, const std::string& path) {
  if (!j.is_array()) cfg_fail(path, "expected an array of decimal strings");
  std::vector<double> w;
  w.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    w.push_back(parse_weight(j[i], path + "[" + std::to_string(i) + "]"));
  return w;
}

}  // namespace detail

inline ModelParams params_from_json(const json& j, const std::string& path = "model") {
  std::uint64_t c1 = detail::as_u64(detail::need(j, path, "c1"), path + ".c1");
  std::uint64_t c2 = detail::as_u64(detail::need(j, path, "c2"), path + ".c2");
  if (c1 < 2 || c1 > 64 || c2 < 2 || c2 > 64)
    detail::cfg_fail(path, "alphabet sizes must lie in [2, 64]");
  std::vector<double> a = detail::parse_weights(detail::need(j, path, "a"), path + ".a");
  std::vector<double> b = detail::parse_weights(detail::need(j, path, "b"), path + ".b");
  return make_params(static_cast<std::uint32_t>(c1), static_cast<std::uint32_t>(c2),
                     std::move(a), std::move(b));
}

inline EpochSchedule schedule_from_json(const json& j, std::uint32_t c1, std::uint32_t c2,
                                        const std::string& path = "schedule") {
  std::string preset = detail::as_str(detail::need(j, path, "preset"), path + ".preset");
  std::uint64_t max_depth = kDefaultMaxDepth;
  if (const json* md = detail::opt(j, "max_depth")) {
    max_depth = detail::as_u64(*md, path + ".max_depth");
    if (max_depth < 1) detail::cfg_fail(path + ".max_depth", "must be >= 1");
  }
  if (preset == "squares") return EpochSchedule::squares(c1, c2, max_depth);
  if (preset == "factorial") return EpochSchedule::factorial(c1, c2, max_depth);
  if (preset == "geometric") {
    double ratio = detail::as_num(detail::need(j, path, "ratio"), path + ".ratio");
    return EpochSchedule::geometric(c1, c2, ratio, max_depth);
  }
  if (preset == "explicit") {
    const json& bj = detail::need(j, path, "boundaries");
    if (!bj.is_array()) detail::cfg_fail(path + ".boundaries", "expected an array of integers");
    std::vector<std::uint64_t> t;
    t.reserve(bj.size());
    for (size_t i = 0; i < bj.size(); ++i)
      t.push_back(detail::as_u64(bj[i], path + ".boundaries[" + std::to_string(i) + "]"));
    return EpochSchedule::from_list(c1, c2, std::move(t), max_depth);
  }
  detail::cfg_fail(path + ".preset",
                   "unknown preset \"" + preset +
                       "\" (expected squares, factorial, geometric, or explicit)");
}

inline IsometryCode code_from_json(const json* j, const ModelParams& p,
                                   const std::string& path = "code") {
  if (!j) return IsometryCode::identity();
  std::string kind = detail::as_str(detail::need(*j, path, "kind"), path + ".kind");
  if (kind == "identity") return IsometryCode::identity();
  if (kind == "gray") {
    if (p.c1 != 2 || p.c2 != 2) detail::cfg_fail(path, "gray code needs binary alphabets");
    return IsometryCode::gray_binary();
  }
  if (kind == "permutation") {
    auto perm = [&](const char* key, std::uint32_t c) {
      const json& pj = detail::need(*j, path, key);
      std::string ppath = path + "." + key;
      if (!pj.is_array() || pj.size() != c)
        detail::cfg_fail(ppath, "expected an array of " + std::to_string(c) + " digits");
      std::vector<std::uint32_t> v;
      v.reserve(c);
      for (size_t i = 0; i < pj.size(); ++i) {
        std::uint64_t d = detail::as_u64(pj[i], ppath + "[" + std::to_string(i) + "]");
        if (d >= c) detail::cfg_fail(ppath + "[" + std::to_string(i) + "]", "digit out of range");
        v.push_back(static_cast<std::uint32_t>(d));
      }
      return v;
    };
    return IsometryCode::digit_permutation(perm("a1_perm", p.c1), perm("a2_perm", p.c2));
  }
  detail::cfg_fail(path + ".kind",
                   "unknown code \"" + kind + "\" (expected identity, gray, or permutation)");
}

// Shared preamble of every command: model, schedule, code, seed, workers,
// plus the parsed document itself for echoing into reports.
struct RunConfig {
  json raw;
  ModelParams params;
  EpochSchedule schedule;
  IsometryCode code;
  std::uint64_t seed;
  unsigned workers;
};

inline RunConfig parse_config(const json& j) {
  if (!j.is_object()) detail::cfg_fail("config", "top level must be an object");
  ModelParams p = params_from_json(detail::need(j, "config", "model"));
  EpochSchedule s = schedule_from_json(detail::need(j, "config", "schedule"), p.c1, p.c2);
  IsometryCode code = code_from_json(detail::opt(j, "code"), p);
  std::uint64_t seed = 1;
  if (const json* sj = detail::opt(j, "seed")) seed = detail::as_u64(*sj, "seed");
  unsigned workers = 1;
  if (const json* wj = detail::opt(j, "workers")) {
    std::uint64_t w = detail::as_u64(*wj, "workers");
    if (w < 1 || w > 256) detail::cfg_fail("workers", "must lie in [1, 256]");
    workers = static_cast<unsigned>(w);
  }
  return RunConfig{j, std::move(p), std::move(s), std::move(code), seed, workers};
}

inline RunConfig parse_config_text(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw config_error("config: not valid JSON");
  return parse_config(j);
}

// Compact echo with sorted keys; identical input documents echo identically.
inline std::string config_echo(const RunConfig& cfg) { return cfg.raw.dump(); }

// Grid of numbers: either a literal array or {"from", "to", "step"|"count"}.
inline std::vector<double> grid_from_json(const json& j, const std::string& path) {
  std::vector<double> g;
  if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i)
      g.push_back(detail::as_num(j[i], path + "[" + std::to_string(i) + "]"));
    return g;
  }
  if (!j.is_object()) detail::cfg_fail(path, "expected an array or {from, to, step|count}");
  double from = detail::as_num(detail::need(j, path, "from"), path + ".from");
  double to = detail::as_num(detail::need(j, path, "to"), path + ".to");
  if (const json* st = detail::opt(j, "step")) {
    double step = detail::as_num(*st, path + ".step");
    if (!(step > 0)) detail::cfg_fail(path + ".step", "must be > 0");
    if (to < from) detail::cfg_fail(path, "needs from <= to");
    for (double x = from; x <= to + step * 1e-9; x += step) g.push_back(x);
    return g;
  }
  std::uint64_t count = detail::as_u64(detail::need(j, path, "count"), path + ".count");
  if (count == 0) return g;
  if (count == 1) {
    g.push_back(from);
    return g;
  }
  for (std::uint64_t i = 0; i < count; ++i)
    g.push_back(from + (to - from) * static_cast<double>(i) / static_cast<double>(count - 1));
  return g;
}

inline std::vector<std::uint64_t> u64_list_from_json(const json& j, const std::string& path) {
  if (!j.is_array()) detail::cfg_fail(path, "expected an array of integers");
  std::vector<std::uint64_t> v;
  v.reserve(j.size());
  for (size_t i = 0; i < j.size(); ++i)
    v.push_back(detail::as_u64(j[i], path + "[" + std::to_string(i) + "]"));
  return v;
}

// {"kind": "base"} | {"kind": "tilted-q", "q": ...} | {"kind": "tilted-alpha",
// "alpha": ...}; absent section means the base measure.
inline DigitMeasure measure_from_json(const EpochSchedule& s, const ModelParams& p, const json* j,
                                      const std::string& path) {
  if (!j) return base_measure(s, p);
  std::string kind = detail::as_str(detail::need(*j, path, "kind"), path + ".kind");
  if (kind == "base") return base_measure(s, p);
  if (kind == "tilted-q")
    return tilted_measure_q(s, p, detail::as_num(detail::need(*j, path, "q"), path + ".q"));
  if (kind == "tilted-alpha")
    return tilted_measure_alpha(
        s, p, detail::as_num(detail::need(*j, path, "alpha"), path + ".alpha"));
  detail::cfg_fail(path + ".kind",
                   "unknown measure \"" + kind + "\" (expected base, tilted-q, or tilted-alpha)");
}

}  // namespace mff
