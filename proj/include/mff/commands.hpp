#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mff/config.hpp"
#include "mff/diagnostics.hpp"
#include "mff/experiments.hpp"
#include "mff/measure.hpp"
#include "mff/numerics.hpp"
#include "mff/projection.hpp"
#include "mff/rng.hpp"
#include "mff/schedule.hpp"
#include "mff/spectrum.hpp"

namespace mff {

struct CommandResult {
  int exit_code = 0;
  std::string out;  // CSV or JSON report
  std::string svg;  // only filled when requested and supported
};

namespace detail {

inline void csv_comment(std::string& s, const std::string& text) {
  s += "# ";
  s += text;
  s += '\n';
}

inline void csv_row(std::string& s, const std::vector<std::string>& cells) {
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i) s += ',';
    s += cells[i];
  }
  s += '\n';
}

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::uint64_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }

inline std::string word_to_string(const EpochSchedule& s, const Word& w) {
  bool compact = true;
  for (std::uint64_t j = 1; j <= w.depth(); ++j)
    if (s.radix_at(j) > 10) compact = false;
  std::string out;
  for (std::uint64_t j = 0; j < w.depth(); ++j) {
    if (!compact && j) out += '.';
    out += compact ? std::string(1, static_cast<char>('0' + w.digits[j]))
                   : std::to_string(w.digits[j]);
  }
  return out;
}

inline std::string csv_preamble(const RunConfig& cfg) {
  std::string s;
  csv_comment(s, "config " + config_echo(cfg));
  if (!cfg.schedule.warning().empty()) csv_comment(s, "warning " + cfg.schedule.warning());
  return s;
}

// largest depth <= want that stays inside the full-enumeration budget
inline std::uint64_t budgeted_depth(const EpochSchedule& s, std::uint64_t want) {
  std::uint64_t n = std::min(want, s.max_depth());
  while (n > 1 && -s.log_diameter(n) > kEnumBudgetLog) --n;
  return n;
}

}  // namespace detail

// Closed-form scaling exponents on a q grid, with per-depth finite-n values.
inline CommandResult cmd_tau(const RunConfig& cfg) {
  const json* sec = detail::opt(cfg.raw, "tau");
  std::vector<double> qs;
  std::vector<std::uint64_t> depths;
  if (sec) {
    if (const json* qj = detail::opt(*sec, "q")) qs = grid_from_json(*qj, "tau.q");
    if (const json* dj = detail::opt(*sec, "depths"))
      depths = u64_list_from_json(*dj, "tau.depths");
  }
  if (!sec || !detail::opt(*sec, "q"))
    for (double q = -2.0; q <= 2.0 + 1e-9; q += 0.25) qs.push_back(q);
  if (!sec || !detail::opt(*sec, "depths"))
    for (std::uint64_t n : {std::uint64_t{15}, std::uint64_t{255}, std::uint64_t{65535}})
      if (n <= cfg.schedule.max_depth()) depths.push_back(n);
  for (std::uint64_t n : depths)
    if (n < 1 || n > cfg.schedule.max_depth())
      throw config_error("tau.depths: depth " + std::to_string(n) +
                         " outside [1, max_depth]");

  CommandResult res;
  res.out = detail::csv_preamble(cfg);
  std::vector<std::string> header{"q", "theta_a", "theta_b", "tau_upper", "tau_lower"};
  for (std::uint64_t n : depths) header.push_back("tau@" + std::to_string(n));
  detail::csv_row(res.out, header);
  for (double q : qs) {
    auto [hi, lo] = tau_limits(cfg.params, q);
    std::vector<std::string> row{detail::cell(q), detail::cell(theta(cfg.params, Side::A, q)),
                                 detail::cell(theta(cfg.params, Side::B, q)), detail::cell(hi),
                                 detail::cell(lo)};
    for (std::uint64_t n : depths) row.push_back(detail::cell(tau_n(cfg.params, cfg.schedule, n, q)));
    detail::csv_row(res.out, row);
  }
  return res;
}

namespace detail {

struct SpectrumRowOut {
  double alpha = 0.0;
  bool in_domain = false;
  SpectrumPoint pt;
};

inline std::string svg_spectrum(const std::vector<SpectrumRowOut>& rows,
                                const std::vector<CoarseSpectrumRow>& coarse) {
  double x0 = 0.0, x1 = 1.0, y1 = 1.0;
  bool any = false;
  for (const auto& r : rows) {
    if (!r.in_domain) continue;
    if (!any) {
      x0 = x1 = r.alpha;
      any = true;
    }
    x0 = std::min(x0, r.alpha);
    x1 = std::max(x1, r.alpha);
    y1 = std::max({y1, r.pt.f_dim, r.pt.f_Dim});
  }
  for (const auto& c : coarse) {
    if (!any) {
      x0 = x1 = c.alpha;
      any = true;
    }
    x0 = std::min(x0, c.alpha);
    x1 = std::max(x1, c.alpha);
    y1 = std::max(y1, c.log_count_norm);
  }
  std::string s =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
      "viewBox=\"0 0 800 600\">\n"
      "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
  if (!any || !(x1 > x0)) {
    s += "<text x=\"400\" y=\"300\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">no spectrum points in domain</text>\n</svg>\n";
    return s;
  }
  y1 *= 1.05;
  auto px = [&](double x) { return 70.0 + (x - x0) / (x1 - x0) * 660.0; };
  auto py = [&](double y) { return 550.0 - y / y1 * 480.0; };
  for (int i = 0; i <= 5; ++i) {
    double xv = x0 + (x1 - x0) * i / 5.0;
    double yv = y1 * i / 5.0;
    s += "<line x1=\"" + format_double(px(xv)) + "\" y1=\"70\" x2=\"" + format_double(px(xv)) +
         "\" y2=\"550\" stroke=\"#eeeeee\"/>\n";
    s += "<line x1=\"70\" y1=\"" + format_double(py(yv)) + "\" x2=\"730\" y2=\"" +
         format_double(py(yv)) + "\" stroke=\"#eeeeee\"/>\n";
    s += "<text x=\"" + format_double(px(xv)) +
         "\" y=\"570\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
         format_double(std::round(xv * 1000.0) / 1000.0) + "</text>\n";
    s += "<text x=\"62\" y=\"" + format_double(py(yv) + 4.0) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
         format_double(std::round(yv * 1000.0) / 1000.0) + "</text>\n";
  }
  s += "<line x1=\"70\" y1=\"550\" x2=\"730\" y2=\"550\" stroke=\"black\"/>\n"
       "<line x1=\"70\" y1=\"70\" x2=\"70\" y2=\"550\" stroke=\"black\"/>\n"
       "<text x=\"400\" y=\"592\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"13\">alpha</text>\n"
       "<text x=\"20\" y=\"310\" font-family=\"sans-serif\" font-size=\"13\" "
       "transform=\"rotate(-90 20 310)\" text-anchor=\"middle\">dimension</text>\n";
  auto polyline = [&](auto get, const char* color, const char* dash) {
    std::string pts;
    for (const auto& r : rows) {
      if (!r.in_domain) continue;
      pts += format_double(px(r.alpha)) + "," + format_double(py(get(r))) + " ";
    }
    if (pts.empty()) return;
    s += "<polyline fill=\"none\" stroke=\"";
    s += color;
    s += "\" stroke-width=\"2\"";
    if (dash[0]) s += std::string(" stroke-dasharray=\"") + dash + "\"";
    s += " points=\"" + pts + "\"/>\n";
  };
  polyline([](const SpectrumRowOut& r) { return r.pt.f_dim; }, "#1f77b4", "");
  polyline([](const SpectrumRowOut& r) { return r.pt.f_Dim; }, "#d62728", "6,4");
  for (const auto& c : coarse)
    s += "<circle cx=\"" + format_double(px(c.alpha)) + "\" cy=\"" +
         format_double(py(c.log_count_norm)) + "\" r=\"3\" fill=\"#2ca02c\" "
         "fill-opacity=\"0.7\"/>\n";
  s += "<rect x=\"590\" y=\"80\" width=\"14\" height=\"4\" fill=\"#1f77b4\"/>\n"
       "<text x=\"610\" y=\"86\" font-family=\"sans-serif\" font-size=\"12\">f (lower)</text>\n"
       "<rect x=\"590\" y=\"100\" width=\"14\" height=\"4\" fill=\"#d62728\"/>\n"
       "<text x=\"610\" y=\"106\" font-family=\"sans-serif\" font-size=\"12\">F (upper)</text>\n";
  if (!coarse.empty())
    s += "<circle cx=\"597\" cy=\"122\" r=\"3\" fill=\"#2ca02c\"/>\n"
         "<text x=\"610\" y=\"126\" font-family=\"sans-serif\" font-size=\"12\">coarse "
         "histogram</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace detail

// Spectrum values on an alpha grid; optional coarse histogram block and SVG.
inline CommandResult cmd_spectrum(const RunConfig& cfg, bool want_svg = false) {
  const json* sec = detail::opt(cfg.raw, "spectrum");
  SpectrumDomain dom = spectrum_domain(cfg.params);
  std::vector<double> alphas;
  if (sec && detail::opt(*sec, "alpha")) {
    alphas = grid_from_json(*detail::opt(*sec, "alpha"), "spectrum.alpha");
  } else if (!dom.empty) {
    for (int i = 0; i < 50; ++i)
      alphas.push_back(dom.alpha_min +
                       (dom.alpha_max - dom.alpha_min) * (static_cast<double>(i) + 0.5) / 50.0);
  }

  std::vector<detail::SpectrumRowOut> rows;
  rows.reserve(alphas.size());
  for (double alpha : alphas) {
    detail::SpectrumRowOut r;
    r.alpha = alpha;
    r.in_domain = !dom.empty && alpha > dom.alpha_min && alpha < dom.alpha_max;
    if (r.in_domain) r.pt = spectrum_point(cfg.params, alpha);
    rows.push_back(std::move(r));
  }

  std::vector<CoarseSpectrumRow> coarse;
  std::optional<std::pair<std::uint64_t, std::uint32_t>> coarse_req;
  if (sec) {
    if (const json* cj = detail::opt(*sec, "coarse")) {
      std::uint64_t depth = detail::as_u64(detail::need(*cj, "spectrum.coarse", "depth"),
                                           "spectrum.coarse.depth");
      std::uint64_t bins =
          detail::as_u64(detail::need(*cj, "spectrum.coarse", "bins"), "spectrum.coarse.bins");
      if (bins < 1 || bins > 4096) detail::cfg_fail("spectrum.coarse.bins", "must lie in [1, 4096]");
      coarse_req = {depth, static_cast<std::uint32_t>(bins)};
      DigitMeasure base = base_measure(cfg.schedule, cfg.params);
      coarse = coarse_spectrum(base, cfg.code, depth, static_cast<std::uint32_t>(bins));
    }
  }

  CommandResult res;
  res.out = detail::csv_preamble(cfg);
  detail::csv_comment(res.out, "domain " + format_double(dom.alpha_min) + " " +
                                   format_double(dom.alpha_max) +
                                   (dom.empty ? " empty" : ""));
  detail::csv_row(res.out, {"alpha", "in_domain", "q_a", "q_b", "h_a", "h_b", "f_dim", "f_Dim",
                            "b_star", "B_star", "Dim_valid"});
  for (const auto& r : rows) {
    if (!r.in_domain) {
      std::vector<std::string> row{detail::cell(r.alpha), "0"};
      for (int i = 0; i < 8; ++i) row.push_back("nan");
      row.push_back("0");
      detail::csv_row(res.out, row);
      continue;
    }
    detail::csv_row(res.out,
                    {detail::cell(r.alpha), "1", detail::cell(r.pt.q_a), detail::cell(r.pt.q_b),
                     detail::cell(r.pt.h_a), detail::cell(r.pt.h_b), detail::cell(r.pt.f_dim),
                     detail::cell(r.pt.f_Dim), detail::cell(r.pt.b_star),
                     detail::cell(r.pt.B_star), detail::cell(r.pt.Dim_valid)});
  }
  if (coarse_req) {
    res.out += '\n';
    detail::csv_comment(res.out, "coarse depth=" + std::to_string(coarse_req->first) +
                                     " bins=" + std::to_string(coarse_req->second));
    detail::csv_row(res.out, {"alpha_hat", "count", "log_count_norm"});
    for (const auto& c : coarse)
      detail::csv_row(res.out,
                      {detail::cell(c.alpha), detail::cell(c.count), detail::cell(c.log_count_norm)});
  }
  if (want_svg) res.svg = detail::svg_spectrum(rows, coarse);
  return res;
}

// Local exponent traces along sampled words (or words given explicitly).
inline CommandResult cmd_sample(const RunConfig& cfg) {
  const json* sec = detail::opt(cfg.raw, "sample");
  DigitMeasure m = measure_from_json(cfg.schedule, cfg.params,
                                     sec ? detail::opt(*sec, "measure") : nullptr,
                                     "sample.measure");
  DigitMeasure base = base_measure(cfg.schedule, cfg.params);

  std::vector<Word> words;
  std::uint64_t depth = 0;
  if (sec && detail::opt(*sec, "words")) {
    const json& wj = *detail::opt(*sec, "words");
    if (!wj.is_array()) detail::cfg_fail("sample.words", "expected an array of digit strings");
    for (size_t i = 0; i < wj.size(); ++i) {
      std::string ws = detail::as_str(wj[i], "sample.words[" + std::to_string(i) + "]");
      try {
        words.push_back(word_from_string(cfg.schedule, ws));
      } catch (const std::exception& e) {
        detail::cfg_fail("sample.words[" + std::to_string(i) + "]", e.what());
      }
      depth = std::max(depth, words.back().depth());
    }
  } else {
    std::uint64_t count = 4;
    depth = std::min<std::uint64_t>(cfg.schedule.max_depth(), 256);
    if (sec) {
      if (const json* cj = detail::opt(*sec, "count")) count = detail::as_u64(*cj, "sample.count");
      if (const json* dj = detail::opt(*sec, "depth")) depth = detail::as_u64(*dj, "sample.depth");
    }
    if (count < 1 || count > 1000000) detail::cfg_fail("sample.count", "must lie in [1, 1000000]");
    if (depth < 1 || depth > cfg.schedule.max_depth())
      detail::cfg_fail("sample.depth", "must lie in [1, max_depth]");
    for (std::uint64_t i = 0; i < count; ++i)
      words.push_back(sample_word(m, depth, cfg.seed, i));
  }

  std::vector<std::uint64_t> probes;
  if (sec && detail::opt(*sec, "trace_depths")) {
    probes = u64_list_from_json(*detail::opt(*sec, "trace_depths"), "sample.trace_depths");
    for (std::uint64_t d : probes)
      if (d < 1 || d > depth) detail::cfg_fail("sample.trace_depths", "depths must lie in [1, depth]");
  } else {
    probes = default_probe_depths(cfg.schedule, depth);
  }

  CommandResult res;
  res.out = detail::csv_preamble(cfg);
  detail::csv_comment(res.out, "measure " + m.tag());
  detail::csv_row(res.out, {"sample", "depth", "exponent"});
  for (size_t i = 0; i < words.size(); ++i) {
    std::vector<std::uint64_t> ds;
    for (std::uint64_t d : probes)
      if (d <= words[i].depth()) ds.push_back(d);
    ExponentTrace tr = exponent_trace(base, cfg.code, words[i], ds);
    for (size_t k = 0; k < ds.size(); ++k)
      detail::csv_row(res.out, {detail::cell(static_cast<std::uint64_t>(i)),
                                detail::cell(ds[k]), detail::cell(tr.values[k])});
  }
  return res;
}

// Point queries against the projected measure.
inline CommandResult cmd_project(const RunConfig& cfg) {
  const json* sec = detail::opt(cfg.raw, "project");
  struct Query {
    double x;
    std::uint64_t depth;
  };
  std::vector<Query> queries;
  if (sec && detail::opt(*sec, "points")) {
    const json& pj = *detail::opt(*sec, "points");
    if (!pj.is_array()) detail::cfg_fail("project.points", "expected an array of {x, depth}");
    for (size_t i = 0; i < pj.size(); ++i) {
      std::string path = "project.points[" + std::to_string(i) + "]";
      queries.push_back({detail::as_num(detail::need(pj[i], path, "x"), path + ".x"),
                         detail::as_u64(detail::need(pj[i], path, "depth"), path + ".depth")});
    }
  } else {
    for (double x : {0.125, 0.3, 0.5, 0.75}) queries.push_back({x, 8});
  }

  DigitMeasure base = base_measure(cfg.schedule, cfg.params);
  CommandResult res;
  res.out = detail::csv_preamble(cfg);
  detail::csv_row(res.out, {"x", "depth", "word", "left", "right", "log_nu", "split_minus",
                            "split_plus"});
  for (const Query& qr : queries) {
    if (!(qr.x >= 0.0) || !(qr.x <= 1.0)) detail::cfg_fail("project", "x must lie in [0,1]");
    if (qr.depth < 1) detail::cfg_fail("project", "depth must be >= 1");
    Word w = interval_containing(cfg.schedule, qr.x, qr.depth);
    BasicInterval iv = interval_of_word(cfg.schedule, w);
    double lm = nu_log_mass_interval(base, cfg.code, w);
    auto split = [&](NeighborSide side) -> std::string {
      if (!neighbor_word(cfg.schedule, w, side)) return "-1";
      return std::to_string(neighbor_split_depth(cfg.schedule, w, side));
    };
    detail::csv_row(res.out,
                    {detail::cell(qr.x), detail::cell(qr.depth),
                     detail::word_to_string(cfg.schedule, w), detail::cell(iv.left),
                     detail::cell(iv.right), detail::cell(lm), split(NeighborSide::Minus),
                     split(NeighborSide::Plus)});
  }
  return res;
}

namespace detail {

// ln total mass of each tilt is zero by construction; checked per branch.
inline json verify_normalization(const RunConfig& cfg) {
  std::vector<double> qs{-100, -10, -1, 0, 1, 10, 100};
  std::vector<std::uint64_t> depths{1, 5, 64, 4096};
  if (const json* sec = opt(cfg.raw, "verify"))
    if (const json* nj = opt(*sec, "normalization")) {
      if (const json* qj = opt(*nj, "q")) qs = grid_from_json(*qj, "verify.normalization.q");
      if (const json* dj = opt(*nj, "depths"))
        depths = u64_list_from_json(*dj, "verify.normalization.depths");
    }
  double max_total = 0.0, max_tau1 = 0.0;
  for (double q : qs) {
    TiltedWeights t = tilt_q(cfg.params, q);
    for (const std::vector<double>* w : {&t.a, &t.b}) {
      std::vector<double> lw = log_vec(*w);
      max_total = std::max(max_total, std::abs(log_sum_exp(lw)));
    }
  }
  for (std::uint64_t n : depths) {
    if (n > cfg.schedule.max_depth()) continue;
    max_tau1 = std::max(max_tau1, std::abs(tau_n(cfg.params, cfg.schedule, n, 1.0)));
  }
  json r;
  r["max_abs_log_total"] = max_total;
  r["max_abs_tau_at_one"] = max_tau1;
  r["tolerance"] = 1e-12;
  r["pass"] = max_total <= 1e-12 && max_tau1 <= 1e-12;
  return r;
}

// brute-force partition sums against the closed form, on the configured model
inline json verify_oracle(const RunConfig& cfg) {
  std::uint64_t depth = 10;
  std::vector<double> qs{-2, -1, -0.5, 0, 0.5, 1, 2, 3};
  if (const json* sec = opt(cfg.raw, "verify"))
    if (const json* oj = opt(*sec, "oracle")) {
      if (const json* dj = opt(*oj, "depth")) depth = as_u64(*dj, "verify.oracle.depth");
      if (const json* qj = opt(*oj, "q")) qs = grid_from_json(*qj, "verify.oracle.q");
    }
  depth = budgeted_depth(cfg.schedule, depth);
  DigitMeasure base = base_measure(cfg.schedule, cfg.params);
  double max_diff = 0.0;
  for (std::uint64_t n = 1; n <= depth; ++n) {
    for (double q : qs) {
      double brute = partition_sum_bruteforce(base, n, q);
      double closed = tau_n(cfg.params, cfg.schedule, n, q) * -cfg.schedule.log_diameter(n);
      max_diff = std::max(max_diff, std::abs(brute - closed));
    }
  }
  json r;
  r["depth"] = depth;
  r["max_abs_diff"] = max_diff;
  r["tolerance"] = 1e-9;
  r["pass"] = max_diff <= 1e-9;
  return r;
}

// the tilt identity mu_q(w) = mu(w)^q |w|^{tau_n(q)} word by word, plus the
// upper bound with tau replaced by its liminf
inline json verify_tilt_identity(const RunConfig& cfg) {
  std::uint64_t depth = 10;
  std::vector<double> qs{-2, 0.5, 2};
  if (const json* sec = opt(cfg.raw, "verify"))
    if (const json* tj = opt(*sec, "tilt_identity")) {
      if (const json* dj = opt(*tj, "depth")) depth = as_u64(*dj, "verify.tilt_identity.depth");
      if (const json* qj = opt(*tj, "q")) qs = grid_from_json(*qj, "verify.tilt_identity.q");
    }
  depth = budgeted_depth(cfg.schedule, depth);
  DigitMeasure base = base_measure(cfg.schedule, cfg.params);
  double max_diff = 0.0;
  std::uint64_t bound_violations = 0;
  for (double q : qs) {
    DigitMeasure tilted = tilted_measure_q(cfg.schedule, cfg.params, q);
    for (std::uint64_t n : {depth / 2 > 0 ? depth / 2 : 1, depth}) {
      double tau = tau_n(cfg.params, cfg.schedule, n, q);
      double tau_low = tau_limits(cfg.params, q).second;
      double ld = cfg.schedule.log_diameter(n);
      for_each_word_mass(base, n, [&](std::span<const std::uint32_t> digits, double lm) {
        double lt = 0.0;
        for (std::uint64_t j = 0; j < n; ++j) lt += tilted.log_weight(j + 1, digits[j]);
        max_diff = std::max(max_diff, std::abs(lt - (q * lm + tau * ld)));
        if (lt > q * lm + tau_low * ld + 1e-12) ++bound_violations;
      });
    }
  }
  json r;
  r["depth"] = depth;
  r["max_abs_diff"] = max_diff;
  r["bound_violations"] = bound_violations;
  r["tolerance"] = 1e-9;
  r["pass"] = max_diff <= 1e-9 && bound_violations == 0;
  return r;
}

inline json verify_doubling(const RunConfig& cfg) {
  std::uint64_t n = 144, samples = 200;
  std::optional<double> q;
  if (const json* sec = opt(cfg.raw, "verify"))
    if (const json* dj = opt(*sec, "doubling")) {
      if (const json* nj = opt(*dj, "n")) n = as_u64(*nj, "verify.doubling.n");
      if (const json* sj = opt(*dj, "samples")) samples = as_u64(*sj, "verify.doubling.samples");
      if (const json* qj = opt(*dj, "q"))
        if (!qj->is_null()) q = as_num(*qj, "verify.doubling.q");
    }
  if (n < 1 || n > cfg.schedule.max_depth())
    cfg_fail("verify.doubling.n", "must lie in [1, max_depth]");
  DigitMeasure nu = base_measure(cfg.schedule, cfg.params);
  DigitMeasure sampling =
      q ? tilted_measure_q(cfg.schedule, cfg.params, *q) : base_measure(cfg.schedule, cfg.params);
  DoublingReport rep =
      doubling_report(sampling, nu, cfg.params, q, n, samples, cfg.seed + 7, cfg.workers);
  json r;
  r["n"] = rep.n;
  r["samples"] = rep.samples;
  r["threshold"] = rep.threshold;
  r["frac_in_en"] = rep.frac_in_en;
  r["en_mass_bound"] = rep.en_mass_bound;
  r["ratio_bound"] = rep.ratio_bound;
  r["ratio_checks"] = rep.ratio_checks;
  r["ratio_violations"] = rep.ratio_violations;
  r["max_abs_log_ratio"] = rep.max_abs_log_ratio;
  r["C0"] = rep.constants.C0;
  r["C1"] = rep.constants.C1;
  r["degenerate"] = rep.constants.degenerate;
  r["sampling"] = rep.sampling_tag;
  r["pass"] = rep.pass;
  return r;
}

inline json verify_mc(const RunConfig& cfg) {
  std::uint64_t samples = 0, depth = 4096;
  std::optional<double> alpha;
  if (const json* sec = opt(cfg.raw, "verify"))
    if (const json* mj = opt(*sec, "mc")) {
      if (const json* sj = opt(*mj, "samples")) samples = as_u64(*sj, "verify.mc.samples");
      if (const json* dj = opt(*mj, "depth")) depth = as_u64(*dj, "verify.mc.depth");
      if (const json* aj = opt(*mj, "alpha")) alpha = as_num(*aj, "verify.mc.alpha");
    }
  json r;
  if (samples == 0) {
    r["skipped"] = true;
    r["pass"] = true;
    return r;
  }
  SpectrumDomain dom = spectrum_domain(cfg.params);
  if (!alpha) {
    if (dom.empty) {
      r["skipped"] = true;
      r["reason"] = "empty spectrum domain";
      r["pass"] = true;
      return r;
    }
    alpha = 0.5 * (dom.alpha_min + dom.alpha_max);
  }
  if (depth < 1 || depth > cfg.schedule.max_depth())
    cfg_fail("verify.mc.depth", "must lie in [1, max_depth]");
  FormalismReport rep = mc_formalism_check(cfg.params, cfg.schedule, *alpha, samples, depth,
                                           cfg.seed + 11, cfg.workers);
  r["skipped"] = false;
  r["alpha"] = rep.alpha;
  r["samples"] = rep.samples;
  r["depth"] = rep.depth;
  r["q_a"] = rep.q_a;
  r["q_b"] = rep.q_b;
  r["h_a"] = rep.h_a;
  r["h_b"] = rep.h_b;
  r["f_dim"] = rep.f_dim;
  r["f_Dim"] = rep.f_Dim;
  r["nu_mean"] = rep.nu_mean;
  r["nu_sd"] = rep.nu_sd;
  r["nu_threshold"] = rep.nu_threshold;
  r["nu_pass"] = rep.nu_pass;
  json rows = json::array();
  for (const auto& row : rep.depth_rows) {
    json rr;
    rr["depth"] = row.depth;
    rr["mean_own_exponent"] = row.mean_own_exponent;
    rr["target"] = row.target;
    rr["stderr"] = row.stderr_own;
    rr["pass"] = row.pass;
    rows.push_back(rr);
  }
  r["depth_rows"] = rows;
  r["pass"] = rep.pass;
  return r;
}

}  // namespace detail

// Self-checks of the identities the library is built on; exit code 2 when
// any of them fails.
inline CommandResult cmd_verify(const RunConfig& cfg) {
  json rep;
  rep["config"] = cfg.raw;
  rep["oracle_equivalence"] = detail::verify_oracle(cfg);
  rep["normalization"] = detail::verify_normalization(cfg);
  rep["tilt_identity"] = detail::verify_tilt_identity(cfg);
  rep["doubling"] = detail::verify_doubling(cfg);
  rep["mc"] = detail::verify_mc(cfg);
  bool pass = true;
  for (const char* key : {"oracle_equivalence", "normalization", "tilt_identity", "doubling", "mc"})
    pass = pass && rep[key]["pass"].get<bool>();
  rep["pass"] = pass;
  CommandResult res;
  res.out = rep.dump(2);
  res.out += '\n';
  res.exit_code = pass ? 0 : 2;
  return res;
}

inline CommandResult run_command(const std::string& name, const RunConfig& cfg,
                                 bool want_svg = false) {
  if (name == "tau") return cmd_tau(cfg);
  if (name == "spectrum") return cmd_spectrum(cfg, want_svg);
  if (name == "verify") return cmd_verify(cfg);
  if (name == "sample") return cmd_sample(cfg);
  if (name == "project") return cmd_project(cfg);
  throw config_error("unknown command \"" + name + "\"");
}

// Same, with exceptions folded into the documented exit codes:
// 1 validation, 2 verification failure, 3 resource budget.
inline CommandResult run_command_guarded(const std::string& name, const RunConfig& cfg,
                                         bool want_svg, std::string* error) {
  try {
    return run_command(name, cfg, want_svg);
  } catch (const resource_error& e) {
    if (error) *error = e.what();
    return CommandResult{3, "", ""};
  } catch (const std::exception& e) {
    if (error) *error = e.what();
    return CommandResult{1, "", ""};
  }
}

}  // namespace mff
