#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "teig/error.hpp"

namespace teig {

struct Segment {
  double x0 = 0.0;
  double x1 = 0.0;
  double v = 0.0;
};

struct Delta {
  double a = 0.0;
  double c = 0.0;
};

struct Samples {
  std::vector<double> xs;
  std::vector<double> vs;
  bool empty() const { return xs.empty(); }
};

/// Real potential vanishing outside [0, b]. Deltas are kept symbolically and
/// never show up in evaluate().
struct Potential {
  double b = 1.0;
  std::vector<Segment> segments;
  std::vector<Delta> deltas;
  Samples samples;

  static Potential zero(double b = 1.0) { return Potential{b, {}, {}, {}}; }
  static Potential square_well(double v, double b = 1.0) { return Potential{b, {{0.0, b, v}}, {}, {}}; }
  /// +v on (0, b/2), -v on (b/2, b).
  static Potential two_step(double v, double b = 1.0) {
    return Potential{b, {{0.0, 0.5 * b, v}, {0.5 * b, b, -v}}, {}, {}};
  }
  static Potential delta(double a, double c, double b = 1.0) { return Potential{b, {}, {{a, c}}, {}}; }
  static Potential sampled(std::vector<double> xs, std::vector<double> vs, double b) {
    return Potential{b, {}, {}, {std::move(xs), std::move(vs)}};
  }
};

struct BoundaryCondition {
  bool dirichlet = false;
  double cot_theta = 0.0;

  static BoundaryCondition non_dirichlet(double cot) { return {false, cot}; }
  static BoundaryCondition dirichlet_mode() { return {true, 0.0}; }
};

struct ValidationReport {
  bool is_class_A = false;
  bool has_deltas = false;
  std::vector<std::string> messages;
};

namespace detail {
inline std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

/// Throws error_kind::validation listing every violated invariant.
inline ValidationReport validate(const Potential& p) {
  std::vector<std::string> problems;
  ValidationReport rep;
  if (!std::isfinite(p.b) || p.b <= 0.0) problems.push_back("support b must be positive and finite");
  if (!p.segments.empty() && !p.samples.empty()) problems.push_back("segments and samples are mutually exclusive");

  std::vector<Segment> segs = p.segments;
  for (const auto& s : segs) {
    if (!std::isfinite(s.x0) || !std::isfinite(s.x1) || !std::isfinite(s.v)) {
      problems.push_back("segment has non-finite value");
      continue;
    }
    if (!(s.x0 < s.x1)) problems.push_back("segment [" + detail::num(s.x0) + ", " + detail::num(s.x1) + "] is empty");
    if (s.x0 < 0.0 || s.x1 > p.b)
      problems.push_back("segment [" + detail::num(s.x0) + ", " + detail::num(s.x1) + "] leaves [0, b]");
  }
  std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.x0 < b.x0; });
  for (size_t i = 1; i < segs.size(); ++i) {
    if (segs[i].x0 < segs[i - 1].x1)
      problems.push_back("segments [" + detail::num(segs[i - 1].x0) + ", " + detail::num(segs[i - 1].x1) + "] and [" +
                         detail::num(segs[i].x0) + ", " + detail::num(segs[i].x1) + "] overlap");
  }
  for (const auto& d : p.deltas) {
    if (!std::isfinite(d.a) || !std::isfinite(d.c)) {
      problems.push_back("delta has non-finite value");
      continue;
    }
    if (!(d.a > 0.0 && d.a < p.b)) problems.push_back("delta location " + detail::num(d.a) + " not in (0, b)");
  }
  if (!p.samples.empty()) {
    const auto& xs = p.samples.xs;
    const auto& vs = p.samples.vs;
    if (xs.size() != vs.size()) problems.push_back("samples xs and vs differ in length");
    if (xs.size() < 2) problems.push_back("samples need at least two points");
    for (size_t i = 0; i < xs.size(); ++i) {
      if (!std::isfinite(xs[i]) || (i < vs.size() && !std::isfinite(vs[i]))) {
        problems.push_back("samples contain non-finite values");
        break;
      }
      if (i > 0 && !(xs[i] > xs[i - 1])) {
        problems.push_back("sample abscissae must increase strictly");
        break;
      }
    }
    if (!xs.empty() && (xs.front() < 0.0 || xs.back() > p.b)) problems.push_back("samples leave [0, b]");
  }
  if (!problems.empty()) {
    std::string what = "invalid potential:";
    for (const auto& m : problems) what += " " + m + ";";
    throw error(error_kind::validation, what);
  }
  rep.has_deltas = !p.deltas.empty();
  rep.is_class_A = !rep.has_deltas;
  if (rep.has_deltas) rep.messages.push_back("delta potential is outside class A; handled by jump conditions");
  return rep;
}

inline double evaluate(const Potential& p, double x) {
  if (!(x >= 0.0 && x < p.b)) return 0.0;
  for (const auto& s : p.segments)
    if (x >= s.x0 && x < s.x1) return s.v;
  if (!p.samples.empty()) {
    const auto& xs = p.samples.xs;
    const auto& vs = p.samples.vs;
    if (x < xs.front() || x > xs.back()) return 0.0;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    if (it == xs.end()) return vs.back();
    const size_t j = static_cast<size_t>(it - xs.begin());
    const double t = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return (1.0 - t) * vs[j - 1] + t * vs[j];
  }
  return 0.0;
}

/// Integral of V over [0, b] plus the delta strengths.
inline double moment_W(const Potential& p) {
  double w = 0.0;
  for (const auto& s : p.segments) w += s.v * (s.x1 - s.x0);
  for (size_t i = 1; i < p.samples.xs.size(); ++i)
    w += 0.5 * (p.samples.vs[i] + p.samples.vs[i - 1]) * (p.samples.xs[i] - p.samples.xs[i - 1]);
  for (const auto& d : p.deltas) w += d.c;
  return w;
}

/// Integral of |V| plus the absolute delta strengths.
inline double l1_norm(const Potential& p) {
  double w = 0.0;
  for (const auto& s : p.segments) w += std::abs(s.v) * (s.x1 - s.x0);
  const auto& xs = p.samples.xs;
  const auto& vs = p.samples.vs;
  for (size_t i = 1; i < xs.size(); ++i) {
    const double a = vs[i - 1], c = vs[i], h = xs[i] - xs[i - 1];
    if ((a >= 0) == (c >= 0)) {
      w += 0.5 * std::abs(a + c) * h;
    } else {
      w += 0.5 * h * (a * a + c * c) / (std::abs(a) + std::abs(c));
    }
  }
  for (const auto& d : p.deltas) w += std::abs(d.c);
  return w;
}

/// Ordered decomposition of [0, b] used by the propagators.
struct Piece {
  enum class kind { constant, linear, delta };
  kind type = kind::constant;
  double x0 = 0.0;
  double x1 = 0.0;
  double v0 = 0.0;  // height, left value, or delta strength
  double v1 = 0.0;  // right value for linear pieces
};

inline std::vector<Piece> layout(const Potential& p) {
  std::vector<Piece> base;
  auto push_const = [&](double a, double b, double v) {
    if (b > a) base.push_back({Piece::kind::constant, a, b, v, v});
  };
  if (!p.samples.empty()) {
    const auto& xs = p.samples.xs;
    const auto& vs = p.samples.vs;
    push_const(0.0, xs.front(), 0.0);
    for (size_t i = 1; i < xs.size(); ++i) base.push_back({Piece::kind::linear, xs[i - 1], xs[i], vs[i - 1], vs[i]});
    push_const(xs.back(), p.b, 0.0);
  } else {
    std::vector<Segment> segs = p.segments;
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.x0 < b.x0; });
    double x = 0.0;
    for (const auto& s : segs) {
      push_const(x, s.x0, 0.0);
      push_const(s.x0, s.x1, s.v);
      x = s.x1;
    }
    push_const(x, p.b, 0.0);
  }
  std::vector<Delta> ds = p.deltas;
  std::sort(ds.begin(), ds.end(), [](const Delta& a, const Delta& b) { return a.a < b.a; });
  std::vector<Piece> out;
  size_t di = 0;
  for (const auto& pc : base) {
    double left = pc.x0;
    double vleft = pc.v0;
    while (di < ds.size() && ds[di].a < pc.x1) {
      const double a = ds[di].a;
      if (a > left) {
        double va = vleft;
        if (pc.type == Piece::kind::linear) va = pc.v0 + (pc.v1 - pc.v0) * (a - pc.x0) / (pc.x1 - pc.x0);
        out.push_back({pc.type, left, a, vleft, pc.type == Piece::kind::linear ? va : vleft});
        left = a;
        vleft = va;
      }
      out.push_back({Piece::kind::delta, a, a, ds[di].c, 0.0});
      ++di;
    }
    if (pc.x1 > left) out.push_back({pc.type, left, pc.x1, vleft, pc.v1});
  }
  for (; di < ds.size(); ++di) out.push_back({Piece::kind::delta, ds[di].a, ds[di].a, ds[di].c, 0.0});
  return out;
}

inline void to_json(nlohmann::json& j, const Potential& p) {
  j = nlohmann::json::object();
  j["b"] = p.b;
  j["segments"] = nlohmann::json::array();
  for (const auto& s : p.segments) j["segments"].push_back({{"x0", s.x0}, {"x1", s.x1}, {"v", s.v}});
  j["deltas"] = nlohmann::json::array();
  for (const auto& d : p.deltas) j["deltas"].push_back({{"a", d.a}, {"c", d.c}});
  if (!p.samples.empty()) j["samples"] = {{"xs", p.samples.xs}, {"vs", p.samples.vs}};
}

inline void from_json(const nlohmann::json& j, Potential& p) {
  try {
    p = Potential{};
    p.b = j.at("b").get<double>();
    if (j.contains("segments"))
      for (const auto& s : j.at("segments")) p.segments.push_back({s.at("x0"), s.at("x1"), s.at("v")});
    if (j.contains("deltas"))
      for (const auto& d : j.at("deltas")) p.deltas.push_back({d.at("a"), d.at("c")});
    if (j.contains("samples")) {
      p.samples.xs = j.at("samples").at("xs").get<std::vector<double>>();
      p.samples.vs = j.at("samples").at("vs").get<std::vector<double>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw error(error_kind::validation, std::string("malformed potential JSON: ") + e.what());
  }
}

inline void to_json(nlohmann::json& j, const BoundaryCondition& bc) {
  if (bc.dirichlet)
    j = {{"type", "dirichlet"}};
  else
    j = {{"type", "non-dirichlet"}, {"cot_theta", bc.cot_theta}};
}

inline void from_json(const nlohmann::json& j, BoundaryCondition& bc) {
  try {
    const auto type = j.at("type").get<std::string>();
    if (type == "dirichlet") {
      bc = BoundaryCondition::dirichlet_mode();
    } else if (type == "non-dirichlet") {
      bc = BoundaryCondition::non_dirichlet(j.at("cot_theta").get<double>());
    } else {
      throw error(error_kind::validation, "unknown boundary condition type '" + type + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw error(error_kind::validation, std::string("malformed boundary condition JSON: ") + e.what());
  }
  if (!bc.dirichlet && !std::isfinite(bc.cot_theta)) throw error(error_kind::validation, "cot_theta must be finite");
}

}  // namespace teig
