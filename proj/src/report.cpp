#include "seis/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "seis/error.hpp"

namespace seis {

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_gap(double gap) {
  const double pct = 100.0 * gap;
  if (std::abs(pct) < 0.05) return "0.0%";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%+.1f%%", pct);
  return buf;
}

ComparisonReport emit_comparison(const std::vector<SolverOutcome>& outcomes, const std::string& reference) {
  ComparisonReport report;
  report.reference = reference;
  std::map<std::string, std::string> key_of;
  std::map<std::string, double> reference_value;
  for (const auto& o : outcomes) {
    if (o.seconds < 0.0) throw ConfigError("comparison: negative run time for " + o.solver + " on " + o.scenario);
    const auto [it, fresh] = key_of.emplace(o.scenario, o.instance_key);
    if (!fresh && it->second != o.instance_key)
      throw ConfigError("comparison: solvers for scenario '" + o.scenario + "' were scored on different instances");
    if (o.solver == reference) reference_value[o.scenario] = o.breakdown.value;
  }
  for (const auto& o : outcomes) {
    ComparisonRow row{o, std::nullopt};
    const auto ref = reference_value.find(o.scenario);
    if (ref != reference_value.end()) {
      if (ref->second > 0.0)
        row.gap = (o.breakdown.value - ref->second) / ref->second;
      else if (o.breakdown.value == ref->second)
        row.gap = 0.0;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::vector<std::vector<std::string>> cells(const ComparisonReport& r, bool seconds) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> head{"scenario", "solver", "objective", "restoration_time", "ens_surrogate", "ens_mwh",
                                "optimal", "gap_pct"};
  if (seconds) head.push_back("seconds");
  out.push_back(head);
  for (const auto& row : r.rows) {
    const auto& o = row.outcome;
    std::vector<std::string> line{o.scenario,
                                  o.solver,
                                  fixed(o.breakdown.value, 6),
                                  fixed(o.breakdown.restoration_time, 6),
                                  fixed(o.breakdown.ens_surrogate, 6),
                                  o.ens_mwh ? fixed(*o.ens_mwh, 6) : "",
                                  o.optimal ? "yes" : "no",
                                  row.gap ? format_gap(*row.gap) : ""};
    if (seconds) line.push_back(fixed(o.seconds, 3));
    out.push_back(std::move(line));
  }
  return out;
}

}  // namespace

std::string ComparisonReport::csv(bool include_seconds) const {
  std::ostringstream s;
  for (const auto& line : cells(*this, include_seconds)) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      std::string v = line[i];
      // The CSV gap column is numeric: signed percent without the % sign.
      if (i == 7 && !v.empty() && v.back() == '%') v.pop_back();
      s << (i ? "," : "") << v;
    }
    s << '\n';
  }
  return s.str();
}

std::string ComparisonReport::text(bool include_seconds) const {
  const auto table = cells(*this, include_seconds);
  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto& line : table)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], line[i].size());
  std::ostringstream s;
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t i = 0; i < table[r].size(); ++i) {
      const std::string& v = table[r][i];
      const bool left = i < 2;
      const std::string pad(width[i] - v.size(), ' ');
      s << (i ? "  " : "") << (left ? v + pad : pad + v);
    }
    s << '\n';
    if (r == 0) {
      for (std::size_t i = 0; i < width.size(); ++i) s << (i ? "  " : "") << std::string(width[i], '-');
      s << '\n';
    }
  }
  return s.str();
}

ResiliencePlot emit_resilience_plot(const std::vector<std::pair<std::string, RestorationTimeline>>& timelines,
                                    const std::string& title) {
  if (timelines.empty()) throw ConfigError("resilience plot: no timelines");
  const std::size_t horizon = timelines.front().second.steps.size();
  if (horizon == 0) throw ConfigError("resilience plot: empty timeline");
  for (const auto& [name, tl] : timelines)
    if (tl.steps.size() != horizon)
      throw ConfigError("resilience plot: timeline '" + name + "' has " + std::to_string(tl.steps.size()) +
                        " steps, expected " + std::to_string(horizon));

  ResiliencePlot out;
  std::ostringstream csv;
  csv << 't';
  for (const auto& [name, tl] : timelines) csv << ',' << name;
  csv << '\n';
  for (std::size_t t = 0; t < horizon; ++t) {
    csv << t;
    for (const auto& [name, tl] : timelines) csv << ',' << fixed(tl.steps[t].resilience, 6);
    csv << '\n';
  }
  out.csv = csv.str();

  constexpr double W = 640, H = 400, left = 60, right = 150, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  double lo = 1.0;
  for (const auto& [name, tl] : timelines)
    for (const auto& s : tl.steps) lo = std::min(lo, s.resilience);
  lo = std::floor(lo * 10.0) / 10.0;
  if (lo >= 1.0) lo = 0.9;
  const double span = horizon > 1 ? static_cast<double>(horizon - 1) : 1.0;
  auto px = [&](double t) { return fixed(left + pw * t / span, 2); };
  auto py = [&](double v) { return fixed(top + ph * (1.0 - (v - lo) / (1.0 - lo)), 2); };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty()) svg << "<text x=\"" << left << "\" y=\"24\" font-size=\"14\">" << title << "</text>\n";
  svg << "<g stroke=\"#999\" stroke-width=\"1\">\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
  svg << "</g>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (1.0 - lo) * k / 5.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << py(v) << "\" text-anchor=\"end\" dominant-baseline=\"middle\">"
        << fixed(v, 2) << "</text>\n";
  }
  const std::size_t tick = std::max<std::size_t>(1, (horizon + 9) / 10);
  for (std::size_t t = 0; t < horizon; t += tick)
    svg << "<text x=\"" << px(static_cast<double>(t)) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << t
        << "</text>\n";
  svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">time step</text>\n";
  svg << "<text x=\"16\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 16 " << top + ph / 2
      << ")\" text-anchor=\"middle\">resilience index</text>\n";
  for (std::size_t i = 0; i < timelines.size(); ++i) {
    const auto& [name, tl] = timelines[i];
    const char* color = palette[i % (sizeof palette / sizeof *palette)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t t = 0; t < horizon; ++t) {
      const double v = tl.steps[t].resilience;
      if (t > 0) svg << ' ' << px(static_cast<double>(t)) << ',' << py(tl.steps[t - 1].resilience);
      svg << (t ? " " : "") << px(static_cast<double>(t)) << ',' << py(v);
    }
    svg << "\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(i);
    svg << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << fixed(ly, 2) << "\" x2=\"" << left + pw + 32 << "\" y2=\""
        << fixed(ly, 2) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << left + pw + 38 << "\" y=\"" << fixed(ly, 2) << "\" dominant-baseline=\"middle\">" << name
        << "</text>\n";
  }
  svg << "</svg>\n";
  out.svg = svg.str();
  return out;
}

}  // namespace seis
