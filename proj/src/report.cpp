// Static SVG 1.1 figures. Coordinates are printed with fixed precision so the
// documents are byte-stable for a given input.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "rppg/eval.hpp"

namespace rppg::eval {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char* const kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string f3(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  double px_lo = 0.0, px_hi = 1.0;

  double map(double v) const { return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo); }
};

// Widens [lo, hi] to "nice" bounds with a step of 1, 2 or 5 times a power of ten.
Axis nice_axis(double lo, double hi, double px_lo, double px_hi, double& step) {
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  step = (r <= 1.0 ? 1.0 : r <= 2.0 ? 2.0 : r <= 5.0 ? 5.0 : 10.0) * mag;
  return {std::floor(lo / step) * step, std::ceil(hi / step) * step, px_lo, px_hi};
}

std::string tick_label(double v, double step) {
  char buf[48];
  const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step)));
  std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < step * 1e-9 ? 0.0 : v);
  return buf;
}

void header(std::ostringstream& out, const std::string& title) {
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << f3(kWidth) << "\" height=\""
      << f3(kHeight) << "\" viewBox=\"0 0 " << f3(kWidth) << ' ' << f3(kHeight) << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << f3(kWidth) << "\" height=\"" << f3(kHeight) << "\" fill=\"white\"/>\n"
      << "<text x=\"" << f3(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"15\">" << escape(title) << "</text>\n";
}

void y_axis(std::ostringstream& out, const Axis& ax, double step, const std::string& label) {
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double v = ax.lo; v <= ax.hi + step * 1e-9; v += step) {
    const double y = ax.map(v);
    out << "<line x1=\"" << f3(kLeft) << "\" y1=\"" << f3(y) << "\" x2=\"" << f3(kWidth - kRight) << "\" y2=\""
        << f3(y) << "\" stroke=\"#e0e0e0\"/>\n"
        << "<text x=\"" << f3(kLeft - 6) << "\" y=\"" << f3(y + 4) << "\" text-anchor=\"end\">"
        << tick_label(v, step) << "</text>\n";
  }
  out << "<text x=\"18\" y=\"" << f3((kTop + kHeight - kBottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << f3((kTop + kHeight - kBottom) / 2) << ")\">" << escape(label) << "</text>\n</g>\n";
}

void frame(std::ostringstream& out) {
  out << "<rect x=\"" << f3(kLeft) << "\" y=\"" << f3(kTop) << "\" width=\"" << f3(kWidth - kLeft - kRight)
      << "\" height=\"" << f3(kHeight - kTop - kBottom) << "\" fill=\"none\" stroke=\"black\"/>\n";
}

}  // namespace

std::string boxplot_svg(const std::string& title, const std::string& unit, std::span<const ConditionBox> boxes) {
  std::ostringstream out;
  header(out, title);
  double lo = 0.0, hi = 1.0;
  for (const auto& b : boxes) {
    lo = std::min({lo, b.stats.whisker_lo});
    hi = std::max({hi, b.stats.whisker_hi});
    for (double o : b.stats.outliers) hi = std::max(hi, o);
  }
  double step = 1.0;
  const auto ay = nice_axis(lo, hi, kHeight - kBottom, kTop, step);
  y_axis(out, ay, step, "RMSE (" + unit + ")");
  frame(out);
  const double slot = (kWidth - kLeft - kRight) / static_cast<double>(std::max<std::size_t>(1, boxes.size()));
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    const auto& b = boxes[i];
    const double cx = kLeft + slot * (static_cast<double>(i) + 0.5);
    const double half = std::min(40.0, slot * 0.3);
    const std::string color = kPalette[i % std::size(kPalette)];
    out << "<g class=\"box\" data-condition=\"" << to_string(b.condition) << "\">\n"
        << "<line x1=\"" << f3(cx) << "\" y1=\"" << f3(ay.map(b.stats.whisker_lo)) << "\" x2=\"" << f3(cx)
        << "\" y2=\"" << f3(ay.map(b.stats.q1)) << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << f3(cx) << "\" y1=\"" << f3(ay.map(b.stats.q3)) << "\" x2=\"" << f3(cx) << "\" y2=\""
        << f3(ay.map(b.stats.whisker_hi)) << "\" stroke=\"black\"/>\n";
    for (double w : {b.stats.whisker_lo, b.stats.whisker_hi}) {
      out << "<line x1=\"" << f3(cx - half / 2) << "\" y1=\"" << f3(ay.map(w)) << "\" x2=\"" << f3(cx + half / 2)
          << "\" y2=\"" << f3(ay.map(w)) << "\" stroke=\"black\"/>\n";
    }
    out << "<rect x=\"" << f3(cx - half) << "\" y=\"" << f3(ay.map(b.stats.q3)) << "\" width=\"" << f3(2 * half)
        << "\" height=\"" << f3(ay.map(b.stats.q1) - ay.map(b.stats.q3)) << "\" fill=\"" << color
        << "\" fill-opacity=\"0.35\" stroke=\"black\"/>\n"
        << "<line class=\"median\" x1=\"" << f3(cx - half) << "\" y1=\"" << f3(ay.map(b.stats.median)) << "\" x2=\""
        << f3(cx + half) << "\" y2=\"" << f3(ay.map(b.stats.median)) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    for (double o : b.stats.outliers) {
      out << "<circle cx=\"" << f3(cx) << "\" cy=\"" << f3(ay.map(o)) << "\" r=\"3\" fill=\"none\" stroke=\"black\"/>\n";
    }
    out << "<text x=\"" << f3(cx) << "\" y=\"" << f3(kHeight - kBottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << to_string(b.condition)
        << " (median " << f3(b.stats.median) << ")</text>\n</g>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string scatter_svg(const EvaluationReport& rep) {
  std::ostringstream out;
  header(out, "HR RMSE vs face grayscale");
  double xlo = 255.0, xhi = 0.0, ylo = 0.0, yhi = 1.0;
  for (const auto& [x, y] : rep.skin_points) {
    xlo = std::min(xlo, x);
    xhi = std::max(xhi, x);
    yhi = std::max(yhi, y);
  }
  if (rep.skin_points.empty()) {
    xlo = 0.0;
    xhi = 255.0;
  }
  if (rep.skin_fit) {
    for (double x : {xlo, xhi}) {
      const double c = rep.skin_fit->ci95_mean(x);
      yhi = std::max(yhi, rep.skin_fit->predict(x) + c);
      ylo = std::min(ylo, rep.skin_fit->predict(x) - c);
    }
  }
  double xstep = 1.0, ystep = 1.0;
  const auto ax = nice_axis(xlo, xhi, kLeft, kWidth - kRight, xstep);
  const auto ay = nice_axis(ylo, yhi, kHeight - kBottom, kTop, ystep);
  y_axis(out, ay, ystep, "HR RMSE (bpm)");
  out << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double v = ax.lo; v <= ax.hi + xstep * 1e-9; v += xstep) {
    out << "<text x=\"" << f3(ax.map(v)) << "\" y=\"" << f3(kHeight - kBottom + 16) << "\" text-anchor=\"middle\">"
        << tick_label(v, xstep) << "</text>\n";
  }
  out << "<text x=\"" << f3((kLeft + kWidth - kRight) / 2) << "\" y=\"" << f3(kHeight - 10)
      << "\" text-anchor=\"middle\">face grayscale (0-255)</text>\n</g>\n";
  frame(out);

  if (rep.skin_fit) {
    const auto& fit = *rep.skin_fit;
    constexpr int kSteps = 40;
    std::ostringstream upper, lower;
    for (int i = 0; i <= kSteps; ++i) {
      const double x = ax.lo + (ax.hi - ax.lo) * i / kSteps;
      upper << f3(ax.map(x)) << ',' << f3(ay.map(fit.predict(x) + fit.ci95_mean(x))) << ' ';
    }
    for (int i = kSteps; i >= 0; --i) {
      const double x = ax.lo + (ax.hi - ax.lo) * i / kSteps;
      lower << f3(ax.map(x)) << ',' << f3(ay.map(fit.predict(x) - fit.ci95_mean(x))) << (i > 0 ? " " : "");
    }
    out << "<polygon id=\"ci-band\" points=\"" << upper.str() << lower.str()
        << "\" fill=\"#d62728\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"
        << "<line id=\"fit-line\" x1=\"" << f3(ax.map(ax.lo)) << "\" y1=\"" << f3(ay.map(fit.predict(ax.lo)))
        << "\" x2=\"" << f3(ax.map(ax.hi)) << "\" y2=\"" << f3(ay.map(fit.predict(ax.hi)))
        << "\" stroke=\"#d62728\" stroke-width=\"2\" data-slope=\"" << f3(fit.slope) << "\" data-intercept=\""
        << f3(fit.intercept) << "\"/>\n";
  }

  // Colour per participant, marker shape per condition.
  std::vector<std::string> seen;
  for (std::size_t i = 0; i < rep.skin_points.size(); ++i) {
    const auto& p = rep.skin_point_participants[i];
    auto it = std::find(seen.begin(), seen.end(), p);
    if (it == seen.end()) it = seen.insert(seen.end(), p);
    const std::string color = kPalette[static_cast<std::size_t>(it - seen.begin()) % std::size(kPalette)];
    const double x = ax.map(rep.skin_points[i].first);
    const double y = ay.map(rep.skin_points[i].second);
    switch (rep.skin_point_conditions[i]) {
      case Condition::respiration:
        out << "<circle cx=\"" << f3(x) << "\" cy=\"" << f3(y) << "\" r=\"4\" fill=\"" << color << "\"/>\n";
        break;
      case Condition::workout:
        out << "<rect x=\"" << f3(x - 4) << "\" y=\"" << f3(y - 4) << "\" width=\"8\" height=\"8\" fill=\"" << color
            << "\"/>\n";
        break;
      case Condition::gaze:
        out << "<polygon points=\"" << f3(x) << ',' << f3(y - 5) << ' ' << f3(x - 5) << ',' << f3(y + 4) << ' '
            << f3(x + 5) << ',' << f3(y + 4) << "\" fill=\"" << color << "\"/>\n";
        break;
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string signal_plot_svg(const std::string& title, std::span<const PlotSeries> series) {
  std::ostringstream out;
  header(out, title);
  const double panel_h = (kHeight - kTop - kBottom) / static_cast<double>(std::max<std::size_t>(1, series.size()));
  double tmax = 0.0;
  for (const auto& s : series) tmax = std::max(tmax, static_cast<double>(s.values.size()) / s.sample_rate);
  if (!(tmax > 0.0)) tmax = 1.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const double top = kTop + panel_h * static_cast<double>(i);
    double lo = 0.0, hi = 0.0;
    if (!s.values.empty()) {
      const auto [mn, mx] = std::minmax_element(s.values.begin(), s.values.end());
      lo = *mn;
      hi = *mx;
    }
    if (!(hi > lo)) {
      lo -= 1.0;
      hi += 1.0;
    }
    const Axis ay{lo, hi, top + panel_h - 6, top + 6};
    const Axis ax{0.0, tmax, kLeft, kWidth - kRight};
    out << "<rect x=\"" << f3(kLeft) << "\" y=\"" << f3(top) << "\" width=\"" << f3(kWidth - kLeft - kRight)
        << "\" height=\"" << f3(panel_h) << "\" fill=\"none\" stroke=\"#999999\"/>\n"
        << "<text x=\"" << f3(kLeft + 6) << "\" y=\"" << f3(top + 14)
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label) << "</text>\n"
        << "<polyline fill=\"none\" stroke=\"" << kPalette[i % std::size(kPalette)] << "\" stroke-width=\"1\" points=\"";
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      if (k) out << ' ';
      out << f3(ax.map(static_cast<double>(k) / s.sample_rate)) << ',' << f3(ay.map(s.values[k]));
    }
    out << "\"/>\n";
  }
  out << "<text x=\"" << f3((kLeft + kWidth - kRight) / 2) << "\" y=\"" << f3(kHeight - 10)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">time (s), 0 to " << f3(tmax)
      << "</text>\n</svg>\n";
  return out.str();
}

}  // namespace rppg::eval
