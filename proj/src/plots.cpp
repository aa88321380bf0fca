#include "stlpi2/plots.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stlpi2 {

namespace {

constexpr double kWidth = 480.0;
constexpr double kHeight = 400.0;
constexpr double kMargin = 42.0;

struct Range {
  double lo = 0.0;
  double hi = 1.0;
  void grow(double v) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  void pad(double frac) {
    const double span = hi - lo;
    const double p = span > 0 ? frac * span : 1.0;
    lo -= p;
    hi += p;
  }
};

class SvgCanvas {
 public:
  SvgCanvas(Range x, Range y, bool keep_aspect) : x_(x), y_(y) {
    if (keep_aspect) {
      // Stretch the shorter data range so circles stay circular.
      const double sx = (kWidth - 2 * kMargin) / (x_.hi - x_.lo);
      const double sy = (kHeight - 2 * kMargin) / (y_.hi - y_.lo);
      if (sx < sy) {
        const double extra = (kHeight - 2 * kMargin) / sx - (y_.hi - y_.lo);
        y_.lo -= extra / 2;
        y_.hi += extra / 2;
      } else {
        const double extra = (kWidth - 2 * kMargin) / sy - (x_.hi - x_.lo);
        x_.lo -= extra / 2;
        x_.hi += extra / 2;
      }
    }
    body_ << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
          << "\" fill=\"white\"/>\n";
    axes();
  }

  double px(double x) const {
    return kMargin + (x - x_.lo) / (x_.hi - x_.lo) * (kWidth - 2 * kMargin);
  }
  double py(double y) const {
    return kHeight - kMargin - (y - y_.lo) / (y_.hi - y_.lo) * (kHeight - 2 * kMargin);
  }
  double scale_x() const { return (kWidth - 2 * kMargin) / (x_.hi - x_.lo); }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                double width = 1.5, const std::string& dash = "") {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width
          << "\"";
    if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << " points=\"";
    for (const auto& [x, y] : pts)
      if (std::isfinite(x) && std::isfinite(y)) body_ << px(x) << ',' << py(y) << ' ';
    body_ << "\"/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& stroke,
              const std::string& fill) {
    body_ << "<circle cx=\"" << px(cx) << "\" cy=\"" << py(cy) << "\" r=\""
          << r * scale_x() << "\" stroke=\"" << stroke << "\" fill=\"" << fill
          << "\" fill-opacity=\"0.25\"/>\n";
  }

  void marker(double x, double y, const std::string& color) {
    body_ << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3.5\" fill=\""
          << color << "\"/>\n";
  }

  void label(double x, double y, const std::string& text, const std::string& color) {
    body_ << "<text x=\"" << px(x) << "\" y=\"" << py(y) << "\" font-size=\"11\" fill=\""
          << color << "\">" << text << "</text>\n";
  }

  void write(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
        << "\">\n"
        << body_.str() << "</svg>\n";
  }

 private:
  void axes() {
    body_ << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\""
          << kWidth - 2 * kMargin << "\" height=\"" << kHeight - 2 * kMargin
          << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int i = 0; i <= 4; ++i) {
      const double fx = x_.lo + (x_.hi - x_.lo) * i / 4.0;
      const double fy = y_.lo + (y_.hi - y_.lo) * i / 4.0;
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3g", fx);
      body_ << "<text x=\"" << px(fx) << "\" y=\"" << kHeight - kMargin + 14
            << "\" font-size=\"10\" fill=\"#555\" text-anchor=\"middle\">" << buf
            << "</text>\n";
      std::snprintf(buf, sizeof(buf), "%.3g", fy);
      body_ << "<text x=\"" << kMargin - 6 << "\" y=\"" << py(fy) + 3
            << "\" font-size=\"10\" fill=\"#555\" text-anchor=\"end\">" << buf
            << "</text>\n";
    }
  }

  Range x_, y_;
  std::ostringstream body_;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf"};

}  // namespace

void write_trajectory_svg(const Scenario& scenario, const Trajectory& traj,
                          const std::filesystem::path& path) {
  validate(traj);
  const int n = static_cast<int>(traj.states.front().size());
  const int pairs = n / 2;

  Range xr, yr;
  for (const Vector& x : traj.states)
    for (int p = 0; p < pairs; ++p) {
      xr.grow(x[2 * p]);
      yr.grow(x[2 * p + 1]);
    }
  for (const PredicateSpec& p : scenario.config.predicates) {
    if (p.center.size() == 2) {
      xr.grow(p.center[0] - p.radius);
      xr.grow(p.center[0] + p.radius);
      yr.grow(p.center[1] - p.radius);
      yr.grow(p.center[1] + p.radius);
    }
  }
  xr.pad(0.08);
  yr.pad(0.08);

  SvgCanvas canvas(xr, yr, true);
  for (const PredicateSpec& p : scenario.config.predicates) {
    if (p.center.size() != 2) continue;
    const bool inside = p.kind == PredicateSpec::Kind::BallInside;
    const bool outside = p.kind == PredicateSpec::Kind::BallOutside;
    if (!inside && !outside) continue;
    canvas.circle(p.center[0], p.center[1], p.radius, inside ? "#2ca02c" : "#d62728",
                  inside ? "#2ca02c" : "#d62728");
    canvas.label(p.center[0], p.center[1], p.name, "#333");
  }
  for (int p = 0; p < pairs; ++p) {
    std::vector<std::pair<double, double>> pts;
    pts.reserve(traj.states.size());
    for (const Vector& x : traj.states) pts.emplace_back(x[2 * p], x[2 * p + 1]);
    const char* color = kPalette[p % 7];
    canvas.polyline(pts, color);
    canvas.marker(pts.front().first, pts.front().second, color);
  }
  canvas.write(path);
}

void write_funnel_svg(const Scenario& scenario, const Trajectory& traj,
                      const std::filesystem::path& path) {
  validate(traj);
  Range tr, rr;
  tr.lo = traj.t0;
  tr.hi = traj.end_time();

  std::vector<RobustnessSignal> signals;
  for (const Formula& psi : scenario.subtask_psi)
    signals.push_back(robustness_signal(psi, traj));
  for (const RobustnessSignal& sig : signals)
    for (int i = 0; i <= traj.steps(); ++i) rr.grow(sig.values[i]);
  for (const Funnel& funnel : scenario.funnels) {
    rr.grow(funnel.gamma0);
    rr.grow(funnel.rho_max);
  }
  rr.pad(0.05);

  SvgCanvas canvas(tr, rr, false);
  for (size_t s = 0; s < signals.size(); ++s) {
    const char* color = kPalette[s % 7];
    std::vector<std::pair<double, double>> rho_pts, gamma_pts;
    for (int i = 0; i <= traj.steps(); ++i) {
      const double t = traj.time_at(i);
      rho_pts.emplace_back(t, signals[s].values[i]);
      gamma_pts.emplace_back(t, scenario.funnels[s].gamma(t - traj.t0));
    }
    canvas.polyline(rho_pts, color);
    canvas.polyline(gamma_pts, color, 1.0, "4,3");
    canvas.polyline({{tr.lo, scenario.funnels[s].rho_max}, {tr.hi, scenario.funnels[s].rho_max}},
                    color, 0.8, "1,3");
  }
  canvas.write(path);
}

void write_convergence_svg(const std::vector<IterationRecord>& history,
                           const std::filesystem::path& path) {
  Range kr, vr;
  kr.lo = history.empty() ? 0.0 : history.front().k;
  kr.hi = history.empty() ? 1.0 : history.back().k;
  for (const IterationRecord& rec : history) {
    vr.grow(rec.cost);
    vr.grow(rec.robustness);
  }
  vr.pad(0.05);

  SvgCanvas canvas(kr, vr, false);
  std::vector<std::pair<double, double>> cost_pts, rho_pts;
  for (const IterationRecord& rec : history) {
    cost_pts.emplace_back(rec.k, rec.cost);
    rho_pts.emplace_back(rec.k, rec.robustness);
  }
  canvas.polyline(cost_pts, "#1f77b4");
  canvas.polyline(rho_pts, "#d62728");
  if (!history.empty()) {
    canvas.label(kr.lo, vr.hi, "cost", "#1f77b4");
    canvas.label(kr.lo + (kr.hi - kr.lo) * 0.2, vr.hi, "robustness", "#d62728");
  }
  canvas.write(path);
}

}  // namespace stlpi2
