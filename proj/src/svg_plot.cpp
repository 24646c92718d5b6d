#include "srvfnet/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_svg_plot(const std::string& path,
                    const std::vector<PlotPanel>& panels, int panel_width,
                    int panel_height) {
  if (panels.empty()) throw PreconditionError("write_svg_plot: no panels");
  for (const PlotPanel& panel : panels) {
    if (panel.series.empty()) {
      throw PreconditionError("write_svg_plot: empty panel");
    }
    for (const PlotSeries& s : panel.series) {
      if (s.y.size() < 2 || !s.y.allFinite()) {
        throw PreconditionError("write_svg_plot: series needs >= 2 finite values");
      }
    }
  }

  const int margin = 28;
  const int title_band = 22;
  const int total_w = static_cast<int>(panels.size()) * panel_width;
  const int total_h = panel_height;

  std::ofstream out(path);
  if (!out) throw ParseError("write_svg_plot: cannot open " + path);
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total_w
      << "\" height=\"" << total_h << "\" viewBox=\"0 0 " << total_w << " "
      << total_h << "\">\n"
      << "<rect width=\"" << total_w << "\" height=\"" << total_h
      << "\" fill=\"white\"/>\n";

  for (size_t p = 0; p < panels.size(); ++p) {
    const PlotPanel& panel = panels[p];
    const double x0 = static_cast<double>(p) * panel_width + margin;
    const double y0 = margin + title_band;
    const double plot_w = panel_width - 2.0 * margin;
    const double plot_h = panel_height - 2.0 * margin - title_band;

    double lo = panel.series.front().y.minCoeff();
    double hi = panel.series.front().y.maxCoeff();
    for (const PlotSeries& s : panel.series) {
      lo = std::min(lo, s.y.minCoeff());
      hi = std::max(hi, s.y.maxCoeff());
    }
    if (hi - lo < 1e-12) {
      hi += 0.5;
      lo -= 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    out << "<text x=\"" << fmt(x0 + plot_w / 2) << "\" y=\"" << fmt(margin)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"13\">"
        << escape_xml(panel.title) << "</text>\n";
    out << "<rect x=\"" << fmt(x0) << "\" y=\"" << fmt(y0) << "\" width=\""
        << fmt(plot_w) << "\" height=\"" << fmt(plot_h)
        << "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";

    for (const PlotSeries& s : panel.series) {
      const int n = static_cast<int>(s.y.size());
      out << "<polyline fill=\"none\" stroke=\"" << escape_xml(s.color)
          << "\" stroke-width=\"" << fmt(s.stroke_width)
          << "\" stroke-opacity=\"" << fmt(s.opacity) << "\" points=\"";
      for (int i = 0; i < n; ++i) {
        const double px = x0 + plot_w * i / (n - 1);
        const double py = y0 + plot_h * (1.0 - (s.y(i) - lo) / (hi - lo));
        out << (i ? " " : "") << fmt(px) << ',' << fmt(py);
      }
      out << "\"/>\n";
    }
  }
  out << "</svg>\n";
  if (!out) throw ParseError("write_svg_plot: write failed for " + path);
}

}  // namespace srvfnet
