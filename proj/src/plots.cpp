#include "delib/plots.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "delib/error.hpp"

namespace delib {

namespace {

std::string num(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : std::string(); }

std::string xml_escape(const std::string& s) {
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

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("E_IO", "cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Error("E_IO", "write failed for '" + path.string() + "'");
}

constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};

}  // namespace

std::string panel_csv(const PlotData& plot, const Panel& panel) {
  std::string out;
  if (plot.kind == PlotKind::Calibration) {
    out = "series,bin_lower,bin_upper,count,mean_predicted,observed_frequency\n";
    for (const Series& s : panel.series) {
      for (const PlotPoint& p : s.points) {
        out += fmt::format("{},{},{},{},{},{}\n", s.label, num(p.bin_lower), num(p.bin_upper),
                           p.count ? std::to_string(*p.count) : std::string(), num(p.x), num(p.y));
      }
    }
  } else {
    out = "series,effect_size,power\n";
    for (const Series& s : panel.series) {
      for (const PlotPoint& p : s.points) out += fmt::format("{},{},{}\n", s.label, num(p.x), num(p.y));
    }
  }
  return out;
}

std::string render_svg(const PlotData& plot) {
  constexpr double kPanelW = 360, kPanelH = 300, kMargin = 50;
  const std::size_t cols = plot.panels.size() > 1 ? 2 : 1;
  const std::size_t rows = (plot.panels.size() + cols - 1) / std::max<std::size_t>(cols, 1);
  const double width = cols * (kPanelW + kMargin) + kMargin;
  const double height = std::max<std::size_t>(rows, 1) * (kPanelH + kMargin) + kMargin;

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, height);

  for (std::size_t idx = 0; idx < plot.panels.size(); ++idx) {
    const Panel& panel = plot.panels[idx];
    const double ox = kMargin + static_cast<double>(idx % cols) * (kPanelW + kMargin);
    const double oy = kMargin + static_cast<double>(idx / cols) * (kPanelH + kMargin);

    double xmax = 1.0;
    if (plot.kind == PlotKind::Power) {
      xmax = 0;
      for (const Series& s : panel.series)
        for (const PlotPoint& p : s.points)
          if (p.x) xmax = std::max(xmax, std::fabs(*p.x));
      if (xmax <= 0) xmax = 1;
    }
    auto sx = [&](double x) { return ox + x / xmax * kPanelW; };
    auto sy = [&](double y) { return oy + kPanelH - y * kPanelH; };

    svg += fmt::format("<g>\n<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", ox,
                       oy, kPanelW, kPanelH);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n",
                       ox + kPanelW / 2, oy - 8, xml_escape(panel.title));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", ox + kPanelW / 2,
                       oy + kPanelH + 30, xml_escape(plot.x_label));
    svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>\n",
                       ox - 32, oy + kPanelH / 2, ox - 32, oy + kPanelH / 2, xml_escape(plot.y_label));
    for (int tick = 0; tick <= 4; ++tick) {
      const double f = tick / 4.0;
      svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{:.3g}</text>\n", sx(f * xmax),
                         oy + kPanelH + 14, f * xmax);
      svg += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-size=\"9\">{:.2f}</text>\n", ox - 4,
                         sy(f) + 3, f);
    }
    if (plot.reference_diagonal) {
      svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>\n",
                         sx(0), sy(0), sx(xmax), sy(1));
    }
    if (plot.reference_hline) {
      svg += fmt::format("<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\" stroke-dasharray=\"5,4\"/>\n",
                         sx(0), sy(*plot.reference_hline), sx(xmax), sy(*plot.reference_hline));
    }
    for (std::size_t si = 0; si < panel.series.size(); ++si) {
      const Series& s = panel.series[si];
      const char* colour = kPalette[si % 4];
      // Gaps split the polyline into separate segments.
      std::string segment;
      auto flush = [&] {
        if (!segment.empty()) {
          svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", colour,
                             segment);
        }
        segment.clear();
      };
      for (const PlotPoint& p : s.points) {
        if (!p.x || !p.y) {
          flush();
          continue;
        }
        segment += fmt::format("{:.2f},{:.2f} ", sx(*p.x), sy(*p.y));
        if (plot.kind == PlotKind::Calibration) {
          svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"2.5\" fill=\"{}\"/>\n", sx(*p.x), sy(*p.y), colour);
        }
      }
      flush();
      svg += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", ox + 8, oy + 16 + 14.0 * si, colour,
                         xml_escape(s.label));
    }
    for (const auto& [x, y] : panel.markers) {
      svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"#d62728\"/>\n", sx(std::fabs(x)), sy(y));
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

std::vector<std::filesystem::path> emit_plots(const std::vector<PlotData>& plots,
                                              const std::filesystem::path& figures_dir) {
  std::filesystem::create_directories(figures_dir);
  std::vector<std::filesystem::path> written;
  for (const PlotData& plot : plots) {
    for (const Panel& panel : plot.panels) {
      const auto path = figures_dir / fmt::format("{}_{}.csv", plot.name, panel.slug);
      write_text(path, panel_csv(plot, panel));
      written.push_back(path);
    }
    const auto svg = figures_dir / (plot.name + ".svg");
    write_text(svg, render_svg(plot));
    written.push_back(svg);
    const auto meta = figures_dir / (plot.name + ".meta.json");
    write_text(meta, plot.metadata.dump(2) + "\n");
    written.push_back(meta);
  }
  return written;
}

}  // namespace delib
