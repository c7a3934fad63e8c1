#pragma once

#include <algorithm>
#include <charconv>
#include <string>
#include <vector>

#include "survpc/io.hpp"

namespace survpc {

namespace detail {

// Fixed two-decimal formatting keeps the emitted bytes deterministic.
inline std::string svg_num(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
  return std::string(buf, res.ptr);
}

}  // namespace detail

// One panel per stratum: shaded quantile band, solid mean line and the
// observed KM as a dashed stepped line.
inline std::string render_band_svg(const std::vector<BandPanel>& panels) {
  if (panels.empty()) throw std::invalid_argument("render_band_svg: no panels");

  constexpr double panel_w = 420.0, panel_h = 340.0;
  constexpr double margin_l = 58.0, margin_r = 18.0, margin_t = 30.0, margin_b = 46.0;
  const double plot_w = panel_w - margin_l - margin_r;
  const double plot_h = panel_h - margin_t - margin_b;

  double t_max = 0.0;
  for (const auto& p : panels)
    for (double t : p.time) t_max = std::max(t_max, t);
  if (!(t_max > 0.0)) t_max = 1.0;

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         detail::svg_num(panel_w * double(panels.size())) + "\" height=\"" +
         detail::svg_num(panel_h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t pi = 0; pi < panels.size(); ++pi) {
    const auto& p = panels[pi];
    const double x0 = double(pi) * panel_w + margin_l;
    const double y0 = margin_t;
    auto sx = [&](double t) { return x0 + t / t_max * plot_w; };
    auto sy = [&](double s) { return y0 + (1.0 - s) * plot_h; };

    svg += "<g>\n";
    svg += "<text x=\"" + detail::svg_num(x0 + plot_w / 2) + "\" y=\"" +
           detail::svg_num(y0 - 10.0) + "\" text-anchor=\"middle\">" + p.label + "</text>\n";

    // band polygon: upper edge forward, lower edge back
    std::string pts;
    for (std::size_t i = 0; i < p.time.size(); ++i)
      pts += detail::svg_num(sx(p.time[i])) + "," + detail::svg_num(sy(p.upper[i])) + " ";
    for (std::size_t i = p.time.size(); i-- > 0;)
      pts += detail::svg_num(sx(p.time[i])) + "," + detail::svg_num(sy(p.lower[i])) + " ";
    if (!pts.empty()) pts.pop_back();
    svg += "<polygon points=\"" + pts + "\" fill=\"#c8c8c8\" stroke=\"none\"/>\n";

    // mean line
    std::string mean_pts;
    for (std::size_t i = 0; i < p.time.size(); ++i)
      mean_pts += detail::svg_num(sx(p.time[i])) + "," + detail::svg_num(sy(p.mean[i])) + " ";
    if (!mean_pts.empty()) mean_pts.pop_back();
    svg += "<polyline points=\"" + mean_pts +
           "\" fill=\"none\" stroke=\"white\" stroke-width=\"2\"/>\n";

    // observed KM as a dashed step line
    std::string path = "M" + detail::svg_num(sx(p.time.front())) + " " +
                       detail::svg_num(sy(p.observed.front()));
    for (std::size_t i = 1; i < p.time.size(); ++i) {
      path += " H" + detail::svg_num(sx(p.time[i]));
      path += " V" + detail::svg_num(sy(p.observed[i]));
    }
    svg += "<path d=\"" + path +
           "\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" "
           "stroke-dasharray=\"6 4\"/>\n";

    // axes
    svg += "<line x1=\"" + detail::svg_num(x0) + "\" y1=\"" + detail::svg_num(y0) + "\" x2=\"" +
           detail::svg_num(x0) + "\" y2=\"" + detail::svg_num(y0 + plot_h) +
           "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + detail::svg_num(x0) + "\" y1=\"" + detail::svg_num(y0 + plot_h) +
           "\" x2=\"" + detail::svg_num(x0 + plot_w) + "\" y2=\"" + detail::svg_num(y0 + plot_h) +
           "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double s = double(k) / 4.0;
      svg += "<line x1=\"" + detail::svg_num(x0 - 4.0) + "\" y1=\"" + detail::svg_num(sy(s)) +
             "\" x2=\"" + detail::svg_num(x0) + "\" y2=\"" + detail::svg_num(sy(s)) +
             "\" stroke=\"black\"/>\n";
      svg += "<text x=\"" + detail::svg_num(x0 - 8.0) + "\" y=\"" + detail::svg_num(sy(s) + 4.0) +
             "\" text-anchor=\"end\">" + detail::svg_num(s) + "</text>\n";
      const double t = t_max * double(k) / 4.0;
      svg += "<line x1=\"" + detail::svg_num(sx(t)) + "\" y1=\"" + detail::svg_num(y0 + plot_h) +
             "\" x2=\"" + detail::svg_num(sx(t)) + "\" y2=\"" +
             detail::svg_num(y0 + plot_h + 4.0) + "\" stroke=\"black\"/>\n";
      svg += "<text x=\"" + detail::svg_num(sx(t)) + "\" y=\"" +
             detail::svg_num(y0 + plot_h + 18.0) + "\" text-anchor=\"middle\">" +
             detail::svg_num(t) + "</text>\n";
    }
    svg += "<text x=\"" + detail::svg_num(x0 + plot_w / 2) + "\" y=\"" +
           detail::svg_num(y0 + plot_h + 36.0) + "\" text-anchor=\"middle\">time</text>\n";
    svg += "<text x=\"" + detail::svg_num(x0 - 44.0) + "\" y=\"" +
           detail::svg_num(y0 + plot_h / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 " +
           detail::svg_num(x0 - 44.0) + " " + detail::svg_num(y0 + plot_h / 2) +
           ")\">survival</text>\n";
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace survpc
