#include "cdm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>
#include <tuple>

#include "cdm/metrics.hpp"

namespace cdm {

std::string_view to_string(PlotKind kind) {
  switch (kind) {
    case PlotKind::Sweep: return "sweep";
    case PlotKind::Ablation: return "ablation";
    case PlotKind::Anytime: return "anytime";
    case PlotKind::Weights: return "weights";
    case PlotKind::Pcc: return "pcc";
  }
  return "?";
}

PlotKind parse_plot_kind(std::string_view text) {
  for (PlotKind k : {PlotKind::Sweep, PlotKind::Ablation, PlotKind::Anytime, PlotKind::Weights, PlotKind::Pcc}) {
    if (to_string(k) == text) return k;
  }
  throw std::invalid_argument("unknown plot kind '" + std::string(text) + "'");
}

PlotKind detect_plot_kind(const CsvTable& table) {
  if (table.has_column("variant") && table.has_column("scaled_reward")) {
    const std::size_t v = table.column("variant");
    for (const auto& row : table.rows) {
      if (row[v] == "top") return PlotKind::Ablation;
    }
    return PlotKind::Sweep;
  }
  if (table.has_column("series") && table.has_column("t")) return PlotKind::Anytime;
  if (table.has_column("metacmab_weight")) return PlotKind::Weights;
  if (table.has_column("scaled_distance") && table.has_column("pcc")) return PlotKind::Pcc;
  throw std::invalid_argument("cannot infer plot kind from the CSV header");
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* color_for(std::string_view name) {
  static const std::map<std::string_view, const char*> fixed{
      {"wmv", "#1f77b4"},         {"metamab", "#2ca02c"},      {"exp4p", "#ff7f0e"},
      {"metacmab", "#9467bd"},    {"random", "#8c564b"},       {"best_expert", "#444444"},
      {"worst_expert", "#999999"}, {"random_baseline", "#d62728"}};
  const auto it = fixed.find(name);
  return it == fixed.end() ? "#17becf" : it->second;
}

class Svg {
 public:
  Svg(double width, double height) : width_(width), height_(height) {}

  void raw(const std::string& s) { body_ += s; }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke, double width = 1.0,
            std::string_view dash = "") {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
             "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) + "\"" + dash_attr(dash) +
             "/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view stroke, double width,
                std::string_view dash = "") {
    if (pts.empty()) return;
    body_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + num(width) +
             "\"" + dash_attr(dash) + " points=\"" + points(pts) + "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts, std::string_view fill, double opacity) {
    if (pts.empty()) return;
    body_ += "<polygon fill=\"" + std::string(fill) + "\" fill-opacity=\"" + num(opacity) +
             "\" stroke=\"none\" points=\"" + points(pts) + "\"/>\n";
  }

  void circle(double x, double y, double r, std::string_view fill, double opacity = 1.0) {
    body_ += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" + num(r) + "\" fill=\"" +
             std::string(fill) + "\" fill-opacity=\"" + num(opacity) + "\"/>\n";
  }

  void text(double x, double y, std::string_view s, double size = 11, std::string_view anchor = "start") {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + std::string(anchor) + "\">" + escape(s) +
             "</text>\n";
  }

  std::string str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
           "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" "
           "fill=\"white\"/>\n" + body_ + "</svg>\n";
  }

 private:
  static std::string dash_attr(std::string_view dash) {
    return dash.empty() ? "" : " stroke-dasharray=\"" + std::string(dash) + "\"";
  }
  static std::string points(const std::vector<std::pair<double, double>>& pts) {
    std::string s;
    for (const auto& [x, y] : pts) {
      if (!s.empty()) s += ' ';
      s += num(x) + ',' + num(y);
    }
    return s;
  }

  double width_;
  double height_;
  std::string body_;
};

constexpr const char* kDashDot = "8,3,2,3";

// Data-to-pixel mapping of one chart area.
struct Frame {
  double left, top, width, height;
  double x0, x1, y0, y1;

  double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
  double py(double y) const { return top + height - (y - y0) / (y1 - y0) * height; }

  void axes(Svg& svg, std::string_view title, std::string_view xlabel, std::string_view ylabel) const {
    svg.raw("<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(width) + "\" height=\"" +
            num(height) + "\" fill=\"none\" stroke=\"#000\"/>\n");
    for (int i = 0; i <= 4; ++i) {
      const double fx = x0 + (x1 - x0) * i / 4.0;
      const double fy = y0 + (y1 - y0) * i / 4.0;
      svg.line(px(fx), top + height, px(fx), top + height + 4, "#000");
      svg.text(px(fx), top + height + 15, format_tick(fx), 9, "middle");
      svg.line(left - 4, py(fy), left, py(fy), "#000");
      svg.text(left - 6, py(fy) + 3, format_tick(fy), 9, "end");
    }
    svg.text(left + width / 2, top - 8, title, 12, "middle");
    svg.text(left + width / 2, top + height + 30, xlabel, 10, "middle");
    svg.raw("<text x=\"" + num(left - 38) + "\" y=\"" + num(top + height / 2) +
            "\" font-size=\"10\" font-family=\"sans-serif\" text-anchor=\"middle\" transform=\"rotate(-90 " +
            num(left - 38) + " " + num(top + height / 2) + ")\">" + escape(ylabel) + "</text>\n");
  }

  static std::string format_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
  }
};

struct PanelKey {
  std::size_t arms;
  std::size_t experts;
  auto operator<=>(const PanelKey&) const = default;
};

// A: (4,4), B: (32,4), C: (4,32), D: (32,32) ordering: experts first, then arms.
std::vector<PanelKey> panel_keys(const CsvTable& table) {
  std::vector<PanelKey> keys;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const PanelKey k{static_cast<std::size_t>(table.number(r, "arms")),
                     static_cast<std::size_t>(table.number(r, "experts"))};
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
  }
  std::sort(keys.begin(), keys.end(), [](const PanelKey& a, const PanelKey& b) {
    return std::tie(a.experts, a.arms) < std::tie(b.experts, b.arms);
  });
  return keys;
}

std::string panel_title(std::size_t index, const PanelKey& k) {
  return std::string(1, static_cast<char>('A' + index % 26)) + ") " + std::to_string(k.arms) + " arms, " +
         std::to_string(k.experts) + " experts";
}

Frame grid_frame(std::size_t index, double x0, double x1, double y0, double y1) {
  const double col = static_cast<double>(index % 2);
  const double row = static_cast<double>(index / 2);
  return {70 + col * 420, 50 + row * 330, 330, 240, x0, x1, y0, y1};
}

struct Curve {
  std::vector<double> x, mean, std;
};

void draw_curve(Svg& svg, const Frame& f, const Curve& c, std::string_view color, std::string_view dash,
                bool band) {
  std::vector<std::pair<double, double>> line, poly;
  for (std::size_t i = 0; i < c.x.size(); ++i) line.emplace_back(f.px(c.x[i]), f.py(std::clamp(c.mean[i], f.y0, f.y1)));
  if (band) {
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      poly.emplace_back(f.px(c.x[i]), f.py(std::clamp(c.mean[i] + c.std[i], f.y0, f.y1)));
    }
    for (std::size_t i = c.x.size(); i-- > 0;) {
      poly.emplace_back(f.px(c.x[i]), f.py(std::clamp(c.mean[i] - c.std[i], f.y0, f.y1)));
    }
    svg.polygon(poly, color, 0.15);
  }
  svg.polyline(line, color, 1.6, dash);
}

void legend(Svg& svg, double x, double y, const std::vector<std::tuple<std::string, std::string, std::string>>& items) {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& [label, color, dash] = items[i];
    const double yy = y + 14.0 * static_cast<double>(i);
    svg.line(x, yy - 4, x + 22, yy - 4, color, 2, dash);
    svg.text(x + 28, yy, label, 10);
  }
}

std::string render_sweep(const CsvTable& table) {
  const auto keys = panel_keys(table);
  // series label -> panel -> delta -> values
  using Samples = std::map<double, std::vector<double>>;
  std::map<std::string, std::map<PanelKey, Samples>> data;
  std::vector<std::string> order;
  auto add = [&](const std::string& label, const PanelKey& k, double delta, double v) {
    if (!data.count(label)) order.push_back(label);
    data[label][k][delta].push_back(v);
  };
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const PanelKey k{static_cast<std::size_t>(table.number(r, "arms")),
                     static_cast<std::size_t>(table.number(r, "experts"))};
    const double delta = table.number(r, "delta");
    const bool top = table.text(r, "variant") == "top";
    const std::string suffix = top ? "-50%" : "";
    add(table.text(r, "algorithm") + suffix, k, delta, table.number(r, "scaled_reward"));
    // Expert and baseline references repeat for every algorithm; the mean is unaffected.
    if (!top) {
      add("best_expert", k, delta, table.number(r, "best_expert"));
      add("worst_expert", k, delta, table.number(r, "worst_expert"));
      add("random_baseline", k, delta, table.number(r, "random_baseline"));
    }
  }

  const double height = 50 + 330 * static_cast<double>((keys.size() + 1) / 2) + 40;
  Svg svg(900, height);
  std::vector<std::tuple<std::string, std::string, std::string>> items;
  for (std::size_t p = 0; p < keys.size(); ++p) {
    const Frame f = grid_frame(p, 0.0, 1.0, 0.0, 1.0);
    f.axes(svg, panel_title(p, keys[p]), "value distance", "scaled cumulative reward");
    for (const auto& label : order) {
      const auto it = data[label].find(keys[p]);
      if (it == data[label].end()) continue;
      Curve c;
      for (const auto& [delta, values] : it->second) {
        const MeanStd ms = mean_std(values);
        c.x.push_back(delta);
        c.mean.push_back(ms.mean);
        c.std.push_back(ms.std);
      }
      const bool top = label.ends_with("-50%");
      const std::string base = top ? label.substr(0, label.size() - 4) : label;
      std::string dash = top ? "5,3" : "";
      if (label == "random_baseline") dash = kDashDot;
      if (label == "best_expert" || label == "worst_expert") dash = "2,2";
      const bool band = label != "random_baseline" && label != "best_expert" && label != "worst_expert";
      draw_curve(svg, f, c, color_for(base), dash, band);
      if (p == 0) items.emplace_back(label, color_for(base), dash);
    }
  }
  legend(svg, 760, 60, items);
  return svg.str();
}

std::string render_anytime(const CsvTable& table) {
  const auto keys = panel_keys(table);
  std::map<PanelKey, std::map<std::string, Curve>> data;
  std::vector<std::string> order;
  double t_max = 1.0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const PanelKey k{static_cast<std::size_t>(table.number(r, "arms")),
                     static_cast<std::size_t>(table.number(r, "experts"))};
    const std::string& name = table.text(r, "series");
    if (std::find(order.begin(), order.end(), name) == order.end()) order.push_back(name);
    Curve& c = data[k][name];
    c.x.push_back(table.number(r, "t"));
    c.mean.push_back(table.number(r, "mean"));
    c.std.push_back(table.number(r, "std"));
    t_max = std::max(t_max, c.x.back());
  }

  const double height = 50 + 330 * static_cast<double>((keys.size() + 1) / 2) + 40;
  Svg svg(900, height);
  std::vector<std::tuple<std::string, std::string, std::string>> items;
  for (std::size_t p = 0; p < keys.size(); ++p) {
    const Frame f = grid_frame(p, 1.0, t_max, 0.0, 1.0);
    f.axes(svg, panel_title(p, keys[p]), "timestep", "scaled average reward");
    auto& curves = data[keys[p]];
    for (const auto& name : order) {
      const auto it = curves.find(name);
      if (it == curves.end()) continue;
      std::string dash;
      if (name == "random_baseline") dash = kDashDot;
      if (name == "best_expert" || name == "worst_expert") dash = "2,2";
      draw_curve(svg, f, it->second, color_for(name), dash, name != "random_baseline");
      if (p == 0) items.emplace_back(name, color_for(name), dash);
    }
    const auto cmab = curves.find("metacmab");
    const auto best = curves.find("best_expert");
    if (cmab != curves.end() && best != curves.end() && cmab->second.mean.size() == best->second.mean.size()) {
      if (const auto step = crossover_step(cmab->second.mean, best->second.mean)) {
        const double x = f.px(cmab->second.x[*step]);
        svg.line(x, f.top, x, f.top + f.height, "#000", 1.0, "3,3");
        svg.text(x + 4, f.top + 12, "crossover t=" + Frame::format_tick(cmab->second.x[*step]), 9);
      }
    }
  }
  legend(svg, 760, 60, items);
  return svg.str();
}

void bounds(const std::vector<double>& v, double& lo, double& hi) {
  lo = *std::min_element(v.begin(), v.end());
  hi = *std::max_element(v.begin(), v.end());
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

void scatter_panel(Svg& svg, const Frame& f, const std::vector<double>& xs, const std::vector<double>& ys,
                   const std::vector<bool>& highlight, std::string_view color) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg.circle(f.px(xs[i]), f.py(ys[i]), highlight[i] ? 3.0 : 2.0, highlight[i] ? "#d62728" : color,
               highlight[i] ? 0.9 : 0.45);
  }
}

std::string render_weights(const CsvTable& table) {
  std::vector<double> reward, cmab, exp4p, random;
  std::vector<bool> best;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    reward.push_back(table.number(r, "expected_reward"));
    cmab.push_back(table.number(r, "metacmab_weight"));
    exp4p.push_back(table.number(r, "exp4p_weight"));
    random.push_back(table.number(r, "random_reward"));
    best.push_back(table.text(r, "is_best") == "1");
  }
  const double baseline = mean_std(random).mean;
  double x0, x1;
  bounds(reward, x0, x1);
  Svg svg(900, 380);
  const std::pair<const char*, const std::vector<double>*> panels[] = {{"A) meta-CMAB", &cmab},
                                                                       {"B) EXP4.P", &exp4p}};
  for (std::size_t p = 0; p < 2; ++p) {
    double y0, y1;
    bounds(*panels[p].second, y0, y1);
    const Frame f = grid_frame(p, x0, x1, y0, y1);
    f.axes(svg, panels[p].first, "expected reward", "normalized weight");
    if (baseline > x0 && baseline < x1) {
      svg.line(f.px(baseline), f.top, f.px(baseline), f.top + f.height, color_for("random_baseline"), 1.2, kDashDot);
    }
    scatter_panel(svg, f, reward, *panels[p].second, best, p == 0 ? color_for("metacmab") : color_for("exp4p"));
    if (reward.size() >= 2) {
      try {
        svg.text(f.left + 6, f.top + 14, "PCC = " + Frame::format_tick(pearson_cc(reward, *panels[p].second)), 10);
      } catch (const std::exception&) {
      }
    }
  }
  return svg.str();
}

std::string render_pcc(const CsvTable& table) {
  std::vector<double> d, c;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    d.push_back(table.number(r, "scaled_distance"));
    c.push_back(table.number(r, "pcc"));
  }
  double x0, x1;
  bounds(d, x0, x1);
  x0 = std::min(x0, 0.0);
  Svg svg(480, 380);
  const Frame f{70, 50, 360, 260, x0, x1, -1.05, 1.05};
  f.axes(svg, "PCC versus scaled distance", "scaled distance", "Pearson correlation");
  scatter_panel(svg, f, d, c, std::vector<bool>(d.size(), false), "#1f77b4");
  if (d.size() >= 2) {
    const LinearFit fit = linear_fit(d, c);
    svg.line(f.px(x0), f.py(std::clamp(fit.intercept + fit.slope * x0, -1.05, 1.05)), f.px(x1),
             f.py(std::clamp(fit.intercept + fit.slope * x1, -1.05, 1.05)), "#d62728", 1.5);
    svg.text(f.left + 6, f.top + f.height - 8,
             "fit: " + Frame::format_tick(fit.intercept) + " + " + Frame::format_tick(fit.slope) + " d", 10);
  }
  return svg.str();
}

}  // namespace

std::string render_svg(const CsvTable& table, PlotKind kind) {
  if (table.rows.empty()) throw std::invalid_argument("plot: CSV has no data rows");
  switch (kind) {
    case PlotKind::Sweep:
    case PlotKind::Ablation: return render_sweep(table);
    case PlotKind::Anytime: return render_anytime(table);
    case PlotKind::Weights: return render_weights(table);
    case PlotKind::Pcc: return render_pcc(table);
  }
  throw std::invalid_argument("plot: unknown kind");
}

}  // namespace cdm
