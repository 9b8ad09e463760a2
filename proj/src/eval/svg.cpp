#include "sdnguard/eval/svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace sdnguard::eval {

namespace {

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

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

}  // namespace

std::string confusion_svg(const ConfusionMatrix& cm, const std::vector<std::string>& names) {
  const std::size_t C = cm.n_classes;
  const double cell = 48.0, margin = 110.0;
  const double size = margin + cell * static_cast<double>(C) + 20.0;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(size) << "\" height=\"" << fmt(size)
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s << "<text x=\"" << fmt(size / 2) << "\" y=\"14\" text-anchor=\"middle\">predicted</text>\n";
  s << "<text x=\"12\" y=\"" << fmt(size / 2) << "\" transform=\"rotate(-90 12 " << fmt(size / 2)
    << ")\" text-anchor=\"middle\">true</text>\n";
  for (std::size_t t = 0; t < C; ++t) {
    std::size_t row_total = 0;
    for (std::size_t p = 0; p < C; ++p) row_total += cm.at(t, p);
    const auto label = escape(t < names.size() ? names[t] : std::to_string(t));
    s << "<text x=\"" << fmt(margin - 4) << "\" y=\"" << fmt(margin + cell * (t + 0.5)) << "\" text-anchor=\"end\">"
      << label << "</text>\n";
    s << "<text x=\"" << fmt(margin + cell * (t + 0.5)) << "\" y=\"" << fmt(margin - 4)
      << "\" text-anchor=\"middle\">" << label << "</text>\n";
    for (std::size_t p = 0; p < C; ++p) {
      const double share = row_total ? static_cast<double>(cm.at(t, p)) / static_cast<double>(row_total) : 0.0;
      const int shade = 255 - static_cast<int>(share * 200.0);
      s << "<rect x=\"" << fmt(margin + cell * p) << "\" y=\"" << fmt(margin + cell * t) << "\" width=\"" << fmt(cell)
        << "\" height=\"" << fmt(cell) << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\" stroke=\"#999\"/>\n";
      s << "<text x=\"" << fmt(margin + cell * (p + 0.5)) << "\" y=\"" << fmt(margin + cell * (t + 0.5) + 3)
        << "\" text-anchor=\"middle\">" << cm.at(t, p) << "</text>\n";
    }
  }
  s << "</svg>\n";
  return s.str();
}

std::string curves_svg(const std::vector<Curve>& curves, const std::vector<std::string>& names,
                       const std::string& title) {
  const double w = 420, h = 360, left = 50, top = 30, plot = 280;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
    << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  s << "<text x=\"" << fmt(left + plot / 2) << "\" y=\"16\" text-anchor=\"middle\">" << escape(title) << "</text>\n";
  s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(plot) << "\" height=\"" << fmt(plot)
    << "\" fill=\"none\" stroke=\"#333\"/>\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const auto& c = curves[k];
    const char* color = kPalette[k % std::size(kPalette)];
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.x.size(); ++i)
      s << fmt(left + plot * c.x[i]) << ',' << fmt(top + plot * (1.0 - c.y[i])) << ' ';
    s << "\"/>\n";
    const auto label = escape(c.cls < names.size() ? names[c.cls] : std::to_string(c.cls));
    s << "<text x=\"" << fmt(left + plot + 8) << "\" y=\"" << fmt(top + 12.0 * (k + 1)) << "\" fill=\"" << color
      << "\">" << label << " (" << (c.defined ? fmt(c.area) : std::string("n/a")) << ")</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace sdnguard::eval
