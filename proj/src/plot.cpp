#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ocs/experiment.hpp"

namespace ocs {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 70, kRight = 130, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

std::string num(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

}  // namespace

std::string render_line_chart(const ComponentTable& table) {
  if (table.values.empty() || table.policies.empty()) throw Error(ErrorCode::InvalidArgument, "empty table");
  double x_lo = *std::min_element(table.values.begin(), table.values.end());
  double x_hi = *std::max_element(table.values.begin(), table.values.end());
  if (x_hi == x_lo) x_hi = x_lo + 1;
  double y_lo = 0.0, y_hi = -std::numeric_limits<double>::infinity();
  for (const auto& row : table.means)
    for (double v : row) {
      y_hi = std::max(y_hi, v);
      y_lo = std::min(y_lo, v);
    }
  if (!(y_hi > y_lo)) y_hi = y_lo + 1;
  y_hi *= 1.05;

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - y_lo) / (y_hi - y_lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << table.component
      << " latency vs " << to_string(table.variable) << "</text>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << kTop + ph
      << "\" stroke=\"black\"/>\n";

  for (int value : table.values) {
    const double x = px(value);
    svg << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\"" << kTop + ph + 5
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18 << "\" text-anchor=\"middle\">" << value << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double v = y_lo + (y_hi - y_lo) * i / 5.0;
    const double y = py(v);
    svg << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  svg << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">"
      << to_string(table.variable) << "</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << kTop + ph / 2 << ")\">mean " << table.component << " latency (s)</text>\n";

  for (std::size_t p = 0; p < table.policies.size(); ++p) {
    const char* color = kColors[p % std::size(kColors)];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < table.values.size(); ++i)
      svg << (i ? " " : "") << px(table.values[i]) << ',' << py(table.means[i][p]);
    svg << "\"/>\n";
    for (std::size_t i = 0; i < table.values.size(); ++i)
      svg << "<circle cx=\"" << px(table.values[i]) << "\" cy=\"" << py(table.means[i][p]) << "\" r=\"3\" fill=\""
          << color << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(p);
    svg << "<line x1=\"" << kLeft + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 35 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4 << "\">" << to_string(table.policies[p])
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ocs
