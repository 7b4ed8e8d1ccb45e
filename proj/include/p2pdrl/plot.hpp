#ifndef P2PDRL_PLOT_HPP_
#define P2PDRL_PLOT_HPP_

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace p2pdrl {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> err;  // half-width of the band; may be empty
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Mean and standard error of the samples at each x, in increasing x.
Series aggregate_series(const std::string& label,
                        const std::map<double, std::vector<double>>& samples);

// Standalone SVG: one polyline per series (one vertex per point), a shaded
// mean +- err band, axes with ticks and a legend. Throws StateError when no
// series has any point.
std::string render_svg(const Chart& chart);
void write_svg(const std::filesystem::path& path, const Chart& chart);

}  // namespace p2pdrl

#endif  // P2PDRL_PLOT_HPP_
