#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace qmdn {

/// Minimal self-contained SVG document builder. Coordinates are pixels with
/// the origin at the top left; output is deterministic for identical calls.
class SvgCanvas {
  public:
    SvgCanvas(double width, double height);

    void line(double x1, double y1, double x2, double y2,
              const std::string& stroke, double stroke_width);
    void polyline(std::span<const std::pair<double, double>> points,
                  const std::string& stroke, double stroke_width,
                  double opacity = 1.0);
    void circle(double cx, double cy, double r, const std::string& fill,
                double opacity = 1.0);
    void text(double x, double y, const std::string& content,
              double font_size, const std::string& anchor = "start");

    double width() const { return width_; }
    double height() const { return height_; }

    /// Complete <svg> document.
    std::string str() const;
    void save(const std::filesystem::path& path) const;

  private:
    double width_ = 0.0;
    double height_ = 0.0;
    std::string body_;
};

/// Margined data-to-pixel frame over a canvas, with ticked axes. The y axis
/// points up in data space.
class PlotFrame {
  public:
    PlotFrame(SvgCanvas& canvas, double x_lo, double x_hi, double y_lo,
              double y_hi);

    double px(double x) const;
    double py(double y) const;

    /// Border box, five ticks with numeric labels per axis, axis labels,
    /// and a centered title.
    void draw_axes(const std::string& title, const std::string& x_label,
                   const std::string& y_label);

    void polyline(std::span<const std::pair<double, double>> data_points,
                  const std::string& stroke, double stroke_width,
                  double opacity = 1.0);
    void scatter(std::span<const std::pair<double, double>> data_points,
                 double radius, const std::string& fill,
                 double opacity = 1.0);
    /// Color-keyed legend entry; successive calls stack downward.
    void legend(const std::string& label, const std::string& color);

  private:
    SvgCanvas* canvas_;
    double x_lo_, x_hi_, y_lo_, y_hi_;
    double left_, right_, top_, bottom_;
    int legend_rows_ = 0;
};

/// Fixed color cycle used by the plot commands: index 0 is the classical
/// group, index 1 the quantum group.
const std::string& plot_color(std::size_t index);

} // namespace qmdn
