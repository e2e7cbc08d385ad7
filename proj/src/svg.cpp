#include "qmdn/svg.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace qmdn {
namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
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

} // namespace

SvgCanvas::SvgCanvas(double width, double height)
    : width_(width), height_(height) {
    if (!(width > 0.0) || !(height > 0.0))
        throw std::invalid_argument("canvas dimensions must be positive");
}

void SvgCanvas::line(double x1, double y1, double x2, double y2,
                     const std::string& stroke, double stroke_width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" +
             num(x2) + "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke +
             "\" stroke-width=\"" + num(stroke_width) + "\"/>\n";
}

void SvgCanvas::polyline(std::span<const std::pair<double, double>> points,
                         const std::string& stroke, double stroke_width,
                         double opacity) {
    if (points.empty())
        return;
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke +
             "\" stroke-width=\"" + num(stroke_width) + "\" stroke-opacity=\"" +
             num(opacity) + "\" points=\"";
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i)
            body_ += ' ';
        body_ += num(points[i].first) + "," + num(points[i].second);
    }
    body_ += "\"/>\n";
}

void SvgCanvas::circle(double cx, double cy, double r,
                       const std::string& fill, double opacity) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" +
             num(r) + "\" fill=\"" + fill + "\" fill-opacity=\"" +
             num(opacity) + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& content,
                     double font_size, const std::string& anchor) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
             num(font_size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + anchor +
             "\">" + escape(content) + "</text>\n";
}

std::string SvgCanvas::str() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) +
           "\" height=\"" + num(height_) + "\" viewBox=\"0 0 " + num(width_) +
           " " + num(height_) +
           "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" +
           body_ + "</svg>\n";
}

void SvgCanvas::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() +
                                 " for writing");
    out << str();
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
}

PlotFrame::PlotFrame(SvgCanvas& canvas, double x_lo, double x_hi, double y_lo,
                     double y_hi)
    : canvas_(&canvas), x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi),
      left_(62.0), right_(canvas.width() - 18.0), top_(42.0),
      bottom_(canvas.height() - 48.0) {
    if (!(x_hi > x_lo) || !(y_hi > y_lo))
        throw std::invalid_argument("plot frame bounds must be increasing");
}

double PlotFrame::px(double x) const {
    return left_ + (x - x_lo_) / (x_hi_ - x_lo_) * (right_ - left_);
}

double PlotFrame::py(double y) const {
    return bottom_ - (y - y_lo_) / (y_hi_ - y_lo_) * (bottom_ - top_);
}

void PlotFrame::draw_axes(const std::string& title, const std::string& x_label,
                          const std::string& y_label) {
    const std::string axis_color = "#222222";
    canvas_->line(left_, top_, left_, bottom_, axis_color, 1.0);
    canvas_->line(right_, top_, right_, bottom_, axis_color, 1.0);
    canvas_->line(left_, bottom_, right_, bottom_, axis_color, 1.0);
    canvas_->line(left_, top_, right_, top_, axis_color, 1.0);

    constexpr int kTicks = 5;
    for (int i = 0; i < kTicks; ++i) {
        const double f = static_cast<double>(i) / (kTicks - 1);
        const double x = x_lo_ + f * (x_hi_ - x_lo_);
        const double y = y_lo_ + f * (y_hi_ - y_lo_);
        canvas_->line(px(x), bottom_, px(x), bottom_ + 5.0, axis_color, 1.0);
        canvas_->text(px(x), bottom_ + 18.0, num(x), 11.0, "middle");
        canvas_->line(left_ - 5.0, py(y), left_, py(y), axis_color, 1.0);
        canvas_->text(left_ - 8.0, py(y) + 4.0, num(y), 11.0, "end");
    }

    const double mid_x = 0.5 * (left_ + right_);
    canvas_->text(mid_x, 24.0, title, 14.0, "middle");
    canvas_->text(mid_x, bottom_ + 38.0, x_label, 12.0, "middle");
    canvas_->text(14.0, top_ - 12.0, y_label, 12.0, "start");
}

void PlotFrame::polyline(std::span<const std::pair<double, double>> data_points,
                         const std::string& stroke, double stroke_width,
                         double opacity) {
    std::vector<std::pair<double, double>> pixels;
    pixels.reserve(data_points.size());
    for (const auto& [x, y] : data_points)
        pixels.emplace_back(px(x), py(y));
    canvas_->polyline(pixels, stroke, stroke_width, opacity);
}

void PlotFrame::scatter(std::span<const std::pair<double, double>> data_points,
                        double radius, const std::string& fill,
                        double opacity) {
    for (const auto& [x, y] : data_points)
        canvas_->circle(px(x), py(y), radius, fill, opacity);
}

void PlotFrame::legend(const std::string& label, const std::string& color) {
    const double x = left_ + 10.0;
    const double y = top_ + 16.0 + 16.0 * legend_rows_;
    canvas_->line(x, y - 4.0, x + 18.0, y - 4.0, color, 3.0);
    canvas_->text(x + 24.0, y, label, 11.0, "start");
    ++legend_rows_;
}

const std::string& plot_color(std::size_t index) {
    static const std::vector<std::string> cycle = {
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
        "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return cycle[index % cycle.size()];
}

} // namespace qmdn
