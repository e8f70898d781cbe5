#include "ltm/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace ltm {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string r;
    for (char c : s) {
        switch (c) {
            case '<': r += "&lt;"; break;
            case '>': r += "&gt;"; break;
            case '&': r += "&amp;"; break;
            default: r += c;
        }
    }
    return r;
}

}  // namespace

SvgPlot::SvgPlot(int width, int height, std::string title)
    : width_(width), height_(height), title_(std::move(title)) {}

void SvgPlot::add_series(const std::string& label, const std::vector<double>& ys,
                         const std::string& color, double x_offset) {
    series_.push_back({label, ys, color, x_offset});
}

void SvgPlot::add_markers(const std::string& label, const std::vector<int>& xs,
                          const std::vector<double>& ys, const std::string& color) {
    markers_.push_back({label, xs, ys, color});
}

void SvgPlot::add_hline(double y, const std::string& label, const std::string& color) {
    hlines_.push_back({y, label, color});
}

void SvgPlot::write(const std::string& path) const {
    double xmin = 0.0, xmax = 1.0, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series_) {
        xmax = std::max(xmax, s.x_offset + static_cast<double>(s.ys.size()) - 1.0);
        for (double y : s.ys) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    for (const auto& m : markers_)
        for (size_t i = 0; i < m.xs.size(); ++i) {
            xmax = std::max(xmax, static_cast<double>(m.xs[i]));
            ymin = std::min(ymin, m.ys[i]);
            ymax = std::max(ymax, m.ys[i]);
        }
    for (const auto& h : hlines_) {
        ymin = std::min(ymin, h.y);
        ymax = std::max(ymax, h.y);
    }
    if (ymin > ymax) {
        ymin = 0.0;
        ymax = 1.0;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double ml = 56, mr = 12, mt = 28, mb = 28;
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("svg: cannot write '" + path + "'");
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << ml << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(title_) << "</text>\n";
    // axes
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt) << "\" x2=\"" << num(ml) << "\" y2=\""
        << num(mt + ph) << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(mt + ph) << "\" x2=\"" << num(ml + pw)
        << "\" y2=\"" << num(mt + ph) << "\" stroke=\"#444\"/>\n";
    out << "<text x=\"4\" y=\"" << num(py(ymax) + 4) << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << num(ymax) << "</text>\n";
    out << "<text x=\"4\" y=\"" << num(py(ymin) + 4) << "\" font-family=\"sans-serif\" font-size=\"10\">"
        << num(ymin) << "</text>\n";
    out << "<text x=\"" << num(ml + pw - 24) << "\" y=\"" << num(mt + ph + 16)
        << "\" font-family=\"sans-serif\" font-size=\"10\">" << num(xmax) << "</text>\n";

    for (const auto& h : hlines_) {
        out << "<line x1=\"" << num(ml) << "\" y1=\"" << num(py(h.y)) << "\" x2=\"" << num(ml + pw)
            << "\" y2=\"" << num(py(h.y)) << "\" stroke=\"" << h.color
            << "\" stroke-dasharray=\"6,4\"/>\n";
        out << "<text x=\"" << num(ml + 4) << "\" y=\"" << num(py(h.y) - 4)
            << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"" << h.color << "\">"
            << escape(h.label) << "</text>\n";
    }

    double legend_x = ml + 8;
    for (const auto& s : series_) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        for (size_t i = 0; i < s.ys.size(); ++i) {
            if (i) out << ' ';
            out << num(px(s.x_offset + static_cast<double>(i))) << ',' << num(py(s.ys[i]));
        }
        out << "\"/>\n";
        out << "<text x=\"" << num(legend_x) << "\" y=\"" << num(mt + 12)
            << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << s.color << "\">"
            << escape(s.label) << "</text>\n";
        legend_x += 10.0 * (s.label.size() + 2);
    }
    for (const auto& m : markers_) {
        for (size_t i = 0; i < m.xs.size(); ++i)
            out << "<circle cx=\"" << num(px(m.xs[i])) << "\" cy=\"" << num(py(m.ys[i]))
                << "\" r=\"3\" fill=\"" << m.color << "\"/>\n";
        out << "<text x=\"" << num(legend_x) << "\" y=\"" << num(mt + 12)
            << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << m.color << "\">"
            << escape(m.label) << "</text>\n";
        legend_x += 10.0 * (m.label.size() + 2);
    }
    out << "</svg>\n";
}

}  // namespace ltm
