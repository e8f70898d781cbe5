#pragma once

#include <string>
#include <vector>

namespace ltm {

// Minimal static line-plot writer. Series share one x axis (sample index);
// output is deterministic for identical inputs.
class SvgPlot {
  public:
    SvgPlot(int width, int height, std::string title);

    void add_series(const std::string& label, const std::vector<double>& ys,
                    const std::string& color, double x_offset = 0.0);
    void add_markers(const std::string& label, const std::vector<int>& xs,
                     const std::vector<double>& ys, const std::string& color);
    void add_hline(double y, const std::string& label, const std::string& color);

    void write(const std::string& path) const;

  private:
    struct Series {
        std::string label;
        std::vector<double> ys;
        std::string color;
        double x_offset;
    };
    struct Markers {
        std::string label;
        std::vector<int> xs;
        std::vector<double> ys;
        std::string color;
    };
    struct HLine {
        double y;
        std::string label;
        std::string color;
    };
    int width_, height_;
    std::string title_;
    std::vector<Series> series_;
    std::vector<Markers> markers_;
    std::vector<HLine> hlines_;
};

}  // namespace ltm
