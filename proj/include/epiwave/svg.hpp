#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

namespace epiwave {

/// Minimal static SVG chart: axes with ticks, polylines, scatter dots,
/// vertical markers, legend. Everything is laid out at write time from the
/// accumulated data bounds.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string x_label, std::string y_label, int width = 860,
            int height = 560);

    void add_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::string& color,
                  const std::string& label);
    void add_dots(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const std::string& color,
                  const std::string& label);
    void add_vline(double x, const std::string& color, const std::string& label);

    /// Writes atomically (temp file + rename).
    void write(const std::string& path) const;

private:
    struct Layer {
        enum class Kind { line, dots, vline } kind;
        Eigen::VectorXd x, y;
        double x0 = 0.0;
        std::string color, label;
    };

    std::string title_, x_label_, y_label_;
    int width_, height_;
    std::vector<Layer> layers_;
};

} // namespace epiwave
