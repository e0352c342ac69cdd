#include "epiwave/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "epiwave/errors.hpp"

namespace epiwave {

SvgPlot::SvgPlot(std::string title, std::string x_label, std::string y_label, int width,
                 int height)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)),
      width_(width), height_(height) {}

void SvgPlot::add_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::string& color, const std::string& label) {
    if (x.size() != y.size()) throw ValidationError("plot line: x/y size mismatch");
    layers_.push_back({Layer::Kind::line, x, y, 0.0, color, label});
}

void SvgPlot::add_dots(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                       const std::string& color, const std::string& label) {
    if (x.size() != y.size()) throw ValidationError("plot dots: x/y size mismatch");
    layers_.push_back({Layer::Kind::dots, x, y, 0.0, color, label});
}

void SvgPlot::add_vline(double x, const std::string& color, const std::string& label) {
    layers_.push_back({Layer::Kind::vline, {}, {}, x, color, label});
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// Round tick spacing to 1/2/5 times a power of ten.
double nice_step(double span, int target_ticks) {
    const double raw = span / std::max(target_ticks, 1);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double frac = raw / mag;
    if (frac <= 1.5) return mag;
    if (frac <= 3.5) return 2.0 * mag;
    if (frac <= 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

} // namespace

void SvgPlot::write(const std::string& path) const {
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool have = false;
    for (const auto& l : layers_) {
        if (l.kind == Layer::Kind::vline) continue;
        for (Eigen::Index i = 0; i < l.x.size(); ++i) {
            if (!std::isfinite(l.x[i]) || !std::isfinite(l.y[i])) continue;
            if (!have) {
                xmin = xmax = l.x[i];
                ymin = ymax = l.y[i];
                have = true;
            } else {
                xmin = std::min(xmin, l.x[i]);
                xmax = std::max(xmax, l.x[i]);
                ymin = std::min(ymin, l.y[i]);
                ymax = std::max(ymax, l.y[i]);
            }
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double ml = 90, mr = 30, mt = 50, mb = 60;
    const double pw = width_ - ml - mr, ph = height_ - mt - mb;
    const auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    const auto Y = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_ << "\" height=\""
        << height_ << "\" viewBox=\"0 0 " << width_ << " " << height_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << width_ / 2 << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title_ << "</text>\n";

    // Axes and ticks.
    svg << "<g stroke=\"black\" stroke-width=\"1\">\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\"/>\n"
        << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\"/>\n</g>\n";

    svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"black\">\n";
    const double xstep = nice_step(xmax - xmin, 7);
    for (double x = std::ceil(xmin / xstep) * xstep; x <= xmax + 1e-9 * xstep; x += xstep) {
        svg << "<line x1=\"" << X(x) << "\" y1=\"" << mt + ph << "\" x2=\"" << X(x) << "\" y2=\""
            << mt + ph + 5 << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << X(x) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
            << fmt(x) << "</text>\n";
    }
    const double ystep = nice_step(ymax - ymin, 6);
    for (double y = std::ceil(ymin / ystep) * ystep; y <= ymax + 1e-9 * ystep; y += ystep) {
        svg << "<line x1=\"" << ml - 5 << "\" y1=\"" << Y(y) << "\" x2=\"" << ml << "\" y2=\""
            << Y(y) << "\" stroke=\"black\"/>\n"
            << "<text x=\"" << ml - 8 << "\" y=\"" << Y(y) + 4 << "\" text-anchor=\"end\">"
            << fmt(y) << "</text>\n"
            << "<line x1=\"" << ml << "\" y1=\"" << Y(y) << "\" x2=\"" << ml + pw << "\" y2=\""
            << Y(y) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    }
    svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 14
        << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label_ << "</text>\n"
        << "<text x=\"20\" y=\"" << mt + ph / 2
        << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 20 " << mt + ph / 2
        << ")\">" << y_label_ << "</text>\n</g>\n";

    // Data layers.
    for (const auto& l : layers_) {
        if (l.kind == Layer::Kind::line) {
            svg << "<polyline fill=\"none\" stroke=\"" << l.color << "\" stroke-width=\"1.8\" points=\"";
            for (Eigen::Index i = 0; i < l.x.size(); ++i)
                svg << fmt(X(l.x[i])) << "," << fmt(Y(l.y[i])) << " ";
            svg << "\"/>\n";
        } else if (l.kind == Layer::Kind::dots) {
            svg << "<g fill=\"" << l.color << "\">\n";
            for (Eigen::Index i = 0; i < l.x.size(); ++i)
                svg << "<circle cx=\"" << fmt(X(l.x[i])) << "\" cy=\"" << fmt(Y(l.y[i]))
                    << "\" r=\"2.4\"/>\n";
            svg << "</g>\n";
        } else {
            if (l.x0 >= xmin && l.x0 <= xmax)
                svg << "<line x1=\"" << X(l.x0) << "\" y1=\"" << mt << "\" x2=\"" << X(l.x0)
                    << "\" y2=\"" << mt + ph << "\" stroke=\"" << l.color
                    << "\" stroke-dasharray=\"5,4\" stroke-width=\"1.2\"/>\n";
        }
    }

    // Legend.
    double ly = mt + 12;
    svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (const auto& l : layers_) {
        if (l.label.empty()) continue;
        svg << "<rect x=\"" << ml + 10 << "\" y=\"" << ly - 8 << "\" width=\"18\" height=\"4\" fill=\""
            << l.color << "\"/>\n"
            << "<text x=\"" << ml + 34 << "\" y=\"" << ly << "\">" << l.label << "</text>\n";
        ly += 18;
    }
    svg << "</g>\n</svg>\n";

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw ValidationError("cannot write '" + tmp + "'");
        out << svg.str();
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw ValidationError("cannot rename '" + tmp + "' to '" + path + "'");
}

} // namespace epiwave
