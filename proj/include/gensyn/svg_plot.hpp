#pragma once

#include "gensyn/csv.hpp"
#include "gensyn/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace gensyn {

/// Small hand-rolled SVG plotter for the batch reports: line/point series
/// on linear or log-x axes. Enough for the comparison and sweep figures.
class SvgPlot {
  public:
    SvgPlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void set_log_x(bool v) { log_x_ = v; }

    /// Categorical x labels (used instead of numeric ticks when non-empty).
    void set_x_categories(std::vector<std::string> cats) { x_categories_ = std::move(cats); }

    void add_series(const std::string &name, std::vector<double> xs, std::vector<double> ys,
                    bool draw_line = true) {
        series_.push_back({name, std::move(xs), std::move(ys), draw_line});
    }

    void render(const std::string &path) const {
        const double w = 720, h = 480, ml = 80, mr = 160, mt = 50, mb = 60;
        double xmin = std::numeric_limits<double>::max(), xmax = std::numeric_limits<double>::lowest();
        double ymin = std::numeric_limits<double>::max(), ymax = std::numeric_limits<double>::lowest();
        for (const auto &s : series_)
            for (size_t i = 0; i < s.xs.size(); ++i) {
                double x = log_x_ ? std::log10(s.xs[i]) : s.xs[i];
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, s.ys[i]);
                ymax = std::max(ymax, s.ys[i]);
            }
        if (xmin > xmax) { xmin = 0; xmax = 1; }
        if (ymin > ymax) { ymin = 0; ymax = 1; }
        if (xmax == xmin) { xmax = xmin + 1; }
        if (ymax == ymin) { ymax = ymin + 1; }
        double ypad = 0.08 * (ymax - ymin);
        ymin -= ypad;
        ymax += ypad;

        auto px = [&](double x) {
            double v = log_x_ ? std::log10(x) : x;
            return ml + (v - xmin) / (xmax - xmin) * (w - ml - mr);
        };
        auto py = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };

        static const char *palette[] = {"#2a9d8f", "#e76f51", "#264653",
                                        "#e9c46a", "#8ab17d", "#6d597a"};
        std::ostringstream svg;
        svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
            << "' font-family='sans-serif' font-size='13'>\n";
        svg << "<rect width='100%' height='100%' fill='white'/>\n";
        svg << "<text x='" << w / 2 << "' y='24' text-anchor='middle' font-size='16'>" << title_
            << "</text>\n";
        svg << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
            << h - mb << "' stroke='black'/>\n";
        svg << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
            << "' stroke='black'/>\n";
        svg << "<text x='" << (ml + w - mr) / 2 << "' y='" << h - 16
            << "' text-anchor='middle'>" << x_label_ << "</text>\n";
        svg << "<text x='20' y='" << (mt + h - mb) / 2 << "' text-anchor='middle' transform='rotate(-90 20 "
            << (mt + h - mb) / 2 << ")'>" << y_label_ << "</text>\n";

        // y ticks
        for (int i = 0; i <= 4; ++i) {
            double y = ymin + (ymax - ymin) * i / 4.0;
            svg << "<line x1='" << ml - 4 << "' y1='" << py(y) << "' x2='" << w - mr << "' y2='"
                << py(y) << "' stroke='#dddddd'/>\n";
            svg << "<text x='" << ml - 8 << "' y='" << py(y) + 4 << "' text-anchor='end'>"
                << format_tick(y) << "</text>\n";
        }
        // x ticks
        if (!x_categories_.empty()) {
            for (size_t i = 0; i < x_categories_.size(); ++i)
                svg << "<text x='" << px(static_cast<double>(i)) << "' y='" << h - mb + 18
                    << "' text-anchor='middle'>" << x_categories_[i] << "</text>\n";
        } else {
            for (int i = 0; i <= 4; ++i) {
                double v = xmin + (xmax - xmin) * i / 4.0;
                double x = ml + (v - xmin) / (xmax - xmin) * (w - ml - mr);
                double label = log_x_ ? std::pow(10.0, v) : v;
                svg << "<text x='" << x << "' y='" << h - mb + 18 << "' text-anchor='middle'>"
                    << format_tick(label) << "</text>\n";
            }
        }

        for (size_t s = 0; s < series_.size(); ++s) {
            const auto &sr = series_[s];
            const char *color = palette[s % 6];
            if (sr.line && sr.xs.size() > 1) {
                svg << "<polyline fill='none' stroke='" << color << "' stroke-width='2' points='";
                for (size_t i = 0; i < sr.xs.size(); ++i)
                    svg << px(sr.xs[i]) << "," << py(sr.ys[i]) << " ";
                svg << "'/>\n";
            }
            for (size_t i = 0; i < sr.xs.size(); ++i)
                svg << "<circle cx='" << px(sr.xs[i]) << "' cy='" << py(sr.ys[i])
                    << "' r='4' fill='" << color << "'/>\n";
            svg << "<rect x='" << w - mr + 12 << "' y='" << mt + 18 * s << "' width='12' height='12' fill='"
                << color << "'/>\n";
            svg << "<text x='" << w - mr + 30 << "' y='" << mt + 18 * s + 10 << "'>" << sr.name
                << "</text>\n";
        }
        svg << "</svg>\n";

        std::ofstream out(path);
        if (!out) throw ConfigError("cannot write plot: " + path);
        out << svg.str();
    }

  private:
    struct Series {
        std::string name;
        std::vector<double> xs, ys;
        bool line = true;
    };

    static std::string format_tick(double v) {
        if (v != 0 && (std::abs(v) < 1e-3 || std::abs(v) >= 1e5)) {
            std::ostringstream o;
            o.precision(2);
            o << std::scientific << v;
            return o.str();
        }
        std::ostringstream o;
        o.precision(4);
        o << v;
        return o.str();
    }

    std::string title_, x_label_, y_label_;
    bool log_x_ = false;
    std::vector<std::string> x_categories_;
    std::vector<Series> series_;
};

} // namespace gensyn
