#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "biortho/precision.hpp"

namespace biortho {

// CSV with deterministic decimal formatting; one writer per file, rows fully
// assembled before writing so parallel producers cannot interleave.
class CsvWriter {
public:
    explicit CsvWriter(unsigned precision_bits)
        : digits_(std::max(6u, std::min(output_digits_for_bits(precision_bits), 40u))) {}

    void header(const std::vector<std::string>& names) {
        std::ostringstream row;
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (i) row << ',';
            row << names[i];
        }
        rows_.push_back(row.str());
    }

    class Row {
    public:
        explicit Row(unsigned digits) : digits_(digits) {}
        Row& add(const std::string& s) {
            if (!cells_.empty() || started_) os_ << ',';
            started_ = true;
            os_ << s;
            return *this;
        }
        Row& add(std::int64_t v) { return add(std::to_string(v)); }
        Row& add(const Real& v) { return add(format_real(v, digits_)); }
        Row& add(double v) {
            std::ostringstream os;
            os.precision(17);
            os << v;
            return add(os.str());
        }
        std::string str() const { return os_.str(); }

    private:
        unsigned digits_;
        bool started_ = false;
        std::vector<int> cells_;
        std::ostringstream os_;
    };

    Row row() const { return Row(digits_); }
    void push(const Row& r) { rows_.push_back(r.str()); }
    void push_raw(std::string line) { rows_.push_back(std::move(line)); }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw ComputeFailed("cannot open " + path);
        for (const auto& r : rows_) out << r << '\n';
    }

    unsigned digits() const { return digits_; }

private:
    unsigned digits_;
    std::vector<std::string> rows_;
};

// Minimal static SVG polyline plot, no plotting dependency.
inline void write_svg_polyline(const std::string& path, const std::vector<std::pair<double, double>>& pts,
                               const std::string& x_label, const std::string& y_label) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ComputeFailed("cannot open " + path);
    const int w = 640, h = 480, margin = 56;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (!pts.empty()) {
        xmin = xmax = pts[0].first;
        ymin = ymax = pts[0].second;
        for (auto& [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    auto sx = [&](double x) { return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin); };
    auto sy = [&](double y) { return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin); };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin << "\" y2=\""
        << h - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << h - margin
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << w / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label
        << "</text>\n";
    out << "<text x=\"14\" y=\"" << h / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 14 "
        << h / 2 << ")\">" << y_label << "</text>\n";
    out << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (auto& [x, y] : pts) out << sx(x) << ',' << sy(y) << ' ';
    out << "\"/>\n";
    for (auto& [x, y] : pts)
        out << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
    out << "</svg>\n";
}

} // namespace biortho
