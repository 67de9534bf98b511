#pragma once

// CSV tables and a minimal SVG line chart.

#include "sticky/error.hpp"
#include "sticky/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace sticky::io {

/// Rows of doubles under a fixed header, written with round-trip precision.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add(std::vector<double> row) {
        require(row.size() == columns.size(), ErrorCode::InvalidArgument, "row width does not match the header");
        rows.push_back(std::move(row));
    }

    void write_csv(std::ostream& os) const {
        for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
        os << "\n";
        os << std::setprecision(17);
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << row[k];
            os << "\n";
        }
    }
};

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write \"" + path + "\"");
    out << text;
}

inline void write_csv_file(const std::string& path, const Table& t) {
    std::ostringstream os;
    t.write_csv(os);
    write_file(path, os.str());
}

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line chart with logarithmic axes; non-positive or non-finite points are skipped.
inline std::string svg_loglog(const std::string& title, const std::string& xlabel, const std::vector<Series>& series) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
    double xmin = numeric::kInfinity, xmax = -numeric::kInfinity, ymin = numeric::kInfinity, ymax = -numeric::kInfinity;
    auto usable = [](double x, double y) { return x > 0 && y > 0 && std::isfinite(x) && std::isfinite(y); };
    for (const auto& s : series)
        for (std::size_t k = 0; k < s.x.size(); ++k)
            if (usable(s.x[k], s.y[k])) {
                xmin = std::min(xmin, std::log10(s.x[k]));
                xmax = std::max(xmax, std::log10(s.x[k]));
                ymin = std::min(ymin, std::log10(s.y[k]));
                ymax = std::max(ymax, std::log10(s.y[k]));
            }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax - xmin < 1e-12) xmax = xmin + 1;
    if (ymax - ymin < 1e-12) ymax = ymin + 1;
    auto px = [&](double lx) { return L + (lx - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double ly) { return H - B - (ly - ymin) / (ymax - ymin) * (H - T - B); };
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

    std::ostringstream os;
    os << std::setprecision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
    os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double lx = xmin + (xmax - xmin) * k / 4.0, ly = ymin + (ymax - ymin) * k / 4.0;
        os << "<text x=\"" << px(lx) << "\" y=\"" << H - B + 16 << "\" font-size=\"10\" text-anchor=\"middle\">1e"
           << std::setprecision(3) << lx << "</text>\n";
        os << "<text x=\"" << L - 6 << "\" y=\"" << py(ly) + 4 << "\" font-size=\"10\" text-anchor=\"end\">1e" << ly
           << "</text>\n";
    }
    os << std::setprecision(6);
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">"
       << xlabel << "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = colors[s % std::size(colors)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < series[s].x.size(); ++k)
            if (usable(series[s].x[k], series[s].y[k]))
                os << px(std::log10(series[s].x[k])) << "," << py(std::log10(series[s].y[k])) << " ";
        os << "\"/>\n";
        const double ly = T + 16 + 18.0 * static_cast<double>(s);
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << series[s].label
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace sticky::io
