#include "mflq/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace mflq::svg {

namespace {

constexpr double kWidth = 900, kHeight = 540;
constexpr double kLeft = 70, kRight = 30, kTop = 48, kBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

} // namespace

void LinePlot::add_series(const std::string& label, const std::vector<double>& x,
                          const std::vector<double>& y) {
    if (x.size() != y.size() || x.empty())
        throw std::invalid_argument("LinePlot: series sizes mismatch or empty");
    series_.push_back({label, x, y});
}

void LinePlot::write(const std::string& path) const {
    double xmin = std::numeric_limits<double>::max(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : series_) {
        for (double v : s.x) {
            xmin = std::min(xmin, v);
            xmax = std::max(xmax, v);
        }
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    if (series_.empty()) {
        xmin = ymin = 0;
        xmax = ymax = 1;
    }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) {
        ymax = ymin + 0.5;
        ymin -= 0.5;
    }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + (ymax - y) / (ymax - ymin) * ph; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title_ << "</text>\n";

    // Axes with five ticks per side.
    out << "<g stroke=\"#333\" stroke-width=\"1\">\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + ph << "\" x2=\"" << kLeft + pw
        << "\" y2=\"" << kTop + ph << "\"/>\n";
    out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
        << kTop + ph << "\"/>\n";
    out << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
    for (int i = 0; i <= 4; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 4.0;
        const double fy = ymin + (ymax - ymin) * i / 4.0;
        out << "<line x1=\"" << px(fx) << "\" y1=\"" << kTop + ph << "\" x2=\"" << px(fx)
            << "\" y2=\"" << kTop + ph + 4 << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << px(fx) << "\" y=\"" << kTop + ph + 17
            << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n";
        out << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << py(fy) << "\" x2=\"" << kLeft
            << "\" y2=\"" << py(fy) << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << kLeft - 7 << "\" y=\"" << py(fy) + 4
            << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
    }
    out << "</g>\n";

    for (size_t s = 0; s < series_.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.3\" points=\"";
        for (size_t i = 0; i < series_[s].x.size(); ++i) {
            if (i) out << " ";
            out << num(px(series_[s].x[i])) << "," << num(py(series_[s].y[i]));
        }
        out << "\"/>\n";
    }

    const int legend_n = std::min<int>(legend_limit_, static_cast<int>(series_.size()));
    out << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    for (int s = 0; s < legend_n; ++s) {
        const double ly = kTop + 8 + 16 * s;
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<line x1=\"" << kLeft + pw - 130 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + pw - 105 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + pw - 100 << "\" y=\"" << ly + 4 << "\">"
            << series_[static_cast<size_t>(s)].label << "</text>\n";
    }
    if (static_cast<int>(series_.size()) > legend_n)
        out << "<text x=\"" << kLeft + pw - 130 << "\" y=\"" << kTop + 8 + 16 * legend_n + 4
            << "\" font-style=\"italic\">+" << series_.size() - static_cast<size_t>(legend_n)
            << " more</text>\n";
    out << "</g>\n</svg>\n";
}

} // namespace mflq::svg
