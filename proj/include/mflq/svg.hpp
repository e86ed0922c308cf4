#pragma once

#include <string>
#include <vector>

namespace mflq::svg {

// Minimal polyline plot with axes and a legend; no plotting dependency.
// Figures are illustrative, the CSVs are authoritative.
class LinePlot {
public:
    explicit LinePlot(std::string title) : title_(std::move(title)) {}

    void add_series(const std::string& label, const std::vector<double>& x,
                    const std::vector<double>& y);
    // Legend shows only the first `limit` labels (many-agent fan plots).
    void set_legend_limit(int limit) { legend_limit_ = limit; }
    void write(const std::string& path) const;

private:
    struct Series {
        std::string label;
        std::vector<double> x, y;
    };
    std::string title_;
    std::vector<Series> series_;
    int legend_limit_ = 8;
};

} // namespace mflq::svg
