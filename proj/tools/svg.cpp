#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace petc::tools {

namespace {

constexpr double kWidth = 720.0;
constexpr double kPanelHeight = 220.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 120.0;
constexpr double kTop = 36.0;
constexpr double kGap = 28.0;

const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace

std::string render_svg(const std::string& title, const std::vector<std::vector<Series>>& panels) {
    const double height = kTop + static_cast<double>(panels.size()) * (kPanelHeight + kGap);
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << height << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title) << "</text>\n";

    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    for (const auto& panel : panels) {
        for (const auto& s : panel) {
            if (!s.t.empty()) {
                t_min = std::min(t_min, s.t.front());
                t_max = std::max(t_max, s.t.back());
            }
        }
    }
    if (!(t_max > t_min)) {
        t_min = 0.0;
        t_max = 1.0;
    }
    const double plot_w = kWidth - kLeft - kRight;

    for (std::size_t p = 0; p < panels.size(); ++p) {
        const double y0 = kTop + static_cast<double>(p) * (kPanelHeight + kGap);
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& s : panels[p]) {
            for (double v : s.y) {
                if (std::isfinite(v)) {
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
            }
        }
        if (!(hi > lo)) {
            lo -= 1.0;
            hi += 1.0;
        }
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
        const auto X = [&](double t) { return kLeft + (t - t_min) / (t_max - t_min) * plot_w; };
        const auto Y = [&](double v) { return y0 + (hi - v) / (hi - lo) * kPanelHeight; };

        os << "<rect x=\"" << kLeft << "\" y=\"" << y0 << "\" width=\"" << plot_w
           << "\" height=\"" << kPanelHeight << "\" fill=\"none\" stroke=\"#888\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double v = lo + (hi - lo) * i / 4.0;
            os << "<text x=\"" << kLeft - 6 << "\" y=\"" << Y(v) + 4
               << "\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
            const double t = t_min + (t_max - t_min) * i / 4.0;
            os << "<text x=\"" << X(t) << "\" y=\"" << y0 + kPanelHeight + 14
               << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
        }
        if (lo < 0.0 && hi > 0.0) {
            os << "<line x1=\"" << kLeft << "\" x2=\"" << kLeft + plot_w << "\" y1=\"" << Y(0.0)
               << "\" y2=\"" << Y(0.0) << "\" stroke=\"#ddd\"/>\n";
        }
        for (std::size_t k = 0; k < panels[p].size(); ++k) {
            const auto& s = panels[p][k];
            const char* color = kColors[k % std::size(kColors)];
            os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
            for (std::size_t i = 0; i < s.t.size() && i < s.y.size(); ++i) {
                if (!std::isfinite(s.y[i])) {
                    continue;
                }
                if (s.steps && i > 0) {
                    os << fmt(X(s.t[i])) << ',' << fmt(Y(s.y[i - 1])) << ' ';
                }
                os << fmt(X(s.t[i])) << ',' << fmt(Y(s.y[i])) << ' ';
            }
            os << "\"/>\n";
            os << "<text x=\"" << kLeft + plot_w + 10 << "\" y=\"" << y0 + 14 + 16.0 * k
               << "\" fill=\"" << color << "\">" << escape(s.label) << "</text>\n";
        }
    }
    os << "</svg>\n";
    return os.str();
}

} // namespace petc::tools
