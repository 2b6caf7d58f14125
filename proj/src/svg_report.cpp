#include "kmpc/svg_report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <vector>

#include "kmpc/errors.hpp"

namespace kmpc::report {

namespace {

constexpr double kWidth = 900.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kPanelHeight = 200.0;
constexpr double kGap = 50.0;
constexpr double kTop = 30.0;
constexpr int kMaxColumns = 400;

const std::array<const char*, 6> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c",
                                             "#d62728", "#9467bd", "#8c564b"};

struct Panel {
    double top;
    double t_max;
    double lo;
    double hi;

    double x(double t) const { return kLeft + (kWidth - kLeft - kRight) * t / t_max; }
    double y(double v) const { return top + kPanelHeight * (hi - v) / (hi - lo); }
};

// Blue-white-red diverging scale on [-1, 1].
std::string diverging(double v) {
    v = std::clamp(v, -1.0, 1.0);
    int r = 255;
    int g = 255;
    int b = 255;
    if (v < 0) {
        r = g = static_cast<int>(std::lround(255 * (1 + v)));
    } else {
        g = b = static_cast<int>(std::lround(255 * (1 - v)));
    }
    std::ostringstream s;
    s << "rgb(" << r << ',' << g << ',' << b << ')';
    return s.str();
}

void frame(std::ostringstream& out, const Panel& p, const std::string& title, double lo_label,
           double hi_label) {
    out << "<rect x='" << kLeft << "' y='" << p.top << "' width='" << kWidth - kLeft - kRight
        << "' height='" << kPanelHeight << "' fill='none' stroke='black'/>\n";
    out << "<text x='" << kLeft << "' y='" << p.top - 8 << "' font-size='13'>" << title << "</text>\n";
    out << "<text x='" << kLeft - 6 << "' y='" << p.top + 12
        << "' font-size='11' text-anchor='end'>" << hi_label << "</text>\n";
    out << "<text x='" << kLeft - 6 << "' y='" << p.top + kPanelHeight
        << "' font-size='11' text-anchor='end'>" << lo_label << "</text>\n";
}

void polyline(std::ostringstream& out, const Panel& p, const std::vector<double>& t,
              const std::vector<double>& v, const char* colour, const char* dash = nullptr) {
    out << "<polyline fill='none' stroke='" << colour << "' stroke-width='1.2'";
    if (dash) {
        out << " stroke-dasharray='" << dash << "'";
    }
    out << " points='";
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << p.x(t[i]) << ',' << p.y(v[i]) << ' ';
    }
    out << "'/>\n";
}

}  // namespace

std::string closed_loop_svg(const harness::ClosedLoopLog& log) {
    if (log.steps.empty()) {
        throw InvalidInput("cannot plot an empty closed-loop log");
    }
    const std::size_t K = log.steps.size();
    const double t_max = K * log.dt;
    const auto n_x = log.final_state.size();
    const auto n_u = log.steps.front().u.size();
    const std::size_t stride = std::max<std::size_t>(1, (K + kMaxColumns - 1) / kMaxColumns);

    std::ostringstream out;
    out << std::setprecision(5);
    const double height = kTop + 3 * kPanelHeight + 2 * kGap + 40;
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << kWidth << "' height='" << height
        << "'>\n<rect width='100%' height='100%' fill='white'/>\n";

    // State heat map, colour range symmetric about zero.
    double amp = 0.0;
    for (std::size_t k = 0; k <= K; ++k) {
        amp = std::max(amp, log.state_at(k).cwiseAbs().maxCoeff());
    }
    amp = amp > 0 ? amp : 1.0;
    Panel heat{kTop, t_max, 0.0, 1.0};
    const double cell_w = (kWidth - kLeft - kRight) * stride / static_cast<double>(K);
    const double cell_h = kPanelHeight / static_cast<double>(n_x);
    for (std::size_t k = 0; k < K; k += stride) {
        const auto& y = log.state_at(k);
        for (Eigen::Index j = 0; j < n_x; ++j) {
            out << "<rect x='" << heat.x(k * log.dt) << "' y='"
                << heat.top + kPanelHeight - (j + 1) * cell_h << "' width='" << cell_w + 0.3
                << "' height='" << cell_h + 0.3 << "' fill='" << diverging(y(j) / amp) << "'/>\n";
        }
    }
    frame(out, heat, "state y(x, t), colour range +/-" + std::to_string(amp), -std::numbers::pi,
          std::numbers::pi);

    // Spatial mean against the reference.
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> ref;
    for (std::size_t k = 0; k < K; k += stride) {
        t.push_back(k * log.dt);
        mean.push_back(log.state_at(k).mean());
        ref.push_back(log.steps[k].reference);
    }
    t.push_back(t_max);
    mean.push_back(log.final_state.mean());
    ref.push_back(log.steps.back().reference);
    double lo = std::min(*std::min_element(mean.begin(), mean.end()),
                         *std::min_element(ref.begin(), ref.end()));
    double hi = std::max(*std::max_element(mean.begin(), mean.end()),
                         *std::max_element(ref.begin(), ref.end()));
    const double pad = std::max(0.05 * (hi - lo), 1e-3);
    Panel track{kTop + kPanelHeight + kGap, t_max, lo - pad, hi + pad};
    polyline(out, track, t, ref, "black", "5,3");
    polyline(out, track, t, mean, kPalette[0]);
    frame(out, track, "spatial mean of y (solid) and reference (dashed)", track.lo, track.hi);

    // Inputs.
    double u_amp = 0.0;
    for (const auto& r : log.steps) {
        u_amp = std::max(u_amp, r.u.size() ? r.u.cwiseAbs().maxCoeff() : 0.0);
    }
    u_amp = u_amp > 0 ? 1.05 * u_amp : 1.0;
    Panel inputs{kTop + 2 * (kPanelHeight + kGap), t_max, -u_amp, u_amp};
    for (Eigen::Index i = 0; i < n_u; ++i) {
        std::vector<double> ti;
        std::vector<double> ui;
        for (std::size_t k = 0; k < K; k += stride) {
            ti.push_back(k * log.dt);
            ui.push_back(log.steps[k].u(i));
        }
        polyline(out, inputs, ti, ui, kPalette[static_cast<std::size_t>(i) % kPalette.size()]);
    }
    frame(out, inputs, "inputs u_1..u_" + std::to_string(n_u), -u_amp, u_amp);
    out << "<text x='" << (kWidth + kLeft) / 2 << "' y='" << height - 10
        << "' font-size='12' text-anchor='middle'>time, 0 to " << t_max << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

}  // namespace kmpc::report
