#include "kooptx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "kooptx/errors.hpp"

namespace kooptx {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_svg(const std::string& path, double width, double height) {
    FilePtr f(std::fopen(path.c_str(), "w"));
    if (!f) throw DataError("cannot write " + path);
    std::fprintf(f.get(),
                 "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                 "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                 width, height, width, height);
    return f;
}

void svg_line(std::FILE* f, double x1, double y1, double x2, double y2,
              const char* stroke, const char* extra = "") {
    std::fprintf(f,
                 "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                 "stroke=\"%s\"%s/>\n",
                 x1, y1, x2, y2, stroke, extra);
}

void svg_text(std::FILE* f, double x, double y, const char* anchor,
              const std::string& body) {
    std::fprintf(f,
                 "  <text x=\"%.2f\" y=\"%.2f\" font-family=\"sans-serif\" "
                 "font-size=\"11\" text-anchor=\"%s\">%s</text>\n",
                 x, y, anchor, body.c_str());
}

}  // namespace

void emit_eigen_plot(const KoopmanModel& model, const std::string& path) {
    if (model.eigvals.empty()) throw DataError("emit_eigen_plot: model has no spectrum");

    const double size = 480.0, margin = 48.0;
    const double plot = size - 2.0 * margin;
    const double lim = 1.2;
    const auto px = [&](double re) { return margin + (re + lim) / (2.0 * lim) * plot; };
    const auto py = [&](double im) { return margin + (lim - im) / (2.0 * lim) * plot; };

    FilePtr f = open_svg(path, size, size);
    std::fprintf(f.get(), "  <title>Koopman eigenvalues</title>\n");

    // Frame and axes through the origin, drawn as lines so the dashed unit
    // circle stays the file's only circle element.
    svg_line(f.get(), margin, margin, size - margin, margin, "#444");
    svg_line(f.get(), size - margin, margin, size - margin, size - margin, "#444");
    svg_line(f.get(), size - margin, size - margin, margin, size - margin, "#444");
    svg_line(f.get(), margin, size - margin, margin, margin, "#444");
    svg_line(f.get(), px(-lim), py(0.0), px(lim), py(0.0), "#bbb");
    svg_line(f.get(), px(0.0), py(-lim), px(0.0), py(lim), "#bbb");
    for (double tick : {-1.0, 0.0, 1.0}) {
        char label[16];
        std::snprintf(label, sizeof label, "%g", tick);
        svg_text(f.get(), px(tick), size - margin + 16.0, "middle", label);
        svg_text(f.get(), margin - 8.0, py(tick) + 4.0, "end", label);
    }
    svg_text(f.get(), size / 2.0, size - 10.0, "middle", "Re");
    svg_text(f.get(), 14.0, size / 2.0, "middle", "Im");

    std::fprintf(f.get(),
                 "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"none\" "
                 "stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
                 px(0.0), py(0.0), plot / (2.0 * lim));

    for (const std::complex<double>& ev : model.eigvals) {
        const bool overflow =
            std::fabs(ev.real()) > lim || std::fabs(ev.imag()) > lim;
        const double re = std::clamp(ev.real(), -lim, lim);
        const double im = std::clamp(ev.imag(), -lim, lim);
        const double s = 7.0;
        std::fprintf(f.get(),
                     "  <rect x=\"%.2f\" y=\"%.2f\" width=\"%.1f\" height=\"%.1f\" "
                     "fill=\"#1f77b4\"/>\n",
                     px(re) - s / 2.0, py(im) - s / 2.0, s, s);
        if (overflow) {
            // Outward chevron marking a clamped marker.
            const double dx = ev.real() > lim ? 1.0 : (ev.real() < -lim ? -1.0 : 0.0);
            const double dy = ev.imag() > lim ? -1.0 : (ev.imag() < -lim ? 1.0 : 0.0);
            const double cx = px(re) + dx * 9.0, cy = py(im) + dy * 9.0;
            const double ox = dy * 4.0, oy = dx * 4.0;  // perpendicular offset
            std::fprintf(f.get(),
                         "  <path d=\"M %.2f %.2f L %.2f %.2f L %.2f %.2f\" "
                         "fill=\"none\" stroke=\"#d62728\" stroke-width=\"1.5\"/>\n",
                         cx - dx * 4.0 + ox, cy - dy * 4.0 + oy, cx, cy,
                         cx - dx * 4.0 - ox, cy - dy * 4.0 - oy);
        }
    }

    std::fprintf(f.get(), "</svg>\n");
}

void emit_mode_heatmap(const Mat& amps, const std::string& path) {
    if (amps.rows == 0 || amps.cols == 0)
        throw DataError("emit_mode_heatmap: empty amplitude matrix");

    const double width = 640.0, height = 360.0, margin = 56.0;
    const double pw = width - 2.0 * margin, ph = height - 2.0 * margin;
    const double cw = pw / static_cast<double>(amps.cols);
    const double ch = ph / static_cast<double>(amps.rows);

    double vmax = 0.0;
    for (double v : amps.data) vmax = std::max(vmax, v);

    FilePtr f = open_svg(path, width, height);
    std::fprintf(f.get(), "  <title>Koopman mode amplitudes</title>\n");

    for (size_t r = 0; r < amps.rows; ++r)
        for (size_t c = 0; c < amps.cols; ++c) {
            const double level = vmax > 0.0 ? amps(r, c) / vmax : 0.0;
            const int g = static_cast<int>(std::lround(255.0 * level));
            std::fprintf(f.get(),
                         "  <rect x=\"%.2f\" y=\"%.2f\" width=\"%.3f\" "
                         "height=\"%.3f\" fill=\"rgb(%d,%d,%d)\"/>\n",
                         margin + static_cast<double>(c) * cw,
                         margin + static_cast<double>(r) * ch, cw, ch, g, g, g);
        }

    svg_line(f.get(), margin, margin, margin + pw, margin, "#444");
    svg_line(f.get(), margin + pw, margin, margin + pw, margin + ph, "#444");
    svg_line(f.get(), margin + pw, margin + ph, margin, margin + ph, "#444");
    svg_line(f.get(), margin, margin + ph, margin, margin, "#444");

    svg_text(f.get(), width / 2.0, height - 14.0, "middle", "time index");
    svg_text(f.get(), 16.0, height / 2.0, "middle", "mode");
    for (size_t r = 0; r < amps.rows; ++r)
        svg_text(f.get(), margin - 8.0,
                 margin + (static_cast<double>(r) + 0.5) * ch + 4.0, "end",
                 std::to_string(r));

    std::fprintf(f.get(), "</svg>\n");
}

void emit_reconstruction_overlay(const std::vector<double>& original,
                                 const std::vector<double>& reconstructed, double fs,
                                 const std::string& path) {
    if (original.empty()) throw DataError("emit_reconstruction_overlay: empty traces");
    if (original.size() != reconstructed.size())
        throw DataError("emit_reconstruction_overlay: trace lengths differ");
    if (!(fs > 0.0)) throw ConfigError("emit_reconstruction_overlay: fs must be positive");

    const size_t n = original.size();
    double mse = 0.0, mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = original[i] - reconstructed[i];
        mse += d * d;
        mean += original[i];
    }
    mse /= static_cast<double>(n);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : original) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double rmse = std::sqrt(mse);
    const double nrmse =
        rmse == 0.0 ? 0.0 : rmse / std::sqrt(var);  // 0/0 -> identical traces

    const double width = 640.0, height = 320.0, margin = 52.0;
    const double pw = width - 2.0 * margin, ph = height - 2.0 * margin;
    const double tmax = static_cast<double>(n) / fs;

    double lo = original[0], hi = original[0];
    for (double v : original) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : reconstructed) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo < 1e-12) {
        lo -= 1.0;
        hi += 1.0;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    const auto px = [&](size_t i) {
        return margin + static_cast<double>(i) / fs / tmax * pw;
    };
    const auto py = [&](double v) { return margin + (hi - v) / (hi - lo) * ph; };

    FilePtr f = open_svg(path, width, height);
    char title[96];
    std::snprintf(title, sizeof title, "Reconstruction overlay (NRMSE %.4g)", nrmse);
    std::fprintf(f.get(), "  <title>%s</title>\n", title);

    svg_line(f.get(), margin, margin, margin + pw, margin, "#444");
    svg_line(f.get(), margin + pw, margin, margin + pw, margin + ph, "#444");
    svg_line(f.get(), margin + pw, margin + ph, margin, margin + ph, "#444");
    svg_line(f.get(), margin, margin + ph, margin, margin, "#444");

    for (double t : {0.0, tmax / 2.0, tmax}) {
        char label[24];
        std::snprintf(label, sizeof label, "%.3g", t);
        svg_text(f.get(), margin + t / tmax * pw, height - margin + 18.0, "middle",
                 label);
    }
    for (double v : {lo + pad, hi - pad}) {
        char label[24];
        std::snprintf(label, sizeof label, "%.3g", v);
        svg_text(f.get(), margin - 8.0, py(v) + 4.0, "end", label);
    }
    svg_text(f.get(), width / 2.0, height - 10.0, "middle", "time (s)");

    const char* colors[2] = {"#1f77b4", "#ff7f0e"};
    const std::vector<double>* traces[2] = {&original, &reconstructed};
    for (int k = 0; k < 2; ++k) {
        std::fprintf(f.get(), "  <polyline fill=\"none\" stroke=\"%s\" points=\"",
                     colors[k]);
        for (size_t i = 0; i < n; ++i)
            std::fprintf(f.get(), "%.2f,%.2f ", px(i), py((*traces[k])[i]));
        std::fprintf(f.get(), "\"/>\n");
    }

    const char* names[2] = {"original", "reconstruction"};
    for (int k = 0; k < 2; ++k) {
        const double ly = margin + 14.0 + 16.0 * k;
        svg_line(f.get(), margin + pw - 110.0, ly - 4.0, margin + pw - 88.0, ly - 4.0,
                 colors[k], " stroke-width=\"2\"");
        svg_text(f.get(), margin + pw - 82.0, ly, "start", names[k]);
    }

    std::fprintf(f.get(), "</svg>\n");
}

}  // namespace kooptx
