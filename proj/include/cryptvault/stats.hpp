#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cryptvault/bench.hpp"
#include "cryptvault/bytes.hpp"
#include "cryptvault/errors.hpp"
#include "cryptvault/fs.hpp"
#include "cryptvault/keystore.hpp"

namespace cryptvault {

struct Point {
    double x = 0;
    double y = 0;
};

struct RegressionFit {
    double a = 0;         // slope
    double b = 0;         // intercept
    double r = 0;         // Pearson correlation
    double r_squared = 0; // 1 - SSres/SStot
    std::size_t n = 0;
};

// A series whose y never varies; reported as-is instead of as a line fit.
struct ConstantSeries {
    double value = 0;
    std::size_t n = 0;
};

using SeriesSummary = std::variant<RegressionFit, ConstantSeries>;

// Least-squares line y = ax + b, mean-centered two-pass form so slopes stay
// accurate on ill-scaled inputs. Constant-y input fits a flat line and is
// reported with r = r_squared = 0 (no relation).
inline RegressionFit linear_fit(std::span<const Point> points) {
    const std::size_t n = points.size();
    if (n < 2)
        throw DegenerateInput("need at least 2 points, got " + std::to_string(n));

    double mean_x = 0, mean_y = 0;
    for (const auto& p : points) {
        mean_x += p.x;
        mean_y += p.y;
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : points) {
        const double dx = p.x - mean_x;
        const double dy = p.y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0)
        throw DegenerateInput("all x values are equal");

    RegressionFit fit;
    fit.n = n;
    fit.a = sxy / sxx;
    fit.b = mean_y - fit.a * mean_x;
    if (syy == 0)
        return fit; // flat data: slope 0, r and r_squared stay 0

    fit.r = sxy / std::sqrt(sxx * syy);
    double ss_res = 0;
    for (const auto& p : points) {
        const double e = p.y - (fit.a * p.x + fit.b);
        ss_res += e * e;
    }
    fit.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
    return fit;
}

struct AnalysisReport {
    RegressionFit fit_overhead_vs_index;
    RegressionFit fit_time_vs_index;
    SeriesSummary keysize_vs_index;
    std::uint64_t total_worst_overhead = 0; // max padding + key envelope, in bytes
};

namespace detail {

inline std::vector<Point> indexed_series(std::span<const BenchSample> samples,
                                         double (*pick)(const BenchSample&)) {
    std::vector<Point> pts;
    pts.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        pts.push_back({static_cast<double>(i + 1), pick(samples[i])});
    return pts;
}

} // namespace detail

// Fits each reported column against the 1-based row index. The key-size
// column is flagged as a constant series when it never varies.
inline AnalysisReport analyze(std::span<const BenchSample> samples) {
    if (samples.size() < 2)
        throw DegenerateInput("need at least 2 samples, got " + std::to_string(samples.size()));

    const auto overhead_pts = detail::indexed_series(
        samples, [](const BenchSample& s) { return static_cast<double>(s.overhead); });
    const auto time_pts =
        detail::indexed_series(samples, [](const BenchSample& s) { return s.exec_time_seconds; });
    const auto key_pts = detail::indexed_series(
        samples, [](const BenchSample& s) { return static_cast<double>(s.key_size); });

    AnalysisReport report;
    report.fit_overhead_vs_index = linear_fit(overhead_pts);
    report.fit_time_vs_index = linear_fit(time_pts);

    const bool key_constant = std::all_of(key_pts.begin(), key_pts.end(), [&](const Point& p) {
        return p.y == key_pts.front().y;
    });
    if (key_constant)
        report.keysize_vs_index = ConstantSeries{key_pts.front().y, key_pts.size()};
    else
        report.keysize_vs_index = linear_fit(key_pts);

    report.total_worst_overhead = kBlockSize + kEnvelopeSize;
    return report;
}

namespace detail {

inline void append_points(std::string& out, std::span<const Point> pts) {
    for (const auto& p : pts) {
        out += format_double(p.x);
        out += ' ';
        out += format_double(p.y);
        out += '\n';
    }
}

inline void append_fit_samples(std::string& out, const RegressionFit& fit,
                               std::span<const Point> pts) {
    for (const auto& p : pts) {
        out += format_double(p.x);
        out += ' ';
        out += format_double(fit.a * p.x + fit.b);
        out += '\n';
    }
}

inline std::string fit_comment(const std::string& name, const RegressionFit& fit) {
    return "# fit " + name + ": y = " + format_double(fit.a) + "*x + " + format_double(fit.b) +
           "  r=" + format_double(fit.r) + "  r_squared=" + format_double(fit.r_squared) + "\n";
}

} // namespace detail

// Four plot-data files: space-separated points, '#' comments name each
// series, blank-line-separated blocks within a file.
inline std::vector<std::filesystem::path> emit_plot_data(const AnalysisReport& report,
                                                         std::span<const BenchSample> samples,
                                                         FsAdapter& fs,
                                                         const std::filesystem::path& outdir) {
    fs.make_dirs(outdir);

    const auto overhead_pts = detail::indexed_series(
        samples, [](const BenchSample& s) { return static_cast<double>(s.overhead); });
    const auto time_pts =
        detail::indexed_series(samples, [](const BenchSample& s) { return s.exec_time_seconds; });
    const auto key_pts = detail::indexed_series(
        samples, [](const BenchSample& s) { return static_cast<double>(s.key_size); });

    std::vector<std::filesystem::path> written;
    auto emit = [&](const char* name, const std::string& text) {
        const auto p = outdir / name;
        fs.write_file_atomic(p, as_bytes_view(text));
        written.push_back(p);
    };

    {
        std::string text = "# series: encryption overhead per file\n"
                           "# columns: index overhead_bytes\n";
        detail::append_points(text, overhead_pts);
        emit("fig4_1.dat", text);
    }

    {
        // Companion fit on raw byte sizes; the headline fits use row index.
        std::vector<Point> size_pts;
        size_pts.reserve(samples.size());
        for (const auto& s : samples)
            size_pts.push_back(
                {static_cast<double>(s.original_size), s.exec_time_seconds});
        std::string text = "# series: encryption time by original size\n"
                           "# columns: original_size_bytes exec_time_seconds\n";
        detail::append_points(text, size_pts);
        bool have_fit = size_pts.size() >= 2 &&
                        std::any_of(size_pts.begin(), size_pts.end(), [&](const Point& p) {
                            return p.x != size_pts.front().x;
                        });
        if (have_fit) {
            const RegressionFit fit = linear_fit(size_pts);
            text += "\n\n";
            text += "# series: least-squares line, time vs raw size\n";
            text += detail::fit_comment("time_vs_size", fit);
            text += "# columns: original_size_bytes fitted_exec_time_seconds\n";
            detail::append_fit_samples(text, fit, size_pts);
        }
        emit("fig4_2.dat", text);
    }

    {
        std::string text = "# series: key file size per file\n"
                           "# columns: index key_size_bytes\n";
        detail::append_points(text, key_pts);
        emit("fig4_3.dat", text);
    }

    {
        std::string text = "# series: encryption overhead per file\n"
                           "# columns: index overhead_bytes\n";
        detail::append_points(text, overhead_pts);
        text += "\n\n# series: overhead least-squares line\n";
        text += detail::fit_comment("overhead_vs_index", report.fit_overhead_vs_index);
        text += "# columns: index fitted_overhead_bytes\n";
        detail::append_fit_samples(text, report.fit_overhead_vs_index, overhead_pts);

        text += "\n\n# series: encryption time per file\n"
                "# columns: index exec_time_seconds\n";
        detail::append_points(text, time_pts);
        text += "\n\n# series: time least-squares line\n";
        text += detail::fit_comment("time_vs_index", report.fit_time_vs_index);
        text += "# columns: index fitted_exec_time_seconds\n";
        detail::append_fit_samples(text, report.fit_time_vs_index, time_pts);

        text += "\n\n# series: key size per file\n"
                "# columns: index key_size_bytes\n";
        detail::append_points(text, key_pts);
        text += "\n\n";
        if (const auto* cs = std::get_if<ConstantSeries>(&report.keysize_vs_index)) {
            text += "# series: key size, constant at " + detail::format_double(cs->value) + "\n";
            text += "# columns: index key_size_bytes\n";
            for (const auto& p : key_pts) {
                text += detail::format_double(p.x);
                text += ' ';
                text += detail::format_double(cs->value);
                text += '\n';
            }
        } else {
            const auto& fit = std::get<RegressionFit>(report.keysize_vs_index);
            text += "# series: key size least-squares line\n";
            text += detail::fit_comment("keysize_vs_index", fit);
            text += "# columns: index fitted_key_size_bytes\n";
            detail::append_fit_samples(text, fit, key_pts);
        }
        emit("fig4_4.dat", text);
    }

    return written;
}

} // namespace cryptvault
