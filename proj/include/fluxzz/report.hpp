#pragma once

// CSV, SVG and manifest writers.

#include "fluxzz/adaptivity.hpp"
#include "fluxzz/estimators.hpp"
#include "fluxzz/format.hpp"
#include "fluxzz/mesh.hpp"
#include "fluxzz/recovery.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fluxzz {

inline constexpr const char *kToolVersion = "0.3.1";

inline constexpr const char *kHistoryHeader = "step,dof,error,estimator,effectivity,slope";

inline void write_history_csv(std::ostream &os, std::span<const ConvergenceRecord> records) {
    os << kHistoryHeader << '\n';
    for (const auto &r : records)
        os << r.step << ',' << r.dof << ',' << format_real(r.error) << ',' << format_real(r.estimator) << ','
           << format_real(r.effectivity) << ',' << format_real(r.slope) << '\n';
}

/// Global quantities printed after the per-item rows of an indicator CSV.
struct IndicatorSummary {
    double eta = std::numeric_limits<double>::quiet_NaN();   // (sum eta_F^2)^{1/2}
    double osc = std::numeric_limits<double>::quiet_NaN();   // H_f
};

/// Rows `kind,id,value` with kind in {edge, element}, then `summary,<name>,<value>` rows.
inline void write_indicators_csv(std::ostream &os, const IndicatorSet &s, const IndicatorSummary &summary = {}) {
    os << "kind,id,value\n";
    for (std::size_t i = 0; i < s.edge.size(); ++i) os << "edge," << i << ',' << format_real(s.edge[i]) << '\n';
    for (std::size_t i = 0; i < s.element.size(); ++i)
        os << "element," << i << ',' << format_real(s.element[i]) << '\n';
    os << "summary,xi," << format_real(s.xi) << '\n';
    os << "summary,xi_hat," << format_real(s.xi_hat) << '\n';
    os << "summary,xi_hat2," << format_real(s.xi_hat2) << '\n';
    os << "summary,eta," << format_real(summary.eta) << '\n';
    os << "summary,osc," << format_real(summary.osc) << '\n';
}

/// Edge dofs of a recovered flux: `edge,s,e,dof_s,dof_e`.
inline void write_flux_csv(std::ostream &os, const Mesh &mesh, const RecoveredFlux &rf) {
    os << "edge,s,e,dof_s,dof_e\n";
    for (int f = 0; f < mesh.num_edges(); ++f)
        os << f << ',' << mesh.edge(f).s << ',' << mesh.edge(f).e << ',' << format_real(rf.dofs[f][0]) << ','
           << format_real(rf.dofs[f][1]) << '\n';
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::string svg_num(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 10);
    return {buf, res.ptr};
}

/// Blue (0) to red (1) through white.
inline std::string color_map(double t) {
    t = std::clamp(t, 0.0, 1.0);
    int r, g, b;
    if (t < 0.5) {
        const double s = 2.0 * t;
        r = static_cast<int>(std::lround(59 + s * (255 - 59)));
        g = static_cast<int>(std::lround(76 + s * (255 - 76)));
        b = static_cast<int>(std::lround(192 + s * (255 - 192)));
    } else {
        const double s = 2.0 * (t - 0.5);
        r = static_cast<int>(std::lround(255 + s * (180 - 255)));
        g = static_cast<int>(std::lround(255 + s * (4 - 255)));
        b = static_cast<int>(std::lround(255 + s * (38 - 255)));
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

}  // namespace detail

/// One polygon per triangle; an optional per-element overlay is colored linearly between
/// its min and max, which are printed in a legend.
inline std::string render_mesh_svg(const Mesh &mesh, std::optional<std::span<const double>> overlay = std::nullopt) {
    if (overlay && overlay->size() != static_cast<std::size_t>(mesh.num_triangles()))
        throw std::invalid_argument("render_mesh_svg: overlay size does not match the mesh");
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto &p : mesh.vertices()) {
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    const double w = x1 - x0, h = y1 - y0;
    const double pad = 0.02 * std::max(w, h);
    const double legend = overlay ? 0.08 * std::max(w, h) : 0.0;
    const double stroke = 0.001 * std::max(w, h);
    double vmin = 0.0, vmax = 0.0;
    if (overlay && !overlay->empty()) {
        vmin = *std::min_element(overlay->begin(), overlay->end());
        vmax = *std::max_element(overlay->begin(), overlay->end());
    }
    using detail::svg_num;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << svg_num(x0 - pad) << ' ' << svg_num(-y1 - pad)
       << ' ' << svg_num(w + 2 * pad) << ' ' << svg_num(h + 2 * pad + legend) << "\">\n";
    os << "<g stroke=\"#000000\" stroke-width=\"" << svg_num(stroke) << "\" stroke-linejoin=\"round\">\n";
    for (int k = 0; k < mesh.num_triangles(); ++k) {
        const auto c = mesh.corners(k);
        std::string fill = "#ffffff";
        if (overlay) fill = detail::color_map(vmax > vmin ? ((*overlay)[k] - vmin) / (vmax - vmin) : 0.0);
        // y is flipped so that the picture has the usual orientation
        os << "<polygon points=\"" << svg_num(c[0].x) << ',' << svg_num(-c[0].y) << ' ' << svg_num(c[1].x) << ','
           << svg_num(-c[1].y) << ' ' << svg_num(c[2].x) << ',' << svg_num(-c[2].y) << "\" fill=\"" << fill
           << "\"/>\n";
    }
    os << "</g>\n";
    if (overlay) {
        const double fs = 0.03 * std::max(w, h);
        const double ty = -y0 + pad + 0.6 * legend;
        os << "<g font-family=\"monospace\" font-size=\"" << svg_num(fs) << "\">\n";
        os << "<rect x=\"" << svg_num(x0) << "\" y=\"" << svg_num(ty - fs) << "\" width=\"" << svg_num(fs)
           << "\" height=\"" << svg_num(fs) << "\" fill=\"" << detail::color_map(0.0) << "\"/>\n";
        os << "<text x=\"" << svg_num(x0 + 1.5 * fs) << "\" y=\"" << svg_num(ty) << "\">min " << format_real(vmin)
           << "</text>\n";
        os << "<rect x=\"" << svg_num(x0 + 0.5 * w) << "\" y=\"" << svg_num(ty - fs) << "\" width=\"" << svg_num(fs)
           << "\" height=\"" << svg_num(fs) << "\" fill=\"" << detail::color_map(1.0) << "\"/>\n";
        os << "<text x=\"" << svg_num(x0 + 0.5 * w + 1.5 * fs) << "\" y=\"" << svg_num(ty) << "\">max "
           << format_real(vmax) << "</text>\n";
        os << "</g>\n";
    }
    os << "</svg>\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// Run manifest

struct RunManifest {
    std::string problem;
    std::string estimator;
    double theta = 0.5;
    long max_dof = 0;
    bool deterministic = true;
    std::vector<std::pair<std::string, std::string>> outputs;  // role -> file name
    std::string tool_version = kToolVersion;
};

inline nlohmann::ordered_json to_json(const RunManifest &m) {
    nlohmann::ordered_json j;
    j["tool"] = "fluxzz";
    j["tool_version"] = m.tool_version;
    j["problem"] = m.problem;
    j["estimator"] = m.estimator;
    j["theta"] = m.theta;
    j["max_dof"] = m.max_dof;
    j["deterministic"] = m.deterministic;
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto &[role, file] : m.outputs) out[role] = file;
    j["outputs"] = out;
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json &j) {
    RunManifest m;
    m.problem = j.at("problem").get<std::string>();
    m.estimator = j.at("estimator").get<std::string>();
    m.theta = j.at("theta").get<double>();
    m.max_dof = j.at("max_dof").get<long>();
    m.deterministic = j.value("deterministic", true);
    m.tool_version = j.value("tool_version", std::string(kToolVersion));
    if (j.contains("outputs"))
        for (const auto &[role, file] : j.at("outputs").items()) m.outputs.emplace_back(role, file.get<std::string>());
    return m;
}

}  // namespace fluxzz
