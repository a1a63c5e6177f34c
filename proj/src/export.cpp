#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "glbandit/harness.hpp"

namespace glbandit {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing: " + std::strerror(errno));
    return out;
}

void close_out(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw std::runtime_error("write to " + path + " failed");
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    return cells;
}

double to_double(const std::string& s, const std::string& path, std::size_t line) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error(path + ":" + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

std::size_t to_size(const std::string& s, const std::string& path, std::size_t line) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
        throw std::runtime_error(path + ":" + std::to_string(line) + ": bad integer '" + s + "'");
    return static_cast<std::size_t>(v);
}

constexpr const char* kTraceHeader = "t,inst_regret,cum_regret,bonus,mle_norm,inside_theta,optimism_violation,chosen_index,used_refined";
constexpr const char* kStatsHeader = "t,mean,q25,q75,n_reps";

std::ifstream open_in(const std::string& path, std::string& header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path + ": " + std::strerror(errno));
    std::getline(in, header);
    return in;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

}  // namespace

void export_trace(const RegretTrace& trace, const std::string& path, ExportFormat format) {
    auto out = open_out(path);
    switch (format) {
        case ExportFormat::csv:
            out << kTraceHeader << '\n';
            for (const auto& r : trace.rounds)
                out << r.t << ',' << fmt(r.inst_regret) << ',' << fmt(r.cum_regret) << ',' << fmt(r.bonus) << ','
                    << fmt(r.mle_norm) << ',' << int(r.inside_theta) << ',' << int(r.optimism_violation) << ','
                    << r.chosen_index << ',' << int(r.used_refined) << '\n';
            break;
        case ExportFormat::json: {
            nlohmann::json j;
            j["policy"] = trace.meta.policy;
            j["seed"] = trace.meta.seed;
            j["config_hash"] = trace.meta.config_hash;
            auto& rows = j["rounds"] = nlohmann::json::array();
            for (const auto& r : trace.rounds)
                rows.push_back({{"t", r.t}, {"inst_regret", r.inst_regret}, {"cum_regret", r.cum_regret},
                                {"bonus", r.bonus}, {"mle_norm", r.mle_norm}, {"inside_theta", r.inside_theta},
                                {"optimism_violation", r.optimism_violation}, {"chosen_index", r.chosen_index},
                                {"used_refined", r.used_refined}});
            out << j.dump(1) << '\n';
            break;
        }
        case ExportFormat::svg_plot_data: {
            out.close();
            AggregateStats st;
            st.n_reps = 1;
            for (const auto& r : trace.rounds) {
                st.mean.push_back(r.cum_regret);
                st.q25.push_back(r.cum_regret);
                st.q75.push_back(r.cum_regret);
            }
            export_svg({{trace.meta.policy, st}}, path, trace.meta.policy + " seed " + std::to_string(trace.meta.seed));
            return;
        }
    }
    close_out(out, path);
}

RegretTrace import_trace_csv(const std::string& path) {
    std::string header;
    auto in = open_in(path, header);
    if (header != kTraceHeader) throw std::runtime_error(path + ":1: unexpected trace header");
    RegretTrace trace;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = split(line);
        if (c.size() != 9) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 9 columns");
        RoundRecord r;
        r.t = to_size(c[0], path, lineno);
        r.inst_regret = to_double(c[1], path, lineno);
        r.cum_regret = to_double(c[2], path, lineno);
        r.bonus = to_double(c[3], path, lineno);
        r.mle_norm = to_double(c[4], path, lineno);
        r.inside_theta = c[5] == "1";
        r.optimism_violation = c[6] == "1";
        r.chosen_index = to_size(c[7], path, lineno);
        r.used_refined = c[8] == "1";
        trace.rounds.push_back(r);
    }
    return trace;
}

void export_stats(const AggregateStats& stats, const std::string& path, ExportFormat format, const std::string& title) {
    if (format == ExportFormat::svg_plot_data) {
        export_svg({{title, stats}}, path, title);
        return;
    }
    auto out = open_out(path);
    if (format == ExportFormat::csv) {
        out << kStatsHeader << '\n';
        for (std::size_t t = 0; t < stats.mean.size(); ++t)
            out << (t + 1) << ',' << fmt(stats.mean[t]) << ',' << fmt(stats.q25[t]) << ',' << fmt(stats.q75[t]) << ','
                << stats.n_reps << '\n';
    } else {
        nlohmann::json j = {{"title", title}, {"n_reps", stats.n_reps}, {"mean", stats.mean}, {"q25", stats.q25},
                            {"q75", stats.q75}};
        out << j.dump(1) << '\n';
    }
    close_out(out, path);
}

AggregateStats import_stats_csv(const std::string& path) {
    std::string header;
    auto in = open_in(path, header);
    if (header != kStatsHeader) throw std::runtime_error(path + ":1: unexpected stats header");
    AggregateStats st;
    std::string line;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = split(line);
        if (c.size() != 5) throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected 5 columns");
        if (to_size(c[0], path, lineno) != st.mean.size() + 1)
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": rounds out of order");
        st.mean.push_back(to_double(c[1], path, lineno));
        st.q25.push_back(to_double(c[2], path, lineno));
        st.q75.push_back(to_double(c[3], path, lineno));
        st.n_reps = to_size(c[4], path, lineno);
    }
    return st;
}

void export_svg(const std::vector<std::pair<std::string, AggregateStats>>& curves, const std::string& path,
                const std::string& title, std::size_t breakpoint) {
    constexpr double W = 800, H = 500, L = 70, R = 170, Tm = 40, B = 50;
    std::size_t T = 0;
    double ymax = 0.0;
    for (const auto& [name, st] : curves) {
        T = std::max(T, st.mean.size());
        for (std::size_t t = 0; t < st.mean.size(); ++t) ymax = std::max({ymax, st.mean[t], st.q75[t]});
    }
    if (ymax <= 0.0) ymax = 1.0;
    const double xs = (W - L - R) / static_cast<double>(std::max<std::size_t>(T, 1));
    const double ys = (H - Tm - B) / ymax;
    auto X = [&](double t) { return L + t * xs; };
    auto Y = [&](double v) { return H - B - v * ys; };
    // at most ~1000 vertices per polyline
    const std::size_t stride = std::max<std::size_t>(1, T / 1000);

    auto out = open_out(path);
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    out << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double tv = static_cast<double>(T) * k / 4.0;
        const double yv = ymax * k / 4.0;
        std::snprintf(buf, sizeof buf, "%.0f", tv);
        out << "<text x=\"" << X(tv) << "\" y=\"" << H - B + 18 << "\" text-anchor=\"middle\" font-size=\"11\">" << buf
            << "</text>\n";
        std::snprintf(buf, sizeof buf, "%.4g", yv);
        out << "<text x=\"" << L - 6 << "\" y=\"" << Y(yv) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << buf
            << "</text>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\" font-size=\"12\">round</text>\n";
    out << "<text x=\"15\" y=\"" << (Tm + H - B) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 15 "
        << (Tm + H - B) / 2 << ")\" text-anchor=\"middle\">cumulative regret</text>\n";
    if (breakpoint > 0 && breakpoint <= T)
        out << "<line x1=\"" << X(static_cast<double>(breakpoint)) << "\" y1=\"" << Tm << "\" x2=\""
            << X(static_cast<double>(breakpoint)) << "\" y2=\"" << H - B
            << "\" stroke=\"red\" stroke-dasharray=\"5,4\"/>\n";

    std::size_t c = 0;
    for (const auto& [name, st] : curves) {
        const char* colour = kPalette[c % (sizeof kPalette / sizeof kPalette[0])];
        std::ostringstream band, line;
        for (std::size_t t = 0; t < st.mean.size(); t += stride) band << X(t + 1.0) << ',' << Y(st.q75[t]) << ' ';
        for (std::size_t t = st.mean.size(); t-- > 0;)
            if (t % stride == 0) band << X(t + 1.0) << ',' << Y(st.q25[t]) << ' ';
        for (std::size_t t = 0; t < st.mean.size(); t += stride) line << X(t + 1.0) << ',' << Y(st.mean[t]) << ' ';
        out << "<polygon points=\"" << band.str() << "\" fill=\"" << colour << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        out << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\"/>\n";
        out << "<text x=\"" << W - R + 10 << "\" y=\"" << Tm + 16 * (c + 1.0) << "\" font-size=\"12\" fill=\"" << colour
            << "\">" << name << "</text>\n";
        ++c;
    }
    out << "</svg>\n";
    close_out(out, path);
}

}  // namespace glbandit
