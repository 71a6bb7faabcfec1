#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "varifold.hpp"

// Track text format. One record per line, '#' starts a metadata/comment line.
//
//   # key value                    metadata (provenance, config hash)
//   track n N mass_bound closed
//   singular t x_1 .. x_N          detected singular point (repeatable)
//   extinction t
//   model KIND n N flat_dim T scale t_c x_1..x_N frame(N x N, row per column vector)
//   slice t n N mass
//   x_1..x_N weight [normal_1..normal_N] [lambda_1..lambda_n]
//   curve begin end closed
//   axis origin(N) dir(N) e1(N) e2(N)
//   r z u weight nz nu k_mer k_par
//   profile begin end closed
//
// Sample lines are told apart by column count, which is unique because n < N.

namespace strataflow {

struct TrackFile {
    FlowTrack track;
    std::map<std::string, std::string> meta;
};

namespace detail {

inline void put(std::ostream& os, double v) { os << ' ' << v; }

inline void put_vec(std::ostream& os, const Vec& v, int N) {
    for (int i = 0; i < N; ++i) put(os, v[i]);
}

[[noreturn]] inline void parse_fail(int line, const std::string& msg) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + msg);
}

}  // namespace detail

inline void write_track(std::ostream& os, const FlowTrack& f, const std::map<std::string, std::string>& meta = {}) {
    const int N = f.N;
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& [k, v] : meta) os << "# " << k << ' ' << v << '\n';
    os << "track " << f.n << ' ' << N;
    detail::put(os, f.mass_bound);
    os << ' ' << (f.closed ? 1 : 0) << '\n';
    for (std::size_t i = 0; i < f.singular_points.size(); ++i) {
        os << "singular";
        detail::put(os, f.singular_points[i].t);
        detail::put_vec(os, f.singular_points[i].x, N);
        os << '\n';
    }
    if (f.extinction_time) {
        os << "extinction";
        detail::put(os, *f.extinction_time);
        os << '\n';
    }
    if (f.model) {
        const auto& m = *f.model;
        os << "model " << to_string(m.kind) << ' ' << m.n << ' ' << m.N << ' ' << m.flat_dim;
        detail::put(os, m.T);
        detail::put(os, m.scale);
        detail::put(os, m.center.t);
        detail::put_vec(os, m.center.x, N);
        for (int i = 0; i < N; ++i) detail::put_vec(os, m.frame[i], N);
        os << '\n';
    }
    for (const auto& s : f.slices) {
        os << "slice";
        detail::put(os, s.t);
        os << ' ' << f.n << ' ' << N;
        detail::put(os, s.mass());
        os << '\n';
        for (const auto& p : s.samples) {
            std::ostringstream line;
            line << std::setprecision(std::numeric_limits<double>::max_digits10);
            for (int i = 0; i < N; ++i) line << (i ? " " : "") << p.position[i];
            detail::put(line, p.weight);
            if (p.has_normal) detail::put_vec(line, p.normal, N);
            for (int i = 0; i < p.ncurv; ++i) detail::put(line, p.lambda[i]);
            os << line.str() << '\n';
        }
        for (const auto& c : s.curves) os << "curve " << c.begin << ' ' << c.end << ' ' << (c.closed ? 1 : 0) << '\n';
        if (!s.rings.empty()) {
            os << "axis";
            detail::put_vec(os, s.axis.origin, N);
            detail::put_vec(os, s.axis.dir, N);
            detail::put_vec(os, s.axis.e1, N);
            detail::put_vec(os, s.axis.e2, N);
            os << '\n';
        }
        for (const auto& r : s.rings) {
            os << 'r';
            for (double v : {r.z, r.u, r.weight, r.nz, r.nu, r.k_mer, r.k_par}) detail::put(os, v);
            os << '\n';
        }
        for (const auto& c : s.profiles)
            os << "profile " << c.begin << ' ' << c.end << ' ' << (c.closed ? 1 : 0) << '\n';
    }
}

inline TrackFile read_track(std::istream& is) {
    TrackFile out;
    FlowTrack& f = out.track;
    bool have_header = false;
    std::string line;
    int ln = 0;
    auto numbers = [&](std::istringstream& ss, std::size_t expect, const char* what) {
        std::vector<double> v;
        std::string tok;
        while (ss >> tok) {
            char* end = nullptr;
            double d = std::strtod(tok.c_str(), &end);
            if (end == tok.c_str() || *end != '\0') detail::parse_fail(ln, std::string("bad number '") + tok + "' in " + what);
            v.push_back(d);
        }
        if (expect && v.size() != expect)
            detail::parse_fail(ln, std::string(what) + ": expected " + std::to_string(expect) + " values, got " +
                                       std::to_string(v.size()));
        return v;
    };
    auto vec_at = [&](const std::vector<double>& v, std::size_t off) {
        Vec x{};
        for (int i = 0; i < f.N; ++i) x[i] = v[off + i];
        return x;
    };
    auto run_of = [&](std::istringstream& ss, std::size_t limit) {
        auto v = numbers(ss, 3, "run");
        Run r{static_cast<std::size_t>(v[0]), static_cast<std::size_t>(v[1]), v[2] != 0};
        if (r.begin >= r.end || r.end > limit) detail::parse_fail(ln, "run indices out of range");
        return r;
    };
    while (std::getline(is, line)) {
        ++ln;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string k, v;
            ss >> k;
            std::getline(ss >> std::ws, v);
            if (!k.empty()) out.meta[k] = v;
            continue;
        }
        std::istringstream ss(line);
        std::string head;
        ss >> head;
        bool keyword = !head.empty() && std::isalpha(static_cast<unsigned char>(head[0]));
        if (!keyword) {
            if (f.slices.empty()) detail::parse_fail(ln, "sample before any slice header");
            std::istringstream all(line);
            auto v = numbers(all, 0, "sample");
            const std::size_t N = f.N, n = f.n;
            Sample p;
            if (v.size() == N + 1) {
            } else if (v.size() == 2 * N + 1) {
                p.has_normal = true;
            } else if (v.size() == N + 1 + n) {
                p.ncurv = static_cast<int>(n);
            } else if (v.size() == 2 * N + 1 + n) {
                p.has_normal = true;
                p.ncurv = static_cast<int>(n);
            } else {
                detail::parse_fail(ln, "sample has " + std::to_string(v.size()) + " columns");
            }
            p.position = vec_at(v, 0);
            p.weight = v[N];
            if (p.has_normal) p.normal = vec_at(v, N + 1);
            for (int i = 0; i < p.ncurv; ++i) p.lambda[i] = v[v.size() - n + i];
            f.slices.back().samples.push_back(p);
            continue;
        }
        if (head == "track") {
            auto v = numbers(ss, 4, "track");
            f.n = static_cast<int>(v[0]);
            f.N = static_cast<int>(v[1]);
            if (f.n < 1 || f.N <= f.n || f.N > kMaxDim) detail::parse_fail(ln, "bad dimensions");
            f.mass_bound = v[2];
            f.closed = v[3] != 0;
            have_header = true;
            continue;
        }
        if (!have_header) detail::parse_fail(ln, "missing track header");
        if (head == "singular") {
            auto v = numbers(ss, 1 + f.N, "singular");
            SpacetimePoint p{f.N, vec_at(v, 1), v[0]};
            f.singular_points.push_back(p);
            f.singular_times.push_back(v[0]);
        } else if (head == "extinction") {
            f.extinction_time = numbers(ss, 1, "extinction")[0];
        } else if (head == "model") {
            std::string kind;
            ss >> kind;
            auto k = model_kind_from_string(kind);
            if (!k) detail::parse_fail(ln, "unknown model kind " + kind);
            auto v = numbers(ss, 0, "model");
            const std::size_t N = f.N;
            if (v.size() != 6 + N + N * N) detail::parse_fail(ln, "model: wrong column count");
            SelfSimilarModel m;
            m.kind = *k;
            m.n = static_cast<int>(v[0]);
            m.N = static_cast<int>(v[1]);
            m.flat_dim = static_cast<int>(v[2]);
            m.T = v[3];
            m.scale = v[4];
            m.center = SpacetimePoint{f.N, vec_at(v, 6), v[5]};
            for (std::size_t i = 0; i < N; ++i) m.frame[i] = vec_at(v, 6 + N + i * N);
            f.model = m;
        } else if (head == "slice") {
            auto v = numbers(ss, 4, "slice");
            if (static_cast<int>(v[1]) != f.n || static_cast<int>(v[2]) != f.N)
                detail::parse_fail(ln, "slice dimensions disagree with track header");
            VarifoldSlice s;
            s.t = v[0];
            f.slices.push_back(std::move(s));
        } else if (head == "curve") {
            if (f.slices.empty()) detail::parse_fail(ln, "curve before slice");
            auto& s = f.slices.back();
            s.curves.push_back(run_of(ss, s.samples.size()));
        } else if (head == "axis") {
            if (f.slices.empty()) detail::parse_fail(ln, "axis before slice");
            auto v = numbers(ss, 4 * f.N, "axis");
            auto& a = f.slices.back().axis;
            a.origin = vec_at(v, 0);
            a.dir = vec_at(v, f.N);
            a.e1 = vec_at(v, 2 * f.N);
            a.e2 = vec_at(v, 3 * f.N);
        } else if (head == "r") {
            if (f.slices.empty()) detail::parse_fail(ln, "ring before slice");
            auto v = numbers(ss, 7, "ring");
            Ring r{v[0], v[1], v[2], v[3], v[4], v[5], v[6], true};
            f.slices.back().rings.push_back(r);
        } else if (head == "profile") {
            if (f.slices.empty()) detail::parse_fail(ln, "profile before slice");
            auto& s = f.slices.back();
            s.profiles.push_back(run_of(ss, s.rings.size()));
        } else {
            detail::parse_fail(ln, "unknown record '" + head + "'");
        }
    }
    if (!have_header) detail::parse_fail(ln, "missing track header");
    for (std::size_t i = 1; i < f.slices.size(); ++i)
        if (!(f.slices[i].t > f.slices[i - 1].t)) detail::parse_fail(ln, "slice times not increasing");
    return out;
}

inline void save_track(const std::string& path, const FlowTrack& f, const std::map<std::string, std::string>& meta = {}) {
    std::ofstream os(path);
    require(static_cast<bool>(os), ErrorKind::InvalidInput, "cannot open " + path + " for writing");
    write_track(os, f, meta);
}

inline TrackFile load_track(const std::string& path) {
    std::ifstream is(path);
    require(static_cast<bool>(is), ErrorKind::InvalidInput, "cannot open " + path);
    return read_track(is);
}

}  // namespace strataflow
