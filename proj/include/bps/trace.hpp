#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "bps/errors.hpp"
#include "bps/state.hpp"

namespace bps {

struct EventCounts {
    std::uint64_t bounces = 0;
    std::uint64_t jumps = 0;
    std::uint64_t refreshes = 0;
    std::uint64_t proposals = 0;   // thinning proposals (accepted + rejected)
    std::uint64_t rejections = 0;  // thinning rejections
    std::uint64_t exchanges_proposed = 0;
    std::uint64_t exchanges_accepted = 0;
    std::uint64_t permutation_draws = 0;  // non-trivial subset assignment draws

    EventCounts& operator+=(const EventCounts& o) {
        bounces += o.bounces;
        jumps += o.jumps;
        refreshes += o.refreshes;
        proposals += o.proposals;
        rejections += o.rejections;
        exchanges_proposed += o.exchanges_proposed;
        exchanges_accepted += o.exchanges_accepted;
        permutation_draws += o.permutation_draws;
        return *this;
    }
};

// Discrete-time sample record of one chain (or one tempering slot):
// row i holds (times[i], xs[i*dim..], ys[i], optionally vs[i*dim..]).
struct SampleTrace {
    int dim = 0;
    bool has_velocities = false;
    std::vector<double> times;
    std::vector<double> xs;  // row-major size() x dim
    std::vector<int> ys;
    std::vector<double> vs;  // empty, or row-major size() x dim
    EventCounts events;

    std::size_t size() const { return times.size(); }

    void reserve(std::size_t n) {
        times.reserve(n);
        xs.reserve(n * static_cast<std::size_t>(dim));
        ys.reserve(n);
        if (has_velocities) vs.reserve(n * static_cast<std::size_t>(dim));
    }

    void push_row(double t, const Vec& x, int y, const Vec& v) {
        times.push_back(t);
        xs.insert(xs.end(), x.begin(), x.end());
        ys.push_back(y);
        if (has_velocities) vs.insert(vs.end(), v.begin(), v.end());
    }

    double x_at(std::size_t row, int d) const { return xs[row * dim + d]; }

    // One coordinate as a column (diagnostics work per component).
    std::vector<double> x_column(int d) const {
        std::vector<double> c(size());
        for (std::size_t i = 0; i < size(); ++i) c[i] = x_at(i, d);
        return c;
    }
};

namespace detail {

// Shortest round-trip decimal form.
inline void append_double(std::string& out, double v) {
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
}

}  // namespace detail

// Columns: t, x_1..x_dim, y, then v_1..v_dim when velocities are recorded.
inline std::string trace_to_csv(const SampleTrace& tr) {
    std::string out = "t";
    for (int d = 1; d <= tr.dim; ++d) out += ",x_" + std::to_string(d);
    out += ",y";
    if (tr.has_velocities)
        for (int d = 1; d <= tr.dim; ++d) out += ",v_" + std::to_string(d);
    out += "\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        detail::append_double(out, tr.times[i]);
        for (int d = 0; d < tr.dim; ++d) {
            out += ',';
            detail::append_double(out, tr.x_at(i, d));
        }
        out += ',' + std::to_string(tr.ys[i]);
        if (tr.has_velocities)
            for (int d = 0; d < tr.dim; ++d) {
                out += ',';
                detail::append_double(out, tr.vs[i * tr.dim + d]);
            }
        out += '\n';
    }
    return out;
}

inline void write_trace_csv(const SampleTrace& tr, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open trace file for writing: " + path);
    f << trace_to_csv(tr);
    if (!f) throw DataError("failed writing trace file: " + path);
}

inline SampleTrace read_trace_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open trace file: " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty trace file: " + path);

    // Header tells us dim and whether velocities are present.
    int dim = 0;
    bool vel = false;
    {
        std::stringstream hs(line);
        std::string col;
        std::vector<std::string> cols;
        while (std::getline(hs, col, ',')) cols.push_back(col);
        if (cols.empty() || cols[0] != "t") throw DataError("bad trace header in " + path);
        std::size_t i = 1;
        while (i < cols.size() && cols[i].rfind("x_", 0) == 0) ++i, ++dim;
        if (i >= cols.size() || cols[i] != "y") throw DataError("bad trace header in " + path);
        ++i;
        vel = i < cols.size();
    }
    SampleTrace tr;
    tr.dim = dim;
    tr.has_velocities = vel;
    const std::size_t want = 2 + static_cast<std::size_t>(dim) * (vel ? 2 : 1);
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> vals;
        vals.reserve(want);
        const char* p = line.data();
        const char* end = p + line.size();
        while (p < end) {
            double v;
            auto r = std::from_chars(p, end, v);
            if (r.ec != std::errc())
                throw DataError(path + ": bad number at line " + std::to_string(lineno));
            vals.push_back(v);
            p = r.ptr;
            if (p < end && *p == ',') ++p;
        }
        if (vals.size() != want)
            throw DataError(path + ": wrong column count at line " + std::to_string(lineno));
        tr.times.push_back(vals[0]);
        for (int d = 0; d < dim; ++d) tr.xs.push_back(vals[1 + d]);
        tr.ys.push_back(static_cast<int>(vals[1 + dim]));
        if (vel)
            for (int d = 0; d < dim; ++d) tr.vs.push_back(vals[2 + dim + d]);
    }
    return tr;
}

// Reorder per-slot traces by a per-sample assignment: assignment[i][k] names
// the raw trace whose row i belongs to slot k.  Identity assignments leave
// the input unchanged; traces emitted by the tempering samplers are already
// slot-ordered, so this is for externally annotated runs.
inline std::vector<SampleTrace> rearrange_trace(
    const std::vector<SampleTrace>& raw,
    const std::vector<std::vector<int>>& assignment) {
    const std::size_t L = raw.size();
    if (L == 0) return {};
    const std::size_t n = raw[0].size();
    for (const auto& tr : raw)
        if (tr.size() != n || tr.dim != raw[0].dim || tr.has_velocities != raw[0].has_velocities)
            throw DataError("rearrange: traces must share shape");
    if (assignment.size() != n) throw DataError("rearrange: one assignment per sample required");

    std::vector<SampleTrace> out(L);
    for (std::size_t k = 0; k < L; ++k) {
        out[k].dim = raw[k].dim;
        out[k].has_velocities = raw[k].has_velocities;
        out[k].events = raw[k].events;
        out[k].reserve(n);
    }
    Vec xrow(raw[0].dim), vrow;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = assignment[i];
        if (a.size() != L) throw DataError("rearrange: assignment size mismatch");
        std::vector<bool> seen(L, false);
        for (int src : a) {
            if (src < 0 || static_cast<std::size_t>(src) >= L || seen[src])
                throw DataError("rearrange: assignment is not a permutation");
            seen[src] = true;
        }
        for (std::size_t k = 0; k < L; ++k) {
            const SampleTrace& s = raw[a[k]];
            for (int d = 0; d < s.dim; ++d) xrow[d] = s.x_at(i, d);
            if (s.has_velocities) {
                vrow.assign(s.vs.begin() + static_cast<std::ptrdiff_t>(i) * s.dim,
                            s.vs.begin() + static_cast<std::ptrdiff_t>(i + 1) * s.dim);
            }
            out[k].push_row(s.times[i], xrow, s.ys[i], vrow);
        }
    }
    return out;
}

}  // namespace bps
