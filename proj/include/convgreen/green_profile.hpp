#pragma once

#include <complex>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"

namespace convgreen {

using cplx = std::complex<double>;

// Provenance attached to a computed profile so that files written from it
// can say where the numbers came from.
struct ProfileMeta {
    std::string source;              // e.g. "modal", "truncated", "power", "contour"
    std::string scheme;              // human-readable scheme label, may be empty
    std::optional<cplx> z;           // spatial profiles: the resolvent parameter
    std::optional<long> n;           // temporal profiles: the time step
};

// A finitely supported (or truncated) complex sequence indexed by the
// lattice positions j_min..j_max, stored densely.
struct GreenProfile {
    long j_min = 0;
    long j_max = -1;                 // empty when j_max < j_min
    std::vector<cplx> values;
    ProfileMeta meta;

    long size() const { return j_max < j_min ? 0 : j_max - j_min + 1; }

    bool contains(long j) const { return j >= j_min && j <= j_max; }

    // Value at lattice position j; zero outside the stored window.
    cplx at(long j) const {
        if (!contains(j)) return cplx(0.0, 0.0);
        return values[static_cast<std::size_t>(j - j_min)];
    }

    cplx& ref(long j) {
        if (!contains(j)) throw ParameterOutOfRange("GreenProfile::ref: index outside window");
        return values[static_cast<std::size_t>(j - j_min)];
    }

    cplx sum() const {
        cplx s(0.0, 0.0);
        for (const cplx& v : values) s += v;
        return s;
    }

    double l1_norm() const {
        double s = 0.0;
        for (const cplx& v : values) s += std::abs(v);
        return s;
    }

    double l2_norm() const {
        double s = 0.0;
        for (const cplx& v : values) s += std::norm(v);
        return std::sqrt(s);
    }

    double max_abs() const {
        double m = 0.0;
        for (const cplx& v : values) m = std::max(m, std::abs(v));
        return m;
    }
};

inline GreenProfile make_profile(long j_min, long j_max, ProfileMeta meta = {}) {
    GreenProfile g;
    g.j_min = j_min;
    g.j_max = j_max;
    g.values.assign(j_max < j_min ? 0 : static_cast<std::size_t>(j_max - j_min + 1), cplx(0.0, 0.0));
    g.meta = std::move(meta);
    return g;
}

// Largest |difference| over the union of both supports.
inline double max_abs_difference(const GreenProfile& a, const GreenProfile& b) {
    const long lo = std::min(a.j_min, b.j_min);
    const long hi = std::max(a.j_max, b.j_max);
    double m = 0.0;
    for (long j = lo; j <= hi; ++j) m = std::max(m, std::abs(a.at(j) - b.at(j)));
    return m;
}

} // namespace convgreen
