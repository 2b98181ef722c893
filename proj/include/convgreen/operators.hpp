#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "green_profile.hpp"

namespace convgreen {

// A finite-stencil convolution operator acting on bi-infinite sequences:
//   (Q u)_j = sum_{l=-r}^{p} a_l u_{j+l}.
// Coefficients are stored densely; entry i holds a_{i-r}.
struct ConvolutionOperator {
    int r = 0;                 // left stencil extent (indices -r..-1)
    int p = 0;                 // right stencil extent (indices 1..p)
    std::vector<cplx> coeffs;  // length r + p + 1

    ConvolutionOperator() : coeffs{cplx(1.0, 0.0)} {}

    ConvolutionOperator(int r_, int p_, std::vector<cplx> c) : r(r_), p(p_), coeffs(std::move(c)) {
        if (r < 0 || p < 0 || coeffs.size() != static_cast<std::size_t>(r + p + 1))
            throw ParameterOutOfRange("ConvolutionOperator: coefficient table length must be r + p + 1");
        bool any = false;
        for (const cplx& a : coeffs) any = any || (a != cplx(0.0, 0.0));
        if (!any) throw ParameterOutOfRange("ConvolutionOperator: all coefficients are zero");
    }

    // a_l, or zero outside the stencil.
    cplx coeff(int l) const {
        if (l < -r || l > p) return cplx(0.0, 0.0);
        return coeffs[static_cast<std::size_t>(l + r)];
    }

    bool is_identity() const {
        for (int l = -r; l <= p; ++l)
            if (coeff(l) != (l == 0 ? cplx(1.0, 0.0) : cplx(0.0, 0.0))) return false;
        return true;
    }

    static ConvolutionOperator identity() { return ConvolutionOperator(0, 0, {cplx(1.0, 0.0)}); }

    // The pure shift with a single unit coefficient at offset l.
    static ConvolutionOperator shift(int l) {
        const int rr = std::max(0, -l), pp = std::max(0, l);
        std::vector<cplx> c(static_cast<std::size_t>(rr + pp + 1), cplx(0.0, 0.0));
        c[static_cast<std::size_t>(l + rr)] = cplx(1.0, 0.0);
        return ConvolutionOperator(rr, pp, std::move(c));
    }
};

// Largest coefficient magnitude; the natural scale for pole tolerances.
inline double symbol_scale(const ConvolutionOperator& op) {
    double m = 0.0;
    for (const cplx& a : op.coeffs) m = std::max(m, std::abs(a));
    return m;
}

// Q-hat(kappa) = sum_l a_l kappa^l, evaluated as a Horner pass over the
// polynomial kappa^r * Q-hat divided by kappa^r.
inline cplx eval_q_symbol(const ConvolutionOperator& op, cplx kappa) {
    if (kappa == cplx(0.0, 0.0)) {
        if (op.r > 0) throw ZeroArgument("eval_q_symbol: kappa = 0 with r > 0");
        return op.coeffs[0];
    }
    cplx v(0.0, 0.0);
    for (std::size_t i = op.coeffs.size(); i-- > 0;) v = v * kappa + op.coeffs[i];
    return v / std::pow(kappa, op.r);
}

// d/d kappa of the symbol: P'(kappa)/kappa^r - r P(kappa)/kappa^{r+1}
// with P(kappa) = kappa^r * Q-hat(kappa).
inline cplx eval_q_symbol_derivative(const ConvolutionOperator& op, cplx kappa) {
    if (kappa == cplx(0.0, 0.0))
        throw ZeroArgument("eval_q_symbol_derivative: kappa = 0");
    cplx v(0.0, 0.0), d(0.0, 0.0);
    for (std::size_t i = op.coeffs.size(); i-- > 0;) {
        d = d * kappa + v;
        v = v * kappa + op.coeffs[i];
    }
    const cplx kr = std::pow(kappa, op.r);
    return d / kr - static_cast<double>(op.r) * v / (kr * kappa);
}

// Apply Q to a finitely supported sequence; the result lives on the
// enlarged window [j_min - p, j_max + r].
inline GreenProfile apply_operator(const ConvolutionOperator& op, const GreenProfile& u) {
    GreenProfile out = make_profile(u.j_min - op.p, u.j_max + op.r, u.meta);
    for (long j = out.j_min; j <= out.j_max; ++j) {
        cplx acc(0.0, 0.0);
        for (int l = -op.r; l <= op.p; ++l)
            acc += op.coeff(l) * u.at(j + l);
        out.ref(j) = acc;
    }
    return out;
}

// The operator pair (Q0, Q1) defining one time step Q1 u^{n+1} = Q0 u^n.
// Both operators are stored on a shared minimal stencil: ingestion pads the
// shorter one with zeros and then drops end offsets where both vanish.
struct SchemePair {
    ConvolutionOperator q0;
    ConvolutionOperator q1;
    std::string name;

    SchemePair() = default;

    SchemePair(ConvolutionOperator q0_, ConvolutionOperator q1_, std::string name_ = {})
        : name(std::move(name_)) {
        int r = std::max(q0_.r, q1_.r);
        int p = std::max(q0_.p, q1_.p);
        auto pad = [&](const ConvolutionOperator& op) {
            std::vector<cplx> c(static_cast<std::size_t>(r + p + 1), cplx(0.0, 0.0));
            for (int l = -op.r; l <= op.p; ++l) c[static_cast<std::size_t>(l + r)] = op.coeff(l);
            return c;
        };
        std::vector<cplx> c0 = pad(q0_), c1 = pad(q1_);
        // Trim offsets where both operators carry an exact zero, so the
        // endpoint checks later act on the minimal stencil.
        while (r + p > 0 && c0.front() == cplx(0.0, 0.0) && c1.front() == cplx(0.0, 0.0) && r > 0) {
            c0.erase(c0.begin());
            c1.erase(c1.begin());
            --r;
        }
        while (r + p > 0 && c0.back() == cplx(0.0, 0.0) && c1.back() == cplx(0.0, 0.0) && p > 0) {
            c0.pop_back();
            c1.pop_back();
            --p;
        }
        q0 = ConvolutionOperator(r, p, std::move(c0));
        q1 = ConvolutionOperator(r, p, std::move(c1));
    }

    int r() const { return q0.r; }
    int p() const { return q0.p; }
};

inline double pair_scale(const SchemePair& pair) {
    return std::max(symbol_scale(pair.q0), symbol_scale(pair.q1));
}

// Amplification factor F(kappa) = Q0-hat(kappa) / Q1-hat(kappa).
inline cplx eval_F(const SchemePair& pair, cplx kappa, double pole_tol = 1e-12) {
    const cplx denom = eval_q_symbol(pair.q1, kappa);
    if (std::abs(denom) < pole_tol * symbol_scale(pair.q1))
        throw SymbolPole("eval_F: Q1 symbol vanishes near kappa");
    return eval_q_symbol(pair.q0, kappa) / denom;
}

// F'(kappa) by the quotient rule.
inline cplx eval_F_derivative(const SchemePair& pair, cplx kappa, double pole_tol = 1e-12) {
    const cplx denom = eval_q_symbol(pair.q1, kappa);
    if (std::abs(denom) < pole_tol * symbol_scale(pair.q1))
        throw SymbolPole("eval_F_derivative: Q1 symbol vanishes near kappa");
    const cplx num = eval_q_symbol(pair.q0, kappa);
    const cplx dnum = eval_q_symbol_derivative(pair.q0, kappa);
    const cplx ddenom = eval_q_symbol_derivative(pair.q1, kappa);
    return (dnum * denom - num * ddenom) / (denom * denom);
}

// A_l(z) = z a_{l,1} - a_{l,0}, the coefficient functions of the resolvent
// recurrence.
inline cplx coeff_A(const SchemePair& pair, int l, cplx z) {
    if (l < -pair.r() || l > pair.p())
        throw IndexOutOfStencil("coeff_A: offset outside [-r, p]");
    return z * pair.q1.coeff(l) - pair.q0.coeff(l);
}

// Winding number of the symbol along the unit circle, by accumulating the
// argument increment over a uniform grid.  The accumulated total must land
// within 0.25 of an integer multiple of 2*pi, otherwise the grid is deemed
// too coarse.
inline int winding_number(const ConvolutionOperator& op, int samples = 4096,
                          double zero_tol = 1e-12) {
    if (samples < 8) throw ParameterOutOfRange("winding_number: too few samples");
    const double scale = symbol_scale(op);
    const double two_pi = 2.0 * std::numbers::pi;
    double total = 0.0;
    cplx prev = eval_q_symbol(op, cplx(1.0, 0.0));
    if (std::abs(prev) < zero_tol * scale)
        throw ZeroOnCircle("winding_number: symbol vanishes on the unit circle");
    for (int k = 1; k <= samples; ++k) {
        const double xi = two_pi * k / samples;
        const cplx cur = eval_q_symbol(op, std::polar(1.0, xi));
        if (std::abs(cur) < zero_tol * scale)
            throw ZeroOnCircle("winding_number: symbol vanishes on the unit circle");
        total += std::arg(cur / prev);
        prev = cur;
    }
    const double turns = total / two_pi;
    const double nearest = std::round(turns);
    if (std::abs(turns - nearest) >= 0.25)
        throw AmbiguousWinding("winding_number: accumulated argument not close to an integer turn count");
    return static_cast<int>(nearest);
}

// Laurent coefficients phi_l of F on the unit circle (the kernel of the
// one-step operator L = Q1^{-1} Q0), by discrete Fourier inversion.  The
// sample count doubles until aliasing is below tol/10; the half-width J is
// the smallest one whose geometric tail extrapolation is below tol.
inline GreenProfile rational_kernel(const SchemePair& pair, double tol = 1e-12,
                                    int max_half_width = 4096) {
    if (!(tol > 0.0)) throw ParameterOutOfRange("rational_kernel: tolerance must be positive");
    const double two_pi = 2.0 * std::numbers::pi;

    auto dft_window = [&](int n_samples, int half_width) {
        // phi_l ~ (1/N) sum_k F(e^{i xi_k}) e^{-i l xi_k}, |l| <= half_width.
        std::vector<cplx> samples(static_cast<std::size_t>(n_samples));
        for (int k = 0; k < n_samples; ++k)
            samples[static_cast<std::size_t>(k)] = eval_F(pair, std::polar(1.0, two_pi * k / n_samples));
        std::vector<cplx> phi(static_cast<std::size_t>(2 * half_width + 1), cplx(0.0, 0.0));
        for (int l = -half_width; l <= half_width; ++l) {
            cplx acc(0.0, 0.0);
            for (int k = 0; k < n_samples; ++k)
                acc += samples[static_cast<std::size_t>(k)] * std::polar(1.0, -two_pi * l * k / n_samples);
            phi[static_cast<std::size_t>(l + half_width)] = acc / static_cast<double>(n_samples);
        }
        return phi;
    };

    int probe = std::min(max_half_width, 256);
    std::vector<cplx> phi;
    int J = -1;
    for (;;) {
        // Pick the grid by doubling until the coefficients stop moving.
        int n_samples = std::max(1 << 10, 4 * probe);
        phi = dft_window(n_samples, probe);
        for (;;) {
            if (n_samples > (1 << 22))
                throw TailNotResolved("rational_kernel: aliasing did not settle under grid doubling");
            const int next_samples = 2 * n_samples;
            std::vector<cplx> refined = dft_window(next_samples, probe);
            double drift = 0.0;
            for (std::size_t i = 0; i < phi.size(); ++i)
                drift = std::max(drift, std::abs(refined[i] - phi[i]));
            phi.swap(refined);
            n_samples = next_samples;
            if (drift < tol / 10.0) break;
        }

        // Find the smallest half-width whose geometric tail estimate is < tol.
        auto side_mag = [&](int l) {
            const double lo = std::abs(phi[static_cast<std::size_t>(probe - l)]);
            const double hi = std::abs(phi[static_cast<std::size_t>(probe + l)]);
            return std::max(lo, hi);
        };
        for (int cand = 1; cand <= probe; ++cand) {
            const double a0 = side_mag(cand - 1);
            const double a1 = side_mag(cand);
            double tail;
            if (a1 == 0.0) tail = 0.0;
            else if (a1 >= a0 || a0 == 0.0) continue; // not yet in the decaying regime
            else {
                const double q = a1 / a0;
                tail = a1 * q / (1.0 - q);
            }
            if (tail < tol) { J = cand; break; }
        }
        if (J >= 0) break;
        if (probe >= max_half_width)
            throw TailNotResolved("rational_kernel: max half-width reached before the tail certified");
        probe = std::min(max_half_width, 2 * probe);
    }

    GreenProfile out = make_profile(-J, J, ProfileMeta{"rational_kernel", pair.name, {}, {}});
    for (long l = -J; l <= J; ++l) out.ref(l) = phi[static_cast<std::size_t>(l + probe)];

    // Snap values that are pure DFT noise to exact zero, then trim.
    const double floor_mag = 1e-14 * std::max(1.0, out.max_abs());
    for (cplx& v : out.values)
        if (std::abs(v) < floor_mag) v = cplx(0.0, 0.0);
    while (out.size() > 1 && out.values.front() == cplx(0.0, 0.0)) {
        out.values.erase(out.values.begin());
        ++out.j_min;
    }
    while (out.size() > 1 && out.values.back() == cplx(0.0, 0.0)) {
        out.values.pop_back();
        --out.j_max;
    }
    return out;
}

} // namespace convgreen
