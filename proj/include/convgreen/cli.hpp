#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assumptions.hpp"
#include "errors.hpp"
#include "green_profile.hpp"
#include "operators.hpp"
#include "schemes.hpp"
#include "spatial.hpp"
#include "spectral.hpp"
#include "temporal.hpp"
#include "version.hpp"

namespace convgreen::cli {

struct RunConfig {
    std::string scheme_spec;          // "lf:<l>", "imp:<l>", "lw:<l>", or a JSON path
    std::string out_dir = ".";

    double tol_tangency = 1e-9;
    double tol_circle = 1e-8;
    double tol_quad = 1e-9;
    double tol_solver = 1e-12;

    double eta = 0.05;
    double epsilon = 0.3;
    double C_cap = 1e3;

    int threads = 1;                  // hint only; execution is deterministic and serial
    std::uint64_t seed = 20268;       // sampling seed for verification sweeps

    // Subcommand knobs.
    int samples = 2048;               // spectrum: circle sample count
    int sweep = 0;                    // spectrum: random splitting checks in 1.01 <= |z| <= 10
    double z_re = 2.0, z_im = 0.0;    // spatial: resolvent parameter
    std::string method;               // spatial: modal|truncated|both; temporal: iterate|contour|both
    long j_min = 0, j_max = -1;       // window override; empty means "auto"
    long n = 50;                      // temporal: time step
    long n_fit = 32;                  // verify: fitting step
    std::vector<long> n_test{128, 256, 512};

    void validate() const {
        if (scheme_spec.empty())
            throw ParameterOutOfRange("config: --scheme is required");
        for (double t : {tol_tangency, tol_circle, tol_quad, tol_solver})
            if (!(t > 0.0))
                throw ParameterOutOfRange("config: tolerances must be positive");
        if (!(eta > 0.0) || !(epsilon > 0.0) || !(eta < epsilon))
            throw ParameterOutOfRange("config: need 0 < eta < epsilon");
        if (!(C_cap > 0.0))
            throw ParameterOutOfRange("config: C_cap must be positive");
        if (threads < 1)
            throw ParameterOutOfRange("config: thread count must be at least 1");
        if (samples < 16)
            throw ParameterOutOfRange("config: need at least 16 circle samples");
    }

    AnalysisConfig analysis() const {
        AnalysisConfig a;
        a.tangency_tol = tol_tangency;
        return a;
    }

    SpatialConfig spatial() const {
        SpatialConfig s;
        s.circle_tol = tol_circle;
        s.cert_tol = tol_solver;
        return s;
    }

    ContourParams contour() const {
        ContourParams c;
        c.eta = eta;
        c.epsilon = epsilon;
        c.quad_tol = tol_quad;
        return c;
    }
};

// ---------------------------------------------------------------------------
// Formatting and file plumbing.

// Shortest decimal representation that round-trips the double exactly.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    std::array<char, 64> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw ParameterOutOfRange("atomic_write: cannot open '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out)
            throw ParameterOutOfRange("atomic_write: short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

class CsvBuilder {
public:
    void meta(const std::string& line) { out_ << "# " << line << '\n'; }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    std::ostringstream out_;
};

inline std::string scheme_meta_line(const SchemePair& pair, const std::string& extra = "") {
    std::ostringstream os;
    os << "scheme=" << pair.name << " r=" << pair.r() << " p=" << pair.p()
       << " version=" << tool_version;
    if (!extra.empty()) os << ' ' << extra;
    return os.str();
}

inline nlohmann::json report_to_json(const AssumptionReport& rep) {
    nlohmann::json doc;
    doc["pass"] = rep.all_ok();
    doc["q1_invertible"] = rep.q1_invertible;
    doc["index_zero"] = rep.index_zero;
    doc["endpoints_ok"] = rep.endpoints_ok;
    doc["support_ok"] = rep.support_ok;
    doc["tangencies_ok"] = rep.tangencies_ok;
    doc["grouping_ok"] = rep.grouping_ok;
    doc["q1_min_modulus"] = rep.q1_min_modulus;
    if (rep.q1_winding) doc["q1_winding"] = *rep.q1_winding;
    doc["tangencies"] = nlohmann::json::array();
    for (const TangencyPoint& t : rep.tangencies) {
        nlohmann::json jt;
        jt["kappa"] = {t.kappa.real(), t.kappa.imag()};
        jt["xi"] = t.xi;
        jt["z"] = {t.z.real(), t.z.imag()};
        jt["theta"] = t.theta;
        jt["alpha"] = t.alpha;
        jt["mu"] = t.mu;
        jt["beta"] = t.beta;
        jt["group"] = t.group;
        doc["tangencies"].push_back(jt);
    }
    doc["failures"] = nlohmann::json::array();
    for (const AssumptionFailure& f : rep.failures)
        doc["failures"].push_back({{"code", f.code}, {"location", f.location}, {"detail", f.detail}});
    return doc;
}

template <typename Body>
inline int guarded_command(const RunConfig& cfg, const char* command, Body body) {
    try {
        cfg.validate();
        std::filesystem::create_directories(cfg.out_dir);
        return body();
    } catch (const ParameterOutOfRange& e) {
        std::cerr << command << ": " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        nlohmann::json err;
        err["command"] = command;
        err["scheme"] = cfg.scheme_spec;
        err["error"] = e.what();
        try {
            atomic_write(std::filesystem::path(cfg.out_dir) / "error.json", err.dump(2) + "\n");
        } catch (...) {
            // The diagnostic below still reaches the user.
        }
        std::cerr << command << ": " << e.what() << '\n';
        return 1;
    }
}

inline WindowPolicy policy_from(const AssumptionReport& rep) {
    WindowPolicy pol;
    if (rep.all_ok() && !rep.tangencies.empty()) {
        double amax = 0.0;
        int mu_min = rep.tangencies.front().mu;
        for (const TangencyPoint& t : rep.tangencies) {
            amax = std::max(amax, std::fabs(t.alpha));
            mu_min = std::min(mu_min, t.mu);
        }
        pol.drift_bound = amax;
        pol.mu_min = mu_min;
    }
    return pol;
}

// ---------------------------------------------------------------------------
// Subcommands.  Exit contract: 0 pass, 1 analytic failure, 2 usage error.

inline int cmd_analyze(const RunConfig& cfg) {
    return guarded_command(cfg, "analyze", [&]() {
        const SchemePair pair = parse_scheme_spec(cfg.scheme_spec);
        const AssumptionReport rep = analyze(pair, cfg.analysis());
        nlohmann::json doc = report_to_json(rep);
        doc["scheme"] = pair.name;
        doc["version"] = tool_version;
        atomic_write(std::filesystem::path(cfg.out_dir) / "analysis.json", doc.dump(2) + "\n");
        return rep.all_ok() ? 0 : 1;
    });
}

inline int cmd_spectrum(const RunConfig& cfg) {
    return guarded_command(cfg, "spectrum", [&]() {
        const SchemePair pair = parse_scheme_spec(cfg.scheme_spec);
        const double two_pi = 2.0 * std::numbers::pi;

        CsvBuilder csv;
        csv.meta(scheme_meta_line(pair, "samples=" + std::to_string(cfg.samples)));
        csv.row({"xi", "re_F", "im_F", "abs_F"});
        for (int k = 0; k < cfg.samples; ++k) {
            const double xi = two_pi * k / cfg.samples;
            const cplx F = eval_F(pair, std::polar(1.0, xi));
            csv.row({format_double(xi), format_double(F.real()), format_double(F.imag()),
                     format_double(std::abs(F))});
        }
        atomic_write(std::filesystem::path(cfg.out_dir) / "spectrum.csv", csv.str());

        if (cfg.sweep > 0) {
            std::mt19937_64 gen(cfg.seed);
            std::uniform_real_distribution<double> uni(0.0, 1.0);
            std::vector<cplx> zs;
            zs.reserve(static_cast<std::size_t>(cfg.sweep));
            for (int i = 0; i < cfg.sweep; ++i)
                zs.push_back(std::polar(1.01 + (10.0 - 1.01) * uni(gen), two_pi * uni(gen)));
            const SplittingReport rep = verify_splitting(pair, zs, {}, 1e-3, cfg.tol_circle);

            nlohmann::json doc;
            doc["scheme"] = pair.name;
            doc["version"] = tool_version;
            doc["checked"] = rep.checked;
            doc["skipped"] = rep.skipped;
            doc["expected"] = {pair.r(), 0, pair.p()};
            doc["violations"] = nlohmann::json::array();
            for (const auto& v : rep.violations)
                doc["violations"].push_back({{"z", {v.z.real(), v.z.imag()}},
                                             {"counts", {v.n_stable, v.n_circle, v.n_unstable}}});
            doc["pass"] = rep.ok();
            atomic_write(std::filesystem::path(cfg.out_dir) / "splitting.json", doc.dump(2) + "\n");
            if (!rep.ok()) return 1;
        }
        return 0;
    });
}

inline int cmd_spatial(const RunConfig& cfg) {
    return guarded_command(cfg, "spatial", [&]() {
        const SchemePair pair = parse_scheme_spec(cfg.scheme_spec);
        const std::string method = cfg.method.empty() ? "both" : cfg.method;
        if (method != "modal" && method != "truncated" && method != "both")
            throw ParameterOutOfRange("spatial: --method must be modal, truncated, or both");
        const cplx z(cfg.z_re, cfg.z_im);
        const long lo = (cfg.j_max < cfg.j_min) ? -40 : cfg.j_min;
        const long hi = (cfg.j_max < cfg.j_min) ? 40 : cfg.j_max;
        const SpatialConfig scfg = cfg.spatial();

        std::optional<GreenProfile> gm, gt;
        if (method == "modal" || method == "both") gm = green_modal(pair, z, lo, hi, scfg);
        if (method == "truncated" || method == "both")
            gt = green_truncated(pair, z, std::max(std::labs(lo), std::labs(hi)), scfg);

        CsvBuilder csv;
        std::ostringstream extra;
        extra << "z=" << format_double(z.real()) << (z.imag() < 0 ? "" : "+")
              << format_double(z.imag()) << "i method=" << method;
        csv.meta(scheme_meta_line(pair, extra.str()));
        std::vector<std::string> header{"j"};
        if (method == "both") {
            header.insert(header.end(), {"modal_re", "modal_im", "modal_abs",
                                         "truncated_re", "truncated_im", "truncated_abs"});
        } else {
            header.insert(header.end(), {"re_G", "im_G", "abs_G"});
        }
        csv.row(header);
        auto push_value = [](std::vector<std::string>& cells, const cplx& v) {
            cells.push_back(format_double(v.real()));
            cells.push_back(format_double(v.imag()));
            cells.push_back(format_double(std::abs(v)));
        };
        for (long j = lo; j <= hi; ++j) {
            std::vector<std::string> cells{std::to_string(j)};
            if (gm) push_value(cells, gm->at(j));
            if (gt) push_value(cells, gt->at(j));
            csv.row(cells);
        }
        atomic_write(std::filesystem::path(cfg.out_dir) / "spatial.csv", csv.str());
        return 0;
    });
}

inline int cmd_temporal(const RunConfig& cfg) {
    return guarded_command(cfg, "temporal", [&]() {
        const SchemePair pair = parse_scheme_spec(cfg.scheme_spec);
        if (cfg.n < 0) throw ParameterOutOfRange("temporal: --n must be nonnegative");
        const std::string method = cfg.method.empty() ? "iterate" : cfg.method;
        if (method != "iterate" && method != "contour" && method != "both")
            throw ParameterOutOfRange("temporal: --method must be iterate, contour, or both");

        const AssumptionReport rep = analyze(pair, cfg.analysis());
        if (method != "iterate" && !rep.all_ok())
            throw Error("temporal: contour route needs the full analysis to pass (first failure: " +
                        (rep.failures.empty() ? std::string("unknown") : rep.failures.front().code) + ")");
        const WindowPolicy policy = policy_from(rep);

        std::optional<GreenProfile> gi;
        if (method == "iterate" || method == "both") gi = power_profile(pair, cfg.n, policy);

        long lo, hi;
        if (cfg.j_max >= cfg.j_min) {
            lo = cfg.j_min;
            hi = cfg.j_max;
        } else if (gi && method == "iterate") {
            lo = gi->j_min;
            hi = gi->j_max;
        } else if (pair.q1.is_identity()) {
            lo = -static_cast<long>(pair.p()) * cfg.n;
            hi = static_cast<long>(pair.r()) * cfg.n;
        } else {
            lo = -2 * cfg.n;
            hi = 2 * cfg.n;
        }

        std::optional<GreenProfile> gc;
        if (method == "contour" || method == "both") {
            if (cfg.n < 1) throw ParameterOutOfRange("temporal: the contour route needs n >= 1");
            ContourParams cp = cfg.contour();
            if (!pair.q1.is_identity()) {
                const FarFieldFit far = far_field_fit(pair, cfg.spatial());
                cp.far_c = far.c;
                cp.far_L = far.L;
            }
            GreenProfile g = make_profile(lo, hi, ProfileMeta{"contour", pair.name, {}, cfg.n});
            for (long j = lo; j <= hi; ++j) {
                const ContourSpec spec = build_contour(pair, rep.tangencies, j, cfg.n, cp);
                g.ref(j) = contour_value(pair, spec, cfg.n, j, cp, cfg.spatial());
            }
            gc = std::move(g);
        }

        CsvBuilder csv;
        std::ostringstream extra;
        extra << "n=" << cfg.n << " method=" << method;
        if (gi && gc) {
            double disagree = 0.0;
            for (long j = lo; j <= hi; ++j)
                disagree = std::max(disagree, std::abs(gi->at(j) - gc->at(j)));
            extra << " max_disagreement=" << format_double(disagree);
        }
        csv.meta(scheme_meta_line(pair, extra.str()));
        std::vector<std::string> header{"j"};
        if (method == "both") {
            header.insert(header.end(), {"iterate_re", "iterate_im", "iterate_abs",
                                         "contour_re", "contour_im", "contour_abs"});
        } else {
            header.insert(header.end(), {"re_G", "im_G", "abs_G"});
        }
        csv.row(header);
        auto push_value = [](std::vector<std::string>& cells, const cplx& v) {
            cells.push_back(format_double(v.real()));
            cells.push_back(format_double(v.imag()));
            cells.push_back(format_double(std::abs(v)));
        };
        for (long j = lo; j <= hi; ++j) {
            std::vector<std::string> cells{std::to_string(j)};
            if (gi) push_value(cells, gi->at(j));
            if (gc) push_value(cells, gc->at(j));
            csv.row(cells);
        }
        atomic_write(std::filesystem::path(cfg.out_dir) / "temporal.csv", csv.str());
        return 0;
    });
}

inline int cmd_verify(const RunConfig& cfg) {
    return guarded_command(cfg, "verify", [&]() {
        const SchemePair pair = parse_scheme_spec(cfg.scheme_spec);
        if (cfg.n_fit < 2) throw ParameterOutOfRange("verify: --nfit must be at least 2");
        if (cfg.n_test.empty()) throw ParameterOutOfRange("verify: --ntest must not be empty");

        const AssumptionReport rep = analyze(pair, cfg.analysis());
        if (!rep.all_ok())
            throw Error("verify: assumptions fail (first failure: " +
                        (rep.failures.empty() ? std::string("unknown") : rep.failures.front().code) + ")");

        const WindowPolicy policy = policy_from(rep);
        const EnvelopeVerification t1 = verify_theorem1(pair, rep.tangencies, cfg.n_fit, cfg.n_test,
                                                  policy, cfg.C_cap);

        nlohmann::json doc;
        doc["scheme"] = pair.name;
        doc["version"] = tool_version;
        doc["n_fit"] = cfg.n_fit;
        doc["C"] = t1.fit.C;
        doc["c"] = t1.fit.c;
        doc["fit_n_list"] = t1.fit.n_list;
        doc["sector_residual"] = t1.fit.sector_residual;
        doc["tests"] = nlohmann::json::array();
        for (const auto& res : t1.tests)
            doc["tests"].push_back({{"n", res.n},
                                    {"max_ratio", res.max_ratio},
                                    {"argmax_j", res.argmax_j},
                                    {"sector", res.sector},
                                    {"noise_floor", res.noise_floor}});
        doc["pass"] = t1.pass && t1.fit.c > 0.0;

        if (!pair.q1.is_identity()) {
            const FarFieldFit far = far_field_fit(pair, cfg.spatial());
            doc["far_field"] = {{"c", far.c}, {"C", far.C}, {"R0", far.R0}, {"L", far.L}};
        }

        atomic_write(std::filesystem::path(cfg.out_dir) / "verify.json", doc.dump(2) + "\n");
        return doc["pass"].get<bool>() ? 0 : 1;
    });
}

} // namespace convgreen::cli
