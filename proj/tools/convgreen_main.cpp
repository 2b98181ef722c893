#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <convgreen/cli.hpp>
#include <convgreen/version.hpp>

int main(int argc, char** argv) {
    CLI::App app{"Green's function analysis of one-step convolution schemes L = Q1^{-1} Q0"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", convgreen::tool_version);

    convgreen::cli::RunConfig cfg;
    app.add_option("--scheme", cfg.scheme_spec,
                   "scheme designator: lf:<lambda>, imp:<lambda>, lw:<lambda>, or a JSON file")
        ->envname("CONVGREEN_SCHEME");
    app.add_option("--out", cfg.out_dir, "output directory (created if missing)")
        ->envname("CONVGREEN_OUT");
    app.add_option("--tol-tangency", cfg.tol_tangency, "modulus-one detection tolerance")
        ->envname("CONVGREEN_TOL_TANGENCY");
    app.add_option("--tol-circle", cfg.tol_circle, "root classification band around |kappa| = 1")
        ->envname("CONVGREEN_TOL_CIRCLE");
    app.add_option("--tol-quad", cfg.tol_quad, "contour quadrature tolerance")
        ->envname("CONVGREEN_TOL_QUAD");
    app.add_option("--tol-solver", cfg.tol_solver, "banded-solve certification tolerance")
        ->envname("CONVGREEN_TOL_SOLVER");
    app.add_option("--eta", cfg.eta, "base offset of the integration line")
        ->envname("CONVGREEN_ETA");
    app.add_option("--epsilon", cfg.epsilon, "deformation ball radius")
        ->envname("CONVGREEN_EPSILON");
    app.add_option("--ccap", cfg.C_cap, "envelope constant budget")
        ->envname("CONVGREEN_CCAP");
    app.add_option("--threads", cfg.threads, "worker thread hint (outputs are identical at any value)")
        ->envname("CONVGREEN_THREADS");
    app.add_option("--seed", cfg.seed, "seed for sampling sweeps")
        ->envname("CONVGREEN_SEED");

    CLI::App* an = app.add_subcommand("analyze", "run the admissibility checks and report tangency data");

    CLI::App* sp = app.add_subcommand("spectrum", "sample the amplification factor on the unit circle");
    sp->add_option("--samples", cfg.samples, "circle sample count");
    sp->add_option("--sweep", cfg.sweep, "random z count for the root-splitting check");

    std::string z_text;
    CLI::App* sa = app.add_subcommand("spatial", "spatial Green's function at one z");
    sa->add_option("--z", z_text, "resolvent parameter as re,im (default 2,0)");
    sa->add_option("--method", cfg.method, "modal | truncated | both (default both)");
    sa->add_option("--jmin", cfg.j_min, "window lower end");
    sa->add_option("--jmax", cfg.j_max, "window upper end");

    CLI::App* te = app.add_subcommand("temporal", "time-step Green's function at one n");
    te->add_option("--n", cfg.n, "time step");
    te->add_option("--method", cfg.method, "iterate | contour | both (default iterate)");
    te->add_option("--jmin", cfg.j_min, "window lower end");
    te->add_option("--jmax", cfg.j_max, "window upper end");

    CLI::App* ve = app.add_subcommand("verify", "fit and test the generalized Gaussian envelope");
    ve->add_option("--nfit", cfg.n_fit, "fitting time step");
    ve->add_option("--ntest", cfg.n_test, "comma-separated test steps")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!z_text.empty()) {
        try {
            const std::size_t comma = z_text.find(',');
            if (comma == std::string::npos) {
                cfg.z_re = std::stod(z_text);
                cfg.z_im = 0.0;
            } else {
                cfg.z_re = std::stod(z_text.substr(0, comma));
                cfg.z_im = std::stod(z_text.substr(comma + 1));
            }
        } catch (const std::exception&) {
            std::cerr << "spatial: cannot parse --z '" << z_text << "' (expected re,im)\n";
            return 2;
        }
    }

    if (an->parsed()) return convgreen::cli::cmd_analyze(cfg);
    if (sp->parsed()) return convgreen::cli::cmd_spectrum(cfg);
    if (sa->parsed()) return convgreen::cli::cmd_spatial(cfg);
    if (te->parsed()) return convgreen::cli::cmd_temporal(cfg);
    if (ve->parsed()) return convgreen::cli::cmd_verify(cfg);
    std::cerr << "no subcommand selected\n";
    return 2;
}
