// latkern command-line interface: exact kernels, expansions, lattice
// constants, remainder probes, ellipticity reports, the 1D closed-form
// family, and random-walk simulation/comparison.
//
// Exit codes: 0 success, 1 usage error, 2 verification failure,
// 3 quadrature tolerance not met.

#include "latkern/expansion.hpp"
#include "latkern/json_io.hpp"
#include "latkern/kernel_exact.hpp"
#include "latkern/oned.hpp"
#include "latkern/walk.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr const char* kVersion = "latkern 0.1.0";

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string join_args(int argc, char** argv) {
    std::string s;
    for (int i = 0; i < argc; ++i) {
        if (i) s += ' ';
        s += argv[i];
    }
    return s;
}

struct Output {
    std::string path;  // empty = stdout
    std::ostream& stream() {
        if (path.empty()) return std::cout;
        if (!file.is_open()) {
            file.open(path);
            if (!file) throw latkern::StructuralError("cannot open output file " + path);
        }
        return file;
    }
    std::ofstream file;
};

void write_provenance(std::ostream& os, const std::string& cmdline, const std::vector<std::string>& extra) {
    os << "# " << kVersion << "\n# command: " << cmdline << "\n";
    for (const auto& e : extra) os << "# " << e << "\n";
}

std::vector<double> parse_ladder(const std::string& s) {
    // "t0,r,n" -> geometric ladder
    double t0, r;
    int n;
    if (std::sscanf(s.c_str(), "%lf,%lf,%d", &t0, &r, &n) != 3 || n < 3)
        throw latkern::StructuralError("ladder must be t0,ratio,count with count >= 3");
    std::vector<double> out;
    double t = t0;
    for (int i = 0; i < n; ++i) {
        out.push_back(t);
        t *= r;
    }
    return out;
}

// "0..20" | "0,1,5" (1D) | "0,0,0;1,0,0" (points separated by ';')
std::vector<latkern::Offset> parse_points(const std::string& s, int dim) {
    std::vector<latkern::Offset> pts;
    if (auto dots = s.find(".."); dots != std::string::npos && dim == 1) {
        const int a = std::stoi(s.substr(0, dots));
        const int b = std::stoi(s.substr(dots + 2));
        for (int x = a; x <= b; ++x) pts.push_back({x});
        return pts;
    }
    std::stringstream ss(s);
    std::string group;
    while (std::getline(ss, group, ';')) {
        latkern::Offset p;
        std::stringstream gs(group);
        std::string tok;
        while (std::getline(gs, tok, ',')) p.push_back(std::stoi(tok));
        if (dim == 1 && p.size() > 1) {
            for (int v : p) pts.push_back({v});
        } else {
            if (static_cast<int>(p.size()) != dim)
                throw latkern::StructuralError("point dimension mismatch in --x");
            pts.push_back(p);
        }
    }
    return pts;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace latkern;
    const std::string cmdline = join_args(argc, argv);

    CLI::App app{"lattice heat kernels: exact evaluation, asymptotic expansions, random walks"};
    app.set_version_flag("--version", kVersion);

    // --json-config FILE merges file values as defaults (flags win).
    std::string config_path;
    app.add_option("--json-config", config_path, "JSON file with option defaults");

    std::string stencil_spec = "laplacian1d:1";
    double eps = 1.0, t = 1.0, tol = 1e-8, scale = 1.0, ymax = 8.0;
    int J = 0, K = 2, window = 16, grid = 256, N = 1, npts = 64, K1 = 2;
    long paths = 10000;
    std::uint64_t seed = 1;
    std::string xspec = "0", kind = "first", emit = "polys", out_path, format = "csv", order = "exact",
                hist_path, ladder_spec = "16,2,7";

    auto add_common = [&](CLI::App* c) {
        c->add_option("--stencil", stencil_spec, "builder name or stencil JSON path");
        c->add_option("--tol", tol, "relative quadrature tolerance");
        c->add_option("--out", out_path, "output file (default stdout)");
        c->add_option("--format", format, "csv|json");
    };

    CLI::App* eval_first = app.add_subcommand("eval-first", "first Green function at lattice points");
    add_common(eval_first);
    eval_first->add_option("--eps", eps);
    eval_first->add_option("--t", t);
    eval_first->add_option("--J", J);
    eval_first->add_option("--x", xspec);

    CLI::App* eval_second = app.add_subcommand("eval-second", "second Green function at lattice points");
    add_common(eval_second);
    eval_second->add_option("--eps", eps);
    eval_second->add_option("--t", t);
    eval_second->add_option("--x", xspec);

    CLI::App* field = app.add_subcommand("field", "kernel values on a window (FFT)");
    add_common(field);
    field->add_option("--eps", eps);
    field->add_option("--t", t);
    field->add_option("--J", J);
    field->add_option("--window", window);
    field->add_option("--kind", kind, "first|second");

    CLI::App* expand = app.add_subcommand("expand", "expansion polynomial layers or profile tables");
    add_common(expand);
    expand->add_option("--J", J);
    expand->add_option("--K", K);
    expand->add_option("--emit", emit, "polys|profiles");
    expand->add_option("--ymax", ymax);
    expand->add_option("--n", npts);

    CLI::App* profiles = app.add_subcommand("profiles", "H_k and F_k along the first axis");
    add_common(profiles);
    profiles->add_option("--K", K);
    profiles->add_option("--ymax", ymax);
    profiles->add_option("--n", npts);

    CLI::App* omega_cmd = app.add_subcommand("omega", "lattice constant Omega at points");
    add_common(omega_cmd);
    omega_cmd->add_option("--x", xspec);

    CLI::App* verify_rem = app.add_subcommand("verify-remainder", "empirical remainder-order probe");
    add_common(verify_rem);
    verify_rem->add_option("--eps", eps);
    verify_rem->add_option("--kind", kind, "first|second");
    verify_rem->add_option("--J", J);
    verify_rem->add_option("--K", K);
    verify_rem->add_option("--ladder", ladder_spec, "t0,ratio,count");
    verify_rem->add_option("--window", window);

    CLI::App* ellip = app.add_subcommand("ellipticity", "grid ellipticity report");
    add_common(ellip);
    ellip->add_option("--grid", grid);

    CLI::App* oned_cmd = app.add_subcommand("oned", "closed-form 1D family tables and profiles");
    add_common(oned_cmd);
    oned_cmd->add_option("--N", N);
    oned_cmd->add_option("--emit", emit, "constants|polys|profiles|omega");
    oned_cmd->add_option("--ymax", ymax);
    oned_cmd->add_option("--n", npts);

    CLI::App* oned_verify = app.add_subcommand("oned-verify", "cross-check and identity suite");
    add_common(oned_verify);
    oned_verify->add_option("--N", N);
    oned_verify->add_option("--K1", K1);

    CLI::App* walk_sim = app.add_subcommand("walk-sim", "simulate the continuous-time walk");
    add_common(walk_sim);
    walk_sim->add_option("--scale", scale);
    walk_sim->add_option("--t", t);
    walk_sim->add_option("--paths", paths);
    walk_sim->add_option("--seed", seed);

    CLI::App* walk_cmp = app.add_subcommand("walk-compare", "empirical vs kernel transition probabilities");
    add_common(walk_cmp);
    walk_cmp->add_option("--hist", hist_path)->required();
    walk_cmp->add_option("--scale", scale);
    walk_cmp->add_option("--t", t);
    walk_cmp->add_option("--order", order, "exact|leading|asymptotic-K");

    app.require_subcommand(1);

    // merge config defaults: config args parsed first, command line wins
    std::vector<std::string> args(argv + 1, argv + argc);
    for (size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--json-config" && i + 1 < args.size()) {
            std::ifstream in(args[i + 1]);
            if (!in) {
                std::cerr << "cannot read config " << args[i + 1] << "\n";
                return 1;
            }
            json cfg;
            in >> cfg;
            std::vector<std::string> merged;
            if (cfg.contains("command")) merged.push_back(cfg["command"].get<std::string>());
            for (auto& [k2, v] : cfg.items()) {
                if (k2 == "command") continue;
                merged.push_back("--" + k2);
                merged.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
            // command line (minus the config flag) appended afterwards -> wins
            for (size_t j2 = 0; j2 < args.size(); ++j2) {
                if (j2 == i || j2 == i + 1) continue;
                merged.push_back(args[j2]);
            }
            args = merged;
            break;
        }
    }
    for (auto* sub : app.get_subcommands({})) {
        for (auto* opt : sub->get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }

    try {
        std::vector<const char*> cargs{argv[0]};
        for (auto& a : args) cargs.push_back(a.c_str());
        app.parse(static_cast<int>(cargs.size()), const_cast<char**>(cargs.data()));
    } catch (const CLI::ParseError& e) {
        return app.exit(e) ? 1 : 0;
    }

    Output out{out_path, {}};
    const QuadSpec q{32, tol, 10};

    try {
        if (*eval_first || *eval_second) {
            const bool first = static_cast<bool>(*eval_first);
            Stencil st = make_stencil(stencil_spec);
            auto pts = parse_points(xspec, st.dim());
            const double tau = t / std::pow(eps, st.order());
            TorusQuad quad(st, tau, first ? J : 0, !first);
            auto vals = quad.evaluate(pts, q);
            for (auto& v : vals)
                v = first ? scale_first(v, eps, J, st.dim(), st.order())
                          : scale_second(v, eps, st.dim(), st.order());
            auto& os = out.stream();
            write_provenance(os, cmdline,
                             {"stencil: " + st.name(), "eps: " + fmt(eps), "t: " + fmt(t),
                              "tol: " + fmt(tol), first ? "J: " + std::to_string(J) : "kind: second",
                              "torus_grid: " + std::to_string(quad.n_used())});
            os << "x";
            for (int j2 = 1; j2 < st.dim(); ++j2) os << ",x" << j2 + 1;
            os << ",re,im\n";
            for (size_t i = 0; i < pts.size(); ++i) {
                for (int j2 = 0; j2 < st.dim(); ++j2) os << (j2 ? "," : "") << pts[i][j2];
                os << "," << fmt(vals[i].real()) << "," << fmt(vals[i].imag()) << "\n";
            }
            return 0;
        }

        if (*field) {
            Stencil st = make_stencil(stencil_spec);
            KernelField f = green_field(st, eps, t, J, window, q, kind);
            auto& os = out.stream();
            write_provenance(os, cmdline,
                             {"stencil: " + st.name(), "eps: " + fmt(eps), "t: " + fmt(t),
                              "J: " + std::to_string(f.J), "kind: " + f.kind,
                              "window: " + std::to_string(window), "fft_grid: " + std::to_string(f.n_grid),
                              "aliasing_tail: " + fmt(f.aliasing_tail), "tol: " + fmt(tol)});
            for (int j2 = 0; j2 < st.dim(); ++j2) os << (j2 ? "," : "") << "x" << j2 + 1;
            os << ",re,im\n";
            for (const auto& [x, v] : f.values) {
                for (int j2 = 0; j2 < st.dim(); ++j2) os << (j2 ? "," : "") << x[j2];
                os << "," << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
            }
            return 0;
        }

        if (*expand) {
            Stencil st = make_stencil(stencil_spec);
            if (emit == "polys") {
                SeriesQ layers = st.taylor_layers(K);
                SeriesQ R = expansion_polynomials(layers, J, K);
                json j = series_to_json(R);
                j["provenance"] = {{"version", kVersion}, {"command", cmdline}, {"stencil", st.name()},
                                   {"J", J}, {"K", K}};
                out.stream() << j.dump(2) << "\n";
                return 0;
            }
            if (emit == "profiles") {
                Expansion ex(st, std::max(K, st.approximation_order(12)), QuadSpec{32, tol, 8}, tol);
                auto& os = out.stream();
                write_provenance(os, cmdline, {"stencil: " + st.name(), "J: " + std::to_string(J),
                                               "K: " + std::to_string(K), "tol: " + fmt(tol)});
                os << "y,grade,re,im\n";
                for (int i = 0; i <= npts; ++i) {
                    const double y = ymax * i / npts;
                    std::vector<double> yv(st.dim(), 0.0);
                    yv[0] = y;
                    for (int k2 = 0; k2 <= K; ++k2) {
                        if (k2 >= 1 && k2 < ex.approx_order()) continue;
                        const auto v = ex.h_profile(J, k2, yv);
                        os << fmt(y) << "," << k2 << "," << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
                    }
                }
                return 0;
            }
            std::cerr << "unknown --emit " << emit << "\n";
            return 1;
        }

        if (*profiles) {
            Stencil st = make_stencil(stencil_spec);
            Expansion ex(st, std::max(K, st.approximation_order(12) + 2), QuadSpec{32, tol, 8}, tol);
            auto& os = out.stream();
            write_provenance(os, cmdline, {"stencil: " + st.name(), "K: " + std::to_string(K),
                                           "tol: " + fmt(tol)});
            os << "y,grade,Hk_re,Hk_im,Fk_re,Fk_im\n";
            for (int i = 1; i <= npts; ++i) {
                const double y = ymax * i / npts;
                std::vector<double> yv(st.dim(), 0.0);
                yv[0] = y;
                for (int k2 = 0; k2 <= K; ++k2) {
                    if (k2 >= 1 && k2 < ex.approx_order()) continue;
                    const auto hv = ex.h_k(k2, yv);
                    const auto fv = ex.f_profile(k2, yv);
                    os << fmt(y) << "," << k2 << "," << fmt(hv.real()) << "," << fmt(hv.imag()) << ","
                       << fmt(fv.real()) << "," << fmt(fv.imag()) << "\n";
                }
            }
            return 0;
        }

        if (*omega_cmd) {
            Stencil st = make_stencil(stencil_spec);
            Expansion ex(st, std::max(8, st.approximation_order(12) + 2), QuadSpec{32, tol, 8}, tol);
            auto pts = parse_points(xspec, st.dim());
            auto& os = out.stream();
            write_provenance(os, cmdline, {"stencil: " + st.name(), "tol: " + fmt(tol)});
            os << "x";
            for (int j2 = 1; j2 < st.dim(); ++j2) os << ",x" << j2 + 1;
            os << ",re,im\n";
            for (const auto& p : pts) {
                const auto v = ex.omega(p);
                for (int j2 = 0; j2 < st.dim(); ++j2) os << (j2 ? "," : "") << p[j2];
                os << "," << fmt(v.real()) << "," << fmt(v.imag()) << "\n";
            }
            return 0;
        }

        if (*verify_rem) {
            Stencil st = make_stencil(stencil_spec);
            Expansion ex(st, std::max(K + 2, st.approximation_order(12)), QuadSpec{32, 1e-11, 8});
            auto ladder = parse_ladder(ladder_spec);
            RemainderProbe probe = ex.remainder_probe(eps, J, K, kind, ladder, window);
            json j{{"J", probe.J},
                   {"K", probe.K},
                   {"kind", probe.kind},
                   {"t", probe.t_samples},
                   {"sup_errors", probe.sup_errors},
                   {"fitted_slope", probe.fitted_slope},
                   {"expected_exponent", probe.expected_exponent},
                   {"R_hat", probe.r_hat}};
            j["provenance"] = {{"version", kVersion}, {"command", cmdline}, {"stencil", st.name()},
                               {"eps", eps}, {"window", window}};
            const bool pass = probe.fitted_slope <= -probe.expected_exponent + 0.1;
            j["pass"] = pass;
            out.stream() << j.dump(2) << "\n";
            return pass ? 0 : 2;
        }

        if (*ellip) {
            Stencil st = make_stencil(stencil_spec);
            EllipticityReport rep = st.check_ellipticity(grid);
            json j{{"c_lower", rep.c_lower},
                   {"c_upper", rep.c_upper},
                   {"min_re_offorigin", rep.min_re_offorigin},
                   {"ball_radius", rep.ball_radius},
                   {"n_grid", rep.n_grid},
                   {"verified", rep.verified}};
            j["provenance"] = {{"version", kVersion}, {"command", cmdline}, {"stencil", st.name()}};
            out.stream() << j.dump(2) << "\n";
            return rep.verified ? 0 : 2;
        }

        if (*oned_cmd) {
            using namespace latkern::oned;
            if (emit == "constants") {
                OneDConstants T = constants(N, N + 4, 2);
                json jb, jc, jd, ja;
                for (const auto& a : T.a) ja.push_back(rational_str(a));
                for (const auto& [n2, v] : T.b) jb[std::to_string(n2)] = rational_str(v);
                for (const auto& [nm, v] : T.c)
                    jc[std::to_string(nm.first) + "," + std::to_string(nm.second)] = rational_str(v);
                for (const auto& [jn, v] : T.d)
                    jd[std::to_string(jn.first) + "," + std::to_string(jn.second)] = rational_str(v);
                json j{{"N", N}, {"a", ja}, {"b", jb}, {"c", jc}, {"d", jd}};
                j["provenance"] = {{"version", kVersion}, {"command", cmdline}};
                out.stream() << j.dump(2) << "\n";
                return 0;
            }
            if (emit == "polys") {
                OneDConstants T = constants(N, N + 3, 2);
                json layers = json::array();
                for (int J2 = 0; J2 <= 2; ++J2)
                    for (int n2 = N; n2 <= N + 3; ++n2) {
                        json terms = json::array();
                        for (const auto& [e, v] : poly_R(T, J2, n2).c)
                            terms.push_back(json{{"exp", e}, {"coeff", rational_str(v)}});
                        layers.push_back(json{{"J", J2}, {"n", n2}, {"R", terms}});
                    }
                json j{{"N", N}, {"polys", layers}};
                j["provenance"] = {{"version", kVersion}, {"command", cmdline}};
                out.stream() << j.dump(2) << "\n";
                return 0;
            }
            if (emit == "profiles") {
                Profiles P(N);
                auto& os = out.stream();
                write_provenance(os, cmdline, {"N: " + std::to_string(N)});
                os << "y,h,f0,g";
                for (int n2 = N; n2 <= N + 2; ++n2) os << ",f" << n2;
                os << "\n";
                for (int i = 0; i <= npts; ++i) {
                    const double y = ymax * i / npts;
                    os << fmt(y) << "," << fmt(P.h(y)) << "," << fmt(P.f0(y)) << "," << fmt(P.g(y));
                    for (int n2 = N; n2 <= N + 2; ++n2) os << "," << fmt(P.fn(n2, y));
                    os << "\n";
                }
                return 0;
            }
            if (emit == "omega") {
                auto& os = out.stream();
                write_provenance(os, cmdline, {"N: " + std::to_string(N)});
                os << "x,omega\n";
                auto pts = parse_points(xspec == "0" ? "0..20" : xspec, 1);
                for (const auto& p : pts) os << p[0] << "," << fmt(omega_1d(N, p[0])) << "\n";
                return 0;
            }
            std::cerr << "unknown --emit " << emit << "\n";
            return 1;
        }

        if (*oned_verify) {
            using namespace latkern::oned;
            auto& os = out.stream();
            bool all_ok = true;
            for (int J2 = 0; J2 <= 2; ++J2) {
                auto rep = cross_check(N, std::max(K1, N + 2), J2);
                os << (rep.ok ? "PASS" : "FAIL") << " cross-check J=" << J2
                   << (rep.ok ? "" : ": " + rep.detail) << "\n";
                all_ok &= rep.ok;
            }
            Profiles P(N);
            {
                // f0'' = h by central differences
                bool ok = true;
                for (double y : {0.5, 1.0, 2.0}) {
                    const double h2 = 1e-4;
                    const double fd = (P.f0(y + h2) - 2 * P.f0(y) + P.f0(y - h2)) / (h2 * h2);
                    if (std::abs(fd - P.h(y)) > 1e-6) ok = false;
                }
                os << (ok ? "PASS" : "FAIL") << " f0'' = h\n";
                all_ok &= ok;
            }
            {
                bool ok = true;
                for (int x = 0; x <= 20; ++x)
                    if (N == 1 && std::abs(omega_1d(1, x)) > 1e-8) ok = false;
                if (N == 1) {
                    os << (ok ? "PASS" : "FAIL") << " Omega = 0 (N=1)\n";
                    all_ok &= ok;
                }
            }
            {
                bool ok = true;
                for (int x : {0, 1, 3, 7})
                    if (std::abs(step_integral(N, x) - 0.5) > 1e-8) ok = false;
                os << (ok ? "PASS" : "FAIL") << " I(x) = 1/2\n";
                all_ok &= ok;
            }
            if (N == 1) {
                // the telescoping link to Omega is specific to the N = 1 symbol
                bool ok = true;
                for (int x : {0, 1, 3, 7})
                    if (std::abs((omega_1d(1, x) - omega_1d(1, x + 1)) - (step_integral(1, x) - 0.5)) > 1e-7)
                        ok = false;
                os << (ok ? "PASS" : "FAIL") << " step identity Omega(x)-Omega(x+1) = I(x)-1/2\n";
                all_ok &= ok;
            }
            return all_ok ? 0 : 2;
        }

        if (*walk_sim) {
            Stencil st = make_stencil(stencil_spec);
            CTRWSpec spec = generator_from_stencil(st, scale);
            Histogram hist = simulate(spec, t, paths, seed);
            auto& os = out.stream();
            write_provenance(os, cmdline,
                             {"stencil: " + st.name(), "scale: " + fmt(scale), "t: " + fmt(t),
                              "paths: " + std::to_string(paths), "seed: " + std::to_string(seed)});
            for (int j2 = 0; j2 < st.dim(); ++j2) os << (j2 ? "," : "") << "x" << j2 + 1;
            os << ",count\n";
            for (const auto& [x, c] : hist.counts) {
                for (int j2 = 0; j2 < st.dim(); ++j2) os << (j2 ? "," : "") << x[j2];
                os << "," << c << "\n";
            }
            return 0;
        }

        if (*walk_cmp) {
            Stencil st = make_stencil(stencil_spec);
            CTRWSpec spec = generator_from_stencil(st, scale);
            std::ifstream in(hist_path);
            if (!in) throw StructuralError("cannot read histogram " + hist_path);
            Histogram hist;
            hist.dim = st.dim();
            hist.t = t;
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty() || line[0] == '#') {
                    // recover t/seed from provenance if present
                    if (auto p = line.find("# t: "); p == 0) hist.t = std::stod(line.substr(5));
                    if (auto p = line.find("# seed: "); p == 0) hist.seed = std::stoull(line.substr(8));
                    continue;
                }
                if (line.rfind("x1", 0) == 0) continue;  // header
                std::stringstream ls(line);
                std::string tok;
                std::vector<long> vals;
                while (std::getline(ls, tok, ',')) vals.push_back(std::stol(tok));
                if (static_cast<int>(vals.size()) != st.dim() + 1)
                    throw StructuralError("histogram row arity mismatch");
                Offset x(vals.begin(), vals.end() - 1);
                hist.counts[x] = vals.back();
                hist.n_paths += vals.back();
            }
            CompareReport rep = compare(hist, spec, order, QuadSpec{32, tol, 9});
            json j{{"tv", rep.tv},
                   {"sampling_scale", rep.sampling_scale},
                   {"mass_outside_window", rep.mass_outside_window},
                   {"window", rep.window},
                   {"order", rep.order},
                   {"n_paths", hist.n_paths},
                   {"t", hist.t}};
            j["provenance"] = {{"version", kVersion}, {"command", cmdline}, {"stencil", st.name()},
                               {"scale", scale}};
            out.stream() << j.dump(2) << "\n";
            return 0;
        }
    } catch (const ToleranceError& e) {
        std::cerr << "tolerance not met: " << e.what() << " (previous " << e.previous << ", last " << e.last
                  << ")\n";
        return 3;
    } catch (const CLI::Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
