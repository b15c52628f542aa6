#pragma once

#include "lsbwave/assembly.hpp"
#include "lsbwave/config.hpp"
#include "lsbwave/general_transform.hpp"
#include "lsbwave/invariants.hpp"
#include "lsbwave/oracle.hpp"
#include "lsbwave/parallel.hpp"
#include "lsbwave/solver.hpp"

#include "CLI11.hpp"
#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace lsbwave::cli {

struct Options {
    std::string config;
    std::optional<double> energy;
    std::string energies;
    int ref_domain = 1;
    double tol = 1e-10;
    std::string bc = "dirichlet";
    std::string out;
    std::string field;
    std::string cells = "16,4096";
    int samples = 401;
    int pairs = 100;
    int repeat = 5;
    double sym_tol = 1e-9;
    bool no_validate = false;
};

inline std::string num(double v) { return fmt::format("{:.12g}", v); }

/// Energy list from --energy or --energies E0:E1:N.
inline std::vector<double> energy_grid(const Options& o) {
    if (o.energy && !o.energies.empty())
        throw InputError("cli", 0, "energy", "use either --energy or --energies, not both");
    if (o.energy) {
        if (!std::isfinite(*o.energy)) throw InputError("cli", 0, "energy", "energy must be finite");
        return {*o.energy};
    }
    if (o.energies.empty()) throw InputError("cli", 0, "energy", "--energy or --energies is required");
    std::vector<std::string> parts;
    std::stringstream ss(o.energies);
    for (std::string s; std::getline(ss, s, ':');) parts.push_back(s);
    if (parts.size() != 3) throw InputError("cli", 0, "energies", "--energies expects E0:E1:N");
    double e0 = 0.0, e1 = 0.0;
    long n = 0;
    try {
        std::size_t used = 0;
        e0 = std::stod(parts[0], &used);
        if (used != parts[0].size()) throw std::invalid_argument("E0");
        e1 = std::stod(parts[1], &used);
        if (used != parts[1].size()) throw std::invalid_argument("E1");
        n = std::stol(parts[2], &used);
        if (used != parts[2].size()) throw std::invalid_argument("N");
    } catch (const std::exception&) {
        throw InputError("cli", 0, "energies", "--energies expects E0:E1:N with numeric fields");
    }
    if (!std::isfinite(e0) || !std::isfinite(e1) || n < 1)
        throw InputError("cli", 0, "energies", "energies must be finite and N >= 1");
    std::vector<double> out;
    for (long i = 0; i < n; ++i) out.push_back(n == 1 ? e0 : e0 + (e1 - e0) * static_cast<double>(i) / (n - 1));
    return out;
}

inline BuildOptions build_options(const Options& o) {
    BuildOptions b;
    b.lsb.tol = o.tol;
    return b;
}

inline void check_common(const Options& o) {
    if (!(o.tol > 0.0) || !std::isfinite(o.tol)) throw InputError("cli", 0, "tol", "--tol must be > 0");
    if (o.samples < 2) throw InputError("cli", 0, "samples", "--samples must be >= 2");
    if (o.pairs < 2) throw InputError("cli", 0, "pairs", "--pairs must be >= 2");
}

inline ParsedConfig require_config(const Options& o, bool enforce_symmetry = true) {
    if (o.config.empty()) throw InputError("cli", 0, "config", "--config is required");
    return load_config(o.config, enforce_symmetry);
}

inline void cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
    const auto cfg = require_config(o, false);
    const auto& p = cfg.potential;
    out << "domain,kind,cells,max_abs_deviation,pass\n";
    bool ok = true;
    for (const auto& d : p.domains()) {
        const auto r = validate_symmetry(p, d, std::max(o.samples, 2), o.sym_tol);
        out << fmt::format("{},{},{},{},{}\n", d.index, to_string(d.kind()), d.cell_count, num(r.max_abs_deviation),
                           r.pass ? "true" : "false");
        if (!r.pass) {
            ok = false;
            err << fmt::format("[potential] domain {} (symmetry): declared {} symmetry violated, max deviation {}\n",
                               d.index, to_string(d.kind()), num(r.max_abs_deviation));
        }
    }
    if (!ok) throw InputError("potential", 0, "symmetry", "symmetry validation failed");
}

inline void cmd_invariants(const Options& o, std::ostream& out) {
    const auto cfg = require_config(o);
    const auto& p = cfg.potential;
    const auto es = energy_grid(o);
    if (es.size() != 1) throw InputError("cli", 0, "energy", "invariants takes a single --energy");
    out << "domain,m,n,re_q,im_q,spread\n";
    for (const auto& d : p.domains()) {
        if (!d.symmetric()) continue;
        const auto rep = check_invariance(p, d, es[0], o.pairs, o.tol);
        for (int m = 0; m < 2; ++m)
            for (int n = 0; n < 2; ++n)
                out << fmt::format("{},{},{},{},{},{}\n", d.index, m + 1, n + 1, num(rep.mean(m, n).real()),
                                   num(rep.mean(m, n).imag()), num(rep.spread(m, n)));
    }
}

inline void cmd_basis(const Options& o, std::ostream& out) {
    const auto cfg = require_config(o);
    const auto& p = cfg.potential;
    const auto es = energy_grid(o);
    if (es.size() != 1) throw InputError("cli", 0, "energy", "basis takes a single --energy");
    const auto g = build_global_basis(p, es[0], o.ref_domain, build_options(o));
    const Interval r = p.region();
    out << "x,re_xi1,im_xi1,re_xi2,im_xi2\n";
    for (int i = 0; i < o.samples; ++i) {
        const double x = r.lo + r.length() * i / (o.samples - 1);
        const auto xi = eval_global(g, x);
        out << fmt::format("{},{},{},{},{}\n", num(x), num(xi[0].value.real()), num(xi[0].value.imag()),
                           num(xi[1].value.real()), num(xi[1].value.imag()));
    }
}

inline void write_field(const GlobalBasis& g, const Vec2& c, int samples, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw InputError("cli", 0, "field", "cannot write field file '" + path + "'");
    const Interval r = g.potential().region();
    f << "x,re_psi,im_psi,abs2_psi\n";
    for (int i = 0; i < samples; ++i) {
        const double x = r.lo + r.length() * i / (samples - 1);
        const cplx psi = evaluate_psi(g, c, x).value;
        f << fmt::format("{},{},{},{}\n", num(x), num(psi.real()), num(psi.imag()), num(std::norm(psi)));
    }
}

inline void cmd_scatter(const Options& o, std::ostream& out, bool design) {
    const auto cfg = require_config(o);
    const auto& p = cfg.potential;
    const auto es = energy_grid(o);
    const auto opt = build_options(o);
    const auto results = parallel_map<ScatteringResult>(es.size(), [&](std::size_t i) {
        const auto g = build_global_basis(p, es[i], o.ref_domain, opt);
        return design ? design_amplitudes(g) : solve_scattering(g);
    });
    if (design) {
        out << "energy,re_a_plus_left,im_a_plus_left,re_a_minus_right,im_a_minus_right,"
               "re_a_minus_left,im_a_minus_left,re_a_plus_right,im_a_plus_right\n";
        for (const auto& r : results) {
            const auto& a = r.amplitudes;
            out << fmt::format("{},{},{},{},{},{},{},{},{}\n", num(r.energy), num(a.plus_left.real()),
                               num(a.plus_left.imag()), num(a.minus_right.real()), num(a.minus_right.imag()),
                               num(a.minus_left.real()), num(a.minus_left.imag()), num(a.plus_right.real()),
                               num(a.plus_right.imag()));
        }
    } else {
        out << "energy,T,R,re_t,im_t,re_r,im_r\n";
        for (const auto& r : results)
            out << fmt::format("{},{},{},{},{},{},{}\n", num(r.energy), num(r.T), num(r.R), num(r.t.real()),
                               num(r.t.imag()), num(r.r.real()), num(r.r.imag()));
    }
    if (!o.field.empty()) {
        const auto g = build_global_basis(p, es.front(), o.ref_domain, opt);
        write_field(g, results.front().c, o.samples, o.field);
    }
}

inline void cmd_oracle(const Options& o, std::ostream& out) {
    const auto cfg = require_config(o);
    const auto& p = cfg.potential;
    const auto es = energy_grid(o);
    const auto results =
        parallel_map<oracle::OracleResult>(es.size(), [&](std::size_t i) { return oracle::direct_scatter(p, es[i], o.tol); });
    out << "energy,T,R,re_t,im_t,re_r,im_r\n";
    for (const auto& r : results)
        out << fmt::format("{},{},{},{},{},{},{}\n", num(r.energy), num(r.T), num(r.R), num(r.t.real()),
                           num(r.t.imag()), num(r.r.real()), num(r.r.imag()));
}

inline BoundaryCondition parse_bc(const std::string& s) {
    if (s == "dirichlet") return BoundaryCondition::DirichletBox;
    if (s == "decaying") return BoundaryCondition::DecayingLeads;
    throw InputError("cli", 0, "bc", "--bc must be dirichlet or decaying");
}

inline void cmd_bound(const Options& o, std::ostream& out) {
    const auto cfg = require_config(o);
    if (o.energies.empty() || o.energy)
        throw InputError("cli", 0, "energies", "bound needs --energies E0:E1:N (scan range and points)");
    const auto grid = energy_grid(o);
    if (grid.size() < 2) throw InputError("cli", 0, "energies", "bound needs N >= 2 scan points");
    BoundOptions bo;
    bo.reference_domain = o.ref_domain;
    bo.build = build_options(o);
    const auto states = solve_bound_states(cfg.potential, {grid.front(), grid.back()}, parse_bc(o.bc),
                                           static_cast<int>(grid.size()), bo);
    out << "index,energy,nodes,norm\n";
    int i = 0;
    for (const auto& s : states) out << fmt::format("{},{},{},{}\n", ++i, num(s.energy), s.nodes, num(s.norm));
}

inline void cmd_general(const Options& o, std::ostream& out) {
    const auto cfg = require_config(o);
    if (!cfg.transform) throw InputError("cli", 0, "general_transform", "config needs a 'general_transform' block");
    const auto es = energy_grid(o);
    if (es.size() != 1) throw InputError("cli", 0, "energy", "general-check takes a single --energy");
    const auto t = cfg.transform->build();
    const auto rep =
        check_general_invariance(cfg.potential, cfg.transform->domain, t, es[0], o.pairs, o.tol, !o.no_validate);
    out << "quantity,re,im\n";
    out << fmt::format("isometry,{},0\n", rep.isometry ? 1 : 0);
    out << fmt::format("spread,{},0\n", num(rep.max_deviation));
    out << fmt::format("mapping_residual,{},0\n", num(rep.mapping_residual));
    out << fmt::format("symmetry_deviation,{},0\n", num(rep.symmetry_deviation));
    for (int m = 0; m < 2; ++m)
        for (int n = 0; n < 2; ++n)
            out << fmt::format("QF{}{},{},{}\n", m + 1, n + 1, num(rep.Q_F(m, n).real()), num(rep.Q_F(m, n).imag()));
}

/// Cosine lattice with `cells` unit periods, used by the bench command.
inline PotentialSpec bench_lattice(int cells) {
    return PotentialSpec({DomainSpec::translation({0.0, static_cast<double>(cells)}, cells,
                                                  CellProfile::cosine(0.5, 1.0))},
                         0.0, 0.0);
}

inline void cmd_bench(const Options& o, std::ostream& out) {
    std::vector<int> cells;
    std::stringstream ss(o.cells);
    for (std::string s; std::getline(ss, s, ',');) {
        try {
            cells.push_back(std::stoi(s));
        } catch (const std::exception&) {
            throw InputError("cli", 0, "cells", "--cells expects a comma-separated list of integers");
        }
        if (cells.back() < 2) throw InputError("cli", 0, "cells", "cell counts must be >= 2");
    }
    if (o.repeat < 1) throw InputError("cli", 0, "repeat", "--repeat must be >= 1");
    const double e = o.energy.value_or(3.0);
    out << "cells,lsb_seconds,direct_seconds,lsb_steps,direct_steps,T_lsb,T_direct\n";
    using clock = std::chrono::steady_clock;
    for (int n : cells) {
        const auto p = bench_lattice(n);
        double best_lsb = 1e300, best_direct = 1e300;
        ScatteringResult s;
        oracle::OracleResult d;
        std::size_t lsb_steps = 0;
        for (int r = 0; r < o.repeat; ++r) {
            const auto t0 = clock::now();
            const auto g = build_global_basis(p, e, 1, build_options(o));
            s = solve_scattering(g);
            const auto t1 = clock::now();
            lsb_steps = g.ode_steps();
            best_lsb = std::min(best_lsb, std::chrono::duration<double>(t1 - t0).count());
        }
        for (int r = 0; r < std::min(o.repeat, 2); ++r) {
            const auto t0 = clock::now();
            d = oracle::direct_scatter(p, e, o.tol);
            const auto t1 = clock::now();
            best_direct = std::min(best_direct, std::chrono::duration<double>(t1 - t0).count());
        }
        out << fmt::format("{},{},{},{},{},{},{}\n", n, num(best_lsb), num(best_direct), lsb_steps, d.steps, num(s.T),
                           num(d.T));
    }
}

/// Entry point shared by the executable and the tests. Returns the exit
/// code: 0 success, 1 input error, 2 numerical failure.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Wave mechanics in locally symmetric potentials", "lsbwave"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sc, bool needs_energy) {
        sc->add_option("--config", o.config, "potential JSON file");
        if (needs_energy) {
            sc->add_option("--energy", o.energy, "single energy");
            sc->add_option("--energies", o.energies, "energy grid E0:E1:N");
        }
        sc->add_option("--ref-domain", o.ref_domain, "reference domain (1-based)");
        sc->add_option("--tol", o.tol, "integrator tolerance");
        sc->add_option("--out", o.out, "write CSV output to this path");
    };

    auto* validate = app.add_subcommand("validate", "check declared symmetries");
    add_common(validate, false);
    validate->add_option("--samples", o.samples, "sample points per domain");
    validate->add_option("--sym-tol", o.sym_tol, "allowed deviation");
    auto* invariants = app.add_subcommand("invariants", "two-point currents per symmetric domain");
    add_common(invariants, true);
    invariants->add_option("--pairs", o.pairs, "symmetry-related pairs sampled");
    auto* basis = app.add_subcommand("basis", "dump the global basis");
    add_common(basis, true);
    basis->add_option("--samples", o.samples, "output points");
    auto* scatter = app.add_subcommand("scatter", "scattering through the global basis");
    add_common(scatter, true);
    scatter->add_option("--field", o.field, "write psi samples of the first energy to this path");
    scatter->add_option("--samples", o.samples, "field points");
    auto* design = app.add_subcommand("design", "lead amplitudes producing c = (1, 1)");
    add_common(design, true);
    auto* bound = app.add_subcommand("bound", "bound-state search");
    add_common(bound, true);
    bound->add_option("--bc", o.bc, "dirichlet | decaying");
    auto* general = app.add_subcommand("general-check", "invariants for a general transform");
    add_common(general, true);
    general->add_option("--pairs", o.pairs, "pairs sampled");
    general->add_flag("--no-validate", o.no_validate, "skip the V(F(x)) = V(x) check");
    auto* orc = app.add_subcommand("oracle", "direct single-pass scattering");
    add_common(orc, true);
    auto* bench = app.add_subcommand("bench", "timing of scatter vs direct integration");
    add_common(bench, true);
    bench->add_option("--cells", o.cells, "comma-separated cell counts");
    bench->add_option("--repeat", o.repeat, "timing repetitions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    std::ostringstream buffer;
    try {
        check_common(o);
        auto* sc = app.get_subcommands().front();
        const std::string name = sc->get_name();
        if (name == "validate") cmd_validate(o, buffer, err);
        else if (name == "invariants") cmd_invariants(o, buffer);
        else if (name == "basis") cmd_basis(o, buffer);
        else if (name == "scatter") cmd_scatter(o, buffer, false);
        else if (name == "design") cmd_scatter(o, buffer, true);
        else if (name == "bound") cmd_bound(o, buffer);
        else if (name == "general-check") cmd_general(o, buffer);
        else if (name == "oracle") cmd_oracle(o, buffer);
        else cmd_bench(o, buffer);
    } catch (const InputError& e) {
        (o.out.empty() ? out : err) << buffer.str();
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: [cli]: " << e.what() << "\n";
        return 2;
    }

    if (o.out.empty()) {
        out << buffer.str();
    } else {
        std::ofstream f(o.out);
        if (!f) {
            err << "error: [cli] (out): cannot write '" << o.out << "'\n";
            return 1;
        }
        f << buffer.str();
    }
    return 0;
}

}  // namespace lsbwave::cli
