// mmg: command-line front end.
//
//   mmg solve     --config run.json [--out DIR]
//   mmg residual  --config run.json [--coefficients FILE]
//   mmg rom       --config run.json [--coefficients FILE]
//   mmg reproduce --table T3-res-n2 [--table ...|all] [--scale desk|full]
//   mmg validate  --config run.json
//
// Exit codes: 0 success, 1 non-convergence (or a failed reproduction
// cell), 2 configuration/input error, 3 any other failure.

#include <chrono>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "mmg/mmg.hpp"

namespace fs = std::filesystem;
using namespace mmg;

namespace {

enum Exit
{
    ok = 0,
    not_converged = 1,
    config_error = 2,
    failure = 3,
};

struct Globals
{
    std::string config;
    std::string out;
    int threads = 1;
    unsigned seed = 0;
    bool quiet = false;
};

Globals g;

std::ostream& info()
{
    static std::ostringstream sink;
    if (g.quiet) {
        sink.str("");
        return sink;
    }
    return std::cout;
}

RunConfig load()
{
    if (g.config.empty())
        throw ConfigError("--config", "required for this command");
    auto cfg = load_config(g.config);
    if (!g.out.empty())
        cfg.output_dir = g.out;
    return cfg;
}

fs::path out_dir(const RunConfig& cfg)
{
    fs::path dir = cfg.output_dir;
    fs::create_directories(dir);
    return dir;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream f(p);
    if (!f)
        throw Error("cannot write " + p.string());
    return f;
}

struct Prepared
{
    Problem pb;
    GalerkinOperators ops;
};

Prepared prepare(const RunConfig& cfg)
{
    auto pb = build_problem(cfg.problem);
    const auto basis = generate_basis(pb.generator.d, cfg.degree);
    auto ops = assemble_operators(pb, basis, cfg.domain, cfg.quadrature);
    return {std::move(pb), std::move(ops)};
}

CoefficientFile load_coefficients(const RunConfig& cfg, const std::string& path_opt)
{
    const fs::path path = path_opt.empty() ? fs::path(cfg.output_dir) / "coefficients.txt" : fs::path(path_opt);
    std::ifstream in(path);
    if (!in)
        throw ConfigError("--coefficients", "cannot open " + path.string());
    auto file = read_coefficients(in);
    const auto fp = problem_fingerprint(cfg.problem);
    if (file.fingerprint != fp)
        throw ConfigError("--coefficients", "file was computed for a different problem (fingerprint " +
                                                file.fingerprint + ", config gives " + fp + ")");
    return file;
}

int cmd_solve()
{
    const auto cfg = load();
    const auto t0 = std::chrono::steady_clock::now();
    auto [pb, ops] = prepare(cfg);
    const auto assumptions = check_assumptions(pb);
    if (!assumptions.a1_necessary)
        warn("assumption A1 fails at the linear level (spectrum of S is not simple and imaginary)");
    if (!assumptions.a2)
        warn("assumption A2 fails: the linearized full-order system is not Hurwitz");
    const auto sol = solve_invariance(pb, ops, cfg.solver);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const auto dir = out_dir(cfg);

    {
        auto log = open_out(dir / "convergence.csv");
        log << "iteration,F_l1\n";
        for (std::size_t k = 0; k < sol.residual_history.size(); ++k)
            log << k << ',' << format_double(sol.residual_history[k]) << '\n';
    }
    info() << "problem " << problem_label(cfg.problem) << ", n = " << pb.system.n << ", M = " << cfg.degree
           << ", N = " << ops.size() << ", Omega = " << cfg.domain.to_string() << '\n'
           << "backend " << to_string(sol.backend_used) << ", " << sol.iterations << " iterations, "
           << to_string(sol.termination) << ", ||F||_1 = " << sol.residual_history.back() << ", " << secs
           << " s\n";

    if (!sol.converged) {
        std::cerr << "mmg: Newton iteration did not converge (" << to_string(sol.termination) << "); history in "
                  << (dir / "convergence.csv").string() << '\n';
        return not_converged;
    }

    CoefficientFile file;
    file.problem = problem_label(cfg.problem);
    file.fingerprint = problem_fingerprint(cfg.problem);
    file.n = pb.system.n;
    file.d = pb.generator.d;
    file.M = cfg.degree;
    file.domain = cfg.domain;
    file.c = sol.c;
    {
        auto f = open_out(dir / "coefficients.txt");
        write_coefficients(f, file);
    }
    try {
        const auto rep = residual_norm(pb, ops.basis, sol.c, cfg.residual.W, cfg.residual.q, cfg.domain);
        info() << "weighted residual over " << cfg.residual.W.to_string() << ": " << format_double(rep.weighted_norm)
               << '\n';
    } catch (const DegenerateInput& e) {
        info() << "weighted residual undefined: " << e.what() << '\n';
    }
    info() << "wrote " << (dir / "coefficients.txt").string() << '\n';
    return ok;
}

int cmd_residual(const std::string& coeff_path)
{
    const auto cfg = load();
    const auto file = load_coefficients(cfg, coeff_path);
    const auto pb = build_problem(cfg.problem);
    if (file.n != pb.system.n || file.d != pb.generator.d)
        throw ConfigError("--coefficients", "dimensions differ from the configured problem");
    const auto basis = generate_basis(file.d, file.M);
    const auto rep = residual_norm(pb, basis, file.c, cfg.residual.W, cfg.residual.q, file.domain);
    const auto dir = out_dir(cfg);
    {
        auto f = open_out(dir / "residual.csv");
        f << residual_csv_header << '\n' << residual_csv_row(file.domain, file.M, file.n, rep.weighted_norm) << '\n';
    }
    {
        auto f = open_out(dir / "residual_components.csv");
        f << "component,norm\n";
        for (Eigen::Index i = 0; i < rep.per_component.size(); ++i)
            f << i + 1 << ',' << format_double(rep.per_component(i)) << '\n';
    }
    std::cout << residual_csv_header << '\n' << residual_csv_row(file.domain, file.M, file.n, rep.weighted_norm) << '\n';
    return ok;
}

int cmd_rom(const std::string& coeff_path)
{
    const auto cfg = load();
    const auto file = load_coefficients(cfg, coeff_path);
    const auto pb = build_problem(cfg.problem);
    if (file.n != pb.system.n || file.d != pb.generator.d)
        throw ConfigError("--coefficients", "dimensions differ from the configured problem");
    if (pb.system.p != 1)
        throw ConfigError("problem", "steady-state RMS needs a scalar output");

    const auto basis = generate_basis(file.d, file.M);
    const auto gain = resolve_gain(cfg, pb);
    gain.check_dims(pb.generator.d, pb.generator.m);
    const ReducedOrderModel rom(std::make_shared<const Problem>(pb), basis, Matrix(file.blocks()), gain,
                                file.domain);
    const auto stab = verify_rom_stability(rom);
    if (!stab.stable)
        throw UnstableGain("ROM linearization has an eigenvalue with real part " +
                               std::to_string(stab.max_real_part),
                           stab.max_real_part);

    const Vector w0 = Eigen::Map<const Vector>(cfg.rom.w0.data(), static_cast<Eigen::Index>(cfg.rom.w0.size()));
    const Vector r0 = Eigen::Map<const Vector>(cfg.rom.r0.data(), static_cast<Eigen::Index>(cfg.rom.r0.size()));
    Vector x0 = Vector::Zero(pb.system.n);
    if (!cfg.rom.x0.empty()) {
        if (cfg.rom.x0.size() != static_cast<std::size_t>(pb.system.n))
            throw ConfigError("rom.x0", "needs n entries");
        x0 = Eigen::Map<const Vector>(cfg.rom.x0.data(), pb.system.n);
    }

    const auto y = simulate_fom(pb, w0, x0, cfg.simulation);
    const auto yr = simulate_rom(rom, pb.generator, w0, r0, cfg.simulation);
    const auto rep = steady_state_rms(y, yr, cfg.simulation);

    const auto dir = out_dir(cfg);
    {
        auto f = open_out(dir / "fom.csv");
        write_trajectory_csv(f, y, "y");
    }
    {
        auto f = open_out(dir / "rom.csv");
        write_trajectory_csv(f, yr, "yr");
    }
    {
        auto f = open_out(dir / "error.csv");
        f << "t,abs_error\n";
        for (std::size_t k = 0; k < y.size(); ++k) {
            const double e = std::abs(y.outputs[k](0) - detail::interp_output(yr, y.times[k]));
            f << format_double(y.times[k]) << ',' << format_double(e) << '\n';
        }
    }
    {
        auto f = open_out(dir / "rms.csv");
        f << "rms_error,amplitude,relative_rms\n"
          << format_double(rep.rms_error) << ',' << format_double(rep.amplitude) << ','
          << format_double(rep.relative_rms) << '\n';
    }
    info() << "gain " << to_string(gain.kind) << ", ROM eigenvalues at 0:";
    for (Eigen::Index k = 0; k < stab.eigenvalues.size(); ++k)
        info() << ' ' << stab.eigenvalues(k);
    info() << '\n'
           << "steady-state window [" << rep.window_start << ", " << rep.window_end << "]\n";
    std::cout << "relative_rms " << format_double(rep.relative_rms) << '\n';
    return ok;
}

int cmd_reproduce(const std::vector<std::string>& ids_in, const std::string& scale_s)
{
    const auto scale = parse_scale(scale_s);
    std::vector<std::string> ids;
    for (const auto& id : ids_in) {
        if (id == "all") {
            for (const auto& t : reference_tables())
                if (!t.extended || scale == Scale::full)
                    ids.push_back(t.id);
        } else {
            const TableSpec* t = nullptr;
            try {
                t = &find_table(id);
            } catch (const InvalidArgument& e) {
                throw ConfigError("--table", e.what());
            }
            if (t->extended && scale == Scale::desk)
                throw ConfigError("--scale", "table " + id + " is extended-scale; use --scale full");
            ids.push_back(id);
        }
    }
    if (ids.empty())
        throw ConfigError("--table", "give at least one table id or 'all'");

    fs::path dir = g.out.empty() ? fs::path("out") : fs::path(g.out);
    fs::create_directories(dir);
    int failed = 0;
    for (const auto& id : ids) {
        const auto& table = find_table(id);
        auto f = open_out(dir / (id + ".csv"));
        f << reproduce_csv_header << '\n';
        info() << id << ": " << table.title << '\n';
        run_table(table, scale, [&](const CellResult& r) {
            f << reproduce_csv_row(table, r) << '\n';
            f.flush();
            if (r.status == "fail")
                ++failed;
            info() << "  Omega half-width " << r.spec.half_width << ", M = " << r.spec.M << ", n = " << r.spec.n
                   << ": " << (std::isfinite(r.value) ? format_double(r.value) : std::string("-")) << " (ref "
                   << r.spec.reference << ") " << r.status << (r.detail.empty() ? "" : " [" + r.detail + "]")
                   << '\n';
        });
    }
    info() << (failed ? std::to_string(failed) + " checked cell(s) failed" : std::string("all checked cells pass"))
           << '\n';
    return failed ? not_converged : ok;
}

int cmd_validate()
{
    const auto cfg = load();
    const auto pb = build_problem(cfg.problem);
    const auto rep = check_assumptions(pb);
    auto eig = [](const ComplexVector& v) {
        std::ostringstream os;
        os.precision(10);
        for (Eigen::Index k = 0; k < v.size(); ++k)
            os << (k ? ", " : "") << v(k).real() << (v(k).imag() < 0 ? "-" : "+") << std::abs(v(k).imag()) << 'i';
        return os.str();
    };
    std::cout << "eig(S): " << eig(rep.eig_S) << '\n';
    if (rep.eig_A.size() <= 20)
        std::cout << "eig(A): " << eig(rep.eig_A) << '\n';
    else
        std::cout << "eig(A): " << rep.eig_A.size() << " values, max real part " << rep.eig_A.real().maxCoeff()
                  << '\n';
    std::cout << "A1 (necessary): " << (rep.a1_necessary ? "pass" : "fail") << '\n'
              << "A2: " << (rep.a2 ? "pass" : "fail") << '\n';
    if (!rep.details.empty())
        std::cout << rep.details << '\n';
    return ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Galerkin approximation of the moment-matching invariance equation"};
    app.require_subcommand(1);
    app.add_option("--config", g.config, "run configuration (JSON)");
    app.add_option("--out", g.out, "output directory (overrides output_dir)");
    app.add_option("--threads", g.threads, "worker threads for Eigen kernels")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "seed for randomized steps (none at present)");
    app.add_flag("--quiet", g.quiet, "suppress progress output");
    app.fallthrough();

    std::string coeff_path;
    std::vector<std::string> tables;
    std::string scale = "desk";

    auto* solve = app.add_subcommand("solve", "assemble and solve, write coefficients");
    auto* residual = app.add_subcommand("residual", "residual norms of a coefficient file");
    residual->add_option("--coefficients", coeff_path, "coefficient file (default OUT/coefficients.txt)");
    auto* rom = app.add_subcommand("rom", "simulate FOM and ROM, report steady-state RMS");
    rom->add_option("--coefficients", coeff_path, "coefficient file (default OUT/coefficients.txt)");
    auto* reproduce = app.add_subcommand("reproduce", "rerun reference tables");
    reproduce->add_option("--table", tables, "table id, repeatable, or 'all'")->required();
    reproduce->add_option("--scale", scale, "desk or full")->check(CLI::IsMember({"desk", "full"}));
    auto* validate = app.add_subcommand("validate", "check assumptions A1/A2 at the linear level");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }
    Eigen::setNbThreads(g.threads);
    set_warning_handler([](std::string_view msg) {
        if (!g.quiet)
            std::cerr << "warning: " << msg << '\n';
    });

    try {
        if (*solve)
            return cmd_solve();
        if (*residual)
            return cmd_residual(coeff_path);
        if (*rom)
            return cmd_rom(coeff_path);
        if (*reproduce)
            return cmd_reproduce(tables, scale);
        if (*validate)
            return cmd_validate();
    } catch (const ConfigError& e) {
        std::cerr << "mmg: config error: " << e.what() << '\n';
        return config_error;
    } catch (const FormatError& e) {
        std::cerr << "mmg: bad coefficient file: " << e.what() << '\n';
        return config_error;
    } catch (const NotConverged& e) {
        std::cerr << "mmg: " << e.what() << '\n';
        return not_converged;
    } catch (const std::exception& e) {
        std::cerr << "mmg: " << e.what() << '\n';
        return failure;
    }
    return failure;
}
