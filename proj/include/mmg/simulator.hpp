#pragma once

///
/// \file simulator.hpp
///
/// Time integration of the generator/FOM and generator/ROM interconnections
/// and the steady-state RMS comparison of their outputs.
///

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "mmg/errors.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/problem.hpp"
#include "mmg/rom.hpp"

namespace mmg {

enum class IntegrationMethod
{
    adaptive_rk45,
    fixed_rk4,
};

inline std::string to_string(IntegrationMethod m)
{
    return m == IntegrationMethod::adaptive_rk45 ? "adaptive_rk45" : "fixed_rk4";
}

inline IntegrationMethod parse_method(const std::string& s)
{
    if (s == "adaptive_rk45")
        return IntegrationMethod::adaptive_rk45;
    if (s == "fixed_rk4")
        return IntegrationMethod::fixed_rk4;
    throw InvalidArgument("unknown integration method '" + s + "'");
}

struct SimConfig
{
    double t0 = 0.0;
    double t_end = 50.0;
    IntegrationMethod method = IntegrationMethod::adaptive_rk45;
    double abs_tol = 1e-9;
    double rel_tol = 1e-9;
    double fixed_step = 1e-3;
    double steady_window_fraction = 0.4;
    /// 0 records adaptive runs at the solver's own step times; a positive
    /// value samples the dense output on a uniform grid instead.
    double output_dt = 0.0;
    double min_step = 1e-12;

    void validate() const
    {
        if (!(std::isfinite(t0) && std::isfinite(t_end) && t_end > t0))
            throw InvalidArgument("SimConfig: need finite t0 < t_end");
        if (!(abs_tol > 0.0 && rel_tol > 0.0))
            throw InvalidArgument("SimConfig: tolerances must be positive");
        if (!(fixed_step > 0.0))
            throw InvalidArgument("SimConfig: fixed_step must be positive");
        if (!(steady_window_fraction > 0.0 && steady_window_fraction < 1.0))
            throw InvalidArgument("SimConfig: steady_window_fraction must lie in (0, 1)");
        if (!(output_dt >= 0.0))
            throw InvalidArgument("SimConfig: output_dt must be non-negative");
        if (!(min_step > 0.0))
            throw InvalidArgument("SimConfig: min_step must be positive");
    }
};

struct Trajectory
{
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> outputs;

    std::size_t size() const noexcept { return times.size(); }
};

using OdeState = std::vector<double>;
using OdeRhs = std::function<void(const OdeState&, OdeState&, double)>;

namespace detail {

inline void check_state(const OdeState& x, double t)
{
    for (double v : x)
        if (!std::isfinite(v))
            throw NonFiniteValue("simulation state became non-finite at t = " + std::to_string(t),
                                 x);
}

} // namespace detail

///
/// Integrates x' = rhs(x, t) over [t0, t_end] and calls record(t, x) at the
/// sample times, always including t0 and t_end.
///
inline void integrate_ode(const OdeRhs& rhs, OdeState x, const SimConfig& cfg,
                          const std::function<void(double, const OdeState&)>& record)
{
    namespace odeint = boost::numeric::odeint;
    cfg.validate();
    record(cfg.t0, x);

    if (cfg.method == IntegrationMethod::fixed_rk4) {
        odeint::runge_kutta4<OdeState> rk4;
        const auto steps = static_cast<long>(std::ceil((cfg.t_end - cfg.t0) / cfg.fixed_step - 1e-9));
        const double h = (cfg.t_end - cfg.t0) / static_cast<double>(steps);
        for (long k = 0; k < steps; ++k) {
            const double t = cfg.t0 + static_cast<double>(k) * h;
            rk4.do_step(rhs, x, t, h);
            const double tn = k + 1 == steps ? cfg.t_end : cfg.t0 + static_cast<double>(k + 1) * h;
            detail::check_state(x, tn);
            record(tn, x);
        }
        return;
    }

    auto stepper = odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol,
                                             odeint::runge_kutta_dopri5<OdeState>());
    const double span = cfg.t_end - cfg.t0;
    stepper.initialize(x, cfg.t0, std::min(1e-3, span));
    OdeState buf(x.size());
    long next = 1;
    const long samples =
        cfg.output_dt > 0.0 ? static_cast<long>(std::floor(span / cfg.output_dt + 1e-9)) : 0;

    while (stepper.current_time() < cfg.t_end) {
        try {
            stepper.do_step(rhs);
        } catch (const odeint::odeint_error& e) {
            throw StepSizeUnderflow("adaptive integrator failed near t = " +
                                    std::to_string(stepper.current_time()) + ": " + e.what());
        }
        const double tc = stepper.current_time();
        detail::check_state(stepper.current_state(), tc);
        if (stepper.current_time_step() < cfg.min_step && tc < cfg.t_end)
            throw StepSizeUnderflow("step size fell below " + std::to_string(cfg.min_step) +
                                    " at t = " + std::to_string(tc));
        if (cfg.output_dt > 0.0) {
            for (; next <= samples; ++next) {
                const double ts = cfg.t0 + static_cast<double>(next) * cfg.output_dt;
                if (ts > tc || ts >= cfg.t_end)
                    break;
                stepper.calc_state(ts, buf);
                record(ts, buf);
            }
            if (tc >= cfg.t_end) {
                stepper.calc_state(cfg.t_end, buf);
                record(cfg.t_end, buf);
            }
        } else if (tc >= cfg.t_end) {
            stepper.calc_state(cfg.t_end, buf);
            record(cfg.t_end, buf);
        } else {
            record(tc, stepper.current_state());
        }
    }
}

///
/// Generator driving the full-order system: w' = s(w), x' = f(x, l(w)),
/// y = h(x).
///
inline Trajectory simulate_fom(const Problem& pb, const Vector& w0, const Vector& x0,
                               const SimConfig& cfg = {})
{
    const int d = pb.generator.d;
    const int n = pb.system.n;
    if (w0.size() != d || x0.size() != n)
        throw InvalidArgument("simulate_fom: initial state dimensions do not match the problem");

    OdeRhs rhs = [&](const OdeState& z, OdeState& dz, double) {
        const Eigen::Map<const Vector> w(z.data(), d);
        const Eigen::Map<const Vector> x(z.data() + d, n);
        const Vector ws = w;
        Eigen::Map<Vector>(dz.data(), d) = pb.generator.s(ws);
        Eigen::Map<Vector>(dz.data() + d, n) = pb.system.f(x, pb.generator.ell(ws));
    };

    OdeState z(static_cast<std::size_t>(d + n));
    Eigen::Map<Vector>(z.data(), d) = w0;
    Eigen::Map<Vector>(z.data() + d, n) = x0;

    Trajectory tr;
    integrate_ode(rhs, std::move(z), cfg, [&](double t, const OdeState& s) {
        const Vector x = Eigen::Map<const Vector>(s.data() + d, n);
        tr.times.push_back(t);
        tr.outputs.push_back(pb.system.h(x));
        tr.states.push_back(Eigen::Map<const Vector>(s.data(), d + n));
    });
    return tr;
}

///
/// Generator driving the ROM: w' = s(w), r' = ROM dynamics with u = l(w),
/// y_r = h(pi^N(r)). Warns once if r leaves the fit domain.
///
inline Trajectory simulate_rom(const ReducedOrderModel& rom, const SignalGenerator& gen,
                               const Vector& w0, const Vector& r0, const SimConfig& cfg = {})
{
    const int d = gen.d;
    if (rom.dim() != d || rom.inputs() != gen.m)
        throw InvalidArgument("simulate_rom: ROM and generator dimensions differ");
    if (w0.size() != d || r0.size() != d)
        throw InvalidArgument("simulate_rom: initial state dimensions do not match");

    OdeRhs rhs = [&](const OdeState& z, OdeState& dz, double) {
        const Vector w = Eigen::Map<const Vector>(z.data(), d);
        const Vector r = Eigen::Map<const Vector>(z.data() + d, d);
        Eigen::Map<Vector>(dz.data(), d) = gen.s(w);
        Eigen::Map<Vector>(dz.data() + d, d) = rom.dynamics(r, gen.ell(w));
    };

    OdeState z(static_cast<std::size_t>(2 * d));
    Eigen::Map<Vector>(z.data(), d) = w0;
    Eigen::Map<Vector>(z.data() + d, d) = r0;

    Trajectory tr;
    bool warned = false;
    integrate_ode(rhs, std::move(z), cfg, [&](double t, const OdeState& s) {
        const Vector r = Eigen::Map<const Vector>(s.data() + d, d);
        if (!warned && !rom.domain().contains({r.data(), static_cast<std::size_t>(r.size())})) {
            warned = true;
            warn("simulate_rom: r(t) left the fit domain " + rom.domain().to_string() +
                 " at t = " + std::to_string(t));
        }
        tr.times.push_back(t);
        tr.outputs.push_back(rom.output(r));
        tr.states.push_back(Eigen::Map<const Vector>(s.data(), 2 * d));
    });
    return tr;
}

struct RmsReport
{
    double rms_error = 0.0;
    double amplitude = 0.0;
    double relative_rms = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
};

namespace detail {

// Piecewise-linear interpolation of output component 0; times increasing.
inline double interp_output(const Trajectory& tr, double t)
{
    const auto& ts = tr.times;
    if (t <= ts.front())
        return tr.outputs.front()(0);
    if (t >= ts.back())
        return tr.outputs.back()(0);
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const auto k = static_cast<std::size_t>(it - ts.begin());
    const double t0 = ts[k - 1], t1 = ts[k];
    const double y0 = tr.outputs[k - 1](0), y1 = tr.outputs[k](0);
    return y0 + (y1 - y0) * (t - t0) / (t1 - t0);
}

inline void check_trajectory(const Trajectory& tr, const char* which)
{
    if (tr.times.size() < 2 || tr.outputs.size() != tr.times.size())
        throw InvalidArgument(std::string("steady_state_rms: ") + which + " trajectory is malformed");
    if (tr.outputs.front().size() != 1)
        throw InvalidArgument(std::string("steady_state_rms: ") + which + " output is not scalar");
}

} // namespace detail

///
/// RMS of y - y_r on 2000 uniform points over the final window of
/// [t0, t_end], divided by half the peak-to-peak of y on that window.
///
inline RmsReport steady_state_rms(const Trajectory& y, const Trajectory& yr, const SimConfig& cfg = {},
                                  int points = 2000)
{
    cfg.validate();
    detail::check_trajectory(y, "FOM");
    detail::check_trajectory(yr, "ROM");
    if (points < 2)
        throw InvalidArgument("steady_state_rms: need at least 2 resampling points");
    const double t_end = cfg.t_end;
    const double t_start = t_end - cfg.steady_window_fraction * (t_end - cfg.t0);
    for (const auto* tr : {&y, &yr})
        if (tr->times.front() > t_start + 1e-12 || tr->times.back() < t_end - 1e-12)
            throw InvalidArgument("steady_state_rms: trajectory does not cover the window");

    RmsReport rep;
    rep.window_start = t_start;
    rep.window_end = t_end;
    double sq = 0.0;
    double lo = INFINITY, hi = -INFINITY;
    for (int k = 0; k < points; ++k) {
        const double t = t_start + (t_end - t_start) * k / (points - 1);
        const double a = detail::interp_output(y, t);
        const double b = detail::interp_output(yr, t);
        sq += (a - b) * (a - b);
        lo = std::min(lo, a);
        hi = std::max(hi, a);
    }
    rep.rms_error = std::sqrt(sq / points);
    rep.amplitude = 0.5 * (hi - lo);
    if (!(rep.amplitude >= 1e-12))
        throw DegenerateInput("steady_state_rms: FOM output is flat over the window (amplitude " +
                              std::to_string(rep.amplitude) + ")");
    rep.relative_rms = rep.rms_error / rep.amplitude;
    return rep;
}

///
/// CSV with header t,<prefix>_1..<prefix>_p and 17 significant digits.
///
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const std::string& prefix = "y")
{
    const auto p = tr.outputs.empty() ? 0 : tr.outputs.front().size();
    os << 't';
    for (Eigen::Index j = 0; j < p; ++j)
        os << ',' << prefix << '_' << j + 1;
    os << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t k = 0; k < tr.size(); ++k) {
        put(tr.times[k]);
        for (Eigen::Index j = 0; j < p; ++j) {
            os << ',';
            put(tr.outputs[k](j));
        }
        os << '\n';
    }
}

} // namespace mmg
