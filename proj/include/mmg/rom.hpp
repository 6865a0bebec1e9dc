#pragma once

///
/// \file rom.hpp
///
/// Moment-matching reduced-order models
/// \f$\dot r = s(r) - g(r)\ell(r) + g(r)u,\; y_r = h(\pi^N(r))\f$
/// and the gain selection that makes them locally exponentially stable.
///

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "mmg/errors.hpp"
#include "mmg/galerkin.hpp"
#include "mmg/newton.hpp"
#include "mmg/polybasis.hpp"
#include "mmg/problem.hpp"
#include "mmg/quadrature.hpp"

namespace mmg {

enum class GainKind
{
    constant_matrix,
    test3,
    test4,
};

inline std::string to_string(GainKind k)
{
    switch (k) {
    case GainKind::constant_matrix: return "constant_matrix";
    case GainKind::test3: return "test3";
    case GainKind::test4: return "test4";
    }
    return "?";
}

///
/// The input map g(r) of \f$\bar g(r,u) = g(r)u\f$.
///
/// test3: \f$(0, c)^\top\f$. test4: \f$(0, \mu(1-r_1^2)+c)^\top\f$.
/// Both require d = 2, m = 1.
///
struct GainSpec
{
    GainKind kind = GainKind::test3;
    Matrix G;
    double c = 10.0;
    double mu = 0.25;

    static GainSpec constant(Matrix G)
    {
        GainSpec g;
        g.kind = GainKind::constant_matrix;
        g.G = std::move(G);
        return g;
    }
    static GainSpec test3(double c = 10.0)
    {
        GainSpec g;
        g.kind = GainKind::test3;
        g.c = c;
        return g;
    }
    static GainSpec test4(double mu = 0.25, double c = 10.0)
    {
        GainSpec g;
        g.kind = GainKind::test4;
        g.mu = mu;
        g.c = c;
        return g;
    }

    void check_dims(int d, int m) const
    {
        if (kind == GainKind::constant_matrix) {
            if (G.rows() != d || G.cols() != m)
                throw InvalidArgument("GainSpec: G must be " + std::to_string(d) + "x" +
                                      std::to_string(m));
            if (!G.allFinite())
                throw InvalidArgument("GainSpec: G has non-finite entries");
        } else {
            if (d != 2 || m != 1)
                throw InvalidArgument("GainSpec: " + to_string(kind) + " gain needs d = 2, m = 1");
            if (!std::isfinite(c) || !std::isfinite(mu))
                throw InvalidArgument("GainSpec: non-finite gain parameter");
        }
    }

    Matrix gain_at(const Vector& r) const
    {
        switch (kind) {
        case GainKind::constant_matrix: return G;
        case GainKind::test3: return Matrix{{0.0}, {c}};
        case GainKind::test4: return Matrix{{0.0}, {mu * (1.0 - r(0) * r(0)) + c}};
        }
        return G;
    }
};

class ReducedOrderModel
{
public:
    ReducedOrderModel(std::shared_ptr<const Problem> pb, Basis basis, Matrix coefficients,
                      GainSpec gain, BoxDomain domain)
        : pb_(std::move(pb)), basis_(std::move(basis)), C_(std::move(coefficients)),
          gain_(std::move(gain)), domain_(std::move(domain))
    {
    }

    int dim() const noexcept { return pb_->generator.d; }
    int inputs() const noexcept { return pb_->generator.m; }
    int outputs() const noexcept { return pb_->system.p; }
    const Problem& problem() const noexcept { return *pb_; }
    const Basis& basis() const noexcept { return basis_; }
    /// N x n, column i is c_i.
    const Matrix& coefficients() const noexcept { return C_; }
    const GainSpec& gain() const noexcept { return gain_; }
    const BoxDomain& domain() const noexcept { return domain_; }

    Vector dynamics(const Vector& r, const Vector& u) const
    {
        const auto& g = pb_->generator;
        return g.s(r) + gain_.gain_at(r) * (u - g.ell(r));
    }

    /// pi^N(r)
    Vector state_map(const Vector& r) const { return C_.transpose() * eval_basis(basis_, r); }

    Vector output(const Vector& r) const { return pb_->system.h(state_map(r)); }

private:
    std::shared_ptr<const Problem> pb_;
    Basis basis_;
    Matrix C_;
    GainSpec gain_;
    BoxDomain domain_;
};

struct StabilityReport
{
    Matrix jacobian;
    Eigen::VectorXcd eigenvalues;
    double max_real_part = 0.0;
    bool stable = false;
};

namespace detail {

// FD noise on a marginal linearization stays well below this.
inline constexpr double stability_band = 1e-9;

inline Eigen::VectorXcd eigenvalues_general(const Matrix& m)
{
    Eigen::EigenSolver<Matrix> es(m, false);
    if (es.info() != Eigen::Success)
        throw SingularMatrix("eigenvalue computation did not converge");
    return es.eigenvalues();
}

} // namespace detail

///
/// Linearizes r -> s(r) - g(r) l(r) at the origin by central differences
/// and checks that every eigenvalue has negative real part.
///
inline StabilityReport verify_rom_stability(const ReducedOrderModel& rom, double step = 1e-6)
{
    const int d = rom.dim();
    const Vector u0 = Vector::Zero(rom.inputs());
    StabilityReport rep;
    rep.jacobian.resize(d, d);
    for (int j = 0; j < d; ++j) {
        Vector rp = Vector::Zero(d);
        Vector rm = Vector::Zero(d);
        rp(j) = step;
        rm(j) = -step;
        rep.jacobian.col(j) = (rom.dynamics(rp, u0) - rom.dynamics(rm, u0)) / (2.0 * step);
    }
    rep.eigenvalues = detail::eigenvalues_general(rep.jacobian);
    rep.max_real_part = rep.eigenvalues.real().maxCoeff();
    rep.stable = rep.max_real_part < -detail::stability_band;
    return rep;
}

///
/// Builds the ROM from a converged Galerkin solution. Throws NotConverged
/// for an unconverged solution and UnstableGain when the linearization at
/// the origin is not Hurwitz.
///
inline ReducedOrderModel build_rom(const Problem& pb, const GalerkinOperators& ops,
                                   const Solution& sol, const GainSpec& gain)
{
    require_converged(sol);
    if (sol.N != ops.size() || sol.n != pb.system.n)
        throw InvalidArgument("build_rom: solution does not match the operators");
    gain.check_dims(pb.generator.d, pb.generator.m);
    ReducedOrderModel rom(std::make_shared<const Problem>(pb), ops.basis, Matrix(sol.blocks()),
                          gain, ops.domain);
    const auto rep = verify_rom_stability(rom);
    if (!rep.stable)
        throw UnstableGain("build_rom: " + to_string(gain.kind) +
                               " gain leaves an eigenvalue with real part " +
                               std::to_string(rep.max_real_part),
                           rep.max_real_part);
    return rom;
}

///
/// G with max Re eig(S - G L) <= -margin.
///
/// Solves the filter Riccati equation for the shifted pair
/// \f$(S + \alpha I, L)\f$ through the stable invariant subspace of its
/// Hamiltonian and returns \f$G = X L^\top\f$.
///
inline Matrix stabilizing_gain(const Matrix& S, const Matrix& L, double margin = 0.5)
{
    const auto d = S.rows();
    if (S.cols() != d || L.cols() != d || L.rows() < 1)
        throw InvalidArgument("stabilizing_gain: inconsistent dimensions");
    if (!(margin >= 0.0) || !std::isfinite(margin))
        throw InvalidArgument("stabilizing_gain: margin must be finite and non-negative");

    // PBH: every mode with Re >= -margin must be seen by L.
    const auto eig_S = detail::eigenvalues_general(S);
    for (Eigen::Index k = 0; k < d; ++k) {
        const auto lam = eig_S(k);
        if (lam.real() < -margin)
            continue;
        Eigen::MatrixXcd pbh(d + L.rows(), d);
        pbh.topRows(d) = lam * Eigen::MatrixXcd::Identity(d, d) - S.cast<std::complex<double>>();
        pbh.bottomRows(L.rows()) = L.cast<std::complex<double>>();
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
        const auto& sv = svd.singularValues();
        const double scale = std::max(1.0, sv(0));
        if (sv(d - 1) < 1e-10 * scale)
            throw NotDetectable("stabilizing_gain: mode " + std::to_string(lam.real()) + "+" +
                                std::to_string(lam.imag()) + "i is not observable through L");
    }

    const Matrix Sa = S + margin * Matrix::Identity(d, d);
    Matrix H(2 * d, 2 * d);
    H << Sa.transpose(), -L.transpose() * L, -Matrix::Identity(d, d), -Sa;
    Eigen::ComplexEigenSolver<Matrix> ces(H, true);
    if (ces.info() != Eigen::Success)
        throw SingularMatrix("stabilizing_gain: Hamiltonian eigen-decomposition failed");

    Eigen::MatrixXcd U(2 * d, d);
    Eigen::Index cols = 0;
    for (Eigen::Index k = 0; k < 2 * d && cols < d; ++k)
        if (ces.eigenvalues()(k).real() < 0.0)
            U.col(cols++) = ces.eigenvectors().col(k);
    if (cols != d)
        throw NotDetectable("stabilizing_gain: Hamiltonian has eigenvalues on the shifted axis");

    const Eigen::MatrixXcd U1 = U.topRows(d);
    const Eigen::MatrixXcd U2 = U.bottomRows(d);
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(U1.transpose());
    Matrix X = lu.solve(U2.transpose()).transpose().real();
    X = 0.5 * (X + X.transpose());
    Matrix G = X * L.transpose();

    const double worst = detail::eigenvalues_general(S - G * L).real().maxCoeff();
    if (!(worst <= -margin + 1e-8 * std::max(1.0, margin)))
        throw UnstableGain("stabilizing_gain: computed gain misses the margin (max real part " +
                               std::to_string(worst) + ")",
                           worst);
    return G;
}

} // namespace mmg
