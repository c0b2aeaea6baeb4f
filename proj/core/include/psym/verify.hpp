#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "psym/engine.hpp"
#include "psym/numeric.hpp"

namespace psym {

/// Candidate family u_alpha = U_alpha(x; constants; lambda).
struct Ansatz {
    std::string name;
    std::vector<Expr> u;             // one per dependent variable
    std::vector<Symbol> constants;   // free constants of the family
    bool orbit = false;              // lambda parametrizes an orbit
    std::map<std::string, std::pair<double, double>> box;  // numeric domain
};

/// Throws Contract when U mentions jet coordinates, has the wrong arity, or
/// uses lambda without claiming to be an orbit.
void check_ansatz(const Ansatz& a, const JetContext& ctx);

struct VerifyOptions {
    SampleOptions sampling;
    const FunctionTable* realizations = nullptr;  // concrete g(u) and friends
};

struct EquationCheck {
    std::string name;
    ZeroStatus status;
};

struct VerifyVerdict {
    std::vector<EquationCheck> checks;
    double max_residual = 0.0;
    int samples = 0;
    std::vector<std::string> notes;
    int orientation = 1;  // -1 when the family runs against the flow of X

    /// Worst verdict over the checks: nonzero, then unknown, then numeric.
    Verdict verdict() const;
    bool passed() const;
    bool symbolic() const;
};

/// Replaces every jet u_{alpha,J} by d^J U_alpha.
Expr substitute_ansatz(const Expr& e, const Ansatz& a, const JetContext& ctx);

VerifyVerdict verify_expressions(const Ansatz& a, const std::vector<std::pair<std::string, Expr>>& exprs,
                                 const JetContext& ctx, const VerifyOptions& opts = {});

/// Substitutes U into every equation of S.
VerifyVerdict verify_ansatz(const Ansatz& a, const DiffSystem& S, const VerifyOptions& opts = {});

/// phi_alpha(x, U) - xi_i(x, U) dU_alpha/dx_i for each alpha.
std::vector<Expr> characteristic_on(const Ansatz& a, const VectorField& X, const JetContext& ctx);

/// dU/dlambda against the characteristic evaluated on U. A family traversed
/// with the opposite orientation passes with a note.
VerifyVerdict verify_orbit_ode(const Ansatz& a, const VectorField& X, const JetContext& ctx,
                               const VerifyOptions& opts = {});

/// The unrestricted iterates (X*)^r Delta, r = 1..k, evaluated on U.
VerifyVerdict verify_series(const Ansatz& a, const VectorField& X, const DiffSystem& S, int k,
                            const VerifyOptions& opts = {});

/// Values of one scalar field on a regular tensor grid; the last axis varies
/// fastest.
struct Grid {
    std::vector<double> lo, hi;
    std::vector<int> n;
    std::vector<double> data;

    Grid() = default;
    Grid(std::vector<double> lo, std::vector<double> hi, std::vector<int> n);

    int dims() const { return static_cast<int>(n.size()); }
    std::size_t size() const { return data.size(); }
    double h(int axis) const { return (hi[axis] - lo[axis]) / (n[axis] - 1); }
    double coord(int axis, int k) const { return lo[axis] + k * h(axis); }
    std::size_t index(const std::vector<int>& k) const;
    std::vector<int> unravel(std::size_t flat) const;
    std::vector<double> point(std::size_t flat) const;
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    /// Tensor-product cubic Lagrange interpolation. Returns NaN outside the
    /// grid hull.
    double interpolate(const std::vector<double>& x) const;
};

/// Samples U over the grid with independents taken in declaration order.
Grid sample_grid(const Expr& U, const JetContext& ctx, const std::vector<double>& lo, const std::vector<double>& hi,
                 const std::vector<int>& n, const std::map<std::string, double>& values = {},
                 const FunctionTable* functions = nullptr);

/// Max |Delta_k| over interior nodes using fourth-order central stencils.
/// Requires at least 7 nodes per axis; NaN nodes are skipped.
double residual_on_grid(const std::vector<Grid>& u, const DiffSystem& S,
                        const std::map<std::string, double>& values = {}, const FunctionTable* functions = nullptr);

/// Max |a - b| over nodes where both are finite.
double max_difference(const Grid& a, const Grid& b);

struct TransformOptions {
    double max_lambda = 1.0;  // the group is only local
    int steps = 64;           // RK4 steps per unit of |lambda|, at least 16 total
    int newton_iters = 30;
    double newton_tol = 1e-13;
};

struct TransformResult {
    std::vector<Grid> u;        // NaN where the preimage leaves the domain
    std::size_t clipped = 0;
    std::size_t total = 0;
};

/// Pushes the graph of u along the flow of X for parameter lambda and
/// resamples it on the same grid.
TransformResult finite_transform(const VectorField& X, const std::vector<Grid>& u, double lambda,
                                 const JetContext& ctx, const std::map<std::string, double>& values = {},
                                 const FunctionTable* functions = nullptr, const TransformOptions& opts = {});

struct Trajectory {
    double t0 = 0.0;
    double h = 0.0;
    std::vector<std::vector<double>> states;
    std::string method = "rk4";
    double error_estimate = 0.0;  // Richardson estimate from a run at 2h

    double time(std::size_t k) const { return t0 + static_cast<double>(k) * h; }
};

/// Fixed-step classical RK4. Throws BlowUp on a non-finite state.
Trajectory integrate_ds(const DynSys& F, const std::vector<double>& u0, double t0, double t1, double h,
                        const std::map<std::string, double>& values = {}, const FunctionTable* functions = nullptr);

/// Co-integrates u' = f(u) with v' = (grad f) v from v(0) = phi(u0) and from
/// v(0) = f(u0), comparing v(t) with phi(u(t)) and f(u(t)).
VerifyVerdict variational_check(const DynSys& F, const std::vector<Expr>& phi, const std::vector<double>& u0,
                                double t0, double t1, double h, double tol,
                                const std::map<std::string, double>& values = {},
                                const FunctionTable* functions = nullptr);

}  // namespace psym
