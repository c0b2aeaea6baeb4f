#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>

#include "psym/verify.hpp"

namespace psym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Fourth-order central weights for offsets -3..3, indexed by derivative order.
constexpr double kStencil[5][7] = {
    {0, 0, 0, 1, 0, 0, 0},
    {0, 1.0 / 12, -2.0 / 3, 0, 2.0 / 3, -1.0 / 12, 0},
    {0, -1.0 / 12, 4.0 / 3, -5.0 / 2, 4.0 / 3, -1.0 / 12, 0},
    {1.0 / 8, -1, 13.0 / 8, 0, -13.0 / 8, 1, -1.0 / 8},
    {-1.0 / 6, 2, -13.0 / 2, 28.0 / 3, -13.0 / 2, 2, -1.0 / 6},
};
constexpr int kMargin = 3;

std::vector<std::string> independent_names(const JetContext& ctx) {
    std::vector<std::string> out;
    for (const auto& s : ctx.independents()) out.push_back(s.name());
    return out;
}

std::string state_name(const JetContext& ctx, int alpha) { return ctx.jet(alpha, MultiIndex(ctx.p(), 0)).name(); }

void check_same_shape(const std::vector<Grid>& u, const JetContext& ctx) {
    if (static_cast<int>(u.size()) != ctx.q())
        throw Error(ErrorKind::Contract, "one grid per dependent variable is required");
    for (const auto& g : u) {
        if (g.dims() != ctx.p()) throw Error(ErrorKind::Contract, "grid dimension differs from the independent count");
        if (g.n != u[0].n || g.lo != u[0].lo || g.hi != u[0].hi)
            throw Error(ErrorKind::Contract, "grids of different shape");
    }
}

// Solves A x = b in place by partial pivoting; false when singular.
bool solve_linear(std::vector<double>& A, std::vector<double>& b, int n) {
    for (int c = 0; c < n; ++c) {
        int piv = c;
        for (int r = c + 1; r < n; ++r)
            if (std::abs(A[r * n + c]) > std::abs(A[piv * n + c])) piv = r;
        if (std::abs(A[piv * n + c]) < 1e-300) return false;
        if (piv != c) {
            for (int k = 0; k < n; ++k) std::swap(A[c * n + k], A[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        for (int r = c + 1; r < n; ++r) {
            const double f = A[r * n + c] / A[c * n + c];
            for (int k = c; k < n; ++k) A[r * n + k] -= f * A[c * n + k];
            b[r] -= f * b[c];
        }
    }
    for (int c = n - 1; c >= 0; --c) {
        double s = b[c];
        for (int k = c + 1; k < n; ++k) s -= A[c * n + k] * b[k];
        b[c] = s / A[c * n + c];
    }
    return true;
}

using Rhs = std::function<void(const std::vector<double>&, std::vector<double>&)>;

void rk4_step(const Rhs& f, std::vector<double>& y, double h, std::vector<double> (&k)[4], std::vector<double>& tmp) {
    const std::size_t n = y.size();
    f(y, k[0]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k[0][i];
    f(tmp, k[1]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k[1][i];
    f(tmp, k[2]);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k[2][i];
    f(tmp, k[3]);
    for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k[0][i] + 2 * k[1][i] + 2 * k[2][i] + k[3][i]);
}

struct Rk4 {
    Rhs f;
    std::vector<double> k[4];
    std::vector<double> tmp;

    explicit Rk4(Rhs rhs, std::size_t n) : f(std::move(rhs)), tmp(n) {
        for (auto& v : k) v.resize(n);
    }
    void step(std::vector<double>& y, double h) { rk4_step(f, y, h, k, tmp); }
};

}  // namespace

Grid::Grid(std::vector<double> lo_, std::vector<double> hi_, std::vector<int> n_)
    : lo(std::move(lo_)), hi(std::move(hi_)), n(std::move(n_)) {
    if (lo.size() != n.size() || hi.size() != n.size()) throw Error(ErrorKind::Contract, "grid bounds mismatch");
    std::size_t total = 1;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (n[i] < 2 || !(hi[i] > lo[i])) throw Error(ErrorKind::Contract, "degenerate grid axis");
        total *= static_cast<std::size_t>(n[i]);
    }
    data.assign(total, 0.0);
}

std::size_t Grid::index(const std::vector<int>& k) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n.size(); ++i) flat = flat * n[i] + k[i];
    return flat;
}

std::vector<int> Grid::unravel(std::size_t flat) const {
    std::vector<int> k(n.size());
    for (std::size_t i = n.size(); i-- > 0;) {
        k[i] = static_cast<int>(flat % n[i]);
        flat /= n[i];
    }
    return k;
}

std::vector<double> Grid::point(std::size_t flat) const {
    const auto k = unravel(flat);
    std::vector<double> x(k.size());
    for (int i = 0; i < dims(); ++i) x[i] = coord(i, k[i]);
    return x;
}

double Grid::interpolate(const std::vector<double>& x) const {
    const int d = dims();
    std::vector<int> first(d);
    std::vector<std::array<double, 4>> w(d);
    for (int i = 0; i < d; ++i) {
        const double hh = h(i);
        const double s = (x[i] - lo[i]) / hh;
        if (!(s >= -1e-9 && s <= n[i] - 1 + 1e-9)) return kNaN;
        const int m = std::min(n[i], 4);
        int k0 = static_cast<int>(std::floor(s)) - 1;
        k0 = std::clamp(k0, 0, n[i] - m);
        first[i] = k0;
        for (int a = 0; a < 4; ++a) {
            if (a >= m) {
                w[i][a] = 0.0;
                continue;
            }
            double l = 1.0;
            for (int b = 0; b < m; ++b)
                if (b != a) l *= (s - (k0 + b)) / static_cast<double>(a - b);
            w[i][a] = l;
        }
    }
    double sum = 0.0;
    std::vector<int> off(d, 0);
    std::vector<int> k(d);
    for (;;) {
        double wt = 1.0;
        for (int i = 0; i < d; ++i) {
            wt *= w[i][off[i]];
            k[i] = std::min(first[i] + off[i], n[i] - 1);
        }
        if (wt != 0.0) sum += wt * data[index(k)];
        int i = d - 1;
        while (i >= 0 && ++off[i] == 4) off[i--] = 0;
        if (i < 0) break;
    }
    return sum;
}

Grid sample_grid(const Expr& U, const JetContext& ctx, const std::vector<double>& lo, const std::vector<double>& hi,
                 const std::vector<int>& n, const std::map<std::string, double>& values,
                 const FunctionTable* functions) {
    if (static_cast<int>(n.size()) != ctx.p()) throw Error(ErrorKind::Contract, "grid dimension differs from the independent count");
    Grid g(lo, hi, n);
    const CompiledExpr f(U, independent_names(ctx), values, functions);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = f(g.point(i));
    return g;
}

double residual_on_grid(const std::vector<Grid>& u, const DiffSystem& S, const std::map<std::string, double>& values,
                        const FunctionTable* functions) {
    const JetContext& ctx = S.context();
    check_same_shape(u, ctx);
    const Grid& g0 = u.front();
    for (int i = 0; i < g0.dims(); ++i)
        if (g0.n[i] < 2 * kMargin + 1) throw Error(ErrorKind::Contract, "grid too coarse for the stencil (need 7 nodes per axis)");

    double worst = 0.0;
    for (const auto& eq : S.equations()) {
        std::vector<std::string> slots = independent_names(ctx);
        std::vector<Symbol> jets;
        for (const auto& s : free_symbols(eq.expr)) {
            if (!s.is_jet()) continue;
            for (int c : s.counts())
                if (c > 4) throw Error(ErrorKind::Contract, "stencils cover derivatives up to order 4 per axis");
            jets.push_back(s);
            slots.push_back(s.name());
        }
        const CompiledExpr f(eq.expr, slots, values, functions);
        const int p = g0.dims();
        std::vector<double> args(slots.size());
        for (std::size_t flat = 0; flat < g0.size(); ++flat) {
            const auto k = g0.unravel(flat);
            bool interior = true;
            for (int i = 0; i < p; ++i) interior = interior && k[i] >= kMargin && k[i] < g0.n[i] - kMargin;
            if (!interior) continue;
            for (int i = 0; i < p; ++i) args[i] = g0.coord(i, k[i]);
            bool finite = true;
            for (std::size_t j = 0; j < jets.size(); ++j) {
                const auto& J = jets[j].counts();
                const Grid& g = u[jets[j].alpha()];
                double acc = 0.0;
                std::vector<int> off(p, 0);
                std::vector<int> node(p);
                for (;;) {
                    double wt = 1.0;
                    for (int i = 0; i < p; ++i) {
                        wt *= kStencil[J[i]][off[i]];
                        node[i] = k[i] + off[i] - kMargin;
                    }
                    if (wt != 0.0) acc += wt * g[g.index(node)];
                    int i = p - 1;
                    while (i >= 0 && ++off[i] == 7) off[i--] = 0;
                    if (i < 0) break;
                }
                for (int i = 0; i < p; ++i) acc /= std::pow(g0.h(i), J[i]);
                args[p + j] = acc;
                finite = finite && std::isfinite(acc);
            }
            if (!finite) continue;
            const double r = std::abs(f(args));
            if (std::isfinite(r)) worst = std::max(worst, r);
        }
    }
    return worst;
}

double max_difference(const Grid& a, const Grid& b) {
    if (a.n != b.n) throw Error(ErrorKind::Contract, "grids of different shape");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::isfinite(a[i]) && std::isfinite(b[i])) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

TransformResult finite_transform(const VectorField& X, const std::vector<Grid>& u, double lambda,
                                 const JetContext& ctx, const std::map<std::string, double>& values,
                                 const FunctionTable* functions, const TransformOptions& opts) {
    check_field(X, ctx);
    if (X.type != VectorField::Type::Point)
        throw Error(ErrorKind::UnsupportedMap, "finite transformations need a point field");
    if (std::abs(lambda) > opts.max_lambda)
        throw Error(ErrorKind::Contract, "|lambda| exceeds the local group bound");
    check_same_shape(u, ctx);
    const int p = ctx.p();
    const int q = ctx.q();

    std::vector<std::string> slots = independent_names(ctx);
    for (int a = 0; a < q; ++a) slots.push_back(state_name(ctx, a));
    std::vector<CompiledExpr> field;
    for (const auto& e : X.xi) field.emplace_back(e, slots, values, functions);
    for (const auto& e : X.phi) field.emplace_back(e, slots, values, functions);

    Rk4 rk([&](const std::vector<double>& y, std::vector<double>& dy) {
        for (int i = 0; i < p + q; ++i) dy[i] = field[i](y);
    }, p + q);
    const int steps = std::max(16, static_cast<int>(std::ceil(std::abs(lambda) * opts.steps)));
    auto flow = [&](std::vector<double> y, double lam) {
        for (int s = 0; s < steps; ++s) rk.step(y, lam / steps);
        return y;
    };
    auto lift = [&](const std::vector<double>& x) {
        std::vector<double> y(x);
        for (int a = 0; a < q; ++a) y.push_back(u[a].interpolate(x));
        return y;
    };
    auto finite = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
    };

    TransformResult out;
    out.u = u;
    out.total = u[0].size();
    if (lambda == 0.0) return out;
    for (std::size_t flat = 0; flat < out.total; ++flat) {
        const std::vector<double> target = u[0].point(flat);
        // Initial guess: the inverse flow started on the original graph.
        std::vector<double> x(target);
        if (auto back = flow(lift(target), -lambda); finite(back)) x.assign(back.begin(), back.begin() + p);

        bool ok = false;
        std::vector<double> img;
        for (int it = 0; it < opts.newton_iters; ++it) {
            img = flow(lift(x), lambda);
            if (!finite(img)) break;
            std::vector<double> F(p);
            double norm = 0.0;
            for (int i = 0; i < p; ++i) {
                F[i] = img[i] - target[i];
                norm = std::max(norm, std::abs(F[i]));
            }
            if (norm < opts.newton_tol * (1.0 + std::abs(target[0]))) {
                ok = true;
                break;
            }
            std::vector<double> J(p * p);
            bool jac = true;
            for (int j = 0; j < p; ++j) {
                const double d = 1e-6 * (1.0 + std::abs(x[j]));
                std::vector<double> xp(x), xm(x);
                xp[j] += d;
                xm[j] -= d;
                const auto fp = flow(lift(xp), lambda);
                const auto fm = flow(lift(xm), lambda);
                if (!finite(fp) || !finite(fm)) {
                    jac = false;
                    break;
                }
                for (int i = 0; i < p; ++i) J[i * p + j] = (fp[i] - fm[i]) / (2 * d);
            }
            if (!jac || !solve_linear(J, F, p)) break;
            double step = 0.0;
            for (int i = 0; i < p; ++i) {
                x[i] -= F[i];
                step = std::max(step, std::abs(F[i]));
            }
            if (step < 1e-15 * (1.0 + std::abs(x[0]))) {
                img = flow(lift(x), lambda);
                ok = finite(img);
                break;
            }
        }
        if (!ok) {
            ++out.clipped;
            for (int a = 0; a < q; ++a) out.u[a][flat] = kNaN;
            continue;
        }
        for (int a = 0; a < q; ++a) out.u[a][flat] = img[p + a];
    }
    return out;
}

namespace {

std::vector<std::string> ds_slots(const DynSys& F) {
    std::vector<std::string> slots;
    for (int a = 0; a < F.n(); ++a) slots.push_back(F.state(a).symbol().name());
    return slots;
}

int step_count(double t0, double t1, double h) {
    if (!(h > 0.0) || !(t1 > t0)) throw Error(ErrorKind::Contract, "integration needs h > 0 and t1 > t0");
    return std::max(1, static_cast<int>(std::lround((t1 - t0) / h)));
}

}  // namespace

Trajectory integrate_ds(const DynSys& F, const std::vector<double>& u0, double t0, double t1, double h,
                        const std::map<std::string, double>& values, const FunctionTable* functions) {
    F.check();
    if (static_cast<int>(u0.size()) != F.n()) throw Error(ErrorKind::Contract, "initial state has the wrong dimension");
    const int N = step_count(t0, t1, h);
    const auto slots = ds_slots(F);
    std::vector<CompiledExpr> f;
    for (const auto& e : F.f) f.emplace_back(e, slots, values, functions);
    Rk4 rk([&](const std::vector<double>& y, std::vector<double>& dy) {
        for (int a = 0; a < F.n(); ++a) dy[a] = f[a](y);
    }, u0.size());

    auto run = [&](int steps, double hh, Trajectory* keep) {
        std::vector<double> y(u0);
        if (keep) keep->states.push_back(y);
        for (int s = 1; s <= steps; ++s) {
            rk.step(y, hh);
            for (double v : y)
                if (!std::isfinite(v))
                    throw Error(ErrorKind::BlowUp,
                                "state became non-finite; last valid time " + std::to_string(t0 + (s - 1) * hh));
            if (keep) keep->states.push_back(y);
        }
        return y;
    };
    Trajectory tr;
    tr.t0 = t0;
    tr.h = h;
    const auto fine = run(N, h, &tr);
    if (N % 2 == 0) {
        try {
            const auto coarse = run(N / 2, 2 * h, nullptr);
            double e = 0.0;
            for (std::size_t i = 0; i < fine.size(); ++i) e = std::max(e, std::abs(fine[i] - coarse[i]) / 15.0);
            tr.error_estimate = e;
        } catch (const Error&) {
            tr.error_estimate = std::numeric_limits<double>::infinity();
        }
    }
    return tr;
}

VerifyVerdict variational_check(const DynSys& F, const std::vector<Expr>& phi, const std::vector<double>& u0,
                                double t0, double t1, double h, double tol, const std::map<std::string, double>& values,
                                const FunctionTable* functions) {
    F.check();
    const int n = F.n();
    if (static_cast<int>(phi.size()) != n) throw Error(ErrorKind::Contract, "phi has the wrong dimension");
    if (static_cast<int>(u0.size()) != n) throw Error(ErrorKind::Contract, "initial state has the wrong dimension");
    const int N = step_count(t0, t1, h);
    const auto slots = ds_slots(F);
    std::vector<CompiledExpr> f, ph, jac;
    for (const auto& e : F.f) f.emplace_back(e, slots, values, functions);
    for (const auto& e : phi) ph.emplace_back(e, slots, values, functions);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) jac.emplace_back(diff(F.f[a], F.state(b).symbol()), slots, values, functions);

    Rk4 rk([&](const std::vector<double>& y, std::vector<double>& dy) {
        const double* uu = y.data();
        for (int a = 0; a < n; ++a) {
            dy[a] = f[a](uu);
            double s = 0.0;
            for (int b = 0; b < n; ++b) s += jac[a * n + b](uu) * y[n + b];
            dy[n + a] = s;
        }
    }, 2 * n);

    VerifyVerdict out;
    auto run = [&](const std::string& name, const std::vector<CompiledExpr>& target) {
        std::vector<double> y(u0);
        for (int a = 0; a < n; ++a) y.push_back(target[a](u0));
        double worst = 0.0;
        double worst_t = t0;
        for (int s = 1; s <= N; ++s) {
            rk.step(y, h);
            for (double v : y)
                if (!std::isfinite(v))
                    throw Error(ErrorKind::BlowUp,
                                "state became non-finite; last valid time " + std::to_string(t0 + (s - 1) * h));
            for (int a = 0; a < n; ++a) {
                const double d = std::abs(y[n + a] - target[a](y.data()));
                if (d > worst) {
                    worst = d;
                    worst_t = t0 + s * h;
                }
            }
        }
        EquationCheck c;
        c.name = name;
        c.status.value = worst;
        c.status.verdict = worst <= tol ? Verdict::NumericallyZero : Verdict::Nonzero;
        if (worst > tol) c.status.witness["t"] = worst_t;
        out.max_residual = std::max(out.max_residual, worst);
        out.samples += N;
        out.checks.push_back(std::move(c));
    };
    run("v(0)=phi", ph);
    run("v(0)=f", f);
    return out;
}

}  // namespace psym
