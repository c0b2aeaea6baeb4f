#include <gtest/gtest.h>

#include "psym/engine.hpp"
#include "psym/verify.hpp"
#include "support.hpp"

using namespace psym;
using psym::test::P;

namespace {

struct Kdv {
    JetContext ctx{{"x", "t"}, {"u"}};
    Expr a, b, c;
    Expr u = ctx.u(0), ux = ctx.u(0, {1, 0}), ut = ctx.u(0, {0, 1}), uxxx = ctx.u(0, {3, 0});
    Expr delta = ut + uxxx + u * ux;
    DiffSystem S{ctx};
    Kdv() {
        a = Expr(ctx.add_parameter("a"));
        b = Expr(ctx.add_parameter("b"));
        c = Expr(ctx.add_parameter("c"));
        S.add("kdv", delta, ut.symbol());
    }
    VectorField scaling() const { return VectorField::point("X", {b * ctx.x(0), c * ctx.x(1)}, {a * u}); }
    VectorField exact() const { return VectorField::point("X0", {ctx.x(0), 3 * ctx.x(1)}, {-2 * u}); }
};

struct Laplace {
    JetContext ctx{{"y", "x"}, {"u"}};
    Expr x = ctx.x(1), y = ctx.x(0), u = ctx.u(0);
    Expr j(int nx, int ny) const { return ctx.u(0, {ny, nx}); }
    Expr g = apply("g", {ctx.u(0)});
    DiffSystem S{ctx};
    Laplace() {
        ctx.add_function("g", 1);
        S.add("laplace", j(2, 0) + j(0, 2) + g * j(3, 0));
    }
    VectorField rotation() const { return VectorField::point("X", {-x, y}, {Expr(0)}); }
};

struct Heat {
    JetContext ctx{{"x", "t"}, {"u"}};
    Expr x = ctx.x(0), t = ctx.x(1), u = ctx.u(0), ux = ctx.u(0, {1, 0}), uxx = ctx.u(0, {2, 0});
    DiffSystem S{ctx};
    Heat() { S.add("heat", ctx.u(0, {0, 1}) - uxx - u * uxx + pow(ux, 2), ctx.jet(0, {0, 1})); }
    VectorField field() const { return VectorField::point("X", {2 * t, Expr(0)}, {-x * u}); }
};

bool all_proportional(const std::vector<ChainStep>& steps, const std::vector<Expr>& expected) {
    if (steps.size() != expected.size()) return false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (expected[i].is_zero() ? !steps[i].restricted.is_zero() : !proportional(steps[i].reduced, expected[i]))
            return false;
    }
    return true;
}

}  // namespace

TEST(Restrict, EquationRestrictsToZero) {
    Kdv k;
    EXPECT_TRUE(k.S.restrict(k.delta).is_zero());
}

TEST(Restrict, KdvFirstStep) {
    Kdv k;
    const Expr r = k.S.restrict(apply_prolonged(k.scaling(), k.delta, k.ctx));
    EXPECT_EQ(r, (k.a - k.b + k.c) * k.u * k.ux - (3 * k.b - k.c) * k.uxxx);
}

TEST(Restrict, DifferentialConsequence) {
    Kdv k;
    const Expr uxt = k.ctx.u(0, {1, 1});
    const Expr expected = -(k.ctx.u(0, {4, 0}) + pow(k.ux, 2) + k.u * k.ctx.u(0, {2, 0}));
    EXPECT_EQ(k.S.restrict(uxt), expected);
    // oracle: D_x of the solved right-hand side
    EXPECT_EQ(expected, total_derivative(-(k.uxxx + k.u * k.ux), 0, k.ctx));
}

TEST(Restrict, IllOrderedSystemDoesNotTerminate) {
    JetContext ctx({"x", "y"}, {"u"});
    DiffSystem S(ctx);
    Equation e1;
    e1.name = "a";
    e1.pivot = ctx.jet(0, {1, 0});
    e1.rhs = ctx.u(0, {0, 1});
    e1.expr = ctx.u(0, {1, 0}) - e1.rhs;
    Equation e2;
    e2.name = "b";
    e2.pivot = ctx.jet(0, {0, 1});
    e2.rhs = ctx.u(0, {1, 0}) + 1;
    e2.expr = ctx.u(0, {0, 1}) - e2.rhs;
    S.add(e1);
    S.add(e2);
    try {
        (void)S.restrict(ctx.u(0, {1, 0}));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NonTerminatingReduction);
    }
}

TEST(Exact, KdvScaling) {
    Kdv k;
    EXPECT_EQ(exact_symmetry_check(k.exact(), k.S).verdict, Verdict::SymbolicallyZero);
}

TEST(Exact, TranslationOnInconsistentExample) {
    JetContext ctx({"x", "y"}, {"u"});
    DiffSystem S(ctx);
    const Expr x = ctx.x(0);
    S.add("e", x * ctx.u(0, {1, 0}) + pow(x, 2) * ctx.u(0, {0, 1}) + 1);
    const VectorField X = VectorField::point("X", {Expr(1), Expr(0)}, {Expr(0)});
    EXPECT_EQ(exact_symmetry_check(X, S).verdict, Verdict::Nonzero);
}

TEST(Exact, RotationOnLaplacian) {
    JetContext ctx({"x", "y"}, {"u"});
    DiffSystem S(ctx);
    S.add("laplace", ctx.u(0, {2, 0}) + ctx.u(0, {0, 2}));
    const VectorField X = VectorField::point("X", {ctx.x(1), -ctx.x(0)}, {Expr(0)});
    EXPECT_EQ(exact_symmetry_check(X, S).verdict, Verdict::SymbolicallyZero);
    const ChainResult r = partial_chain(X, S);
    EXPECT_EQ(r.status, ChainStatus::Exact);
}

TEST(Chain, PerturbedLaplaceRotation) {
    Laplace l;
    ChainOptions o;
    o.restrict = RestrictMode::Chain;
    o.nonzero = {l.g};
    const ChainResult r = partial_chain(l.rotation(), l.S, o);
    EXPECT_EQ(r.status, ChainStatus::Partial);
    EXPECT_EQ(r.order, 4);
    EXPECT_EQ(r.applications, 5);
    EXPECT_TRUE(all_proportional(r.steps, {l.j(2, 1), 2 * l.j(1, 2) - l.j(3, 0), l.j(0, 3), l.j(1, 2), Expr(0)}));
    EXPECT_EQ(r.steps[0].restricted, 3 * l.g * l.j(2, 1));
    bool dropped_g = false;
    for (const auto& s : r.side_conditions) dropped_g |= s.kind == SideKind::DroppedFactor && s.expr == l.g;
    EXPECT_TRUE(dropped_g);
}

TEST(Chain, HeatOrderOne) {
    Heat h;
    const ChainResult r = partial_chain(h.field(), h.S);
    EXPECT_EQ(r.status, ChainStatus::Partial);
    EXPECT_EQ(r.order, 1);
    ASSERT_GE(r.steps.size(), 2u);
    EXPECT_EQ(r.steps[0].restricted, h.x * (pow(h.ux, 2) - h.u * h.uxx) * -1);
    EXPECT_TRUE(r.steps[1].restricted.is_zero());
    bool x_recorded = false;
    for (const auto& s : r.side_conditions) x_recorded |= s.kind == SideKind::Nonvanishing && s.expr == h.x;
    EXPECT_TRUE(x_recorded);
}

TEST(Chain, InconsistentWithinTwoSteps) {
    JetContext ctx({"x", "y"}, {"u"});
    DiffSystem S(ctx);
    const Expr x = ctx.x(0);
    S.add("e", x * ctx.u(0, {1, 0}) + pow(x, 2) * ctx.u(0, {0, 1}) + 1);
    const VectorField X = VectorField::point("X", {Expr(1), Expr(0)}, {Expr(0)});
    const ChainResult r = partial_chain(X, S);
    EXPECT_EQ(r.status, ChainStatus::Inconsistent);
    ASSERT_TRUE(r.inconsistent_step.has_value());
    EXPECT_LE(*r.inconsistent_step, 2);
}

TEST(Chain, Boussinesq) {
    JetContext ctx({"x", "t"}, {"u"});
    const Expr t = ctx.x(1), u = ctx.u(0);
    DiffSystem S(ctx);
    S.add("bsq", ctx.u(0, {0, 2}) + u * ctx.u(0, {2, 0}) + pow(ctx.u(0, {1, 0}), 2) + ctx.u(0, {4, 0}),
          ctx.jet(0, {0, 2}));
    const VectorField X = VectorField::point("X", {t, Expr(1)}, {-2 * t});
    const ChainResult r = partial_chain(X, S);
    EXPECT_EQ(r.status, ChainStatus::Partial);
    EXPECT_EQ(r.order, 1);
    ASSERT_GE(r.steps.size(), 2u);
    EXPECT_TRUE(proportional(r.steps[0].restricted, ctx.u(0, {1, 1}) + t * ctx.u(0, {2, 0})));
    EXPECT_TRUE(r.steps[1].raw.is_zero());
}

TEST(Chain, BacklundField) {
    JetContext ctx({"x", "t"}, {"u"});
    const Expr a(ctx.add_parameter("a"));
    const Expr u = ctx.u(0), ux = ctx.u(0, {1, 0}), uxx = ctx.u(0, {2, 0});
    DiffSystem S(ctx);
    S.add("e", ctx.u(0, {0, 1}) - uxx - pow(ux, 2) + a / 2 * pow(u, 2), ctx.jet(0, {0, 1}));
    const VectorField X = VectorField::generalized("X", 2, {uxx - a * u});
    const ChainResult r = partial_chain(X, S);
    ASSERT_FALSE(r.steps.empty());
    EXPECT_EQ(r.steps[0].restricted, 2 * (pow(uxx, 2) - pow(a, 2) / 4 * pow(u, 2)));
    EXPECT_EQ(r.status, ChainStatus::Inconclusive);
}

TEST(Chain, BacklundGenericNonlinearity) {
    JetContext ctx({"x", "t"}, {"u"});
    ctx.add_function("R", 2);
    const Expr a(ctx.add_parameter("a"));
    const Expr u = ctx.u(0), ux = ctx.u(0, {1, 0}), uxx = ctx.u(0, {2, 0});
    const Expr R = apply("R", {u, ux});
    auto d = [&](int i, int j) { return derivative_of("R", {i, j}, {u, ux}); };
    DiffSystem S(ctx);
    S.add("e", ctx.u(0, {0, 1}) - uxx - R, ctx.jet(0, {0, 1}));
    const VectorField X = VectorField::generalized("X", 2, {uxx - a * u});
    const Expr r = S.restrict(apply_prolonged(X, S.equations()[0].expr, ctx));
    const Expr expected = -a * R + a * u * d(1, 0) + a * ux * d(0, 1) + d(2, 0) * pow(ux, 2) +
                          2 * d(1, 1) * ux * uxx + d(0, 2) * pow(uxx, 2);
    EXPECT_TRUE(proportional(r, expected));
}

TEST(Chain, KdvScalingUnderAssumption) {
    Kdv k;
    DiffSystem S(k.ctx);
    const Expr delta = k.delta;
    S.add("kdv", delta, k.ut.symbol());
    const VectorField X = k.scaling();
    const VectorField Xa{X.name, X.type, X.xi, {substitute(X.phi[0], {{k.a.symbol(), -2 * k.b}})}};
    const ChainResult r = partial_chain(Xa, S);
    EXPECT_EQ(r.status, ChainStatus::Partial);
    ASSERT_GE(r.steps.size(), 2u);
    EXPECT_TRUE(r.steps[1].restricted.is_zero());
}

TEST(Chain, StrongImpliesStandard) {
    Heat h;
    ChainOptions strong;
    strong.strong = true;
    const ChainResult rs = partial_chain(h.field(), h.S, strong);
    const ChainResult r = partial_chain(h.field(), h.S);
    if (rs.status == ChainStatus::Partial) {
        EXPECT_EQ(r.status, ChainStatus::Partial);
        EXPECT_LE(r.order, rs.order);
    }
}

TEST(Discrete, ReflectionOfPerturbedLaplace) {
    JetContext ctx({"x", "y"}, {"u"});
    ctx.add_function("g", 1);
    const Expr g = apply("g", {ctx.u(0)});
    DiffSystem S(ctx);
    S.add("laplace", ctx.u(0, {2, 0}) + ctx.u(0, {0, 2}) + g * ctx.u(0, {3, 0}), ctx.jet(0, {0, 2}));
    const DiscreteMap R{"R", {-ctx.x(0), ctx.x(1)}, {ctx.u(0)}, 2};
    ChainOptions o;
    o.nonzero = {g};
    const ChainResult r = discrete_chain(R, S, o);
    ASSERT_FALSE(r.steps.empty());
    EXPECT_EQ(r.steps[0].restricted, -2 * g * ctx.u(0, {3, 0}));
    EXPECT_EQ(r.status, ChainStatus::Partial);
    EXPECT_EQ(r.applications, 2);
}

TEST(Discrete, IdentityIsExact) {
    Kdv k;
    const DiscreteMap I{"I", {k.ctx.x(0), k.ctx.x(1)}, {k.u}, 1};
    EXPECT_EQ(discrete_chain(I, k.S).status, ChainStatus::Exact);
}

TEST(Discrete, ReflectionOfEvenEquation) {
    JetContext ctx({"x", "y"}, {"u"});
    DiffSystem S(ctx);
    S.add("laplace", ctx.u(0, {2, 0}) + ctx.u(0, {0, 2}));
    const DiscreteMap R{"R", {-ctx.x(0), ctx.x(1)}, {ctx.u(0)}, 2};
    EXPECT_EQ(discrete_chain(R, S).status, ChainStatus::Exact);
}

TEST(Conditional, TranslationAppendsFirstDerivative) {
    Kdv k;
    const VectorField X = VectorField::point("X", {Expr(1), Expr(0)}, {Expr(0)});
    const DiffSystem C = conditional_system(X, k.S);
    ASSERT_EQ(C.size(), 2u);
    bool found = false;
    for (const auto& e : C.equations()) found |= proportional(e.expr, k.ux);
    EXPECT_TRUE(found);
}

TEST(Conditional, HeatInvariantSurface) {
    Heat h;
    const DiffSystem C = conditional_system(h.field(), h.S);
    bool found = false;
    for (const auto& e : C.equations()) found |= proportional(e.expr, h.x * h.u + 2 * h.t * h.ux);
    EXPECT_TRUE(found);
    // the invariant ansatz w(t) exp(-x^2/4t) reduces the heat equation to an ODE in w
    const Expr uxx = h.S.restrict(C.restrict(h.uxx));
    EXPECT_FALSE(contains(uxx, [](const Symbol& s) { return s.is_jet() && s.counts()[0] > 0; }));
}

TEST(Conditional, RotationOnPerturbedLaplace) {
    Laplace l;
    const DiffSystem C = conditional_system(l.rotation(), l.S);
    // nonconstant radial functions are not solutions; constants are
    const Symbol A = l.ctx.add_constant("A");
    const Ansatz radial{"radial", {pow(l.x, 2) + pow(l.y, 2)}, {}, false, {}};
    const Ansatz constant{"constant", {Expr(A)}, {A}, false, {}};
    EXPECT_EQ(verify_ansatz(radial, C).verdict(), Verdict::Nonzero);
    EXPECT_EQ(verify_ansatz(constant, C).verdict(), Verdict::SymbolicallyZero);
}

TEST(Conditional, DegenerateField) {
    Kdv k;
    const VectorField Z = VectorField::point("Z", {Expr(0), Expr(0)}, {Expr(0)});
    try {
        (void)conditional_system(Z, k.S);
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateField);
    }
}

TEST(Frechet, SuperpositionFamily) {
    JetContext ctx({"x", "y"}, {"u"});
    const Expr x = ctx.x(0), y = ctx.x(1), u = ctx.u(0), ux = ctx.u(0, {1, 0}), uy = ctx.u(0, {0, 1});
    DiffSystem S(ctx);
    S.add("e", ux + u - 1 + pow(ux, 2) * (ux - uy));
    const Expr phi = exp(-x - y);
    const std::vector<Expr> out = frechet_apply({phi}, S);
    ASSERT_EQ(out.size(), 1u);
    const VectorField X = VectorField::point("P", {Expr(0), Expr(0)}, {phi});
    EXPECT_EQ(out[0], apply_prolonged(X, S.equations()[0].expr, ctx));
    const Ansatz fam{"line", {1 + Expr(ctx.group_parameter()) * phi}, {}, true, {}};
    EXPECT_TRUE(verify_expressions(fam, {{"e", out[0]}}, ctx).passed());
}

TEST(Frechet, ZeroCharacteristic) {
    Kdv k;
    EXPECT_TRUE(frechet_apply({Expr(0)}, k.S)[0].is_zero());
}

TEST(Frechet, ConstantsSolveTheLinearizedHeatEquation) {
    JetContext ctx({"x", "t"}, {"u"});
    DiffSystem S(ctx);
    S.add("heat", ctx.u(0, {0, 1}) - ctx.u(0, {2, 0}), ctx.jet(0, {0, 1}));
    EXPECT_TRUE(frechet_apply({Expr(1)}, S)[0].is_zero());
}

TEST(Frechet, RejectsJetDependence) {
    Kdv k;
    EXPECT_THROW((void)frechet_apply({k.ux}, k.S), Error);
}

namespace {

struct Space {
    JetContext ctx{{"t"}, {"x", "y", "z"}};
    Expr x = ctx.u(0), y = ctx.u(1), z = ctx.u(2);
};

}  // namespace

TEST(DynSys, LimitCycleCommutatorCarriesZ) {
    Space s;
    for (const char* g : {"g1", "g2", "g3"}) s.ctx.add_function(g, 3);
    auto g = [&](const char* n) { return apply(n, {s.x, s.y, s.z}); };
    const Expr r2 = pow(s.x, 2) + pow(s.y, 2);
    const DynSys F{&s.ctx, {s.x * (1 - r2) - s.y + s.z * g("g1"), s.y * (1 - r2) + s.x + s.z * g("g2"), s.z * g("g3")}};
    const auto psi = ds_commutator(F, {s.y, -s.x, Expr(0)});
    for (const auto& p : psi) {
        const auto fs = factor_split(p);
        EXPECT_TRUE(std::find(fs.begin(), fs.end(), s.z) != fs.end()) << p.str();
        EXPECT_TRUE(substitute(p, {{s.z.symbol(), Expr(0)}}).is_zero());
    }
    const Expr G1 = g("g2") - s.y * derivative_of("g1", {1, 0, 0}, {s.x, s.y, s.z}) +
                    s.x * derivative_of("g1", {0, 1, 0}, {s.x, s.y, s.z});
    EXPECT_TRUE(proportional(psi[0], s.z * G1));
}

TEST(DynSys, TimeEvolutionIsASymmetry) {
    Space s;
    const DynSys F{&s.ctx, {s.y * s.z, exp(s.x) - s.z, pow(s.x, 2) * s.y}};
    for (const auto& p : ds_commutator(F, F.f)) EXPECT_TRUE(p.is_zero());
}

TEST(DynSys, GeneralRotationFamily) {
    Space s;
    for (const char* f : {"f", "g", "h"}) s.ctx.add_function(f, 2);
    const Expr r2 = pow(s.x, 2) + pow(s.y, 2), v = s.z * exp(-s.y);
    const Expr f = apply("f", {r2, v}), g = apply("g", {r2, v}), h = apply("h", {r2, v});
    const DynSys F{&s.ctx, {s.x * f + s.y * g, s.y * f - s.x * g, s.z * h + s.y * s.z * f - s.x * s.z * g}};
    for (const auto& p : ds_commutator(F, {s.y, -s.x, -s.x * s.z})) EXPECT_TRUE(p.is_zero()) << p.str();
}

TEST(DynSys, ChainStepMatchesCommutator) {
    Space s;
    const DynSys F{&s.ctx, {s.x * (1 - s.z) - s.y, s.y + pow(s.x, 2) * s.z, s.z * s.y - 1}};
    const std::vector<Expr> phi{s.y, -s.x, s.x * s.z};
    const auto psi = ds_commutator(F, phi);
    const DiffSystem S = ds_as_system(F);
    const VectorField X = VectorField::point("X", {Expr(0)}, phi);
    for (int a = 0; a < 3; ++a) {
        const Expr step = S.restrict(apply_prolonged(X, S.equations()[a].expr, s.ctx));
        EXPECT_TRUE((step - psi[a]).is_zero()) << step.str() << " vs " << psi[a].str();
    }
}

TEST(Series, ExactSymmetryIteratesVanishOnShell) {
    Kdv k;
    const auto rows = exp_series_terms(k.exact(), k.S, 2);
    ASSERT_EQ(rows.size(), 1u);
    ASSERT_EQ(rows[0].size(), 2u);
    for (const auto& e : rows[0]) EXPECT_TRUE(k.S.restrict(e).is_zero());
}

TEST(Series, FirstTermIsRawStepOne) {
    Heat h;
    const auto rows = exp_series_terms(h.field(), h.S, 1);
    const ChainResult r = partial_chain(h.field(), h.S);
    EXPECT_EQ(rows[0][0], apply_prolonged(h.field(), h.S.equations()[0].expr, h.ctx));
    EXPECT_EQ(h.S.restrict(rows[0][0]), r.steps[0].restricted);
}

TEST(Series, HeatIteratesVanishOnFamily) {
    Heat h;
    const Symbol c = h.ctx.add_constant("c");
    const Expr L(h.ctx.group_parameter());
    const Ansatz fam{"wave", {Expr(c) * exp(-h.x * L + h.t * L * L)}, {c}, true, {}};
    const VerifyVerdict v = verify_series(fam, h.field(), h.S, 2);
    EXPECT_TRUE(v.passed());
}

TEST(Engine, ExactnessDetection) {
    Kdv k;
    const ChainResult exact = partial_chain(k.exact(), k.S);
    EXPECT_EQ(exact.status, ChainStatus::Exact);
    EXPECT_EQ(exact.system.size(), k.S.size());
    Heat h;
    EXPECT_NE(exact_symmetry_check(h.field(), h.S).verdict, Verdict::SymbolicallyZero);
    EXPECT_GT(partial_chain(h.field(), h.S).system.size(), h.S.size());
}
