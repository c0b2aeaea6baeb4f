#include <gtest/gtest.h>

#include "psym/jet.hpp"
#include "psym/verify.hpp"
#include "support.hpp"

using namespace psym;
using psym::test::P;

namespace {

struct PlaneTest : ::testing::Test {
    JetContext ctx{{"x", "y"}, {"u"}};
    Expr x = ctx.x(0), y = ctx.x(1), u = ctx.u(0);
    Expr j(int a, int b) const { return ctx.u(0, {a, b}); }
    Expr g() const { return apply("g", {u}); }
    VectorField rotation() const { return VectorField::point("X", {y, -x}, {Expr(0)}); }
    PlaneTest() { ctx.add_function("g", 1); }
};

}  // namespace

TEST_F(PlaneTest, TotalDerivativeOfBase) { EXPECT_EQ(total_derivative(u, 0, ctx), j(1, 0)); }

TEST_F(PlaneTest, TotalDerivativeChainRule) {
    EXPECT_EQ(total_derivative(g(), 0, ctx), derivative_of("g", {1}, {u}) * j(1, 0));
}

TEST_F(PlaneTest, TotalDerivativeOfPerturbedLaplacian) {
    const Expr delta = j(2, 0) + j(0, 2) + g() * j(3, 0);
    const Expr d = total_derivative(delta, 0, ctx);
    EXPECT_EQ(d, j(3, 0) + j(1, 2) + derivative_of("g", {1}, {u}) * j(1, 0) * j(3, 0) + g() * j(4, 0));

    // Oracle: realize g and u as polynomials and differentiate the composite in x.
    FunctionTable gdef;
    const Symbol s = Symbol::make("%s", SymbolKind::Parameter);
    gdef["g"] = {{s}, 2 * pow(Expr(s), 3) - Expr(s) + Expr(Rational(1, 3))};
    const Expr U = pow(x, 4) * y - 3 * pow(x, 2) * pow(y, 3) + x + 2;
    const Ansatz a{"poly", {U}, {}, false, {}};
    const Expr lhs = instantiate(substitute_ansatz(d, a, ctx), gdef);
    const Expr rhs = diff(instantiate(substitute_ansatz(delta, a, ctx), gdef), x.symbol());
    EXPECT_TRUE((lhs - rhs).is_zero());
}

TEST_F(PlaneTest, JetCoordinatesAreSymmetric) {
    EXPECT_EQ(*ctx.lookup("u_xy"), *ctx.lookup("u_yx"));
    EXPECT_EQ(total_derivative(j(1, 0), 1, ctx), total_derivative(j(0, 1), 0, ctx));
}

TEST_F(PlaneTest, RotationProlongation) {
    EXPECT_EQ(apply_prolonged(rotation(), j(1, 2), ctx), -2 * j(2, 1) + j(0, 3));
    EXPECT_EQ(apply_prolonged(rotation(), j(0, 3), ctx), -3 * j(1, 2));
}

TEST_F(PlaneTest, RotationFirstOrderCoefficients) {
    // X* u_x = phi^x with phi^x = D_x(-y u_x + x u_y) + y u_xx - x u_xy = u_y
    EXPECT_EQ(prolong_coefficient(rotation(), 0, {1, 0}, ctx), j(0, 1));
    EXPECT_EQ(prolong_coefficient(rotation(), 0, {0, 1}, ctx), -j(1, 0));
}

TEST_F(PlaneTest, TranslationHasVanishingCoefficients) {
    const VectorField X = VectorField::point("X", {Expr(1), Expr(0)}, {Expr(0)});
    for (const MultiIndex& J : {MultiIndex{1, 0}, MultiIndex{0, 1}, MultiIndex{2, 1}, MultiIndex{0, 3}})
        EXPECT_TRUE(prolong_coefficient(X, 0, J, ctx).is_zero());
}

TEST_F(PlaneTest, GeneralizedCoefficient) {
    const Expr a(ctx.add_parameter("a"));
    const VectorField X = VectorField::generalized("X", 2, {j(2, 0) - a * u});
    EXPECT_EQ(prolong_coefficient(X, 0, {1, 0}, ctx), j(3, 0) - a * j(1, 0));
}

TEST_F(PlaneTest, EvolutionaryFormOfTranslation) {
    const VectorField X = VectorField::point("X", {Expr(1), Expr(0)}, {Expr(0)});
    const VectorField Q = evolutionary_form(X, ctx);
    EXPECT_EQ(Q.type, VectorField::Type::Generalized);
    EXPECT_EQ(Q.phi[0], -j(1, 0));
}

TEST(Evolutionary, HeatField) {
    JetContext ctx({"x", "t"}, {"u"});
    const Expr x = ctx.x(0), t = ctx.x(1), u = ctx.u(0);
    const VectorField X = VectorField::point("X", {2 * t, Expr(0)}, {-x * u});
    EXPECT_EQ(evolutionary_form(X, ctx).phi[0], -x * u - 2 * t * ctx.u(0, {1, 0}));
}

TEST(Evolutionary, BoussinesqField) {
    JetContext ctx({"x", "t"}, {"u"});
    const Expr t = ctx.x(1);
    const VectorField X = VectorField::point("X", {t, Expr(1)}, {-2 * t});
    EXPECT_EQ(evolutionary_form(X, ctx).phi[0], -2 * t - ctx.u(0, {0, 1}) - t * ctx.u(0, {1, 0}));
}

TEST(Prolongation, KdvScalingMatchesRegrouping) {
    JetContext ctx({"x", "t"}, {"u"});
    const Expr a(ctx.add_parameter("a")), b(ctx.add_parameter("b")), c(ctx.add_parameter("c"));
    const Expr u = ctx.u(0), ux = ctx.u(0, {1, 0}), ut = ctx.u(0, {0, 1}), uxxx = ctx.u(0, {3, 0});
    const Expr delta = ut + uxxx + u * ux;
    const VectorField X = VectorField::point("X", {b * ctx.x(0), c * ctx.x(1)}, {a * u});
    const Expr raw = apply_prolonged(X, delta, ctx);
    EXPECT_TRUE((raw - ((a - c) * delta + (a - b + c) * u * ux - (3 * b - c) * uxxx)).is_zero());
}

TEST_F(PlaneTest, PointFieldsRejectJetCoefficients) {
    const VectorField X = VectorField::point("X", {j(1, 0), Expr(0)}, {Expr(0)});
    EXPECT_THROW(check_field(X, ctx), Error);
}

TEST_F(PlaneTest, GeneralizedOrderIsCapped) {
    const VectorField X = VectorField::generalized("X", 2, {j(5, 0)});
    EXPECT_THROW(check_field(X, ctx), Error);
}

TEST_F(PlaneTest, ReflectionOfPerturbedLaplacian) {
    const DiscreteMap R{"R", {-x, y}, {u}, 2};
    const Expr delta = j(2, 0) + j(0, 2) + g() * j(3, 0);
    EXPECT_EQ(prolong_discrete(R, delta, ctx), j(2, 0) + j(0, 2) - g() * j(3, 0));
}

TEST_F(PlaneTest, IdentityMap) {
    const DiscreteMap R{"I", {x, y}, {u}, 1};
    const Expr e = g() * j(1, 2) + x * pow(j(1, 0), 2);
    EXPECT_EQ(prolong_discrete(R, e, ctx), e);
}

TEST_F(PlaneTest, TranslationActsOnExplicitCoordinatesOnly) {
    const DiscreteMap R{"T", {x + Expr(Rational(7, 2)), y}, {u}, std::nullopt};
    EXPECT_EQ(prolong_discrete(R, j(1, 0), ctx), j(1, 0));
    EXPECT_EQ(prolong_discrete(R, x * j(1, 0), ctx), (x + Expr(Rational(7, 2))) * j(1, 0));
}

TEST_F(PlaneTest, UnsupportedMaps) {
    for (const DiscreteMap& R : {DiscreteMap{"A", {x + u, y}, {u}, std::nullopt},
                                 DiscreteMap{"B", {pow(x, 3), y}, {u}, std::nullopt}}) {
        try {
            (void)prolong_discrete(R, j(1, 0), ctx);
            FAIL() << "expected an error for " << R.name;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::UnsupportedMap);
        }
    }
}

TEST_F(PlaneTest, MixingMapTransformsDerivatives) {
    // x~ = y, y~ = x swaps the derivatives
    const DiscreteMap R{"S", {y, x}, {2 * u}, 2};
    EXPECT_EQ(prolong_discrete(R, j(2, 1), ctx), 2 * j(1, 2));
}
