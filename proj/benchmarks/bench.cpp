#include <benchmark/benchmark.h>

#include <fstream>
#include <sstream>

#include "psym/dsl.hpp"
#include "psym/engine.hpp"
#include "psym/verify.hpp"

using namespace psym;

namespace {

void BM_LaplaceRotationChain(benchmark::State& state) {
    JetContext ctx({"y", "x"}, {"u"});
    ctx.add_function("g", 1);
    const Expr g = apply("g", {ctx.u(0)});
    DiffSystem S(ctx);
    S.add("laplace", ctx.u(0, {0, 2}) + ctx.u(0, {2, 0}) + g * ctx.u(0, {0, 3}));
    ChainOptions o;
    o.restrict = RestrictMode::Chain;
    o.nonzero = {g};
    const VectorField X = VectorField::point("X", {-ctx.x(1), ctx.x(0)}, {Expr(0)});
    for (auto _ : state) benchmark::DoNotOptimize(partial_chain(X, S, o).order);
}
BENCHMARK(BM_LaplaceRotationChain)->Unit(benchmark::kMillisecond);

void BM_KdvScalingChain(benchmark::State& state) {
    JetContext ctx({"x", "t"}, {"u"});
    const Expr a(ctx.add_parameter("a")), b(ctx.add_parameter("b")), c(ctx.add_parameter("c"));
    DiffSystem S(ctx);
    S.add("kdv", ctx.u(0, {0, 1}) + ctx.u(0, {3, 0}) + ctx.u(0) * ctx.u(0, {1, 0}), ctx.jet(0, {0, 1}));
    ChainOptions o;
    o.max_order = 3;
    const VectorField X = VectorField::point("X", {b * ctx.x(0), c * ctx.x(1)}, {a * ctx.u(0)});
    for (auto _ : state) benchmark::DoNotOptimize(partial_chain(X, S, o).applications);
}
BENCHMARK(BM_KdvScalingChain)->Unit(benchmark::kMillisecond);

void BM_Prolongation(benchmark::State& state) {
    JetContext ctx({"x", "y"}, {"u"});
    const Expr x = ctx.x(0), y = ctx.x(1), u = ctx.u(0);
    const VectorField X = VectorField::point("X", {y * u, -x}, {x * y + pow(u, 2)});
    const MultiIndex J{static_cast<int>(state.range(0)), 1};
    for (auto _ : state) benchmark::DoNotOptimize(prolong_coefficient(X, 0, J, ctx));
}
BENCHMARK(BM_Prolongation)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

void BM_HeteroclinicRk4(benchmark::State& state) {
    JetContext ctx({"t"}, {"x", "y", "z"});
    const Expr x = ctx.u(0), y = ctx.u(1), z = ctx.u(2), w = 1 - z * exp(-y);
    const DynSys F{&ctx, {x * w, y * w,
                          -z + y * z * w - pow(z, 2) * exp(-y) + (pow(x, 2) + pow(y, 2)) * exp(y) / 2 +
                              Expr(Rational(3, 2)) * pow(z, 2) * exp(-y)}};
    for (auto _ : state) benchmark::DoNotOptimize(integrate_ds(F, {1.2, 1.0, 2.0}, 0, 10, 1e-3).states.size());
}
BENCHMARK(BM_HeteroclinicRk4)->Unit(benchmark::kMillisecond);

void BM_ParseProblem(benchmark::State& state) {
    std::ifstream in(PSYM_PROBLEMS "/heteroclinic.psym");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    for (auto _ : state) benchmark::DoNotOptimize(parse_problem(text).tasks.size());
}
BENCHMARK(BM_ParseProblem);

}  // namespace
BENCHMARK_MAIN();
