#include "psym/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace psym {

namespace {

std::vector<SideRecord> side_records(const std::vector<SideCondition>& cs) {
    std::vector<SideRecord> out;
    for (const auto& c : cs) out.push_back({to_string(c.kind), c.expr.str(), c.step});
    return out;
}

VerdictRecord verdict_record(const std::string& name, const ZeroStatus& st) {
    return {name, to_string(st.verdict), st.value, st.witness, st.verdict == Verdict::SymbolicallyZero ? "" : st.residual};
}

std::string aggregate(const VerifyVerdict& v) { return to_string(v.verdict()); }

// Everything a task needs, with the assumptions of its position applied.
struct Scope {
    const ProblemSpec& spec;
    const TaskSpec& task;
    const RunOptions& run;

    const JetContext& ctx() const { return *spec.ctx; }
    const SymbolMap& subs() const { return task.assumptions.substitutions; }

    Expr sub(const Expr& e) const { return subs().empty() ? e : substitute(e, subs()); }

    DiffSystem system() const {
        DiffSystem S(ctx());
        for (const auto& eq : spec.equations) S.add(eq.name, sub(eq.expr), eq.solvefor);
        return S;
    }

    VectorField field(const std::string& name) const {
        VectorField X = spec.fields.at(name);
        for (auto& e : X.xi) e = sub(e);
        for (auto& e : X.phi) e = sub(e);
        return X;
    }

    DiscreteMap map(const std::string& name) const {
        DiscreteMap R = spec.maps.at(name);
        for (auto& e : R.xmap) e = sub(e);
        for (auto& e : R.umap) e = sub(e);
        return R;
    }

    Ansatz ansatz(const std::string& name) const {
        Ansatz a = spec.ansatze.at(name);
        for (auto& e : a.u) e = sub(e);
        return a;
    }

    std::optional<std::string> option(const std::string& key) const {
        if (auto it = task.options.find(key); it != task.options.end()) return it->second;
        return std::nullopt;
    }

    double number(const std::string& key, double fallback) const {
        auto v = option(key);
        if (!v) return fallback;
        try {
            std::size_t used = 0;
            const double d = std::stod(*v, &used);
            if (used == v->size()) return d;
        } catch (const std::exception&) {
        }
        throw Error(ErrorKind::Contract, "option " + key + " needs a number, got " + *v);
    }

    bool flag(const std::string& key, bool fallback) const {
        auto v = option(key);
        if (!v) return fallback;
        if (*v == "true" || *v == "1") return true;
        if (*v == "false" || *v == "0") return false;
        throw Error(ErrorKind::Contract, "option " + key + " needs true or false");
    }

    SampleOptions sampling() const {
        SampleOptions so;
        if (run.seed) so.seed = *run.seed;
        if (run.tol) so.tol = *run.tol;
        if (auto t = option("tol")) so.tol = number("tol", so.tol);
        if (!spec.realizations.empty()) so.functions = &spec.realizations;
        return so;
    }

    VerifyOptions verify_options() const {
        VerifyOptions vo;
        vo.sampling = sampling();
        if (!spec.realizations.empty()) vo.realizations = &spec.realizations;
        return vo;
    }

    ChainOptions chain_options() const {
        ChainOptions o;
        o.max_order = static_cast<int>(number("max_order", run.max_order.value_or(o.max_order)));
        o.strong = flag("strong", run.strong);
        if (auto r = option("restrict")) {
            if (*r == "chain")
                o.restrict = RestrictMode::Chain;
            else if (*r != "full")
                throw Error(ErrorKind::Contract, "restrict must be full or chain");
        }
        o.nonzero = task.assumptions.nonzero;
        o.sampling = sampling();
        return o;
    }

    // Numeric values for constants and lambda: options first, then 1.
    std::map<std::string, double> constant_values(const Ansatz& a) const {
        std::map<std::string, double> v;
        for (const auto& c : a.constants) v[c.name()] = number(c.name(), 1.0);
        v["lambda"] = number("lambda", 0.0);
        for (const auto& p : ctx().parameters())
            if (option(p.name())) v[p.name()] = number(p.name(), 0.0);
        return v;
    }
};

DynSys dynsys_of(const DiffSystem& S) {
    const JetContext& ctx = S.context();
    if (ctx.p() != 1) throw Error(ErrorKind::Contract, "dynamical systems need exactly one independent variable");
    DynSys F{&ctx, std::vector<Expr>(ctx.q())};
    std::vector<bool> seen(ctx.q());
    for (const auto& eq : S.equations()) {
        const Symbol& v = eq.pivot;
        if (v.order() != 1 || seen[v.alpha()])
            throw Error(ErrorKind::Contract, "equation " + eq.name + " is not of the form u' = f(u)");
        seen[v.alpha()] = true;
        F.f[v.alpha()] = eq.rhs;
    }
    for (int a = 0; a < ctx.q(); ++a)
        if (!seen[a]) throw Error(ErrorKind::Contract, "no equation for the derivative of " + ctx.dependents()[a]);
    F.check();
    return F;
}

void fill_chain(TaskResult& r, const ChainResult& c) {
    r.status = to_string(c.status);
    r.definite = c.status != ChainStatus::Inconclusive;
    r.order = c.order;
    r.inconsistent_step = c.inconsistent_step;
    r.reason = c.reason;
    for (const auto& s : c.steps) {
        StepRecord rec{s.r, s.component, s.raw.str(), s.restricted.str(), s.reduced.str(), to_string(s.verdict),
                       std::nullopt, side_records(s.side_conditions)};
        if (s.pivot) rec.pivot = s.pivot->name();
        r.chain.push_back(std::move(rec));
    }
    r.side_conditions = side_records(c.side_conditions);
    r.metrics.emplace_back("applications", c.applications);
}

std::string expectation_text(const Expectation& x) {
    switch (x.kind) {
        case Expectation::Kind::Status: return "status=" + x.value;
        case Expectation::Kind::Verdict: return "verdict=" + x.value;
        case Expectation::Kind::Order: return "order=" + std::to_string(x.number);
        case Expectation::Kind::Restricted:
            return "restricted[" + std::to_string(x.number) + "] = " + x.expr.str();
    }
    return "";
}

bool verdict_matches(const std::string& want, const std::string& got) {
    if (want == "zero") return got == "symbolically-zero" || got == "numerically-zero";
    return want == got;
}

void check_expectations(TaskResult& r, const TaskSpec& t, const ChainResult* chain) {
    for (const auto& x : t.expects) {
        ExpectationRecord rec{expectation_text(x), false, ""};
        switch (x.kind) {
            case Expectation::Kind::Status:
                rec.passed = r.status == x.value;
                rec.detail = "got " + r.status;
                break;
            case Expectation::Kind::Verdict:
                rec.passed = verdict_matches(x.value, r.status);
                rec.detail = "got " + r.status;
                break;
            case Expectation::Kind::Order:
                if (!r.order) {
                    rec.detail = "expectation-unsatisfiable: task reports no order";
                } else {
                    rec.passed = *r.order == x.number;
                    rec.detail = "got " + std::to_string(*r.order);
                }
                break;
            case Expectation::Kind::Restricted: {
                const ChainStep* step = nullptr;
                if (chain)
                    for (const auto& s : chain->steps)
                        if (s.r == x.number) {
                            step = &s;
                            break;
                        }
                if (!step) {
                    rec.detail = "expectation-unsatisfiable: chain step " + std::to_string(x.number) +
                                 " was never produced";
                    break;
                }
                const Expr want = substitute(x.expr, t.assumptions.substitutions);
                if (proportional(step->restricted, want)) {
                    rec.passed = true;
                    rec.detail = "matches the restricted step";
                } else if (proportional(step->reduced, want)) {
                    rec.passed = true;
                    rec.detail = "matches the restricted step after dropping authorized factors";
                } else {
                    rec.detail = "got " + step->restricted.str();
                }
                break;
            }
        }
        r.expectations.push_back(std::move(rec));
    }
}

class Runner {
public:
    Runner(const ProblemSpec& spec, const RunOptions& opts) : spec_(spec), opts_(opts) {}

    TaskResult run(const TaskSpec& t) {
        TaskResult r;
        r.task = t.kind;
        r.targets = t.targets;
        r.assumptions = t.assumptions.text;
        const ChainResult* chain = nullptr;
        try {
            Scope s{spec_, t, opts_};
            const std::string& k = t.kind;
            if (k == "chain" || k == "discrete-chain") {
                const DiffSystem S = s.system();
                ChainResult c = k == "chain" ? partial_chain(s.field(t.targets[0]), S, s.chain_options())
                                             : discrete_chain(s.map(t.targets[0]), S, s.chain_options());
                fill_chain(r, c);
                last_chain_ = std::make_unique<ChainResult>(std::move(c));
                chain = last_chain_.get();
            } else if (k == "exact") {
                const ZeroStatus st = exact_symmetry_check(s.field(t.targets[0]), s.system(), s.sampling());
                r.verdicts.push_back(verdict_record(t.targets[0], st));
                r.status = st.zero() ? "exact" : st.verdict == Verdict::Nonzero ? "not-exact" : "inconclusive";
                r.definite = st.verdict != Verdict::Unknown;
            } else if (k == "conditional") {
                const DiffSystem C = conditional_system(s.field(t.targets[0]), s.system());
                for (const auto& eq : C.equations()) {
                    r.expressions.emplace_back(eq.name, eq.expr.str());
                    r.expressions.emplace_back(eq.name + " solved", eq.pivot.name() + " = " + eq.rhs.str());
                }
                r.status = "computed";
            } else if (k == "frechet") {
                const VectorField X = s.field(t.targets[0]);
                const DiffSystem S = s.system();
                const auto out = frechet_apply(X.phi, S);
                for (std::size_t i = 0; i < out.size(); ++i)
                    r.expressions.emplace_back(S.equations()[i].name, out[i].str());
                r.status = "computed";
                if (t.targets.size() > 1) {
                    const Ansatz a = s.ansatz(t.targets[1]);
                    std::vector<std::pair<std::string, Expr>> exprs;
                    for (std::size_t i = 0; i < out.size(); ++i) exprs.emplace_back(S.equations()[i].name, out[i]);
                    const VerifyVerdict v = verify_expressions(a, exprs, *spec_.ctx, s.verify_options());
                    add_verdicts(r, v);
                }
            } else if (k == "ds-commutator") {
                const DynSys F = dynsys_of(s.system());
                const VectorField X = s.field(t.targets[0]);
                for (const auto& xi : X.xi)
                    if (!xi.is_zero()) throw Error(ErrorKind::Contract, "ds-commutator needs a field with xi = 0");
                const auto psi = ds_commutator(F, X.phi);
                VerifyVerdict v;
                for (int a = 0; a < F.n(); ++a) {
                    const std::string name = "psi_" + spec_.ctx->dependents()[a];
                    r.expressions.emplace_back(name, psi[a].str());
                    std::string fs;
                    for (const auto& f : factor_split(psi[a])) fs += (fs.empty() ? "" : " | ") + f.str();
                    if (!psi[a].is_zero()) r.expressions.emplace_back(name + " factors", fs);
                    v.checks.push_back({name, is_zero(psi[a], ZeroMode::SymbolicThenNumeric, s.sampling())});
                }
                add_verdicts(r, v);
            } else if (k == "verify") {
                const Ansatz a = s.ansatz(t.targets[0]);
                VerifyVerdict v;
                if (s.option("system") == std::optional<std::string>("chain")) {
                    if (!last_chain_) throw Error(ErrorKind::Contract, "system=chain needs an earlier chain task");
                    v = verify_ansatz(a, last_chain_->system, s.verify_options());
                    r.notes.push_back("checked against the base system plus the chain equations");
                } else {
                    v = verify_ansatz(a, s.system(), s.verify_options());
                }
                add_verdicts(r, v);
            } else if (k == "orbit") {
                orbit(r, s);
            } else if (k == "series-check") {
                const int kk = static_cast<int>(s.number("k", last_chain_ ? last_chain_->order + 2 : 2));
                const VerifyVerdict v =
                    verify_series(s.ansatz(t.targets[0]), s.field(t.targets[1]), s.system(), kk, s.verify_options());
                add_verdicts(r, v);
            } else if (k == "variational") {
                variational(r, s);
            }
        } catch (const Error& e) {
            r.status = "error";
            r.definite = false;
            r.error = std::string(to_string(e.kind())) + ": " + e.what();
        }
        check_expectations(r, t, chain);
        return r;
    }

private:
    static void add_verdicts(TaskResult& r, const VerifyVerdict& v) {
        for (const auto& c : v.checks) r.verdicts.push_back(verdict_record(c.name, c.status));
        r.notes.insert(r.notes.end(), v.notes.begin(), v.notes.end());
        r.status = aggregate(v);
        r.definite = v.verdict() != Verdict::Unknown;
    }

    void orbit(TaskResult& r, const Scope& s) {
        const Ansatz a = s.ansatz(s.task.targets[0]);
        const VectorField X = s.field(s.task.targets[1]);
        const JetContext& ctx = *spec_.ctx;
        const VerifyVerdict v = verify_orbit_ode(a, X, ctx, s.verify_options());
        add_verdicts(r, v);

        const auto Q = characteristic_on(a, X, ctx);
        bool invariant = true;
        for (int al = 0; al < ctx.q(); ++al) {
            r.expressions.emplace_back("characteristic_" + ctx.dependents()[al], Q[al].str());
            invariant = invariant && is_zero(Q[al], ZeroMode::SymbolicThenNumeric, s.sampling()).zero();
        }
        if (!invariant) r.notes.push_back("the characteristic does not vanish on the family: no member is invariant");

        if (!s.option("shift")) return;
        const double shift = s.number("shift", 0.0);
        const int n = static_cast<int>(s.number("n", 64));
        std::vector<double> lo, hi;
        for (const auto& x : ctx.independents()) {
            auto it = a.box.find(x.name());
            if (it == a.box.end()) throw Error(ErrorKind::Contract, "orbit closure needs a domain for " + x.name());
            lo.push_back(it->second.first);
            hi.push_back(it->second.second);
        }
        std::map<std::string, double> vals = s.constant_values(a);
        const double l0 = vals["lambda"];
        std::vector<Grid> g0, g1;
        for (const auto& U : a.u) {
            vals["lambda"] = l0;
            g0.push_back(sample_grid(U, ctx, lo, hi, std::vector<int>(lo.size(), n), vals, &spec_.realizations));
            vals["lambda"] = l0 + v.orientation * shift;
            g1.push_back(sample_grid(U, ctx, lo, hi, std::vector<int>(lo.size(), n), vals, &spec_.realizations));
        }
        vals["lambda"] = l0;
        TransformOptions to;
        to.max_lambda = s.number("max_lambda", to.max_lambda);
        const TransformResult tr = finite_transform(X, g0, shift, ctx, vals, &spec_.realizations, to);
        double diff = 0.0;
        for (std::size_t i = 0; i < g1.size(); ++i) diff = std::max(diff, max_difference(tr.u[i], g1[i]));
        const double tol = s.number("closure_tol", 1e-4);
        ZeroStatus st;
        st.verdict = diff <= tol ? Verdict::NumericallyZero : Verdict::Nonzero;
        st.value = diff;
        r.verdicts.push_back(verdict_record("closure", st));
        r.metrics.emplace_back("closure_max_difference", diff);
        r.metrics.emplace_back("clipped_nodes", static_cast<double>(tr.clipped));
        r.metrics.emplace_back("total_nodes", static_cast<double>(tr.total));
        r.notes.push_back("orbit closure tolerance is an implementation choice");
        if (st.verdict == Verdict::Nonzero) r.status = "nonzero";
    }

    void variational(TaskResult& r, const Scope& s) {
        const JetContext& ctx = *spec_.ctx;
        const DynSys F = dynsys_of(s.system());
        const VectorField X = s.field(s.task.targets[0]);
        const Ansatz a = s.ansatz(*s.option("from"));
        const double t0 = s.number("tstart", 0.0);
        const double t1 = s.number("tstop", 10.0);
        const double h = s.number("h", 1e-3);
        const double tol = s.number("vtol", 1e-6);
        std::map<std::string, double> vals = s.constant_values(a);
        const std::string tname = ctx.independent(0).name();
        std::vector<CompiledExpr> U;
        for (const auto& e : a.u) U.emplace_back(e, std::vector<std::string>{tname}, vals, &spec_.realizations);
        std::vector<double> u0;
        for (const auto& f : U) u0.push_back(f(&t0));

        const Trajectory tr = integrate_ds(F, u0, t0, t1, h, vals, &spec_.realizations);
        double worst = 0.0;
        for (std::size_t k = 0; k < tr.states.size(); ++k) {
            const double t = tr.time(k);
            for (std::size_t al = 0; al < U.size(); ++al)
                worst = std::max(worst, std::abs(tr.states[k][al] - U[al](&t)));
        }
        ZeroStatus traj;
        traj.verdict = worst <= tol ? Verdict::NumericallyZero : Verdict::Nonzero;
        traj.value = worst;
        VerifyVerdict v = variational_check(F, X.phi, u0, t0, t1, h, tol, vals, &spec_.realizations);
        v.checks.insert(v.checks.begin(), EquationCheck{"trajectory", traj});
        add_verdicts(r, v);
        r.metrics.emplace_back("trajectory_max_error", worst);
        r.metrics.emplace_back("rk4_error_estimate", tr.error_estimate);
    }

    const ProblemSpec& spec_;
    const RunOptions& opts_;
    std::unique_ptr<ChainResult> last_chain_;
};

}  // namespace

ProblemReport run_problem(const ProblemSpec& spec, const std::string& name, const RunOptions& opts) {
    ProblemReport rep;
    rep.problem = name;
    Runner runner(spec, opts);
    for (const auto& t : spec.tasks) rep.results.push_back(runner.run(t));
    return rep;
}

ProblemReport run_file(const std::string& path, const RunOptions& opts) {
    ProblemReport rep;
    rep.problem = std::filesystem::path(path).stem().string();
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        rep.error = "io: file not found: " + path;
        return rep;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        const ProblemSpec spec = parse_problem(buf.str());
        return run_problem(spec, rep.problem, opts);
    } catch (const ParseError& e) {
        rep.error = format_diagnostics(e, path);
        if (!rep.error.empty() && rep.error.back() == '\n') rep.error.pop_back();
    }
    return rep;
}

int exit_code(const std::vector<ProblemReport>& reports) {
    bool mismatch = false;
    for (const auto& rep : reports) {
        if (!rep.error.empty()) return 2;
        for (const auto& r : rep.results) {
            if (!r.error.empty()) return 2;
            bool status_expected = false;
            for (const auto& x : r.expectations) {
                if (!x.passed) mismatch = true;
                if (x.passed && (x.expect.rfind("status=", 0) == 0 || x.expect.rfind("verdict=", 0) == 0))
                    status_expected = true;
            }
            if (!r.definite && !status_expected) mismatch = true;
        }
    }
    return mismatch ? 1 : 0;
}

}  // namespace psym
