#include <cmath>
#include <sstream>

#include "json.hpp"
#include "psym/runner.hpp"

namespace psym {

namespace {

using nlohmann::json;

json sides(const std::vector<SideRecord>& cs) {
    json a = json::array();
    for (const auto& c : cs) a.push_back({{"kind", c.kind}, {"expr", c.expr}, {"step", c.step}});
    return a;
}

json finite(double v) {
    if (std::isfinite(v)) return v;
    return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

json task_json(const TaskResult& r) {
    json j;
    j["task"] = r.task;
    j["targets"] = r.targets;
    j["status"] = r.status;
    j["definite"] = r.definite;
    if (r.order) j["order"] = *r.order;
    if (r.inconsistent_step) j["inconsistent_step"] = *r.inconsistent_step;
    if (!r.reason.empty()) j["reason"] = r.reason;
    if (!r.chain.empty() || r.task == "chain" || r.task == "discrete-chain") {
        json chain = json::array();
        for (const auto& s : r.chain) {
            json st{{"r", s.r},
                    {"component", s.component},
                    {"raw", s.raw},
                    {"restricted", s.restricted},
                    {"reduced", s.reduced},
                    {"verdict", s.verdict},
                    {"side_conditions", sides(s.side_conditions)}};
            if (s.pivot) st["pivot"] = *s.pivot;
            chain.push_back(std::move(st));
        }
        j["chain"] = std::move(chain);
        j["side_conditions"] = sides(r.side_conditions);
    }
    if (!r.verdicts.empty()) {
        json vs = json::array();
        for (const auto& v : r.verdicts) {
            json x{{"name", v.name}, {"verdict", v.verdict}, {"value", finite(v.value)}};
            if (!v.witness.empty()) {
                json w = json::object();
                for (const auto& [k, val] : v.witness) w[k] = finite(val);
                x["witness"] = std::move(w);
            }
            if (!v.residual.empty()) x["residual"] = v.residual;
            vs.push_back(std::move(x));
        }
        j["verdicts"] = std::move(vs);
    }
    if (!r.expressions.empty()) {
        json e = json::array();
        for (const auto& [k, v] : r.expressions) e.push_back({{"name", k}, {"expr", v}});
        j["expressions"] = std::move(e);
    }
    if (!r.metrics.empty()) {
        json m = json::object();
        for (const auto& [k, v] : r.metrics) m[k] = finite(v);
        j["metrics"] = std::move(m);
    }
    if (!r.notes.empty()) j["notes"] = r.notes;
    if (!r.assumptions.empty()) j["assumptions"] = r.assumptions;
    if (!r.expectations.empty()) {
        json e = json::array();
        for (const auto& x : r.expectations)
            e.push_back({{"expect", x.expect}, {"passed", x.passed}, {"detail", x.detail}});
        j["expectations"] = std::move(e);
    }
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

json report_json(const ProblemReport& rep) {
    json j;
    j["problem"] = rep.problem;
    j["engine_version"] = kEngineVersion;
    json results = json::array();
    for (const auto& r : rep.results) results.push_back(task_json(r));
    j["results"] = std::move(results);
    if (!rep.error.empty()) j["error"] = rep.error;
    return j;
}

}  // namespace

std::string emit_report(const ProblemReport& report) { return report_json(report).dump(2) + "\n"; }

std::string emit_report(const std::vector<ProblemReport>& reports) {
    if (reports.size() == 1) return emit_report(reports.front());
    json a = json::array();
    for (const auto& r : reports) a.push_back(report_json(r));
    return a.dump(2) + "\n";
}

std::string emit_text(const std::vector<ProblemReport>& reports) {
    std::ostringstream os;
    for (const auto& rep : reports) {
        os << "problem " << rep.problem << " (engine " << kEngineVersion << ")\n";
        if (!rep.error.empty()) {
            os << "  error: " << rep.error << "\n";
            continue;
        }
        if (rep.results.empty()) os << "  no tasks\n";
        for (const auto& r : rep.results) {
            os << "\n  task " << r.task;
            for (const auto& t : r.targets) os << ' ' << t;
            os << ": " << r.status;
            if (r.order) os << ", order " << *r.order;
            if (!r.reason.empty()) os << " (" << r.reason << ")";
            os << "\n";
            for (const auto& a : r.assumptions) os << "    assume " << a << "\n";
            for (const auto& s : r.chain) {
                os << "    step " << s.r;
                if (s.component > 0) os << "." << s.component;
                os << "  raw:        " << s.raw << "\n";
                os << "            restricted: " << s.restricted << "  [" << s.verdict << "]\n";
                if (s.reduced != s.restricted) os << "            reduced:    " << s.reduced << "\n";
                if (s.pivot) os << "            solved for: " << *s.pivot << "\n";
                for (const auto& c : s.side_conditions) os << "            " << c.kind << ": " << c.expr << "\n";
            }
            for (const auto& [k, v] : r.expressions) os << "    " << k << ": " << v << "\n";
            for (const auto& v : r.verdicts) {
                os << "    " << v.name << ": " << v.verdict;
                if (v.verdict != "symbolically-zero") os << " (value " << v.value << ")";
                if (!v.witness.empty()) {
                    os << " at";
                    for (const auto& [k, val] : v.witness) os << ' ' << k << '=' << val;
                }
                os << "\n";
            }
            for (const auto& [k, v] : r.metrics) os << "    " << k << " = " << v << "\n";
            for (const auto& n : r.notes) os << "    note: " << n << "\n";
            for (const auto& x : r.expectations)
                os << "    expect " << x.expect << ": " << (x.passed ? "pass" : "FAIL") << " (" << x.detail << ")\n";
            if (!r.error.empty()) os << "    error: " << r.error << "\n";
        }
        os << "\n";
    }
    return os.str();
}

}  // namespace psym
