#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>

#include "CLI11.hpp"
#include "psym/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Partial symmetries of differential equations"};
    app.set_version_flag("--version", std::string(psym::kEngineVersion));
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run the tasks of one or more problem files");
    std::vector<std::string> files;
    bool pretty = false;
    psym::RunOptions opts;
    int max_order = 0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    std::string out;
    run->add_option("files", files, "Problem files")->required();
    run->add_flag("--pretty", pretty, "Human-readable output instead of JSON");
    auto* mo = run->add_option("--max-order", max_order, "Maximum chain length")->check(CLI::PositiveNumber);
    run->add_flag("--strong", opts.strong, "Skip restriction to the solution manifold");
    auto* to = run->add_option("--tol", tol, "Relative tolerance of numeric zero tests")->check(CLI::PositiveNumber);
    auto* so = run->add_option("--seed", seed, "Seed for numeric sampling");
    run->add_option("--out", out, "Write the report to a file");

    CLI11_PARSE(app, argc, argv);

    if (*mo) opts.max_order = max_order;
    if (*to) opts.tol = tol;
    if (*so) opts.seed = seed;

    std::vector<std::string> order = files;
    std::sort(order.begin(), order.end());
    std::vector<std::future<psym::ProblemReport>> jobs;
    for (const auto& f : order) jobs.push_back(std::async(std::launch::async, [f, &opts] { return psym::run_file(f, opts); }));
    std::vector<psym::ProblemReport> reports;
    for (auto& j : jobs) reports.push_back(j.get());

    for (const auto& r : reports)
        if (!r.error.empty()) std::cerr << r.error << "\n";

    const std::string text = pretty ? psym::emit_text(reports) : psym::emit_report(reports);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream os(out, std::ios::binary);
        if (!os) {
            std::cerr << "io: cannot write " << out << "\n";
            return 2;
        }
        os << text;
    }
    return psym::exit_code(reports);
}
