// Runs the acceptance campaigns from configs/ and prints one line per criterion.
// Exit status is nonzero if any selected criterion fails.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <set>

#include "tnlab/errors.hpp"
#include "tnlab/experiments.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria A1-A9"};
    std::vector<std::string> only;
    std::string config_dir = TNLAB_CONFIG_DIR;
    std::string out_dir = "acceptance_results";
    int workers = 0;
    app.add_option("--only", only, "criteria to evaluate (default: all)");
    app.add_option("--configs", config_dir, "directory with <experiment>.json")->check(CLI::ExistingDirectory);
    app.add_option("--out", out_dir, "where runs are written");
    app.add_option("--workers", workers, "worker threads");
    CLI11_PARSE(app, argc, argv);

    const std::map<std::string, std::string> experiment_of{{"A1", "acw"},         {"A2", "mixing"},
                                                           {"A3", "lyapunov"},    {"A4", "ergodicity"},
                                                           {"A5", "steady"},      {"A6", "convergence"},
                                                           {"A7", "convergence"}, {"A8", "particles"},
                                                           {"A9", "convergence"}};
    std::set<std::string> selected(only.begin(), only.end());
    if (selected.empty()) selected.insert(tnlab::criterion_ids().begin(), tnlab::criterion_ids().end());
    std::set<std::string> experiments;
    for (const auto& id : selected) {
        auto it = experiment_of.find(id);
        if (it == experiment_of.end()) {
            std::cerr << "unknown criterion " << id << "\n";
            return 2;
        }
        experiments.insert(it->second);
    }

    std::vector<tnlab::Json> manifests;
    for (const auto& e : experiments) {
        tnlab::RunOptions opts;
        opts.workers = workers;
        opts.out_dir = fs::path(out_dir) / e;
        try {
            manifests.push_back(tnlab::run_experiment(e, tnlab::load_json(fs::path(config_dir) / (e + ".json")), opts));
        } catch (const std::exception& ex) {
            std::cout << e << " aborted: " << ex.what() << "\n";
        }
    }

    int failures = 0;
    for (const auto& s : tnlab::check_acceptance(manifests)) {
        if (!selected.count(s.id)) continue;
        const bool pass = s.status == "pass";
        failures += !pass;
        std::cout << s.id << " " << (pass ? "PASS" : s.status == "fail" ? "FAIL" : "MISSING") << "  " << s.detail
                  << "  " << s.measured.dump() << "\n";
    }
    return failures == 0 ? 0 : 1;
}
