// lab: runs one experiment campaign, or checks a directory of manifests.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "tnlab/errors.hpp"
#include "tnlab/experiments.hpp"
#include "tnlab/parallel.hpp"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kCriteriaFailed = 1, kInputError = 2, kSolverAbort = 3 };

// A manifest can be passed as a config: its resolved config is rerun as-is.
tnlab::Json config_from(const tnlab::Json& doc) {
    if (doc.is_object() && doc.contains("schema_version") && doc.contains("config")) return doc["config"];
    return doc;
}

int report(const std::vector<tnlab::CriterionStatus>& statuses, bool skip_missing) {
    int code = kOk;
    for (const auto& s : statuses) {
        if (skip_missing && s.status == "missing") continue;
        std::cout << s.id << " " << s.status << "  " << s.detail << "\n";
        if (s.status == "fail") code = kCriteriaFailed;
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"transport-noise lab"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
    bool check = false;
    bool resolve_only = false;
    std::string chosen;
    for (const auto& id : tnlab::experiment_ids()) {
        auto* sub = app.add_subcommand(id, "run the " + id + " campaign");
        sub->add_option("--config", config_path, "JSON config or a previous manifest")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--workers", workers, "worker threads (default: LAB_WORKERS or hardware)")->check(CLI::NonNegativeNumber);
        sub->add_option("--out", out_dir, "output directory")->default_val("results");
        sub->add_flag("--check", check, "exit status reflects the acceptance criteria this run covers");
        sub->add_flag("--resolve", resolve_only, "print the resolved config and exit without running");
        sub->callback([&chosen, id] { chosen = id; });
    }
    std::string manifest_dir;
    auto* acc = app.add_subcommand("check", "evaluate A1-A9 over the manifests in a directory");
    acc->add_option("dir", manifest_dir, "directory holding *_manifest.json")->required()->check(CLI::ExistingDirectory);
    acc->callback([&chosen] { chosen = "check"; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (chosen == "check") {
            std::vector<tnlab::Json> manifests;
            for (const auto& entry : fs::directory_iterator(manifest_dir)) {
                const auto name = entry.path().filename().string();
                if (name.size() > 14 && name.ends_with("_manifest.json")) manifests.push_back(tnlab::load_json(entry.path()));
            }
            return report(tnlab::check_acceptance(manifests), false);
        }
        if (resolve_only) {
            std::cout << tnlab::resolve_config(chosen, config_from(tnlab::load_json(config_path))).dump(2) << "\n";
            return kOk;
        }
        tnlab::RunOptions opts;
        const bool seed_given = app.get_subcommand(chosen)->count("--seed") > 0;
        if (seed_given) opts.seed = seed;
        opts.workers = workers;
        opts.out_dir = out_dir;
        const auto manifest = tnlab::run_experiment(chosen, config_from(tnlab::load_json(config_path)), opts);
        std::cout << "wrote " << (fs::path(out_dir) / (chosen + "_manifest.json")).string() << " ("
                  << manifest["wall_clock_seconds"].get<double>() << " s)\n";
        if (!check) return kOk;
        std::vector<tnlab::CriterionStatus> statuses;
        for (const auto& c : manifest["criteria"]) {
            statuses.push_back({c["id"], c["status"], c["detail"], c["measured"]});
        }
        return report(statuses, true);
    } catch (const tnlab::InputError& e) {
        std::cerr << "lab: invalid input: " << e.what() << "\n";
        return kInputError;
    } catch (const tnlab::SolverAbort& e) {
        std::cerr << "lab: solver aborted: " << e.what() << "\n";
        return kSolverAbort;
    }
}
