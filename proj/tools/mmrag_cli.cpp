// Thin command-line front end over the mmrag C API. All pipeline work happens
// behind the shared-library boundary; this binary only assembles the run
// configuration and dispatches one command.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmrag/mmrag.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;    // bad flags, config, or input files
constexpr int kExitProvider = 3; // model provider failure

int exit_code_for(int mmrag_code) {
    switch (mmrag_code) {
        case MMRAG_OK:
            return kExitOk;
        case MMRAG_ERR_PROVIDER:
        case MMRAG_ERR_FIXTURE_MISS:
            return kExitProvider;
        default:
            return kExitUsage;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Metadata-filtered vector retrieval and RAG benchmark pipeline"};
    app.fallthrough();

    std::string config_path;
    int workers = 0;
    app.add_option("--config", config_path, "path to the JSON run configuration")
        ->required()
        ->check(CLI::ExistingFile);
    app.add_option("--workers", workers, "worker pool size (overrides config)")
        ->check(CLI::PositiveNumber);
    auto* baseline_flag = app.add_flag("--baseline", "disable metadata filtering (ablation mode)");
    auto* strict_flag = app.add_flag("--strict-accuracy", "raw any-word generation accuracy rule");
    auto* with_baseline_flag =
        app.add_flag("--with-baseline", "eval-retrieval: score a baseline run side by side");

    app.add_subcommand("ingest", "chunk and embed a corpus into a vector store file");
    app.add_subcommand("extract", "extract metadata filters for all benchmark queries");
    app.add_subcommand("retrieve", "run filtered retrieval for all queries");
    app.add_subcommand("eval-retrieval", "score retrieval against gold evidence");
    app.add_subcommand("generate", "generate answers from retrieved context");
    app.add_subcommand("eval-generation", "score generated answers against gold answers");
    app.require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    nlohmann::json config;
    {
        std::ifstream in(config_path);
        if (!in) {
            std::fprintf(stderr, "error: cannot open config file %s\n", config_path.c_str());
            return kExitUsage;
        }
        try {
            in >> config;
        } catch (const nlohmann::json::exception& e) {
            std::fprintf(stderr, "error: config file %s is not valid JSON: %s\n",
                         config_path.c_str(), e.what());
            return kExitUsage;
        }
    }
    if (!config.is_object()) {
        std::fprintf(stderr, "error: config file %s must hold a JSON object\n",
                     config_path.c_str());
        return kExitUsage;
    }

    if (workers > 0) config["workers"] = workers;
    if (baseline_flag->count() > 0) config["baseline"] = true;
    if (strict_flag->count() > 0) config["strict_accuracy"] = true;
    if (with_baseline_flag->count() > 0) config["with_baseline"] = true;

    const std::string command = app.get_subcommands().front()->get_name();
    const std::string config_str = config.dump();

    char* report = nullptr;
    char* err = nullptr;
    int rc = mmrag_run_command(command.c_str(), config_str.c_str(), &report, &err);
    if (rc != MMRAG_OK) {
        std::fprintf(stderr, "error: %s\n", err ? err : "unknown failure");
        mmrag_string_free(err);
        mmrag_string_free(report);
        return exit_code_for(rc);
    }
    if (report) std::printf("%s\n", report);
    mmrag_string_free(report);
    mmrag_string_free(err);
    return kExitOk;
}
