// Operator interface: validate scenarios, run seeds, aggregate trace files.
// Exit codes: 0 success, 1 validation failure, 2 runtime failure.

#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "strainsim/strainsim.hpp"

namespace fs = std::filesystem;
using namespace strainsim;

namespace {

constexpr const char* kVersion = "strainsim 0.1.0";

struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write: " + path.string());
    out << content;
    if (!out) throw RuntimeFailure("write failed: " + path.string());
}

std::vector<std::uint64_t> parse_seed_range(const std::string& spec) {
    auto dots = spec.find("..");
    if (dots == std::string::npos)
        throw CLI::ValidationError("--seeds", "expected A..B, got " + spec);
    std::uint64_t a = std::stoull(spec.substr(0, dots));
    std::uint64_t b = std::stoull(spec.substr(dots + 2));
    if (b < a) throw CLI::ValidationError("--seeds", "empty range: " + spec);
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
}

int cmd_validate(const std::string& scenario_path) {
    if (!fs::exists(scenario_path)) {
        std::cerr << "no such file: " << scenario_path << "\n";
        return 2;
    }
    try {
        Scenario sc = load_scenario_file(scenario_path);
        auto issues = validate(sc);
        if (issues.empty()) {
            std::cout << "ok: " << scenario_path << "\n";
            return 0;
        }
        for (const auto& i : issues)
            std::cout << scenario_path << ":" << i.line << ": " << i.message << "\n";
        return 1;
    } catch (const ParseError& e) {
        std::cout << scenario_path << ": " << e.what() << "\n";
        return 1;
    }
}

int cmd_run(const std::string& scenario_path, const std::vector<std::uint64_t>& seeds,
            const std::string& out_dir, const std::set<std::string>& emit) {
    if (!fs::exists(scenario_path)) {
        std::cerr << "no such file: " << scenario_path << "\n";
        return 2;
    }
    Scenario sc;
    try {
        sc = load_scenario_file(scenario_path);
        auto issues = validate(sc);
        if (!issues.empty()) {
            for (const auto& i : issues)
                std::cout << scenario_path << ":" << i.line << ": " << i.message << "\n";
            return 1;
        }
    } catch (const ParseError& e) {
        std::cout << scenario_path << ": " << e.what() << "\n";
        return 1;
    }

    fs::create_directories(out_dir);
    for (std::uint64_t seed : seeds) {
        Trace trace = run(sc, seed);
        Summary summary = metrics(trace);

        const std::string base = sc.name + "_seed" + std::to_string(seed);
        const fs::path dir(out_dir);
        if (emit.count("trace")) write_file(dir / (base + ".trace"), serialize_trace(trace));
        if (emit.count("summary")) write_file(dir / (base + ".summary"), summary_text(summary));
        if (emit.count("infection"))
            write_file(dir / (base + "_infection.csv"), infection_csv(summary));
        if (emit.count("transfers"))
            write_file(dir / (base + "_transfers.csv"), transfers_csv(summary));

        // wall-clock and inputs live here, never in the data files
        std::ostringstream manifest;
        std::time_t now = std::time(nullptr);
        char stamp[32];
        std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
        manifest << "tool = " << kVersion << "\n"
                 << "scenario_path = " << scenario_path << "\n"
                 << "scenario_hash = " << sc.scenario_hash << "\n"
                 << "seed = " << seed << "\n"
                 << "written_at = " << stamp << "\n";
        write_file(dir / (base + ".manifest"), manifest.str());

        std::cout << "== " << sc.name << " seed " << seed << " ==\n" << summary_text(summary);
    }
    return 0;
}

int cmd_report(const std::vector<std::string>& trace_paths, const std::string& out_file) {
    std::vector<Summary> summaries;
    std::string scenario_hash;
    for (const auto& path : trace_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw RuntimeFailure("cannot open trace: " + path);
        Trace trace = parse_trace(in);
        if (scenario_hash.empty())
            scenario_hash = trace.scenario_hash;
        else if (scenario_hash != trace.scenario_hash)
            throw IncompatibleTraces(path + " was produced by a different scenario");
        summaries.push_back(metrics(trace));
    }
    const std::string csv = aggregate_csv(aggregate_summaries(summaries));
    if (out_file.empty())
        std::cout << csv;
    else
        write_file(out_file, csv);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator of self-compiling, mutating, proximity-spreading apps"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto* validate_cmd = app.add_subcommand("validate", "Check a scenario file");
    std::string validate_path;
    validate_cmd->add_option("scenario", validate_path, "scenario file")->required();

    auto* run_cmd = app.add_subcommand("run", "Run a scenario and write artifacts");
    std::string run_path, seeds_spec, out_dir = ".", emit_spec = "trace,summary";
    std::uint64_t seed = 1;
    bool seed_given = false;
    run_cmd->add_option("scenario", run_path, "scenario file")->required();
    run_cmd->add_option("--seed", seed, "single seed")->each([&](const std::string&) {
        seed_given = true;
    });
    run_cmd->add_option("--seeds", seeds_spec, "seed range A..B");
    run_cmd->add_option("--out", out_dir, "output directory");
    run_cmd->add_option("--emit", emit_spec, "comma list: trace,summary,infection,transfers");

    auto* report_cmd = app.add_subcommand("report", "Aggregate metrics across trace files");
    std::vector<std::string> trace_paths;
    std::string report_out;
    report_cmd->add_option("traces", trace_paths, "trace files")->required()->expected(-1);
    report_cmd->add_option("--out", report_out, "write CSV here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (validate_cmd->parsed()) return cmd_validate(validate_path);
        if (run_cmd->parsed()) {
            if (seed_given && !seeds_spec.empty()) {
                std::cerr << "--seed and --seeds are mutually exclusive\n";
                return 1;
            }
            std::vector<std::uint64_t> seeds =
                seeds_spec.empty() ? std::vector<std::uint64_t>{seed} : parse_seed_range(seeds_spec);
            std::set<std::string> emit;
            std::istringstream emits(emit_spec);
            std::string item;
            while (std::getline(emits, item, ',')) {
                if (item != "trace" && item != "summary" && item != "infection" &&
                    item != "transfers") {
                    std::cerr << "unknown emit kind: " << item << "\n";
                    return 1;
                }
                emit.insert(item);
            }
            return cmd_run(run_path, seeds, out_dir, emit);
        }
        if (report_cmd->parsed()) return cmd_report(trace_paths, report_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
