// Command-line runner: pick a scenario (built-in or script file), run the
// engine against the oracle, write a report, exit 0 only if everything
// holds together.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "persim/audit.hpp"
#include "persim/report_io.hpp"
#include "persim/scenarios.hpp"
#include "persim/script.hpp"

namespace {

using namespace persim;

int run(const CLI::App& app, const std::string& scenario_name, const std::string& script_path,
        std::uint64_t trials, std::uint64_t seed, const std::string& format,
        const std::string& out_path, const std::string& agent_filter,
        const std::string& audit_mode, unsigned jobs, bool no_timestamp, bool oracle_only,
        bool engine_only) {
    (void)app;
    scenarios::ScenarioScript script;
    if (!scenario_name.empty()) {
        script = scenarios::builtin(scenario_name);
    } else {
        std::ifstream in(script_path);
        if (!in) {
            std::cerr << "error: cannot open script file '" << script_path << "'\n";
            return 1;
        }
        script = scenarios::script_from_json(nlohmann::json::parse(in));
    }

    if (!agent_filter.empty() && !script.has_agent(agent_filter)) {
        std::cerr << "error: no agent named '" << agent_filter << "' in this scenario\n";
        return 1;
    }
    if (!audit_mode.empty()) {
        if (audit_mode != "consol" && audit_mode != "absolute") {
            std::cerr << "error: --audit takes 'consol' or 'absolute'\n";
            return 1;
        }
        if (script.name != "frauchiger_renner") {
            std::cerr << "error: --audit applies to the frauchiger_renner scenario\n";
            return 1;
        }
        if (oracle_only) {
            std::cerr << "error: --audit needs engine trials; drop --oracle-only\n";
            return 1;
        }
    }

    scenarios::RunOptions options;
    options.trials = trials;
    options.seed = seed;
    options.jobs = jobs;
    options.oracle_only = oracle_only;
    options.engine_only = engine_only;

    scenarios::Report report = scenarios::run_scenario(script, options);

    std::optional<scenarios::AuditResult> audit;
    if (!audit_mode.empty()) {
        const auto mode = audit_mode == "consol" ? scenarios::AuditMode::ConSol
                                                 : scenarios::AuditMode::AbsoluteFacts;
        // Scan trials for a run whose final asks heard okbar then ok; at
        // probability 1/12 per trial this terminates almost immediately.
        const std::uint64_t scan_cap = std::max<std::uint64_t>(trials, 2000);
        for (std::uint64_t t = 0; t < scan_cap && !audit; ++t) {
            auto trial = oracle::run_engine_trial(script, seed, t);
            const auto& heard = trial.signatures.at("auditor");
            if (heard.size() == 2 && heard[0] == "okbar" && heard[1] == "ok") {
                audit = scenarios::fr_rule_audit(trial.signatures, mode);
            }
        }
        if (!audit) {
            std::cerr << "error: no okbar/ok run found within " << scan_cap << " trials\n";
            return 2;
        }
    }

    if (!agent_filter.empty()) {
        for (auto it = report.agents.begin(); it != report.agents.end();) {
            it = it->first == agent_filter ? std::next(it) : report.agents.erase(it);
        }
    }

    std::string rendered;
    const scenarios::AuditResult* audit_ptr = audit ? &*audit : nullptr;
    if (format == "json") {
        rendered = io::render_json(report, audit_ptr, !no_timestamp);
    } else if (format == "csv") {
        rendered = io::render_csv(report);
    } else if (format == "text") {
        rendered = io::render_text(report, audit_ptr);
    } else {
        std::cerr << "error: unknown format '" << format << "'\n";
        return 1;
    }

    if (out_path.empty()) {
        std::cout << rendered;
    } else {
        std::ofstream out(out_path, std::ios::binary);
        if (!out) {
            std::cerr << "error: cannot write '" << out_path << "'\n";
            return 1;
        }
        out << rendered;
    }
    return report.all_passed() ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Observer-relative quantum measurement simulator"};

    std::string scenario_name;
    std::string script_path;
    std::uint64_t trials = 1000;
    std::uint64_t seed = 0;
    std::string format = "text";
    std::string out_path;
    std::string agent_filter;
    std::string audit_mode;
    unsigned jobs = 1;
    bool no_timestamp = false;
    bool oracle_only = false;
    bool engine_only = false;

    auto* scenario_opt =
        app.add_option("--scenario", scenario_name,
                       "Built-in scenario: epr_singlet, chsh, wigner_friend, "
                       "frauchiger_renner, sync_actions");
    auto* script_opt =
        app.add_option("--script", script_path, "Path to a scenario script (json)");
    scenario_opt->excludes(script_opt);
    script_opt->excludes(scenario_opt);

    app.add_option("--trials", trials, "Number of sampled trials")
        ->check(CLI::Range(std::uint64_t{1}, std::numeric_limits<std::uint64_t>::max()));
    app.add_option("--seed", seed, "Sampling seed (64-bit)");
    app.add_option("--format", format, "Report format: json, csv or text")
        ->check(CLI::IsMember({"json", "csv", "text"}));
    app.add_option("--out", out_path, "Report output path (default stdout)");
    app.add_option("--agent", agent_filter, "Restrict the report to one agent's section");
    app.add_option("--audit", audit_mode,
                   "Run the rule audit on an okbar/ok run: consol or absolute");
    app.add_option("--jobs", jobs, "Worker threads for trials")
        ->check(CLI::Range(1u, 1024u));
    app.add_flag("--no-timestamp", no_timestamp, "Omit the timestamp from json reports");
    app.add_flag("--oracle-only", oracle_only, "Skip engine sampling; analytic values only");
    app.add_flag("--engine-only", engine_only, "Skip oracle analytics; sampled values only");

    CLI11_PARSE(app, argc, argv);

    if (scenario_name.empty() == script_path.empty()) {
        std::cerr << "error: pass exactly one of --scenario or --script\n";
        return 1;
    }

    try {
        return run(app, scenario_name, script_path, trials, seed, format, out_path, agent_filter,
                   audit_mode, jobs, no_timestamp, oracle_only, engine_only);
    } catch (const persim::AssertionFailed& e) {
        std::cerr << "assertion failed: " << e.what() << "\n";
        return 2;
    } catch (const persim::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
