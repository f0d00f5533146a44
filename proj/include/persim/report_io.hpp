// Report rendering: json (the stable machine-readable schema), csv and
// text. Agent tables are emitted strictly per agent; the schema has no slot
// for a cross-agent outcome row.

#pragma once

#include <chrono>
#include <sstream>
#include <string>

#include <json.hpp>

#include "persim/audit.hpp"
#include "persim/scenarios.hpp"

namespace persim::io {

using json = nlohmann::json;
using scenarios::AuditResult;
using scenarios::Report;

inline std::string join_sequence(const std::vector<std::string>& key) {
    std::string flat;
    for (const auto& s : key) flat += (flat.empty() ? "" : "|") + s;
    return flat;
}

inline json audit_to_json(const AuditResult& audit) {
    json j;
    j["verdict"] = audit.verdict;
    json trace = json::array();
    for (const auto& step : audit.trace) {
        json s;
        s["rule"] = step.rule;
        s["agent"] = step.agent;
        s["premises"] = step.premises;
        s["conclusion"] = step.conclusion;
        if (step.verified_probability) s["verified_probability"] = *step.verified_probability;
        trace.push_back(std::move(s));
    }
    j["trace"] = std::move(trace);
    if (audit.blocked) {
        j["blocked"] = {{"rule", audit.blocked->rule},
                        {"description", audit.blocked->description}};
    }
    return j;
}

inline json report_to_json(const Report& report, const AuditResult* audit = nullptr,
                           bool with_timestamp = false) {
    json j;
    j["schema"] = "persim-report/1";
    j["scenario"] = report.scenario;
    j["trials"] = report.trials;
    j["seed"] = report.seed;
    j["engine_ran"] = report.engine_ran;
    j["oracle_ran"] = report.oracle_ran;
    if (with_timestamp) {
        const auto now = std::chrono::system_clock::now();
        j["timestamp"] =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    }

    json agents;
    for (const auto& [name, section] : report.agents) {
        json a;
        json empirical = json::array();
        for (const auto& [key, f] : section.empirical) {
            empirical.push_back({{"sequence", key}, {"frequency", f}});
        }
        a["empirical"] = std::move(empirical);
        if (section.analytic) {
            json analytic = json::array();
            for (const auto& [key, p] : section.analytic->probabilities) {
                analytic.push_back({{"sequence", key}, {"probability", p}});
            }
            a["analytic"] = std::move(analytic);
        }
        if (section.comparison) {
            json entries = json::array();
            for (const auto& e : section.comparison->entries) {
                entries.push_back({{"sequence", e.sequence},
                                   {"probability", e.probability},
                                   {"frequency", e.frequency},
                                   {"z", e.z},
                                   {"bound", e.bound},
                                   {"passed", e.passed}});
            }
            a["comparison"] = {{"pass", section.comparison->pass},
                               {"entries", std::move(entries)}};
        }
        if (!section.action_frequencies.empty()) {
            a["actions"] = section.action_frequencies;
        }
        agents[name] = std::move(a);
    }
    j["agents"] = std::move(agents);
    j["derived"] = report.derived;
    j["oracle_reference"] = report.oracle_reference;
    if (report.collapse_freedom.checked) {
        j["collapse_freedom"] = {{"passed", report.collapse_freedom.passed},
                                 {"seed_deviation", report.collapse_freedom.seed_deviation},
                                 {"replay_deviation", report.collapse_freedom.replay_deviation}};
    }
    json asserts = json::array();
    for (const auto& a : report.assertions) {
        asserts.push_back({{"step", a.step_index},
                           {"passed", a.passed},
                           {"worst_error", a.worst_error},
                           {"failed_trials", a.failed_trials}});
    }
    j["assertions"] = std::move(asserts);
    if (audit) j["audit"] = audit_to_json(*audit);
    j["all_passed"] = report.all_passed();
    return j;
}

inline std::string render_json(const Report& report, const AuditResult* audit = nullptr,
                               bool with_timestamp = false) {
    return report_to_json(report, audit, with_timestamp).dump(2) + "\n";
}

inline std::string render_csv(const Report& report) {
    std::ostringstream out;
    out.precision(17);
    out << "kind,agent,key,probability,frequency,z,bound,passed\n";
    for (const auto& [name, section] : report.agents) {
        if (section.comparison) {
            for (const auto& e : section.comparison->entries) {
                out << "outcome," << name << ',' << join_sequence(e.sequence) << ','
                    << e.probability << ',' << e.frequency << ',' << e.z << ',' << e.bound << ','
                    << (e.passed ? 1 : 0) << '\n';
            }
        } else {
            for (const auto& [key, f] : section.empirical) {
                out << "outcome," << name << ',' << join_sequence(key) << ",," << f << ",,,\n";
            }
            if (section.analytic) {
                for (const auto& [key, p] : section.analytic->probabilities) {
                    out << "analytic," << name << ',' << join_sequence(key) << ',' << p
                        << ",,,,\n";
                }
            }
        }
        for (const auto& [action, f] : section.action_frequencies) {
            out << "action," << name << ',' << action << ",," << f << ",,,\n";
        }
    }
    for (const auto& [key, v] : report.derived) {
        out << "derived,," << key << ',' << v << ",,,,\n";
    }
    for (const auto& [key, v] : report.oracle_reference) {
        out << "oracle_reference,," << key << ',' << v << ",,,,\n";
    }
    if (report.collapse_freedom.checked) {
        out << "collapse_freedom,,seed_deviation," << report.collapse_freedom.seed_deviation
            << ",,,," << (report.collapse_freedom.passed ? 1 : 0) << '\n';
        out << "collapse_freedom,,replay_deviation," << report.collapse_freedom.replay_deviation
            << ",,,," << (report.collapse_freedom.passed ? 1 : 0) << '\n';
    }
    for (const auto& a : report.assertions) {
        out << "assertion,,step_" << a.step_index << ',' << a.worst_error << ",,,,"
            << (a.passed ? 1 : 0) << '\n';
    }
    return out.str();
}

inline std::string render_text(const Report& report, const AuditResult* audit = nullptr) {
    std::ostringstream out;
    out.precision(6);
    out << "scenario: " << report.scenario << "  trials: " << report.trials
        << "  seed: " << report.seed << '\n';
    for (const auto& [name, section] : report.agents) {
        out << "\nagent " << name << ":\n";
        if (section.comparison) {
            for (const auto& e : section.comparison->entries) {
                out << "  " << join_sequence(e.sequence) << "  p=" << e.probability
                    << "  f=" << e.frequency << "  z=" << e.z
                    << (e.passed ? "" : "  OUT OF BOUNDS") << '\n';
            }
        } else {
            for (const auto& [key, f] : section.empirical) {
                out << "  " << join_sequence(key) << "  f=" << f << '\n';
            }
        }
        for (const auto& [action, f] : section.action_frequencies) {
            out << "  action " << action << "  f=" << f << '\n';
        }
    }
    if (!report.derived.empty()) {
        out << "\nderived:\n";
        for (const auto& [key, v] : report.derived) out << "  " << key << " = " << v << '\n';
    }
    if (!report.oracle_reference.empty()) {
        out << "\noracle reference:\n";
        for (const auto& [key, v] : report.oracle_reference) {
            out << "  " << key << " = " << v << '\n';
        }
    }
    if (report.collapse_freedom.checked) {
        out << "\ncollapse freedom: " << (report.collapse_freedom.passed ? "pass" : "FAIL")
            << "  (seed dev " << report.collapse_freedom.seed_deviation << ", replay dev "
            << report.collapse_freedom.replay_deviation << ")\n";
    }
    for (const auto& a : report.assertions) {
        out << "assertion at step " << a.step_index << ": " << (a.passed ? "pass" : "FAIL")
            << "  worst error " << a.worst_error << '\n';
    }
    if (audit) {
        out << "\naudit verdict: " << audit->verdict << '\n';
        for (const auto& step : audit->trace) {
            out << "  [" << step.rule << "] " << step.agent << ": " << step.conclusion;
            if (step.verified_probability) out << "  (p = " << *step.verified_probability << ")";
            out << '\n';
        }
        if (audit->blocked) {
            out << "  [C] blocked: " << audit->blocked->description << '\n';
        }
    }
    out << "\nresult: " << (report.all_passed() ? "pass" : "FAIL") << '\n';
    return out.str();
}

} // namespace persim::io
