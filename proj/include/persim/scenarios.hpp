// Built-in scripted protocols, the Monte-Carlo scenario runner with its
// report, and the reasoning audit over rules Q, S and C.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "persim/oracle.hpp"
#include "persim/observers.hpp"
#include "persim/script.hpp"

namespace persim::scenarios {

using oracle::AssertionOutcome;
using oracle::Comparison;
using oracle::EngineTrial;
using oracle::TranscriptDistribution;
using oracle::TranscriptKey;

// ---------------------------------------------------------------------------
// Built-in scenarios

struct BuiltinParams {
    // wigner_friend: "interference" (default) or "ask_first".
    std::optional<std::string> variant;
    // chsh: analyzer angles a1, a2, b1, b2.
    std::optional<std::array<double, 4>> chsh_angles;
    // sync_actions: outcome label -> action.
    std::optional<std::map<std::string, std::string>> action_map;
};

inline constexpr std::array<double, 4> kChshAngles = {0.0, M_PI / 2.0, M_PI / 4.0,
                                                      3.0 * M_PI / 4.0};

namespace detail {

inline const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

inline PrepareStep singlet_prep() {
    PrepareStep p;
    p.global = std::vector<cplx>{0.0, kInvSqrt2, -kInvSqrt2, 0.0};
    return p;
}

// Projector pair {|v><v|, 1 - |v><v|} used for interference measurements.
inline ProjectorSpec interference_spec(std::vector<std::string> regs, const std::vector<cplx>& v,
                                       const std::string& hit_label,
                                       const std::string& miss_label) {
    Matrix p = outer_projector(v);
    Matrix rest = Matrix::identity(v.size()) - p;
    return ProjectorSpec::explicit_set(std::move(regs),
                                       {{hit_label, std::move(p)}, {miss_label, std::move(rest)}});
}

inline ScenarioScript epr_singlet() {
    ScenarioScript s;
    s.name = "epr_singlet";
    s.layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    s.agents = {"alice", "bob"};
    s.steps.push_back(singlet_prep());
    AssertDistributionStep fresh;
    fresh.agent = "alice";
    fresh.projectors = ProjectorSpec::spin("A", 0.0);
    fresh.expected = {{"+", 0.5}, {"-", 0.5}};
    s.steps.push_back(fresh);
    s.steps.push_back(ObserveStep{"alice", ProjectorSpec::spin("A", 0.0)});
    s.steps.push_back(ObserveStep{"bob", ProjectorSpec::spin("B", 0.0)});
    s.steps.push_back(AskStep{"alice", "bob", 3});
    s.metadata.separations = {{2, 3}};
    return s;
}

inline ScenarioScript chsh(const std::array<double, 4>& angles) {
    ScenarioScript s;
    s.name = "chsh";
    s.layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    s.agents = {"alice", "bob"};
    s.steps.push_back(singlet_prep());
    ChooseObserveStep alice;
    alice.agent = "alice";
    alice.options = {{"a1", ProjectorSpec::spin("A", angles[0])},
                     {"a2", ProjectorSpec::spin("A", angles[1])}};
    s.steps.push_back(alice);
    ChooseObserveStep bob;
    bob.agent = "bob";
    bob.options = {{"b1", ProjectorSpec::spin("B", angles[2])},
                   {"b2", ProjectorSpec::spin("B", angles[3])}};
    s.steps.push_back(bob);
    s.steps.push_back(AskStep{"alice", "bob", 2});
    s.metadata.separations = {{1, 2}};
    return s;
}

inline ScenarioScript wigner_friend(const std::string& variant) {
    if (variant != "interference" && variant != "ask_first") {
        throw BadParams("wigner_friend variant must be 'interference' or 'ask_first'");
    }
    ScenarioScript s;
    s.name = "wigner_friend";
    s.layout = RegisterLayout::of({{"P", 2}});
    s.agents = {"friend", "wigner"};
    PrepareStep prep;
    prep.global = std::vector<cplx>{kInvSqrt2, kInvSqrt2};
    s.steps.push_back(prep);
    s.steps.push_back(ObserveStep{"friend", ProjectorSpec::spin("P", 0.0)});

    // The friend's measurement leaves {particle, friend-memory} in
    // (|+,+> + |-,->)/sqrt(2); this is the state the interference
    // measurement projects on.
    const std::vector<cplx> sup = {kInvSqrt2, 0.0, 0.0, kInvSqrt2};
    if (variant == "ask_first") {
        s.steps.push_back(AskStep{"wigner", "friend", 1});
    } else {
        AssertDistributionStep certain;
        certain.agent = "wigner";
        certain.projectors =
            interference_spec({"P", "mem@1"}, sup, "superposed-branch", "rest");
        certain.expected = {{"superposed-branch", 1.0}, {"rest", 0.0}};
        s.steps.push_back(certain);
    }
    s.steps.push_back(ObserveStep{
        "wigner", interference_spec({"P", "mem@1"}, sup, "superposed-branch", "rest")});
    return s;
}

inline ScenarioScript frauchiger_renner() {
    ScenarioScript s;
    s.name = "frauchiger_renner";
    s.layout = RegisterLayout::of({{"coin", 2}, {"spin", 2}});
    s.agents = {"fbar", "f", "wbar", "w", "auditor"};

    PrepareStep prep;
    prep.product = {{"coin", {std::sqrt(1.0 / 3.0), std::sqrt(2.0 / 3.0)}},
                    {"spin", {1.0, 0.0}}};
    s.steps.push_back(prep);

    s.steps.push_back(
        ObserveStep{"fbar", ProjectorSpec::computational({"coin"}, {"h", "t"})});

    // Coin-controlled spin preparation: heads leaves |down>, tails rotates
    // to (|down> + |up>)/sqrt(2).
    Matrix ctrl(4, 4);
    ctrl(0, 0) = 1.0;
    ctrl(1, 1) = 1.0;
    ctrl(2, 2) = kInvSqrt2;
    ctrl(2, 3) = kInvSqrt2;
    ctrl(3, 2) = kInvSqrt2;
    ctrl(3, 3) = -kInvSqrt2;
    s.steps.push_back(UnitaryStep{{"coin", "spin"}, std::move(ctrl)});

    s.steps.push_back(
        ObserveStep{"f", ProjectorSpec::computational({"spin"}, {"down", "up"})});

    const std::vector<cplx> okbar = {kInvSqrt2, 0.0, 0.0, -kInvSqrt2};
    s.steps.push_back(ObserveStep{
        "wbar", interference_spec({"coin", "mem@1"}, okbar, "okbar", "failbar")});

    const std::vector<cplx> ok = {kInvSqrt2, 0.0, 0.0, -kInvSqrt2};
    s.steps.push_back(
        ObserveStep{"w", interference_spec({"spin", "mem@3"}, ok, "ok", "fail")});

    s.steps.push_back(AskStep{"auditor", "wbar", 4});
    s.steps.push_back(AskStep{"auditor", "w", 5});
    return s;
}

inline ScenarioScript sync_actions(const std::map<std::string, std::string>& action_map) {
    ScenarioScript s;
    s.name = "sync_actions";
    s.layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    s.agents = {"alice", "bob"};
    s.steps.push_back(singlet_prep());
    s.steps.push_back(ObserveStep{"alice", ProjectorSpec::spin("A", 0.0)});
    s.steps.push_back(ObserveStep{"bob", ProjectorSpec::spin("B", 0.0)});
    s.metadata.separations = {{1, 2}};
    s.metadata.action_map = action_map;
    return s;
}

} // namespace detail

inline ScenarioScript builtin(const std::string& name, const BuiltinParams& params = {}) {
    if (name == "epr_singlet") return detail::epr_singlet();
    if (name == "chsh") return detail::chsh(params.chsh_angles.value_or(kChshAngles));
    if (name == "wigner_friend") {
        return detail::wigner_friend(params.variant.value_or("interference"));
    }
    if (name == "frauchiger_renner") return detail::frauchiger_renner();
    if (name == "sync_actions") {
        return detail::sync_actions(
            params.action_map.value_or(std::map<std::string, std::string>{{"+", "tea"},
                                                                          {"-", "wine"}}));
    }
    throw UnknownScenario("no built-in scenario named '" + name + "'");
}

inline std::vector<std::string> builtin_names() {
    return {"epr_singlet", "chsh", "wigner_friend", "frauchiger_renner", "sync_actions"};
}

// Replace every choose_observe with the assigned fixed choice.
inline ScenarioScript fix_choices(const ScenarioScript& script,
                                  const std::map<std::size_t, std::string>& choice_by_step) {
    ScenarioScript fixed = script;
    for (auto& [index, choice] : choice_by_step) {
        if (index >= fixed.steps.size()) throw BadParams("choice index out of range");
        auto* c = std::get_if<ChooseObserveStep>(&fixed.steps[index]);
        if (!c) throw BadParams("step " + std::to_string(index) + " is not a choose_observe");
        bool found = false;
        for (const auto& opt : c->options) {
            if (opt.choice == choice) {
                fixed.steps[index] = ObserveStep{c->agent, opt.projectors};
                found = true;
                break;
            }
        }
        if (!found) throw BadParams("no option labeled '" + choice + "'");
    }
    return fixed;
}

// ---------------------------------------------------------------------------
// Reports

struct AgentSection {
    std::map<TranscriptKey, double> empirical;
    std::optional<TranscriptDistribution> analytic;
    std::optional<Comparison> comparison;
    // Outcome-mapped actions (sync_actions); frequencies by action name.
    std::map<std::string, double> action_frequencies;
};

struct CollapseFreedomResult {
    bool checked = false;
    bool passed = false;
    double seed_deviation = 0.0;
    double replay_deviation = 0.0;
};

struct AssertionSummary {
    std::size_t step_index = 0;
    bool passed = true;
    double worst_error = 0.0;
    std::uint64_t failed_trials = 0;
};

struct Report {
    std::string scenario;
    std::uint64_t trials = 0;
    std::uint64_t seed = 0;
    bool engine_ran = false;
    bool oracle_ran = false;
    std::map<std::string, AgentSection> agents;
    std::map<std::string, double> derived;
    std::map<std::string, double> oracle_reference;
    CollapseFreedomResult collapse_freedom;
    std::vector<AssertionSummary> assertions;

    bool all_passed() const {
        for (const auto& [name, section] : agents) {
            if (section.comparison && !section.comparison->pass) return false;
        }
        for (const auto& a : assertions) {
            if (!a.passed) return false;
        }
        if (collapse_freedom.checked && !collapse_freedom.passed) return false;
        return true;
    }
};

// The one conceivable door to a cross-agent outcome table; permanently shut.
[[noreturn]] inline void joint_outcome_table(const Report&, const std::string& first,
                                             const std::string& second) {
    throw ForbiddenComparison("joint outcome table requested for '" + first + "' and '" + second +
                              "'");
}

// ---------------------------------------------------------------------------
// Trial execution

struct TrialRecord {
    std::map<std::string, std::vector<std::string>> signatures;
    std::map<std::size_t, std::string> choices;
    std::vector<AssertionOutcome> assertions;
};

// Two runs of trial 0 under different sampling seeds must leave the global
// state bit-identical, and the recorded history must reproduce it from the
// initial state.
inline CollapseFreedomResult verify_collapse_freedom(const ScenarioScript& script,
                                                     std::uint64_t seed) {
    CollapseFreedomResult result;
    result.checked = true;
    EngineTrial first = oracle::run_engine_trial(script, seed, 0);
    EngineTrial second = oracle::run_engine_trial(script, seed ^ 0x9e3779b97f4a7c15ULL, 0);
    result.seed_deviation = first.sim.global_state().max_abs_diff(second.sim.global_state());
    const StateVector replayed = replay_history(initial_state(script), first.sim.history());
    result.replay_deviation = replayed.max_abs_diff(first.sim.global_state());
    result.passed = result.seed_deviation <= 1e-12 && result.replay_deviation <= 1e-12;
    return result;
}

inline std::vector<TrialRecord> run_trials(const ScenarioScript& script, std::uint64_t trials,
                                           std::uint64_t seed, unsigned jobs = 1) {
    if (trials < 1) throw BadParams("trials must be >= 1");
    std::vector<TrialRecord> records(trials);
    jobs = std::max(1u, jobs);

    auto worker = [&](std::uint64_t begin, std::uint64_t end) {
        for (std::uint64_t t = begin; t < end; ++t) {
            EngineTrial trial = oracle::run_engine_trial(script, seed, t);
            records[t] = TrialRecord{std::move(trial.signatures), std::move(trial.choices),
                                     std::move(trial.assertions)};
        }
    };

    if (jobs == 1 || trials < 2 * jobs) {
        worker(0, trials);
        return records;
    }

    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(jobs);
    const std::uint64_t chunk = (trials + jobs - 1) / jobs;
    for (unsigned j = 0; j < jobs; ++j) {
        const std::uint64_t begin = j * chunk;
        const std::uint64_t end = std::min(trials, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&, j, begin, end] {
            try {
                worker(begin, end);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return records;
}

namespace detail {

inline std::string opposite_spin(const std::string& s) { return s == "+" ? "-" : "+"; }

inline double sign_of(const std::string& s) { return s == "+" ? 1.0 : -1.0; }

inline void summarize_assertions(const std::vector<TrialRecord>& trials, Report& report) {
    std::map<std::size_t, AssertionSummary> by_step;
    for (const auto& trial : trials) {
        for (const auto& a : trial.assertions) {
            AssertionSummary& s = by_step[a.step_index];
            s.step_index = a.step_index;
            s.worst_error = std::max(s.worst_error, a.worst_error);
            if (!a.passed) {
                s.passed = false;
                ++s.failed_trials;
            }
        }
    }
    for (auto& [step, summary] : by_step) report.assertions.push_back(summary);
}

inline void fill_empirical(const std::vector<TrialRecord>& trials, Report& report,
                           const ScenarioScript& script) {
    for (const auto& agent : script.agents) report.agents[agent];
    for (const auto& trial : trials) {
        for (const auto& [agent, signature] : trial.signatures) {
            report.agents[agent].empirical[signature] += 1.0;
        }
    }
    for (auto& [agent, section] : report.agents) {
        for (auto& [key, count] : section.empirical) {
            count /= static_cast<double>(trials.size());
        }
    }
}

inline void fill_analytic_plain(const ScenarioScript& script, Report& report) {
    for (const auto& agent : script.agents) {
        report.agents[agent].analytic = oracle::run_collapse(script, agent, oracle::Mode::Textbook);
    }
}

inline void compare_sections(Report& report) {
    for (auto& [agent, section] : report.agents) {
        if (!section.analytic) continue;
        section.comparison =
            oracle::compare(*section.analytic, section.empirical, report.trials);
    }
}

// --- chsh ------------------------------------------------------------------

struct ChshAnalytics {
    // correlation keyed by "a?b?"
    std::map<std::string, double> correlation;
    TranscriptDistribution alice;
    TranscriptDistribution bob;
    double bob_plus_given_a1 = 0.0;
    double bob_plus_given_a2 = 0.0;
};

inline ChshAnalytics chsh_analytics(const ScenarioScript& script) {
    ChshAnalytics out;
    const std::array<std::string, 2> alice_choices = {"a1", "a2"};
    const std::array<std::string, 2> bob_choices = {"b1", "b2"};
    for (const auto& a : alice_choices) {
        for (const auto& b : bob_choices) {
            const auto fixed = fix_choices(script, {{1, a}, {2, b}});
            const auto alice_dist = oracle::run_collapse(fixed, "alice", oracle::Mode::Textbook);
            double corr = 0.0;
            // Choices are uniform and independent: weight 1/4 per pair.
            for (const auto& [key, p] : alice_dist.probabilities) {
                corr += sign_of(key[0]) * sign_of(key[1]) * p;
                out.alice.probabilities[{a, key[0], key[1]}] += 0.25 * p;
            }
            out.correlation[a + b] = corr;
            const auto bob_dist = oracle::run_collapse(fixed, "bob", oracle::Mode::Textbook);
            double bob_plus = 0.0;
            for (const auto& [key, p] : bob_dist.probabilities) {
                out.bob.probabilities[{b, key[0]}] += 0.25 * p;
                if (key[0] == "+") bob_plus += p;
            }
            if (b == "b1") {
                (a == "a1" ? out.bob_plus_given_a1 : out.bob_plus_given_a2) = bob_plus;
            }
        }
    }
    return out;
}

inline double chsh_combination(const std::map<std::string, double>& e) {
    return e.at("a1b1") - e.at("a1b2") + e.at("a2b1") + e.at("a2b2");
}

inline void reduce_chsh(const ScenarioScript& script, const std::vector<TrialRecord>& trials,
                        Report& report) {
    // Empirical correlations from Alice's record: her own outcome and the
    // answer she heard; the analyzer settings are public event metadata.
    std::map<std::string, double> sum;
    std::map<std::string, double> count;
    std::map<std::string, std::array<double, 2>> bob_by_alice_choice; // {plus, total}
    for (const auto& trial : trials) {
        const std::string pair = trial.choices.at(1) + trial.choices.at(2);
        const auto& alice = trial.signatures.at("alice");
        // signature: [choice, own, heard]
        sum[pair] += sign_of(alice[1]) * sign_of(alice[2]);
        count[pair] += 1.0;
        const auto& bob = trial.signatures.at("bob");
        auto& bucket = bob_by_alice_choice[trial.choices.at(1)];
        if (bob[1] == "+") bucket[0] += 1.0;
        bucket[1] += 1.0;
    }
    std::map<std::string, double> correlation;
    for (const auto& [pair, s] : sum) {
        correlation[pair] = count[pair] > 0 ? s / count[pair] : 0.0;
        report.derived["E_" + pair] = correlation[pair];
        report.derived["trials_" + pair] = count[pair];
    }
    const double s_emp = chsh_combination(correlation);
    report.derived["S"] = s_emp;

    // 4-sigma band for |S| from the per-pair sample variances.
    double var = 0.0;
    for (const auto& [pair, e] : correlation) {
        if (count[pair] > 0) var += (1.0 - e * e) / count[pair];
    }
    report.derived["S_sigma"] = std::sqrt(var);

    // No-signaling: Bob's own outcome frequencies grouped by Alice's
    // setting choice.
    for (const auto& [choice, bucket] : bob_by_alice_choice) {
        report.derived["bob_plus_given_" + choice] =
            bucket[1] > 0 ? bucket[0] / bucket[1] : 0.0;
        report.derived["trials_given_" + choice] = bucket[1];
    }

    if (report.oracle_ran) {
        const auto analytics = chsh_analytics(script);
        for (const auto& [pair, e] : analytics.correlation) {
            report.derived["E_analytic_" + pair] = e;
        }
        report.derived["S_analytic"] = chsh_combination(analytics.correlation);
        report.derived["ns_analytic_diff"] =
            std::abs(analytics.bob_plus_given_a1 - analytics.bob_plus_given_a2);
        report.agents["alice"].analytic = analytics.alice;
        report.agents["bob"].analytic = analytics.bob;
    }
}

// --- epr -------------------------------------------------------------------

inline void reduce_epr(const std::vector<TrialRecord>& trials, Report& report) {
    double anticorrelated = 0.0;
    for (const auto& trial : trials) {
        const auto& alice = trial.signatures.at("alice");
        if (alice.size() == 2 && alice[1] == opposite_spin(alice[0])) anticorrelated += 1.0;
    }
    report.derived["anticorrelation_rate"] = anticorrelated / static_cast<double>(trials.size());
    if (report.oracle_ran && report.agents.count("alice") && report.agents["alice"].analytic) {
        double p = 0.0;
        for (const auto& [key, prob] : report.agents["alice"].analytic->probabilities) {
            if (key.size() == 2 && key[1] == opposite_spin(key[0])) p += prob;
        }
        report.derived["anticorrelation_analytic"] = p;
    }
}

// --- wigner ----------------------------------------------------------------

inline void reduce_wigner(const ScenarioScript& script, const std::vector<TrialRecord>& trials,
                          Report& report, std::uint64_t seed) {
    double sup = 0.0;
    for (const auto& trial : trials) {
        const auto& wigner = trial.signatures.at("wigner");
        if (!wigner.empty() && wigner.back() == "superposed-branch") sup += 1.0;
    }
    report.derived["p_superposed_frequency"] = sup / static_cast<double>(trials.size());

    if (report.oracle_ran) {
        const auto textbook = oracle::run_collapse(script, "wigner", oracle::Mode::Textbook);
        double p_sup = 0.0;
        for (const auto& [key, p] : textbook.probabilities) {
            if (!key.empty() && key.back() == "superposed-branch") p_sup += p;
        }
        report.derived["p_superposed_analytic"] = p_sup;

        const auto premature =
            oracle::run_collapse(script, "wigner", oracle::Mode::PrematureCollapse);
        double p_sup_premature = 0.0;
        for (const auto& [key, p] : premature.probabilities) {
            if (!key.empty() && key.back() == "superposed-branch") p_sup_premature += p;
        }
        report.oracle_reference["p_superposed_premature_collapse"] = p_sup_premature;
    }

    // Determinacy of the friend's event from Wigner's perspective, probed
    // step by step on a fresh simulation of the same protocol.
    Simulation sim(initial_state(script), oracle::trial_seed(seed, 0));
    sim.register_agent("friend");
    sim.register_agent("wigner");
    const auto friend_obs = sim.observe("friend", spin_projectors(0.0, "P"));
    const bool before = sim.determinacy("wigner", friend_obs.event_id).determined();
    sim.ask("wigner", "friend", friend_obs.event_id);
    const bool after = sim.determinacy("wigner", friend_obs.event_id).determined();
    report.derived["determinacy_before_ask"] = before ? 1.0 : 0.0;
    report.derived["determinacy_after_ask"] = after ? 1.0 : 0.0;
}

// --- frauchiger_renner -----------------------------------------------------

inline void reduce_fr(const ScenarioScript& script, const std::vector<TrialRecord>& trials,
                      Report& report) {
    double hits = 0.0;
    for (const auto& trial : trials) {
        const auto& auditor = trial.signatures.at("auditor");
        if (auditor.size() == 2 && auditor[0] == "okbar" && auditor[1] == "ok") hits += 1.0;
    }
    report.derived["p_okbar_ok_frequency"] = hits / static_cast<double>(trials.size());
    if (report.oracle_ran) {
        const auto oracle_dist =
            oracle::run_collapse(script, "auditor", oracle::Mode::Textbook);
        report.derived["p_okbar_ok_oracle"] = oracle_dist.probability({"okbar", "ok"});
        const auto engine_dist = oracle::run_hanging(script, "auditor");
        report.derived["p_okbar_ok_engine"] = engine_dist.probability({"okbar", "ok"});
    }
}

// --- sync_actions ----------------------------------------------------------

inline void reduce_sync_actions(const ScenarioScript& script,
                                const std::vector<TrialRecord>& trials, Report& report) {
    const auto& actions = script.metadata.action_map;
    for (const auto& agent : script.agents) {
        auto& section = report.agents[agent];
        for (const auto& trial : trials) {
            const auto& signature = trial.signatures.at(agent);
            if (signature.empty()) continue;
            const auto it = actions.find(signature[0]);
            if (it != actions.end()) section.action_frequencies[it->second] += 1.0;
        }
        for (auto& [action, count] : section.action_frequencies) {
            count /= static_cast<double>(trials.size());
        }
    }
}

} // namespace detail

struct RunOptions {
    std::uint64_t trials = 1;
    std::uint64_t seed = 0;
    unsigned jobs = 1;
    bool engine_only = false; // skip oracle analytics
    bool oracle_only = false; // skip engine sampling
};

inline Report run_scenario(const ScenarioScript& script, const RunOptions& options) {
    validate(script);
    if (options.trials < 1) throw BadParams("trials must be >= 1");

    Report report;
    report.scenario = script.name;
    report.trials = options.trials;
    report.seed = options.seed;
    report.oracle_ran = !options.engine_only;
    report.engine_ran = !options.oracle_only;

    std::vector<TrialRecord> trials;
    if (report.engine_ran) {
        trials = run_trials(script, options.trials, options.seed, options.jobs);
        detail::fill_empirical(trials, report, script);
        detail::summarize_assertions(trials, report);
        report.collapse_freedom = verify_collapse_freedom(script, options.seed);
    } else {
        for (const auto& agent : script.agents) report.agents[agent];
    }

    const bool has_choices = [&] {
        for (const auto& s : script.steps) {
            if (std::holds_alternative<ChooseObserveStep>(s)) return true;
        }
        return false;
    }();

    if (report.oracle_ran && !has_choices) {
        detail::fill_analytic_plain(script, report);
    }

    if (report.engine_ran) {
        if (script.name == "epr_singlet") {
            detail::reduce_epr(trials, report);
        } else if (script.name == "chsh") {
            detail::reduce_chsh(script, trials, report);
        } else if (script.name == "wigner_friend") {
            detail::reduce_wigner(script, trials, report, options.seed);
        } else if (script.name == "frauchiger_renner") {
            detail::reduce_fr(script, trials, report);
        } else if (script.name == "sync_actions") {
            detail::reduce_sync_actions(script, trials, report);
        }
    } else if (report.oracle_ran) {
        if (script.name == "chsh") {
            const auto analytics = detail::chsh_analytics(script);
            for (const auto& [pair, e] : analytics.correlation) {
                report.derived["E_analytic_" + pair] = e;
            }
            report.derived["S_analytic"] = detail::chsh_combination(analytics.correlation);
            report.derived["ns_analytic_diff"] =
                std::abs(analytics.bob_plus_given_a1 - analytics.bob_plus_given_a2);
            report.agents["alice"].analytic = analytics.alice;
            report.agents["bob"].analytic = analytics.bob;
        }
    }

    if (report.engine_ran && report.oracle_ran) {
        detail::compare_sections(report);
    }
    return report;
}

inline Report run_scenario(const ScenarioScript& script, std::uint64_t trials,
                           std::uint64_t seed) {
    RunOptions options;
    options.trials = trials;
    options.seed = seed;
    return run_scenario(script, options);
}

// S from the four empirical correlations in a chsh report.
inline double chsh_statistic(const Report& report) {
    if (report.scenario != "chsh") {
        throw WrongScenario("chsh_statistic needs a chsh report, got '" + report.scenario + "'");
    }
    std::map<std::string, double> correlation;
    for (const std::string pair : {"a1b1", "a1b2", "a2b1", "a2b2"}) {
        const auto it = report.derived.find("E_" + pair);
        if (it == report.derived.end()) {
            throw WrongScenario("chsh report lacks correlation E_" + pair);
        }
        correlation[pair] = it->second;
    }
    return detail::chsh_combination(correlation);
}

} // namespace persim::scenarios
