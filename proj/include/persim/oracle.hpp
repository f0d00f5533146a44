// Reference simulators and distribution comparison.
//
// run_collapse enumerates a script exactly under textbook projection
// semantics and is the independent check on the hanging-on engine: it
// evolves a plain state vector with its own step plan and never touches
// Simulation. run_hanging enumerates the engine itself by forcing outcomes,
// so the two routes meet only at the transcript distributions they produce.
//
// sample_frequencies is the Monte-Carlo harness over either engine; compare
// applies a 4-sigma normal bound per outcome.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "persim/observers.hpp"
#include "persim/rng.hpp"
#include "persim/script.hpp"

namespace persim::oracle {

using scenarios::AskStep;
using scenarios::AssertDistributionStep;
using scenarios::ChooseObserveStep;
using scenarios::ObserveStep;
using scenarios::PrepareStep;
using scenarios::ScenarioScript;
using scenarios::Step;
using scenarios::UnitaryStep;

enum class Mode { Textbook, PrematureCollapse };
enum class EngineKind { HangingOn, Collapse };

using TranscriptKey = std::vector<std::string>;

struct TranscriptDistribution {
    std::map<TranscriptKey, double> probabilities;

    double probability(const TranscriptKey& key) const {
        auto it = probabilities.find(key);
        return it == probabilities.end() ? 0.0 : it->second;
    }
};

// Scenario-level random choices are keyed by (step, trial) only, never by
// the outcome seed: measurement settings are part of the recorded unitary
// history and must not drift when the sampling seed changes.
inline std::size_t choice_for(std::size_t step_index, std::uint64_t trial, std::size_t n_options) {
    SubStream stream(0x73657474696e6773ULL, "choice:" + std::to_string(step_index), trial);
    return static_cast<std::size_t>(stream.next_below(n_options));
}

inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
    SubStream stream(seed, "trial", trial);
    return stream.next_u64();
}

namespace detail {

// Static per-step plan for the collapse oracle. Register references and
// memory names depend only on step order, so they resolve ahead of time.
struct ObservationPlan {
    std::string actor;
    ProjectorSet measurement;
    std::string memory;
    std::size_t memory_dim;
    ProjectorSet readout; // record basis on `memory`
};

struct CollapsePlan {
    std::vector<std::optional<UnitaryOp>> unitary;       // per step
    std::vector<std::optional<ObservationPlan>> observe; // per step
};

inline bool ctx_memory(const scenarios::StepContext& ctx, const std::string& reg) {
    for (const auto& [step, mem] : ctx.memory_of_step) {
        if (mem == reg) return true;
    }
    return false;
}

inline CollapsePlan build_collapse_plan(const ScenarioScript& script) {
    CollapsePlan plan;
    plan.unitary.resize(script.steps.size());
    plan.observe.resize(script.steps.size());

    RegisterLayout layout = script.layout;
    scenarios::StepContext ctx;
    std::size_t obs_counter = 0;

    auto add_observation = [&](std::size_t i, const std::string& actor, ProjectorSet set) {
        const std::string mem = "mem:" + std::to_string(obs_counter++);
        const std::size_t dim = std::max<std::size_t>(2, set.outcomes().size());
        ProjectorSet readout = make_record_basis(set.labels(), mem, dim);
        plan.observe[i] =
            ObservationPlan{actor, std::move(set), mem, dim, std::move(readout)};
        layout = layout.extended(mem, dim);
        ctx.memory_of_step[i] = mem;
    };

    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        const Step& step = script.steps[i];
        if (const auto* u = std::get_if<UnitaryStep>(&step)) {
            const auto regs = ctx.resolve_all(u->registers);
            for (const auto& r : regs) {
                if (ctx_memory(ctx, r)) {
                    throw ImmutableMemory("unitary targets written memory register '" + r + "'");
                }
            }
            plan.unitary[i] = UnitaryOp(regs, u->matrix);
        } else if (const auto* o = std::get_if<ObserveStep>(&step)) {
            add_observation(i, o->agent, scenarios::resolve_projectors(o->projectors, layout, ctx));
        } else if (const auto* a = std::get_if<AskStep>(&step)) {
            const auto& ref = plan.observe[a->event_step];
            if (!ref) throw BadParams("ask references a step without an observation");
            add_observation(i, a->agent,
                            make_record_basis(ref->measurement.labels(), ref->memory,
                                              ref->memory_dim));
        } else if (std::holds_alternative<ChooseObserveStep>(step)) {
            throw BadParams("exact enumeration needs fixed choices; elaborate the script first");
        }
        // Prepare and AssertDistribution need no plan entry.
    }
    return plan;
}

struct CollapseEnumerator {
    const ScenarioScript& script;
    const CollapsePlan& plan;
    std::string agent;
    Mode mode;
    std::map<TranscriptKey, double> out;
    std::size_t leaves = 0;

    void run(const StateVector& state, std::size_t step_index, TranscriptKey& transcript,
             double weight) {
        if (step_index == script.steps.size()) {
            if (++leaves > kMaxDimension) {
                throw StateTooLarge("collapse enumeration beyond 2^20 paths");
            }
            out[transcript] += weight;
            return;
        }
        const Step& step = script.steps[step_index];
        if (std::holds_alternative<PrepareStep>(step)) {
            run(scenarios::initial_state(script), step_index + 1, transcript, weight);
            return;
        }
        if (plan.unitary[step_index]) {
            run(apply_unitary(state, *plan.unitary[step_index]), step_index + 1, transcript,
                weight);
            return;
        }
        if (const auto& obs = plan.observe[step_index]) {
            StateVector staged = extend_with_register(state, obs->memory, obs->memory_dim, 0);
            staged = apply_unitary(staged,
                                   record_copy_op(obs->measurement, obs->memory, obs->memory_dim));
            const bool mine = obs->actor == agent;
            if (mine || mode == Mode::PrematureCollapse) {
                // Textbook projection: split into outcomes and renormalize.
                for (const auto& outcome : obs->readout.outcomes()) {
                    auto [w, amps] =
                        persim::detail::project(staged, obs->readout, outcome.label);
                    if (w <= kWeightFloor) continue;
                    if (mine) transcript.push_back(outcome.label);
                    run(normalized_state(staged.layout(), std::move(amps)), step_index + 1,
                        transcript, weight * w);
                    if (mine) transcript.pop_back();
                }
            } else {
                // The record-copy already happened; nothing collapses.
                run(staged, step_index + 1, transcript, weight);
            }
            return;
        }
        // AssertDistribution: no effect on the state.
        run(state, step_index + 1, transcript, weight);
    }
};

} // namespace detail

// Exact transcript distribution of `agent` under collapse semantics.
// Textbook mode projects only at the agent's own observations; premature
// mode projects at every agent's observation.
inline TranscriptDistribution run_collapse(const ScenarioScript& script, const std::string& agent,
                                           Mode mode) {
    scenarios::validate(script);
    const auto plan = detail::build_collapse_plan(script);
    detail::CollapseEnumerator e{script, plan, agent, mode, {}, 0};
    TranscriptKey transcript;
    e.run(scenarios::initial_state(script), 0, transcript, 1.0);
    return TranscriptDistribution{std::move(e.out)};
}

// ---------------------------------------------------------------------------
// The engine-true routes: one sampled trial, and exact enumeration by
// forcing outcomes through the real Simulation.

struct AssertionOutcome {
    std::size_t step_index = 0;
    bool passed = true;
    double worst_error = 0.0;
    std::string message;
};

struct EngineTrial {
    Simulation sim;
    // Per-agent: chosen option labels and outcomes, in time order.
    std::map<std::string, std::vector<std::string>> signatures;
    std::map<std::size_t, std::string> choices;    // choose step -> option label
    std::map<std::size_t, EventId> event_of_step;  // observation step -> event
    std::vector<AssertionOutcome> assertions;
};

inline EngineTrial run_engine_trial(const ScenarioScript& script, std::uint64_t seed,
                                    std::uint64_t trial, bool throw_on_assert = true) {
    scenarios::validate(script);
    EngineTrial result{Simulation(scenarios::initial_state(script), trial_seed(seed, trial)),
                       {},
                       {},
                       {},
                       {}};
    Simulation& sim = result.sim;
    for (const auto& a : script.agents) {
        sim.register_agent(a);
        result.signatures[a];
    }
    scenarios::StepContext ctx;

    auto do_observe = [&](std::size_t i, const std::string& actor, const ProjectorSet& set,
                          const std::string* choice_label) {
        if (choice_label) result.signatures[actor].push_back(*choice_label);
        const Observation obs = sim.observe(actor, set);
        result.signatures[actor].push_back(obs.outcome);
        result.event_of_step[i] = obs.event_id;
        ctx.memory_of_step[i] = sim.event(obs.event_id).memory_register;
    };

    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        const Step& step = script.steps[i];
        if (std::holds_alternative<PrepareStep>(step)) {
            continue; // folded into the initial state
        }
        if (const auto* u = std::get_if<UnitaryStep>(&step)) {
            sim.apply(UnitaryOp(ctx.resolve_all(u->registers), u->matrix));
        } else if (const auto* o = std::get_if<ObserveStep>(&step)) {
            do_observe(i, o->agent,
                       scenarios::resolve_projectors(o->projectors, sim.global_state().layout(), ctx),
                       nullptr);
        } else if (const auto* c = std::get_if<ChooseObserveStep>(&step)) {
            const std::size_t pick = choice_for(i, trial, c->options.size());
            const auto& option = c->options[pick];
            result.choices[i] = option.choice;
            do_observe(i, c->agent,
                       scenarios::resolve_projectors(option.projectors, sim.global_state().layout(), ctx),
                       &option.choice);
        } else if (const auto* a = std::get_if<AskStep>(&step)) {
            const auto it = result.event_of_step.find(a->event_step);
            if (it == result.event_of_step.end()) {
                throw BadParams("ask references a step that produced no event");
            }
            const Observation obs = sim.ask(a->agent, a->target, it->second);
            result.signatures[a->agent].push_back(obs.outcome);
            result.event_of_step[i] = obs.event_id;
            ctx.memory_of_step[i] = sim.event(obs.event_id).memory_register;
        } else if (const auto* ad = std::get_if<AssertDistributionStep>(&step)) {
            const auto set =
                scenarios::resolve_projectors(ad->projectors, sim.global_state().layout(), ctx);
            const auto dist = sim.predictive_distribution(ad->agent, set);
            AssertionOutcome outcome;
            outcome.step_index = i;
            for (const auto& [label, expected] : ad->expected) {
                const auto found = dist.find(label);
                const double actual = found == dist.end() ? 0.0 : found->second;
                outcome.worst_error = std::max(outcome.worst_error, std::abs(actual - expected));
            }
            if (outcome.worst_error > ad->tolerance) {
                outcome.passed = false;
                outcome.message = "step " + std::to_string(i) + ": agent " + ad->agent +
                                  " expected distribution off by " +
                                  std::to_string(outcome.worst_error);
                if (throw_on_assert) throw AssertionFailed(outcome.message);
            }
            result.assertions.push_back(std::move(outcome));
        }
    }
    return result;
}

namespace detail {

struct HangingEnumerator {
    const ScenarioScript& script;
    std::string agent;
    std::map<TranscriptKey, double> out;
    std::size_t leaves = 0;

    void run(Simulation sim, scenarios::StepContext ctx,
             std::map<std::size_t, EventId> event_of_step, std::size_t step_index,
             TranscriptKey& transcript, double weight) {
        if (step_index == script.steps.size()) {
            if (++leaves > kMaxDimension) {
                throw StateTooLarge("hanging enumeration beyond 2^20 paths");
            }
            out[transcript] += weight;
            return;
        }
        const Step& step = script.steps[step_index];
        if (std::holds_alternative<PrepareStep>(step) ||
            std::holds_alternative<AssertDistributionStep>(step)) {
            run(std::move(sim), std::move(ctx), std::move(event_of_step), step_index + 1,
                transcript, weight);
            return;
        }
        if (const auto* u = std::get_if<UnitaryStep>(&step)) {
            sim.apply(UnitaryOp(ctx.resolve_all(u->registers), u->matrix));
            run(std::move(sim), std::move(ctx), std::move(event_of_step), step_index + 1,
                transcript, weight);
            return;
        }

        std::string actor;
        ProjectorSet set = resolve_measurement(step, sim, ctx, event_of_step, actor);
        if (actor == agent) {
            for (const auto& outcome : set.outcomes()) {
                Simulation branch = sim;
                double p = 0.0;
                try {
                    p = branch.observe_forced(agent, set, outcome.label);
                } catch (const ZeroWeightBranch&) {
                    continue;
                }
                auto ctx2 = ctx;
                auto events2 = event_of_step;
                const EventId id = branch.events().back().event_id;
                events2[step_index] = id;
                ctx2.memory_of_step[step_index] = branch.event(id).memory_register;
                transcript.push_back(outcome.label);
                run(std::move(branch), std::move(ctx2), std::move(events2), step_index + 1,
                    transcript, weight * p);
                transcript.pop_back();
            }
            return;
        }
        // Another agent's observation: the global change is the same
        // whatever she records, and her private anchor cannot reach the
        // agent-of-interest's perceptual state. Sample her normally.
        const Observation obs = sim.observe(actor, set);
        event_of_step[step_index] = obs.event_id;
        ctx.memory_of_step[step_index] = sim.event(obs.event_id).memory_register;
        run(std::move(sim), std::move(ctx), std::move(event_of_step), step_index + 1, transcript,
            weight);
    }

    static ProjectorSet resolve_measurement(const Step& step, const Simulation& sim,
                                            const scenarios::StepContext& ctx,
                                            const std::map<std::size_t, EventId>& event_of_step,
                                            std::string& actor) {
        if (const auto* o = std::get_if<ObserveStep>(&step)) {
            actor = o->agent;
            return scenarios::resolve_projectors(o->projectors, sim.global_state().layout(), ctx);
        }
        if (const auto* a = std::get_if<AskStep>(&step)) {
            actor = a->agent;
            const auto it = event_of_step.find(a->event_step);
            if (it == event_of_step.end()) {
                throw BadParams("ask references a step that produced no event");
            }
            return sim.record_basis(it->second);
        }
        throw BadParams("exact enumeration needs fixed choices; elaborate the script first");
    }
};

} // namespace detail

// Exact transcript distribution of the hanging-on engine itself, obtained
// by branching over the agent's forced outcomes.
inline TranscriptDistribution run_hanging(const ScenarioScript& script, const std::string& agent) {
    scenarios::validate(script);
    detail::HangingEnumerator e{script, agent, {}, 0};
    Simulation sim(scenarios::initial_state(script), 0);
    for (const auto& a : script.agents) sim.register_agent(a);
    TranscriptKey transcript;
    e.run(std::move(sim), {}, {}, 0, transcript, 1.0);
    return TranscriptDistribution{std::move(e.out)};
}

// One sampled trial under textbook collapse; the counterpart of
// run_engine_trial for the reference engine.
inline TranscriptKey run_collapse_trial(const ScenarioScript& script, const std::string& agent,
                                        std::uint64_t seed, std::uint64_t trial) {
    scenarios::validate(script);

    // Fix this trial's choices, then enumerate lazily along the sampled path.
    ScenarioScript fixed = script;
    TranscriptKey choice_prefix_labels;
    std::map<std::size_t, std::string> choice_of_step;
    for (std::size_t i = 0; i < fixed.steps.size(); ++i) {
        if (const auto* c = std::get_if<ChooseObserveStep>(&fixed.steps[i])) {
            const std::size_t pick = choice_for(i, trial, c->options.size());
            choice_of_step[i] = c->options[pick].choice;
            fixed.steps[i] = ObserveStep{c->agent, c->options[pick].projectors};
        }
    }
    const auto plan = detail::build_collapse_plan(fixed);
    StateVector state = scenarios::initial_state(fixed);
    SubStream stream(trial_seed(seed, trial), "collapse:" + agent, 0);
    TranscriptKey transcript;

    for (std::size_t i = 0; i < fixed.steps.size(); ++i) {
        if (plan.unitary[i]) {
            state = apply_unitary(state, *plan.unitary[i]);
            continue;
        }
        const auto& obs = plan.observe[i];
        if (!obs) continue;
        state = extend_with_register(state, obs->memory, obs->memory_dim, 0);
        state = apply_unitary(state,
                              record_copy_op(obs->measurement, obs->memory, obs->memory_dim));
        if (obs->actor != agent) continue;
        if (choice_of_step.count(i)) transcript.push_back(choice_of_step.at(i));
        const double u = stream.next_double();
        double cum = 0.0;
        std::string picked;
        std::vector<cplx> picked_amps;
        for (const auto& outcome : obs->readout.outcomes()) {
            auto [w, amps] = persim::detail::project(state, obs->readout, outcome.label);
            if (w <= kWeightFloor) continue;
            cum += w;
            picked = outcome.label;
            picked_amps = std::move(amps);
            if (u < cum) break;
        }
        transcript.push_back(picked);
        state = normalized_state(state.layout(), std::move(picked_amps));
    }
    return transcript;
}

inline std::map<TranscriptKey, double> sample_frequencies(EngineKind engine,
                                                          const ScenarioScript& script,
                                                          const std::string& agent,
                                                          std::uint64_t trials,
                                                          std::uint64_t seed) {
    if (trials < 1) throw BadParams("trials must be >= 1");
    std::map<TranscriptKey, std::uint64_t> counts;
    for (std::uint64_t t = 0; t < trials; ++t) {
        if (engine == EngineKind::HangingOn) {
            auto trial = run_engine_trial(script, seed, t);
            counts[trial.signatures[agent]] += 1;
        } else {
            counts[run_collapse_trial(script, agent, seed, t)] += 1;
        }
    }
    std::map<TranscriptKey, double> freqs;
    for (const auto& [key, n] : counts) {
        freqs[key] = static_cast<double>(n) / static_cast<double>(trials);
    }
    return freqs;
}

// ---------------------------------------------------------------------------
// Statistical comparison: per-outcome 4-sigma normal bound.

struct ComparisonEntry {
    TranscriptKey sequence;
    double probability = 0.0;
    double frequency = 0.0;
    double z = 0.0;
    double bound = 0.0;
    bool passed = true;
};

struct Comparison {
    bool pass = true;
    std::vector<ComparisonEntry> entries;
};

inline Comparison compare(const TranscriptDistribution& analytic,
                          const std::map<TranscriptKey, double>& empirical,
                          std::uint64_t trials) {
    for (const auto& [key, f] : empirical) {
        if (!analytic.probabilities.count(key)) {
            std::string flat;
            for (const auto& s : key) flat += (flat.empty() ? "" : ",") + s;
            throw OutcomeSpaceMismatch("empirical outcome (" + flat +
                                       ") is outside the analytic outcome space");
        }
    }
    Comparison result;
    for (const auto& [key, p] : analytic.probabilities) {
        ComparisonEntry entry;
        entry.sequence = key;
        entry.probability = p;
        const auto it = empirical.find(key);
        entry.frequency = it == empirical.end() ? 0.0 : it->second;
        const double diff = std::abs(entry.frequency - entry.probability);
        const double sd =
            std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(trials));
        entry.bound = 4.0 * sd + 1e-9;
        if (sd > 0.0) {
            entry.z = diff / sd;
        } else {
            entry.z = diff <= 1e-9 ? 0.0 : std::numeric_limits<double>::infinity();
        }
        entry.passed = diff <= entry.bound;
        result.pass = result.pass && entry.passed;
        result.entries.push_back(std::move(entry));
    }
    return result;
}

} // namespace persim::oracle
