// Observers over a never-collapsing global state.
//
// A Simulation owns the global state ("empirical reality"), a public event
// log, and one private record per agent. Observation entangles the measured
// registers with a fresh write-once memory register through a record-copy
// unitary; the global state is changed only by unitaries, never by
// projection. The observing agent then samples an outcome from her own
// perceptual state and appends an anchor to her record. The perceptual
// state ("phenomenological reality") is the global state conditioned on the
// agent's anchors; it is what all of her predictions are computed from.
//
// Outcomes live only in agent records. The event log carries measurement
// metadata (who, which registers, which projectors) but never results.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "persim/branching.hpp"
#include "persim/hilbert.hpp"
#include "persim/rng.hpp"

namespace persim {

using EventId = std::int64_t;

inline constexpr double kDeterminacyTol = 1e-9;

struct Anchor {
    EventId event_id;
    std::string memory_register;
    std::size_t outcome_index;
    std::string outcome;
    std::int64_t time_index;
};

struct MeasurementEvent {
    EventId event_id;
    std::string agent_id;
    std::vector<std::string> measured_registers;
    ProjectorSet projectors;
    std::string memory_register;
    std::size_t memory_dim;
    std::int64_t time_index;
};

struct TranscriptEntry {
    EventId event_id;
    std::string outcome;
    std::int64_t time_index;
};

struct Observation {
    EventId event_id;
    std::string outcome;
};

// One entry per global-state change, in order: scenario unitaries as-is,
// observations as (memory register adjoined, record-copy unitary). Replaying
// the history against the initial state reproduces the final global state;
// sampled outcomes never enter it.
struct HistoryEntry {
    std::optional<std::pair<std::string, std::size_t>> extend;
    UnitaryOp op;
};

inline StateVector replay_history(StateVector state, const std::vector<HistoryEntry>& history) {
    for (const auto& entry : history) {
        if (entry.extend) {
            state = extend_with_register(state, entry.extend->first, entry.extend->second, 0);
        }
        state = apply_unitary(state, entry.op);
    }
    return state;
}

struct Determinacy {
    std::optional<std::string> outcome;
    bool determined() const { return outcome.has_value(); }
};

struct Agent {
    std::string id;
    std::vector<Anchor> record;
    StateVector perceptual_state;
};

// Projectors on a memory register, one per recorded label in declared
// order. Memory cells beyond the label count are unreachable from |0>; they
// are folded into the last projector for completeness.
inline ProjectorSet make_record_basis(const std::vector<std::string>& labels,
                                      const std::string& memory_register,
                                      std::size_t memory_dim) {
    std::vector<ProjectorSet::Outcome> outcomes;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        Matrix p(memory_dim, memory_dim);
        p(j, j) = 1.0;
        if (j + 1 == labels.size()) {
            for (std::size_t m = labels.size(); m < memory_dim; ++m) p(m, m) = 1.0;
        }
        outcomes.push_back({labels[j], std::move(p)});
    }
    return ProjectorSet({memory_register}, std::move(outcomes));
}

// The record-copy unitary: sum over outcomes k of P_k tensored with the
// cyclic shift by k on the memory register. Completeness of the projector
// set makes this unitary; memory starting at |0> ends up carrying k on
// branch k.
inline UnitaryOp record_copy_op(const ProjectorSet& set, const std::string& memory_register,
                                std::size_t memory_dim) {
    const std::size_t k_dim = set.joint_dim();
    const std::size_t full = k_dim * memory_dim;
    Matrix u(full, full);
    for (std::size_t k = 0; k < set.outcomes().size(); ++k) {
        const Matrix& p = set.outcomes()[k].projector;
        for (std::size_t r = 0; r < k_dim; ++r) {
            for (std::size_t c = 0; c < k_dim; ++c) {
                const cplx v = p(r, c);
                if (v == cplx{}) continue;
                for (std::size_t m = 0; m < memory_dim; ++m) {
                    u(r * memory_dim + (m + k) % memory_dim, c * memory_dim + m) += v;
                }
            }
        }
    }
    std::vector<std::string> targets = set.targets();
    targets.push_back(memory_register);
    return UnitaryOp(std::move(targets), std::move(u));
}

class Simulation {
public:
    Simulation(StateVector initial, std::uint64_t seed)
        : seed_(seed), global_(std::move(initial)) {}

    const StateVector& global_state() const { return global_; }
    std::uint64_t seed() const { return seed_; }
    std::int64_t time_index() const { return time_; }

    const std::vector<MeasurementEvent>& events() const { return events_; }

    const MeasurementEvent& event(EventId id) const {
        for (const auto& e : events_)
            if (e.event_id == id) return e;
        throw UnknownEvent("no event with id " + std::to_string(id));
    }

    bool is_memory_register(std::string_view id) const {
        return memory_registers_.count(std::string(id)) != 0;
    }

    // Scenario unitary. Memory registers are write-once: once an anchor can
    // point at them, no scripted unitary may touch them again.
    void apply(const UnitaryOp& op) {
        for (const auto& t : op.targets()) {
            if (is_memory_register(t)) {
                throw ImmutableMemory("unitary targets written memory register '" + t + "'");
            }
        }
        global_ = apply_unitary(global_, op);
        history_.push_back({std::nullopt, op});
        ++time_;
        refresh_perceptual_states();
    }

    const std::vector<HistoryEntry>& history() const { return history_; }

    std::string register_agent(const std::string& name) {
        if (agents_.count(name)) {
            throw DuplicateAgent("agent '" + name + "' already registered");
        }
        agents_.emplace(name, Agent{name, {}, global_});
        return name;
    }

    bool has_agent(std::string_view name) const { return agents_.count(std::string(name)) != 0; }

    const Agent& agent(const std::string& name) const {
        auto it = agents_.find(name);
        if (it == agents_.end()) throw UnknownAgent("no agent named '" + name + "'");
        return it->second;
    }

    const StateVector& perceptual_state(const std::string& name) const {
        return agent(name).perceptual_state;
    }

    Observation observe(const std::string& agent_id, const ProjectorSet& set) {
        const EventId id = stage_observation(agent_id, set);
        const MeasurementEvent& ev = events_.back();
        const std::vector<double> probs = memory_distribution(agent_id, ev);
        double total = 0.0;
        for (double p : probs) total += p;
        if (total <= kWeightFloor) {
            throw ZeroWeightBranch("all conditional probabilities below 1e-12");
        }
        // Inverse CDF over labels in declared order.
        SubStream stream(seed_, agent_id, static_cast<std::uint64_t>(id));
        const double u = stream.next_double() * total;
        std::size_t pick = 0;
        double cum = 0.0;
        bool picked = false;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            if (probs[k] <= kWeightFloor) continue;
            cum += probs[k];
            pick = k;
            picked = true;
            if (u < cum) break;
        }
        if (!picked) throw ZeroWeightBranch("no outcome with weight above 1e-12");
        anchor_outcome(agent_id, ev, pick);
        return {id, set.outcomes()[pick].label};
    }

    // Observation with a dictated outcome; returns that outcome's
    // conditional probability in the agent's perceptual state. The global
    // state changes exactly as in observe(). Used by exact enumeration.
    double observe_forced(const std::string& agent_id, const ProjectorSet& set,
                          std::string_view label) {
        const std::size_t k = set.label_index(label);
        stage_observation(agent_id, set);
        const MeasurementEvent& ev = events_.back();
        const std::vector<double> probs = memory_distribution(agent_id, ev);
        if (probs[k] <= kWeightFloor) {
            throw ZeroWeightBranch("forced outcome '" + std::string(label) +
                                   "' has weight below 1e-12");
        }
        anchor_outcome(agent_id, ev, k);
        return probs[k];
    }

    // Asking another observer what she saw is a measurement of her memory
    // register in its record basis. The answer is sampled from the asker's
    // perceptual state; the target's private record is never read.
    Observation ask(const std::string& asker, const std::string& target, EventId event_id) {
        const MeasurementEvent& ev = event(event_id);
        if (ev.agent_id != target) {
            throw UnknownEvent("event " + std::to_string(event_id) + " was not performed by '" +
                               target + "'");
        }
        (void)agent(asker);
        (void)agent(target);
        return observe(asker, record_basis(event_id));
    }

    std::map<std::string, double> predictive_distribution(const std::string& agent_id,
                                                          const ProjectorSet& set) const {
        return outcome_distribution(perceptual_state(agent_id), set);
    }

    Determinacy determinacy(const std::string& agent_id, EventId event_id) const {
        const MeasurementEvent& ev = event(event_id);
        const StateVector& perceptual = perceptual_state(agent_id);
        const ProjectorSet rb = record_basis(event_id);
        for (const auto& outcome : rb.outcomes()) {
            if (outcome_probability(perceptual, rb, outcome.label) >= 1.0 - kDeterminacyTol) {
                return Determinacy{outcome.label};
            }
        }
        return Determinacy{};
    }

    std::vector<TranscriptEntry> transcript(const std::string& agent_id) const {
        std::vector<TranscriptEntry> t;
        for (const Anchor& a : agent(agent_id).record) {
            t.push_back({a.event_id, a.outcome, a.time_index});
        }
        return t;
    }

    // There is no joint record. Outcomes of two observers exist only inside
    // their separate phenomenological realities; a table pairing them would
    // be a third-person statement about both at once.
    std::vector<TranscriptEntry> joint_transcript(const std::vector<std::string>& agent_ids) const {
        std::string who;
        for (const auto& a : agent_ids) who += (who.empty() ? "" : ", ") + a;
        throw ForbiddenComparison("joint outcome record requested for {" + who + "}");
    }

    // Record-access guard: an agent can read her own record and nothing
    // else. Cross-agent access is the move the interpretation rejects.
    std::vector<TranscriptEntry> record_access(const std::string& requester,
                                               const std::string& subject) const {
        if (requester != subject) {
            throw ForbiddenComparison("agent '" + requester + "' requested the record of '" +
                                      subject + "'");
        }
        return transcript(subject);
    }

    // The measurement that reads this event's record back out.
    ProjectorSet record_basis(EventId event_id) const {
        const MeasurementEvent& ev = event(event_id);
        return make_record_basis(ev.projectors.labels(), ev.memory_register, ev.memory_dim);
    }

private:
    // Steps (1) of an observation: fresh memory register, record-copy
    // unitary on the global state, event log entry. No outcome yet.
    EventId stage_observation(const std::string& agent_id, const ProjectorSet& set) {
        (void)agent(agent_id);
        for (const auto& t : set.targets()) {
            if (!global_.layout().has(t)) {
                throw UnknownRegister("measurement targets unknown register '" + t + "'");
            }
        }
        const EventId id = next_event_id_++;
        const std::int64_t when = ++time_;
        const std::string mem = "mem:" + std::to_string(id);
        const std::size_t mem_dim = std::max<std::size_t>(2, set.outcomes().size());

        global_ = extend_with_register(global_, mem, mem_dim, 0);
        UnitaryOp rc = record_copy_op(set, mem, mem_dim);
        global_ = apply_unitary(global_, rc);
        history_.push_back({std::make_pair(mem, mem_dim), std::move(rc)});
        memory_registers_.insert(mem);
        events_.push_back({id, agent_id, set.targets(), set, mem, mem_dim, when});
        refresh_perceptual_states();
        return id;
    }

    // Distribution of the event's memory register in the agent's perceptual
    // state, indexed by outcome position.
    std::vector<double> memory_distribution(const std::string& agent_id,
                                            const MeasurementEvent& ev) const {
        const StateVector& perceptual = perceptual_state(agent_id);
        const RegisterLayout& layout = perceptual.layout();
        const std::size_t reg = layout.index_of(ev.memory_register);
        const std::size_t stride = layout.stride_of(reg);
        const std::size_t dim = layout.registers()[reg].dim;
        std::vector<double> probs(ev.projectors.outcomes().size(), 0.0);
        const auto amps = perceptual.amplitudes();
        for (std::size_t i = 0; i < amps.size(); ++i) {
            const std::size_t digit = (i / stride) % dim;
            if (digit < probs.size()) probs[digit] += std::norm(amps[i]);
        }
        return probs;
    }

    void anchor_outcome(const std::string& agent_id, const MeasurementEvent& ev, std::size_t k) {
        Agent& a = agents_.at(agent_id);
        a.record.push_back(
            {ev.event_id, ev.memory_register, k, ev.projectors.outcomes()[k].label, ev.time_index});
        a.perceptual_state = conditioned_on_record(a.record);
    }

    StateVector conditioned_on_record(const std::vector<Anchor>& record) const {
        if (record.empty()) return global_;
        const RegisterLayout& layout = global_.layout();
        std::vector<cplx> amps(global_.amplitudes().begin(), global_.amplitudes().end());
        for (const Anchor& anchor : record) {
            const std::size_t reg = layout.index_of(anchor.memory_register);
            const std::size_t stride = layout.stride_of(reg);
            const std::size_t dim = layout.registers()[reg].dim;
            for (std::size_t i = 0; i < amps.size(); ++i) {
                if ((i / stride) % dim != anchor.outcome_index) amps[i] = cplx{};
            }
        }
        if (detail::norm2(amps) <= kWeightFloor) {
            throw ZeroWeightBranch("agent record is inconsistent with the global state");
        }
        return normalized_state(layout, std::move(amps));
    }

    void refresh_perceptual_states() {
        for (auto& [name, a] : agents_) {
            a.perceptual_state = conditioned_on_record(a.record);
        }
    }

    std::uint64_t seed_;
    StateVector global_;
    std::map<std::string, Agent> agents_;
    std::vector<MeasurementEvent> events_;
    std::vector<HistoryEntry> history_;
    std::set<std::string> memory_registers_;
    EventId next_event_id_ = 0;
    std::int64_t time_ = 0;
};

} // namespace persim
