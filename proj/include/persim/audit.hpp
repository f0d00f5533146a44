// Reasoning audit for the four-agent protocol.
//
// Rules:
//   Q - an agent whose state assigns probability 1 to a result is certain
//       of that result;
//   C - an agent who is certain that another agent is certain of a result
//       adopts that certainty;
//   S - an agent cannot be certain of a result and of its negation.
//
// In absolute-facts mode the chain Q, C, Q, C, Q, C runs to completion and
// rule S flags a contradiction. With observer-relative records every C step
// needs access to another agent's private record, which the record guard
// refuses, so the chain stops at the first C.
//
// Every Q step's probability-1 premise is recomputed from the protocol
// state at the stage the claim is made, not quoted.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "persim/branching.hpp"
#include "persim/observers.hpp"
#include "persim/scenarios.hpp"

namespace persim::scenarios {

enum class AuditMode { ConSol, AbsoluteFacts };

struct AuditStep {
    std::string rule; // "Q", "C" or "S"
    std::string agent;
    std::vector<std::string> premises;
    std::string conclusion;
    // Engaged on Q steps: the recomputed conditional probability.
    std::optional<double> verified_probability;
};

struct BlockedStep {
    std::string rule;
    std::string description;
};

struct AuditResult {
    std::vector<AuditStep> trace;
    std::optional<BlockedStep> blocked;
    std::string verdict; // "contradiction", "consistent" or "blocked-at-C"

    bool has_completed_rule(const std::string& rule) const {
        for (const auto& s : trace)
            if (s.rule == rule) return true;
        return false;
    }
};

// An agent may read her own transcript; any other request is the
// third-person move the audit is probing for.
inline const std::vector<std::string>& transcript_access(
    const std::map<std::string, std::vector<std::string>>& transcripts,
    const std::string& requester, const std::string& subject) {
    if (requester != subject) {
        throw ForbiddenComparison("agent '" + requester + "' requested the record of '" + subject +
                                  "'");
    }
    const auto it = transcripts.find(subject);
    if (it == transcripts.end()) throw UnknownAgent("no transcript for '" + subject + "'");
    return it->second;
}

namespace detail {

struct FrCertainties {
    double wbar_sees_up;   // P(f recorded up | okbar branch)
    double f_sees_tail;    // P(fbar recorded t | f recorded up)
    double fbar_sees_fail; // P(w records fail | fbar recorded t, propagated)
};

// Recompute the three probability-1 claims of the protocol from scratch.
inline FrCertainties verify_fr_certainties() {
    const ScenarioScript script = builtin("frauchiger_renner");
    StateVector state = initial_state(script);

    const auto coin_basis = computational_projectors(state.layout(), {"coin"}, {"h", "t"});
    state = extend_with_register(state, "rec:fbar", 2, 0);
    state = apply_unitary(state, record_copy_op(coin_basis, "rec:fbar", 2));

    const auto* ctrl = std::get_if<UnitaryStep>(&script.steps[2]);
    state = apply_unitary(state, UnitaryOp(ctrl->registers, ctrl->matrix));

    const auto spin_basis = computational_projectors(state.layout(), {"spin"}, {"down", "up"});
    state = extend_with_register(state, "rec:f", 2, 0);
    state = apply_unitary(state, record_copy_op(spin_basis, "rec:f", 2));

    const auto fbar_readout = make_record_basis({"h", "t"}, "rec:fbar", 2);
    const auto f_readout = make_record_basis({"down", "up"}, "rec:f", 2);

    // Both interference measurements project on (|0,0> - |1,1>)/sqrt(2) of
    // the measured pair.
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const std::vector<cplx> diag = {inv_sqrt2, 0.0, 0.0, -inv_sqrt2};
    const Matrix p_hit = outer_projector(diag);
    const Matrix p_miss = Matrix::identity(4) - p_hit;
    const ProjectorSet okbar_set({"coin", "rec:fbar"},
                                 {{"okbar", p_hit}, {"failbar", p_miss}});
    const ProjectorSet ok_set({"spin", "rec:f"}, {{"ok", p_hit}, {"fail", p_miss}});

    FrCertainties out{};

    // Seeing okbar pins f's record to "up".
    const StateVector given_okbar = relative_state(state, okbar_set, "okbar");
    out.wbar_sees_up = outcome_probability(given_okbar, f_readout, "up");

    // Seeing "up" pins fbar's record to "t".
    const StateVector given_up = relative_state(state, f_readout, "up");
    out.f_sees_tail = outcome_probability(given_up, fbar_readout, "t");

    // Conditioned on "t" at this stage, the pair {spin, rec:f} sits exactly
    // in the fail direction; propagating through both remaining
    // measurements leaves w's record at fail with certainty.
    StateVector given_tail = relative_state(state, fbar_readout, "t");
    given_tail = extend_with_register(given_tail, "rec:wbar", 2, 0);
    given_tail = apply_unitary(given_tail, record_copy_op(okbar_set, "rec:wbar", 2));
    given_tail = extend_with_register(given_tail, "rec:w", 2, 0);
    given_tail = apply_unitary(given_tail, record_copy_op(ok_set, "rec:w", 2));
    out.fbar_sees_fail =
        outcome_probability(given_tail, make_record_basis({"ok", "fail"}, "rec:w", 2), "fail");
    return out;
}

} // namespace detail

// Audit of a run whose final agent heard okbar from wbar and ok from w.
inline AuditResult fr_rule_audit(
    const std::map<std::string, std::vector<std::string>>& transcripts, AuditMode mode) {
    const auto auditor_it = transcripts.find("auditor");
    if (auditor_it == transcripts.end() || auditor_it->second.size() < 2 ||
        auditor_it->second[auditor_it->second.size() - 2] != "okbar" ||
        auditor_it->second.back() != "ok") {
        throw PreconditionNotMet("audit requires a run whose final asks heard okbar then ok");
    }

    const auto certainties = detail::verify_fr_certainties();
    const double floor = 1.0 - kDeterminacyTol;
    if (certainties.wbar_sees_up < floor || certainties.f_sees_tail < floor ||
        certainties.fbar_sees_fail < floor) {
        throw Error("protocol certainty failed numeric recomputation");
    }

    AuditResult result;
    result.trace.push_back(
        {"Q",
         "wbar",
         {"wbar observed okbar"},
         "wbar is certain: f observed up",
         certainties.wbar_sees_up});

    // Rule C: adopt wbar's certainty. Needs wbar's actual record.
    try {
        if (mode == AuditMode::ConSol) {
            transcript_access(transcripts, "auditor", "wbar");
        }
        result.trace.push_back({"C",
                                "auditor",
                                {"wbar is certain: f observed up",
                                 "absolute facts: the reply heard is wbar's record"},
                                "f observed up",
                                std::nullopt});
    } catch (const ForbiddenComparison& forbidden) {
        result.blocked = BlockedStep{"C", forbidden.what()};
        result.verdict = "blocked-at-C";
        return result;
    }

    result.trace.push_back({"Q",
                            "f",
                            {"f observed up"},
                            "f is certain: fbar observed t",
                            certainties.f_sees_tail});
    result.trace.push_back({"C",
                            "auditor",
                            {"f is certain: fbar observed t"},
                            "fbar observed t",
                            std::nullopt});
    result.trace.push_back({"Q",
                            "fbar",
                            {"fbar observed t"},
                            "fbar is certain: w observes fail",
                            certainties.fbar_sees_fail});
    result.trace.push_back({"C",
                            "auditor",
                            {"fbar is certain: w observes fail"},
                            "w observes fail",
                            std::nullopt});
    result.trace.push_back({"S",
                            "auditor",
                            {"w observes fail", "auditor heard w report ok"},
                            "contradiction",
                            std::nullopt});
    result.verdict = "contradiction";
    return result;
}

} // namespace persim::scenarios
