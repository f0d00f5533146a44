// Branch decomposition of a global state relative to a projective
// measurement. Each branch carries its Born weight and, when the weight is
// above the floor, the normalized relative state.

#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "persim/hilbert.hpp"

namespace persim {

// Rotates global phase so the first amplitude above the floor is real and
// positive. Keeps equality checks on relative states reproducible.
inline StateVector phase_normalized(const StateVector& state) {
    for (const cplx& a : state.amplitudes()) {
        const double mag = std::abs(a);
        if (mag > kWeightFloor) {
            const cplx rot = std::conj(a) / mag;
            std::vector<cplx> amps(state.amplitudes().begin(), state.amplitudes().end());
            for (cplx& v : amps) v *= rot;
            return normalized_state(state.layout(), std::move(amps));
        }
    }
    return state;
}

struct Branch {
    std::string label;
    double weight = 0.0;
    // Absent for weight below the floor.
    std::optional<StateVector> relative_state;
};

struct BranchDecomposition {
    std::vector<Branch> branches;

    const Branch& branch(std::string_view label) const {
        for (const auto& b : branches)
            if (b.label == label) return b;
        throw UnknownLabel("no branch labeled '" + std::string(label) + "'");
    }
};

inline StateVector relative_state(const StateVector& state, const ProjectorSet& set,
                                  std::string_view label) {
    auto [weight, amps] = detail::project(state, set, label);
    if (weight <= kWeightFloor) {
        throw ZeroWeightBranch("conditioning on outcome '" + std::string(label) +
                               "' with weight below 1e-12");
    }
    return phase_normalized(normalized_state(state.layout(), std::move(amps)));
}

inline BranchDecomposition decompose(const StateVector& state, const ProjectorSet& set) {
    BranchDecomposition decomposition;
    for (const auto& outcome : set.outcomes()) {
        auto [weight, amps] = detail::project(state, set, outcome.label);
        Branch b;
        b.label = outcome.label;
        // Zero-weight branches stay listed so reports can show the branch
        // with probability 0 next to the branch with probability 1.
        if (weight > kWeightFloor) {
            b.weight = weight;
            b.relative_state = phase_normalized(normalized_state(state.layout(), std::move(amps)));
        }
        decomposition.branches.push_back(std::move(b));
    }
    return decomposition;
}

} // namespace persim
