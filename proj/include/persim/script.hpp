// Scenario scripts: a declarative protocol of preparations, unitaries,
// observations and asks, serializable to JSON. The same schema is accepted
// by the CLI's --script flag.
//
// Registers created at runtime (observation memory) are referenced as
// "mem@<step>", resolving to the memory register of the observation made at
// that step index.

#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "persim/hilbert.hpp"

namespace persim::scenarios {

using json = nlohmann::json;

inline constexpr std::string_view kMemRefPrefix = "mem@";

inline std::optional<std::size_t> parse_mem_ref(std::string_view ref) {
    if (ref.substr(0, kMemRefPrefix.size()) != kMemRefPrefix) return std::nullopt;
    std::size_t value = 0;
    for (char c : ref.substr(kMemRefPrefix.size())) {
        if (c < '0' || c > '9') return std::nullopt;
        value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    return value;
}

struct ProjectorSpec {
    enum class Kind { Spin, Computational, Explicit };

    Kind kind = Kind::Spin;
    // Spin
    std::string spin_register;
    double angle = 0.0;
    // Computational and Explicit
    std::vector<std::string> registers;
    std::vector<std::string> labels;
    // Explicit
    std::vector<ProjectorSet::Outcome> outcomes;

    static ProjectorSpec spin(std::string reg, double angle) {
        ProjectorSpec s;
        s.kind = Kind::Spin;
        s.spin_register = std::move(reg);
        s.angle = angle;
        return s;
    }

    static ProjectorSpec computational(std::vector<std::string> regs,
                                       std::vector<std::string> labels) {
        ProjectorSpec s;
        s.kind = Kind::Computational;
        s.registers = std::move(regs);
        s.labels = std::move(labels);
        return s;
    }

    static ProjectorSpec explicit_set(std::vector<std::string> regs,
                                      std::vector<ProjectorSet::Outcome> outcomes) {
        ProjectorSpec s;
        s.kind = Kind::Explicit;
        s.registers = std::move(regs);
        s.outcomes = std::move(outcomes);
        return s;
    }

    std::vector<std::string> referenced_registers() const {
        if (kind == Kind::Spin) return {spin_register};
        return registers;
    }
};

struct PrepareStep {
    std::optional<std::vector<cplx>> global;
    std::map<std::string, std::vector<cplx>> product;
};

struct UnitaryStep {
    std::vector<std::string> registers;
    Matrix matrix;
};

struct ObserveStep {
    std::string agent;
    ProjectorSpec projectors;
};

struct ChooseObserveStep {
    struct Option {
        std::string choice;
        ProjectorSpec projectors;
    };
    std::string agent;
    std::vector<Option> options;
};

struct AskStep {
    std::string agent;
    std::string target;
    std::size_t event_step = 0;
};

struct AssertDistributionStep {
    std::string agent;
    ProjectorSpec projectors;
    std::map<std::string, double> expected;
    double tolerance = 1e-9;
};

using Step = std::variant<PrepareStep, UnitaryStep, ObserveStep, ChooseObserveStep, AskStep,
                          AssertDistributionStep>;

struct ScriptMetadata {
    // Space-like separations between step indices; informational only.
    std::vector<std::pair<std::size_t, std::size_t>> separations;
    // Outcome label -> action name, for scenarios that map results to acts.
    std::map<std::string, std::string> action_map;
};

struct ScenarioScript {
    std::string name;
    RegisterLayout layout;
    std::vector<std::string> agents;
    std::vector<Step> steps;
    ScriptMetadata metadata;

    bool has_agent(std::string_view a) const {
        for (const auto& x : agents)
            if (x == a) return true;
        return false;
    }
};

namespace detail {

inline bool is_observation_step(const Step& s) {
    return std::holds_alternative<ObserveStep>(s) || std::holds_alternative<ChooseObserveStep>(s) ||
           std::holds_alternative<AskStep>(s);
}

inline const std::string& step_agent(const Step& s) {
    if (const auto* o = std::get_if<ObserveStep>(&s)) return o->agent;
    if (const auto* c = std::get_if<ChooseObserveStep>(&s)) return c->agent;
    if (const auto* a = std::get_if<AskStep>(&s)) return a->agent;
    throw BadParams("step has no acting agent");
}

inline void check_register_refs(const ScenarioScript& script, const ProjectorSpec& spec,
                                std::size_t step_index) {
    for (const auto& r : spec.referenced_registers()) {
        if (auto ref = parse_mem_ref(r)) {
            if (*ref >= step_index || !is_observation_step(script.steps[*ref])) {
                throw BadParams("'" + r + "' does not point back at an observation step");
            }
        } else if (!script.layout.has(r)) {
            throw UnknownRegister("step references unknown register '" + r + "'");
        }
    }
}

} // namespace detail

inline void validate(const ScenarioScript& script) {
    for (std::size_t i = 0; i < script.steps.size(); ++i) {
        const Step& step = script.steps[i];
        if (std::holds_alternative<PrepareStep>(step) && i != 0) {
            throw BadParams("a prepare step may only appear first");
        }
        if (detail::is_observation_step(step)) {
            if (!script.has_agent(detail::step_agent(step))) {
                throw BadParams("step " + std::to_string(i) + " uses undeclared agent '" +
                                detail::step_agent(step) + "'");
            }
        }
        if (const auto* o = std::get_if<ObserveStep>(&step)) {
            detail::check_register_refs(script, o->projectors, i);
        } else if (const auto* c = std::get_if<ChooseObserveStep>(&step)) {
            if (c->options.empty()) throw BadParams("choose_observe with no options");
            for (const auto& opt : c->options) {
                detail::check_register_refs(script, opt.projectors, i);
            }
        } else if (const auto* a = std::get_if<AskStep>(&step)) {
            if (!script.has_agent(a->target)) {
                throw BadParams("ask targets undeclared agent '" + a->target + "'");
            }
            if (a->event_step >= i) throw BadParams("ask event reference must point backward");
            const Step& ref = script.steps[a->event_step];
            if (!detail::is_observation_step(ref)) {
                throw BadParams("ask must reference an observation step");
            }
            if (detail::step_agent(ref) != a->target) {
                throw BadParams("ask references an event of a different agent");
            }
        } else if (const auto* ad = std::get_if<AssertDistributionStep>(&step)) {
            if (!script.has_agent(ad->agent)) {
                throw BadParams("assert_distribution uses undeclared agent '" + ad->agent + "'");
            }
            detail::check_register_refs(script, ad->projectors, i);
        }
    }
}

// Initial global state: the first step's preparation, or |0...0> when the
// script starts without one.
inline StateVector initial_state(const ScenarioScript& script) {
    if (!script.steps.empty()) {
        if (const auto* p = std::get_if<PrepareStep>(&script.steps.front())) {
            if (p->global) return prepare(script.layout, *p->global);
            return prepare_product(script.layout, p->product);
        }
    }
    std::vector<cplx> amps(script.layout.total_dimension());
    amps[0] = 1.0;
    return StateVector(script.layout, std::move(amps));
}

// Resolution of script-level register references against a live layout.
struct StepContext {
    // Step index -> runtime memory register id of the observation it made.
    std::map<std::size_t, std::string> memory_of_step;

    std::string resolve(const std::string& ref) const {
        if (auto mem = parse_mem_ref(ref)) {
            auto it = memory_of_step.find(*mem);
            if (it == memory_of_step.end()) {
                throw BadParams("'" + ref + "' referenced before the observation ran");
            }
            return it->second;
        }
        return ref;
    }

    std::vector<std::string> resolve_all(const std::vector<std::string>& refs) const {
        std::vector<std::string> out;
        out.reserve(refs.size());
        for (const auto& r : refs) out.push_back(resolve(r));
        return out;
    }
};

inline ProjectorSet resolve_projectors(const ProjectorSpec& spec, const RegisterLayout& layout,
                                       const StepContext& ctx) {
    switch (spec.kind) {
    case ProjectorSpec::Kind::Spin: {
        const std::string reg = ctx.resolve(spec.spin_register);
        if (layout.dim_of(reg) != 2) {
            throw BadDimension("spin measurement requires a dimension-2 register");
        }
        return spin_projectors(spec.angle, reg);
    }
    case ProjectorSpec::Kind::Computational:
        return computational_projectors(layout, ctx.resolve_all(spec.registers), spec.labels);
    case ProjectorSpec::Kind::Explicit:
        return ProjectorSet(ctx.resolve_all(spec.registers), spec.outcomes);
    }
    throw BadParams("unknown projector kind");
}

// ---------------------------------------------------------------------------
// JSON serialization. Complex numbers are [re, im]; matrices are row-major
// nested arrays of complex numbers.

inline json to_json(const cplx& z) { return json::array({z.real(), z.imag()}); }

inline cplx cplx_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2) throw BadParams("complex number must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (std::size_t c = 0; c < m.cols(); ++c) row.push_back(to_json(m(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw BadParams("matrix must be a non-empty array of rows");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    std::vector<cplx> data;
    data.reserve(rows * cols);
    for (const auto& row : j) {
        if (row.size() != cols) throw BadParams("ragged matrix rows");
        for (const auto& v : row) data.push_back(cplx_from_json(v));
    }
    return Matrix(rows, cols, std::move(data));
}

inline json to_json(const std::vector<cplx>& v) {
    json arr = json::array();
    for (const auto& z : v) arr.push_back(to_json(z));
    return arr;
}

inline std::vector<cplx> cplx_vector_from_json(const json& j) {
    std::vector<cplx> v;
    v.reserve(j.size());
    for (const auto& e : j) v.push_back(cplx_from_json(e));
    return v;
}

inline json to_json(const ProjectorSpec& spec) {
    json j;
    switch (spec.kind) {
    case ProjectorSpec::Kind::Spin:
        j["kind"] = "spin";
        j["register"] = spec.spin_register;
        j["angle"] = spec.angle;
        break;
    case ProjectorSpec::Kind::Computational:
        j["kind"] = "computational";
        j["registers"] = spec.registers;
        j["labels"] = spec.labels;
        break;
    case ProjectorSpec::Kind::Explicit: {
        j["kind"] = "explicit";
        j["registers"] = spec.registers;
        json outs = json::array();
        for (const auto& o : spec.outcomes) {
            outs.push_back({{"label", o.label}, {"matrix", to_json(o.projector)}});
        }
        j["outcomes"] = std::move(outs);
        break;
    }
    }
    return j;
}

inline ProjectorSpec projector_spec_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "spin") {
        return ProjectorSpec::spin(j.at("register").get<std::string>(),
                                   j.at("angle").get<double>());
    }
    if (kind == "computational") {
        return ProjectorSpec::computational(j.at("registers").get<std::vector<std::string>>(),
                                            j.at("labels").get<std::vector<std::string>>());
    }
    if (kind == "explicit") {
        std::vector<ProjectorSet::Outcome> outcomes;
        for (const auto& o : j.at("outcomes")) {
            outcomes.push_back(
                {o.at("label").get<std::string>(), matrix_from_json(o.at("matrix"))});
        }
        return ProjectorSpec::explicit_set(j.at("registers").get<std::vector<std::string>>(),
                                           std::move(outcomes));
    }
    throw BadParams("unknown projector kind '" + kind + "'");
}

inline json to_json(const Step& step) {
    json j;
    if (const auto* p = std::get_if<PrepareStep>(&step)) {
        j["type"] = "prepare";
        if (p->global) {
            j["global"] = to_json(*p->global);
        } else {
            json prod;
            for (const auto& [reg, amps] : p->product) prod[reg] = to_json(amps);
            j["product"] = std::move(prod);
        }
    } else if (const auto* u = std::get_if<UnitaryStep>(&step)) {
        j["type"] = "unitary";
        j["registers"] = u->registers;
        j["matrix"] = to_json(u->matrix);
    } else if (const auto* o = std::get_if<ObserveStep>(&step)) {
        j["type"] = "observe";
        j["agent"] = o->agent;
        j["projectors"] = to_json(o->projectors);
    } else if (const auto* c = std::get_if<ChooseObserveStep>(&step)) {
        j["type"] = "choose_observe";
        j["agent"] = c->agent;
        json opts = json::array();
        for (const auto& opt : c->options) {
            opts.push_back({{"choice", opt.choice}, {"projectors", to_json(opt.projectors)}});
        }
        j["options"] = std::move(opts);
    } else if (const auto* a = std::get_if<AskStep>(&step)) {
        j["type"] = "ask";
        j["agent"] = a->agent;
        j["target"] = a->target;
        j["event_step"] = a->event_step;
    } else if (const auto* ad = std::get_if<AssertDistributionStep>(&step)) {
        j["type"] = "assert_distribution";
        j["agent"] = ad->agent;
        j["projectors"] = to_json(ad->projectors);
        j["expected"] = ad->expected;
        j["tolerance"] = ad->tolerance;
    }
    return j;
}

inline Step step_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "prepare") {
        PrepareStep p;
        if (j.contains("global")) {
            p.global = cplx_vector_from_json(j.at("global"));
        } else {
            for (const auto& [reg, amps] : j.at("product").items()) {
                p.product[reg] = cplx_vector_from_json(amps);
            }
        }
        return p;
    }
    if (type == "unitary") {
        return UnitaryStep{j.at("registers").get<std::vector<std::string>>(),
                           matrix_from_json(j.at("matrix"))};
    }
    if (type == "observe") {
        return ObserveStep{j.at("agent").get<std::string>(),
                           projector_spec_from_json(j.at("projectors"))};
    }
    if (type == "choose_observe") {
        ChooseObserveStep c;
        c.agent = j.at("agent").get<std::string>();
        for (const auto& o : j.at("options")) {
            c.options.push_back({o.at("choice").get<std::string>(),
                                 projector_spec_from_json(o.at("projectors"))});
        }
        return c;
    }
    if (type == "ask") {
        return AskStep{j.at("agent").get<std::string>(), j.at("target").get<std::string>(),
                       j.at("event_step").get<std::size_t>()};
    }
    if (type == "assert_distribution") {
        AssertDistributionStep a;
        a.agent = j.at("agent").get<std::string>();
        a.projectors = projector_spec_from_json(j.at("projectors"));
        a.expected = j.at("expected").get<std::map<std::string, double>>();
        a.tolerance = j.value("tolerance", 1e-9);
        return a;
    }
    throw BadParams("unknown step type '" + type + "'");
}

inline json to_json(const ScenarioScript& script) {
    json j;
    j["name"] = script.name;
    json layout = json::array();
    for (const auto& r : script.layout.registers()) {
        layout.push_back({{"id", r.id}, {"dim", r.dim}});
    }
    j["layout"] = std::move(layout);
    j["agents"] = script.agents;
    json steps = json::array();
    for (const auto& s : script.steps) steps.push_back(to_json(s));
    j["steps"] = std::move(steps);
    json meta;
    meta["separations"] = json::array();
    for (const auto& [a, b] : script.metadata.separations) {
        meta["separations"].push_back(json::array({a, b}));
    }
    meta["action_map"] = script.metadata.action_map;
    j["metadata"] = std::move(meta);
    return j;
}

inline ScenarioScript script_from_json(const json& j) {
    ScenarioScript script;
    script.name = j.value("name", "");
    std::vector<RegisterLayout::Register> regs;
    for (const auto& r : j.at("layout")) {
        regs.push_back({r.at("id").get<std::string>(), r.at("dim").get<std::size_t>()});
    }
    script.layout = RegisterLayout(std::move(regs));
    script.agents = j.at("agents").get<std::vector<std::string>>();
    for (const auto& s : j.at("steps")) script.steps.push_back(step_from_json(s));
    if (j.contains("metadata")) {
        const json& meta = j.at("metadata");
        for (const auto& p : meta.value("separations", json::array())) {
            script.metadata.separations.emplace_back(p[0].get<std::size_t>(),
                                                     p[1].get<std::size_t>());
        }
        if (meta.contains("action_map")) {
            script.metadata.action_map =
                meta.at("action_map").get<std::map<std::string, std::string>>();
        }
    }
    validate(script);
    return script;
}

} // namespace persim::scenarios
