// Finite-dimensional state-vector engine: named registers, tensor-product
// states, unitaries and projective measurements on register subsets.
//
// Indexing convention: the first register in a layout is the most
// significant digit of the global basis index, the last register the least
// significant. All operations are pure (state in, new state out).

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "persim/errors.hpp"
#include "persim/linalg.hpp"

namespace persim {

inline constexpr double kNormTol = 1e-12;       // norm drift budget
inline constexpr double kValidationTol = 1e-10; // unitarity, completeness
inline constexpr double kWeightFloor = 1e-12;   // below this a branch is impossible
inline constexpr std::size_t kMaxDimension = std::size_t{1} << 20;

class RegisterLayout {
public:
    struct Register {
        std::string id;
        std::size_t dim;
    };

    RegisterLayout() = default;

    explicit RegisterLayout(std::vector<Register> regs) : registers_(std::move(regs)) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < registers_.size(); ++i) {
            const auto& r = registers_[i];
            if (r.dim < 2) {
                throw BadDimension("register '" + r.id + "' must have dimension >= 2");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (registers_[j].id == r.id) {
                    throw DuplicateRegister("register id '" + r.id + "' appears twice");
                }
            }
            if (total > kMaxDimension / r.dim) {
                throw StateTooLarge("layout exceeds the 2^20 amplitude bound");
            }
            total *= r.dim;
        }
        total_dim_ = total;
    }

    static RegisterLayout of(std::initializer_list<std::pair<std::string, std::size_t>> regs) {
        std::vector<Register> rs;
        for (const auto& [id, dim] : regs) rs.push_back({id, dim});
        return RegisterLayout(std::move(rs));
    }

    const std::vector<Register>& registers() const { return registers_; }
    std::size_t size() const { return registers_.size(); }
    std::size_t total_dimension() const { return total_dim_; }

    bool has(std::string_view id) const {
        for (const auto& r : registers_)
            if (r.id == id) return true;
        return false;
    }

    std::size_t index_of(std::string_view id) const {
        for (std::size_t i = 0; i < registers_.size(); ++i)
            if (registers_[i].id == id) return i;
        throw UnknownRegister("no register named '" + std::string(id) + "'");
    }

    std::size_t dim_of(std::string_view id) const { return registers_[index_of(id)].dim; }

    // Stride of register i: product of the dimensions of registers after it.
    std::size_t stride_of(std::size_t reg_index) const {
        std::size_t s = 1;
        for (std::size_t j = reg_index + 1; j < registers_.size(); ++j) s *= registers_[j].dim;
        return s;
    }

    RegisterLayout extended(const std::string& id, std::size_t dim) const {
        if (has(id)) throw DuplicateRegister("register id '" + id + "' already in layout");
        std::vector<Register> rs = registers_;
        rs.push_back({id, dim});
        return RegisterLayout(std::move(rs));
    }

    bool operator==(const RegisterLayout& other) const {
        if (registers_.size() != other.registers_.size()) return false;
        for (std::size_t i = 0; i < registers_.size(); ++i) {
            if (registers_[i].id != other.registers_[i].id ||
                registers_[i].dim != other.registers_[i].dim)
                return false;
        }
        return true;
    }

private:
    std::vector<Register> registers_;
    std::size_t total_dim_ = 1;
};

// Offsets for addressing a subset of registers inside the global index
// space. target_offsets[k] is the global offset of joint basis state k of
// the targets (first target most significant); rest_offsets enumerates the
// base offsets of every configuration of the remaining registers.
struct EmbedMap {
    std::vector<std::size_t> target_offsets;
    std::vector<std::size_t> rest_offsets;
};

inline std::vector<std::size_t> subset_offsets(const RegisterLayout& layout,
                                               const std::vector<std::size_t>& reg_indices) {
    std::vector<std::size_t> offsets{0};
    for (std::size_t idx : reg_indices) {
        const std::size_t stride = layout.stride_of(idx);
        const std::size_t dim = layout.registers()[idx].dim;
        std::vector<std::size_t> next;
        next.reserve(offsets.size() * dim);
        for (std::size_t base : offsets)
            for (std::size_t d = 0; d < dim; ++d) next.push_back(base + d * stride);
        offsets = std::move(next);
    }
    return offsets;
}

inline EmbedMap make_embed_map(const RegisterLayout& layout,
                               const std::vector<std::string>& targets) {
    std::vector<std::size_t> target_idx;
    target_idx.reserve(targets.size());
    for (const auto& t : targets) {
        const std::size_t i = layout.index_of(t);
        if (std::find(target_idx.begin(), target_idx.end(), i) != target_idx.end()) {
            throw DuplicateRegister("target register '" + t + "' listed twice");
        }
        target_idx.push_back(i);
    }
    std::vector<std::size_t> rest_idx;
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (std::find(target_idx.begin(), target_idx.end(), i) == target_idx.end()) {
            rest_idx.push_back(i);
        }
    }
    return EmbedMap{subset_offsets(layout, target_idx), subset_offsets(layout, rest_idx)};
}

inline std::size_t joint_dimension(const RegisterLayout& layout,
                                   const std::vector<std::string>& targets) {
    std::size_t d = 1;
    for (const auto& t : targets) d *= layout.dim_of(t);
    return d;
}

namespace detail {

inline double norm2(std::span<const cplx> amps) {
    double n = 0.0;
    for (const cplx& a : amps) n += std::norm(a);
    return n;
}

// y = M x over the strided slots selected by `map`, in place.
inline void apply_matrix(std::vector<cplx>& amps, const EmbedMap& map, const Matrix& m) {
    const std::size_t k = map.target_offsets.size();
    std::vector<cplx> x(k), y(k);
    for (std::size_t base : map.rest_offsets) {
        for (std::size_t i = 0; i < k; ++i) x[i] = amps[base + map.target_offsets[i]];
        for (std::size_t r = 0; r < k; ++r) {
            cplx acc{};
            for (std::size_t c = 0; c < k; ++c) acc += m(r, c) * x[c];
            y[r] = acc;
        }
        for (std::size_t i = 0; i < k; ++i) amps[base + map.target_offsets[i]] = y[i];
    }
}

} // namespace detail

class StateVector {
public:
    // The scalar unit state over the empty layout.
    StateVector() : amplitudes_{1.0} {}

    // Amplitudes must already be normalized; prepare() is the public door.
    StateVector(RegisterLayout layout, std::vector<cplx> amplitudes)
        : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)) {
        if (amplitudes_.size() != layout_.total_dimension()) {
            throw DimensionMismatch("amplitude count does not match layout dimension");
        }
        if (std::abs(detail::norm2(amplitudes_) - 1.0) > 1e-9) {
            throw ZeroNorm("state vector is not normalized");
        }
    }

    const RegisterLayout& layout() const { return layout_; }
    std::size_t dimension() const { return amplitudes_.size(); }
    std::span<const cplx> amplitudes() const { return amplitudes_; }
    const cplx& amplitude(std::size_t i) const { return amplitudes_[i]; }

    double norm2() const { return detail::norm2(amplitudes_); }

    cplx inner_product(const StateVector& other) const {
        if (!(layout_ == other.layout_)) {
            throw DimensionMismatch("inner product across different layouts");
        }
        cplx acc{};
        for (std::size_t i = 0; i < amplitudes_.size(); ++i)
            acc += std::conj(amplitudes_[i]) * other.amplitudes_[i];
        return acc;
    }

    double fidelity(const StateVector& other) const { return std::norm(inner_product(other)); }

    double max_abs_diff(const StateVector& other) const {
        if (!(layout_ == other.layout_)) {
            throw DimensionMismatch("comparison across different layouts");
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < amplitudes_.size(); ++i)
            worst = std::max(worst, std::abs(amplitudes_[i] - other.amplitudes_[i]));
        return worst;
    }

private:
    friend StateVector extend_with_register(const StateVector&, const std::string&, std::size_t,
                                            std::size_t);
    friend StateVector normalized_state(RegisterLayout, std::vector<cplx>);

    RegisterLayout layout_;
    std::vector<cplx> amplitudes_;
};

// Normalizes and wraps; the one place a raw amplitude array becomes a state.
inline StateVector normalized_state(RegisterLayout layout, std::vector<cplx> amps) {
    if (amps.size() != layout.total_dimension()) {
        throw DimensionMismatch("amplitude count does not match layout dimension");
    }
    const double n2 = detail::norm2(amps);
    if (n2 <= kWeightFloor) throw ZeroNorm("amplitudes have zero norm");
    const double inv = 1.0 / std::sqrt(n2);
    for (cplx& a : amps) a *= inv;
    StateVector s;
    s.layout_ = std::move(layout);
    s.amplitudes_ = std::move(amps);
    return s;
}

class UnitaryOp {
public:
    UnitaryOp(std::vector<std::string> targets, Matrix matrix)
        : targets_(std::move(targets)), matrix_(std::move(matrix)) {
        if (matrix_.rows() != matrix_.cols()) {
            throw NonUnitary("unitary matrix must be square");
        }
        if (!(matrix_.adjoint() * matrix_).is_identity(kValidationTol)) {
            throw NonUnitary("matrix fails U'U = I within 1e-10");
        }
    }

    const std::vector<std::string>& targets() const { return targets_; }
    const Matrix& matrix() const { return matrix_; }

private:
    std::vector<std::string> targets_;
    Matrix matrix_;
};

class ProjectorSet {
public:
    struct Outcome {
        std::string label;
        Matrix projector;
    };

    ProjectorSet(std::vector<std::string> targets, std::vector<Outcome> outcomes)
        : targets_(std::move(targets)), outcomes_(std::move(outcomes)) {
        if (outcomes_.empty()) throw InvalidProjectorSet("projector set has no outcomes");
        const std::size_t d = outcomes_.front().projector.rows();
        Matrix sum(d, d);
        for (std::size_t i = 0; i < outcomes_.size(); ++i) {
            const auto& [label, p] = outcomes_[i];
            for (std::size_t j = 0; j < i; ++j) {
                if (outcomes_[j].label == label) {
                    throw InvalidProjectorSet("duplicate outcome label '" + label + "'");
                }
            }
            if (p.rows() != d || p.cols() != d) {
                throw InvalidProjectorSet("projectors differ in dimension");
            }
            if (p.max_abs_diff(p.adjoint()) > kValidationTol) {
                throw InvalidProjectorSet("projector '" + label + "' is not Hermitian");
            }
            if ((p * p).max_abs_diff(p) > kValidationTol) {
                throw InvalidProjectorSet("projector '" + label + "' is not idempotent");
            }
            for (std::size_t j = 0; j < i; ++j) {
                Matrix prod = outcomes_[j].projector * p;
                if (prod.max_abs_diff(Matrix(d, d)) > kValidationTol) {
                    throw InvalidProjectorSet("projectors '" + outcomes_[j].label + "' and '" +
                                              label + "' are not orthogonal");
                }
            }
            sum = sum + p;
        }
        if (!sum.is_identity(kValidationTol)) {
            throw InvalidProjectorSet("projectors do not sum to identity");
        }
    }

    const std::vector<std::string>& targets() const { return targets_; }
    const std::vector<Outcome>& outcomes() const { return outcomes_; }
    std::size_t joint_dim() const { return outcomes_.front().projector.rows(); }

    std::vector<std::string> labels() const {
        std::vector<std::string> ls;
        ls.reserve(outcomes_.size());
        for (const auto& o : outcomes_) ls.push_back(o.label);
        return ls;
    }

    const Matrix& projector(std::string_view label) const {
        for (const auto& o : outcomes_)
            if (o.label == label) return o.projector;
        throw UnknownLabel("no outcome labeled '" + std::string(label) + "'");
    }

    std::size_t label_index(std::string_view label) const {
        for (std::size_t i = 0; i < outcomes_.size(); ++i)
            if (outcomes_[i].label == label) return i;
        throw UnknownLabel("no outcome labeled '" + std::string(label) + "'");
    }

private:
    std::vector<std::string> targets_;
    std::vector<Outcome> outcomes_;
};

// ---------------------------------------------------------------------------
// Operations

inline StateVector prepare(const RegisterLayout& layout, std::vector<cplx> global_amplitudes) {
    return normalized_state(layout, std::move(global_amplitudes));
}

// Product spec: one amplitude list per register, tensored in layout order.
inline StateVector prepare_product(const RegisterLayout& layout,
                                   const std::map<std::string, std::vector<cplx>>& per_register) {
    for (const auto& [id, amps] : per_register) {
        if (!layout.has(id)) throw UnknownRegister("product spec names unknown register '" + id + "'");
        if (amps.size() != layout.dim_of(id)) {
            throw DimensionMismatch("amplitude list for '" + id + "' has wrong length");
        }
    }
    std::vector<cplx> global{1.0};
    for (const auto& reg : layout.registers()) {
        auto it = per_register.find(reg.id);
        if (it == per_register.end()) {
            throw DimensionMismatch("product spec missing register '" + reg.id + "'");
        }
        std::vector<cplx> next(global.size() * reg.dim);
        for (std::size_t i = 0; i < global.size(); ++i)
            for (std::size_t d = 0; d < reg.dim; ++d) next[i * reg.dim + d] = global[i] * it->second[d];
        global = std::move(next);
    }
    return normalized_state(layout, std::move(global));
}

inline StateVector apply_unitary(const StateVector& state, const UnitaryOp& op) {
    const EmbedMap map = make_embed_map(state.layout(), op.targets());
    if (map.target_offsets.size() != op.matrix().rows()) {
        throw DimensionMismatch("unitary dimension does not match its targets");
    }
    std::vector<cplx> amps(state.amplitudes().begin(), state.amplitudes().end());
    detail::apply_matrix(amps, map, op.matrix());
    return normalized_state(state.layout(), std::move(amps));
}

inline ProjectorSet computational_projectors(const RegisterLayout& layout,
                                             const std::vector<std::string>& targets,
                                             std::vector<std::string> labels = {}) {
    const std::size_t d = joint_dimension(layout, targets);
    if (labels.empty()) {
        for (std::size_t i = 0; i < d; ++i) labels.push_back(std::to_string(i));
    }
    if (labels.size() != d) {
        throw DimensionMismatch("need one label per joint basis state");
    }
    std::vector<ProjectorSet::Outcome> outcomes;
    for (std::size_t i = 0; i < d; ++i) {
        Matrix p(d, d);
        p(i, i) = 1.0;
        outcomes.push_back({labels[i], std::move(p)});
    }
    return ProjectorSet(targets, std::move(outcomes));
}

// Two rank-1 projectors for spin along the direction at `angle` in a fixed
// measurement plane; angle 0 is the computational basis, labels "+"/"-".
inline ProjectorSet spin_projectors(double angle, const std::string& target) {
    const double c = std::cos(angle / 2.0);
    const double s = std::sin(angle / 2.0);
    Matrix plus{{c * c, c * s}, {c * s, s * s}};
    Matrix minus{{s * s, -c * s}, {-c * s, c * c}};
    std::vector<ProjectorSet::Outcome> outcomes;
    outcomes.push_back({"+", std::move(plus)});
    outcomes.push_back({"-", std::move(minus)});
    return ProjectorSet({target}, std::move(outcomes));
}

inline void check_spin_target(const RegisterLayout& layout, const ProjectorSet& set) {
    for (const auto& t : set.targets()) {
        if (layout.dim_of(t) != 2) {
            throw BadDimension("spin measurement requires a dimension-2 register");
        }
    }
}

namespace detail {

// Unnormalized projection P_label |state>, plus its squared norm.
inline std::pair<double, std::vector<cplx>> project(const StateVector& state,
                                                    const ProjectorSet& set,
                                                    std::string_view label) {
    const Matrix& p = set.projector(label);
    const EmbedMap map = make_embed_map(state.layout(), set.targets());
    if (map.target_offsets.size() != p.rows()) {
        throw DimensionMismatch("projector dimension does not match its targets");
    }
    std::vector<cplx> amps(state.amplitudes().begin(), state.amplitudes().end());
    apply_matrix(amps, map, p);
    return {norm2(amps), std::move(amps)};
}

} // namespace detail

inline double outcome_probability(const StateVector& state, const ProjectorSet& set,
                                  std::string_view label) {
    return detail::project(state, set, label).first;
}

inline std::map<std::string, double> outcome_distribution(const StateVector& state,
                                                          const ProjectorSet& set) {
    std::map<std::string, double> dist;
    for (const auto& o : set.outcomes()) dist[o.label] = outcome_probability(state, set, o.label);
    return dist;
}

inline StateVector extend_with_register(const StateVector& state, const std::string& id,
                                        std::size_t dim, std::size_t basis_index) {
    if (basis_index >= dim) throw BadDimension("initial basis index out of range");
    RegisterLayout layout = state.layout().extended(id, dim);
    std::vector<cplx> amps(layout.total_dimension());
    for (std::size_t i = 0; i < state.dimension(); ++i) {
        amps[i * dim + basis_index] = state.amplitude(i);
    }
    StateVector s;
    s.layout_ = std::move(layout);
    s.amplitudes_ = std::move(amps);
    return s;
}

} // namespace persim
