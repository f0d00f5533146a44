#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "persim/hilbert.hpp"

using namespace persim;
using persim::test::dense_apply;
using persim::test::random_projectors;
using persim::test::random_state;
using persim::test::random_unitary;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_amplitudes(const StateVector& s, const std::vector<cplx>& expected, double tol = 1e-12) {
    REQUIRE(s.dimension() == expected.size());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        INFO("index " << i);
        CHECK(std::abs(s.amplitude(i) - expected[i]) < tol);
    }
}
} // namespace

TEST_CASE("layout validation") {
    CHECK_THROWS_AS(RegisterLayout::of({{"A", 2}, {"A", 2}}), DuplicateRegister);
    CHECK_THROWS_AS(RegisterLayout::of({{"A", 1}}), BadDimension);
    CHECK_THROWS_AS(RegisterLayout::of({{"A", 1u << 11}, {"B", 1u << 11}}), StateTooLarge);
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 3}});
    CHECK(layout.total_dimension() == 6);
    CHECK(layout.stride_of(0) == 3);
    CHECK(layout.stride_of(1) == 1);
    CHECK_THROWS_AS(layout.index_of("C"), UnknownRegister);
}

TEST_CASE("prepare the singlet from explicit amplitudes") {
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    const auto s = prepare(layout, {0.0, kInvSqrt2, -kInvSqrt2, 0.0});
    check_amplitudes(s, {0.0, 0.70710678, -0.70710678, 0.0}, 1e-8);
    CHECK(std::abs(s.norm2() - 1.0) < 1e-12);
}

TEST_CASE("prepare an equal superposition") {
    const auto layout = RegisterLayout::of({{"X", 2}});
    const auto s = prepare(layout, {kInvSqrt2, kInvSqrt2});
    check_amplitudes(s, {kInvSqrt2, kInvSqrt2});
}

TEST_CASE("prepare a product of basis states") {
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    const auto s = prepare_product(layout, {{"A", {1.0, 0.0}}, {"B", {1.0, 0.0}}});
    check_amplitudes(s, {1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("prepare normalizes and rejects degenerate specs") {
    const auto layout = RegisterLayout::of({{"A", 2}});
    const auto s = prepare(layout, {2.0, 0.0});
    check_amplitudes(s, {1.0, 0.0});
    CHECK_THROWS_AS(prepare(layout, {0.0, 0.0}), ZeroNorm);
    CHECK_THROWS_AS(prepare(layout, {1.0, 0.0, 0.0}), DimensionMismatch);
    CHECK_THROWS_AS(prepare_product(layout, {{"A", {1.0, 0.0, 0.0}}}), DimensionMismatch);
}

TEST_CASE("identity leaves amplitudes untouched") {
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    const auto s = prepare(layout, {0.0, kInvSqrt2, -kInvSqrt2, 0.0});
    const UnitaryOp id({"A"}, Matrix::identity(2));
    check_amplitudes(apply_unitary(s, id), {0.0, kInvSqrt2, -kInvSqrt2, 0.0});
}

TEST_CASE("hadamard on a basis state") {
    const auto layout = RegisterLayout::of({{"X", 2}});
    const auto s = prepare(layout, {1.0, 0.0});
    const UnitaryOp h({"X"}, Matrix{{kInvSqrt2, kInvSqrt2}, {kInvSqrt2, -kInvSqrt2}});
    check_amplitudes(apply_unitary(s, h), {kInvSqrt2, kInvSqrt2});
}

TEST_CASE("record-copy against a hand-built dimension-8 embedding") {
    // Layout (A, B, M); the op targets (A, M) and increments M by A's basis
    // value. Independent route: the full 8x8 matrix assembled from explicit
    // Kronecker products.
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}, {"M", 2}});
    const auto s = prepare_product(layout, {{"A", {1.0, 0.0}}, {"B", {0.0, 1.0}}, {"M", {1.0, 0.0}}});

    const Matrix p0{{1.0, 0.0}, {0.0, 0.0}};
    const Matrix p1{{0.0, 0.0}, {0.0, 1.0}};
    const Matrix shift{{0.0, 1.0}, {1.0, 0.0}};
    const Matrix id2 = Matrix::identity(2);

    Matrix copy_on_am(4, 4);
    copy_on_am = p0.kron(id2) + p1.kron(shift);
    const Matrix full = p0.kron(id2).kron(id2) + p1.kron(id2).kron(shift);

    const auto expected = dense_apply(full, s.amplitudes());
    const auto result = apply_unitary(s, UnitaryOp({"A", "M"}, copy_on_am));
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::abs(result.amplitude(i) - expected[i]) < 1e-12);
    }
    // |+ - 0> has A at basis 0, so the memory stays 0 and nothing moves.
    check_amplitudes(result, {0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0});

    // A superposed control writes the label into the memory on each branch.
    const auto sup = prepare_product(layout, {{"A", {kInvSqrt2, kInvSqrt2}}, {"B", {0.0, 1.0}}, {"M", {1.0, 0.0}}});
    const auto copied = apply_unitary(sup, UnitaryOp({"A", "M"}, copy_on_am));
    const auto dense = dense_apply(full, sup.amplitudes());
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(std::abs(copied.amplitude(i) - dense[i]) < 1e-12);
    }
    check_amplitudes(copied, {0.0, 0.0, kInvSqrt2, 0.0, 0.0, 0.0, 0.0, kInvSqrt2});
}

TEST_CASE("unitary validation") {
    CHECK_THROWS_AS(UnitaryOp({"A"}, Matrix{{1.0, 0.0}, {1.0, 1.0}}), NonUnitary);
    CHECK_THROWS_AS(UnitaryOp({"A"}, Matrix(2, 3, std::vector<cplx>(6))), NonUnitary);
    const auto layout = RegisterLayout::of({{"A", 2}});
    const auto s = prepare(layout, {1.0, 0.0});
    CHECK_THROWS_AS(apply_unitary(s, UnitaryOp({"Z"}, Matrix::identity(2))), UnknownRegister);
    CHECK_THROWS_AS(apply_unitary(s, UnitaryOp({"A"}, Matrix::identity(4))), DimensionMismatch);
}

TEST_CASE("spin projectors at the reference angle") {
    const auto set = spin_projectors(0.0, "A");
    CHECK(set.labels() == std::vector<std::string>{"+", "-"});
    CHECK(set.projector("+").max_abs_diff(Matrix{{1.0, 0.0}, {0.0, 0.0}}) < 1e-12);
    CHECK(set.projector("-").max_abs_diff(Matrix{{0.0, 0.0}, {0.0, 1.0}}) < 1e-12);
}

TEST_CASE("spin projectors at pi swap the reference labels") {
    const auto set = spin_projectors(M_PI, "A");
    CHECK(set.projector("+").max_abs_diff(Matrix{{0.0, 0.0}, {0.0, 1.0}}) < 1e-12);
    CHECK(set.projector("-").max_abs_diff(Matrix{{1.0, 0.0}, {0.0, 0.0}}) < 1e-12);
}

TEST_CASE("spin projectors at pi/2") {
    const auto set = spin_projectors(M_PI / 2.0, "A");
    CHECK(set.projector("+").max_abs_diff(Matrix{{0.5, 0.5}, {0.5, 0.5}}) < 1e-12);
    CHECK(set.projector("-").max_abs_diff(Matrix{{0.5, -0.5}, {-0.5, 0.5}}) < 1e-12);
}

TEST_CASE("antipodal spin directions swap labels at any angle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> angle(-8.0, 8.0);
    for (int i = 0; i < 50; ++i) {
        const double theta = angle(rng);
        const auto a = spin_projectors(theta, "Q");
        const auto b = spin_projectors(theta + M_PI, "Q");
        CHECK(a.projector("+").max_abs_diff(b.projector("-")) < 1e-12);
        CHECK(a.projector("-").max_abs_diff(b.projector("+")) < 1e-12);
    }
}

TEST_CASE("outcome probabilities on the singlet") {
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    const auto singlet = prepare(layout, {0.0, kInvSqrt2, -kInvSqrt2, 0.0});
    const auto oz = spin_projectors(0.0, "A");
    CHECK(outcome_probability(singlet, oz, "+") == Catch::Approx(0.5).margin(1e-12));
    CHECK(outcome_probability(singlet, oz, "-") == Catch::Approx(0.5).margin(1e-12));
    CHECK_THROWS_AS(outcome_probability(singlet, oz, "?"), UnknownLabel);

    const auto joint =
        computational_projectors(layout, {"A", "B"}, {"++", "+-", "-+", "--"});
    CHECK(outcome_probability(singlet, joint, "++") == Catch::Approx(0.0).margin(1e-12));

    const auto eigen = prepare_product(layout, {{"A", {1.0, 0.0}}, {"B", {0.0, 1.0}}});
    CHECK(outcome_probability(eigen, oz, "+") == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("extend with a register") {
    const auto fresh = extend_with_register(StateVector{}, "Q", 2, 0);
    check_amplitudes(fresh, {1.0, 0.0});

    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    const auto singlet = prepare(layout, {0.0, kInvSqrt2, -kInvSqrt2, 0.0});
    const auto extended = extend_with_register(singlet, "M", 2, 0);
    check_amplitudes(extended, {0.0, 0.0, kInvSqrt2, 0.0, -kInvSqrt2, 0.0, 0.0, 0.0});
    CHECK(std::abs(extended.norm2() - 1.0) < 1e-12);
    CHECK_THROWS_AS(extend_with_register(singlet, "A", 2, 0), DuplicateRegister);
}

TEST_CASE("norm preservation under random unitaries") {
    std::mt19937_64 rng(11);
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 2}, {"C", 4}});
    for (int i = 0; i < 40; ++i) {
        const auto s = random_state(layout, rng);
        const auto u = random_unitary(8, rng);
        const auto out = apply_unitary(s, UnitaryOp({"A", "C"}, u));
        CHECK(std::abs(out.norm2() - 1.0) < 1e-12);
    }
}

TEST_CASE("projector completeness over random states") {
    std::mt19937_64 rng(13);
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 4}});
    const auto set = random_projectors({"B"}, 4, {1, 2, 1}, rng);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_state(layout, rng);
        double total = 0.0;
        for (const auto& o : set.outcomes()) total += outcome_probability(s, set, o.label);
        CHECK(total == Catch::Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("independent single-register ops equal their tensor product") {
    std::mt19937_64 rng(17);
    const auto layout = RegisterLayout::of({{"A", 2}, {"B", 3}, {"C", 2}});
    for (int i = 0; i < 25; ++i) {
        const auto s = random_state(layout, rng);
        const auto ua = random_unitary(2, rng);
        const auto ub = random_unitary(3, rng);
        const auto stepwise =
            apply_unitary(apply_unitary(s, UnitaryOp({"A"}, ua)), UnitaryOp({"B"}, ub));
        const auto joint = apply_unitary(s, UnitaryOp({"A", "B"}, ua.kron(ub)));
        CHECK(stepwise.max_abs_diff(joint) < 1e-12);
    }
}

TEST_CASE("projector set validation") {
    const Matrix p0{{1.0, 0.0}, {0.0, 0.0}};
    const Matrix p1{{0.0, 0.0}, {0.0, 1.0}};
    CHECK_THROWS_AS(ProjectorSet({"A"}, {{"a", p0}, {"b", p0}}), InvalidProjectorSet);
    CHECK_THROWS_AS(ProjectorSet({"A"}, {{"a", p0}}), InvalidProjectorSet);
    CHECK_THROWS_AS(ProjectorSet({"A"}, {{"a", Matrix{{0.5, 0.5}, {0.0, 0.5}}}, {"b", p1}}),
                    InvalidProjectorSet);
    CHECK_NOTHROW(ProjectorSet({"A"}, {{"a", p0}, {"b", p1}}));
    CHECK_THROWS_AS(spin_projectors(0.0, "A").label_index("x"), UnknownLabel);
}
