#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "persim/oracle.hpp"

using namespace persim;
using namespace persim::oracle;
using namespace persim::scenarios;
using persim::test::random_unitary;

namespace {
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

ScenarioScript epr_script() {
    ScenarioScript s;
    s.name = "epr";
    s.layout = RegisterLayout::of({{"A", 2}, {"B", 2}});
    s.agents = {"alice", "bob"};
    PrepareStep prep;
    prep.global = std::vector<cplx>{0.0, kInvSqrt2, -kInvSqrt2, 0.0};
    s.steps.push_back(prep);
    s.steps.push_back(ObserveStep{"alice", ProjectorSpec::spin("A", 0.0)});
    s.steps.push_back(ObserveStep{"bob", ProjectorSpec::spin("B", 0.0)});
    s.steps.push_back(AskStep{"alice", "bob", 2});
    return s;
}

// The friend measures a superposed qubit; the outside observer then measures
// the pair {particle, friend-memory} against the entangled post-measurement
// state.
ScenarioScript wigner_script(bool ask_first) {
    ScenarioScript s;
    s.name = "wigner";
    s.layout = RegisterLayout::of({{"P", 2}});
    s.agents = {"friend", "wigner"};
    PrepareStep prep;
    prep.global = std::vector<cplx>{kInvSqrt2, kInvSqrt2};
    s.steps.push_back(prep);
    s.steps.push_back(ObserveStep{"friend", ProjectorSpec::spin("P", 0.0)});
    if (ask_first) s.steps.push_back(AskStep{"wigner", "friend", 1});

    const std::vector<cplx> sup = {kInvSqrt2, 0.0, 0.0, kInvSqrt2};
    Matrix p_sup = outer_projector(sup);
    Matrix p_rest = Matrix::identity(4) - p_sup;
    s.steps.push_back(ObserveStep{
        "wigner", ProjectorSpec::explicit_set({"P", "mem@1"}, {{"superposed-branch", p_sup},
                                                               {"rest", p_rest}})});
    return s;
}
} // namespace

TEST_CASE("textbook enumeration of the EPR script") {
    const auto dist = run_collapse(epr_script(), "alice", Mode::Textbook);
    REQUIRE(dist.probabilities.size() == 2);
    CHECK(dist.probability({"+", "-"}) == Catch::Approx(0.5).margin(1e-12));
    CHECK(dist.probability({"-", "+"}) == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("a single observation of an eigenstate has one transcript") {
    ScenarioScript s;
    s.name = "eigen";
    s.layout = RegisterLayout::of({{"A", 2}});
    s.agents = {"alice"};
    PrepareStep prep;
    prep.global = std::vector<cplx>{0.0, 1.0};
    s.steps.push_back(prep);
    s.steps.push_back(ObserveStep{"alice", ProjectorSpec::spin("A", 0.0)});
    const auto dist = run_collapse(s, "alice", Mode::Textbook);
    REQUIRE(dist.probabilities.size() == 1);
    CHECK(dist.probability({"-"}) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("premature collapse halves the interference outcome") {
    const auto script = wigner_script(false);
    const auto textbook = run_collapse(script, "wigner", Mode::Textbook);
    CHECK(textbook.probability({"superposed-branch"}) == Catch::Approx(1.0).margin(1e-9));

    const auto premature = run_collapse(script, "wigner", Mode::PrematureCollapse);
    CHECK(premature.probability({"superposed-branch"}) == Catch::Approx(0.5).margin(1e-9));
    CHECK(premature.probability({"rest"}) == Catch::Approx(0.5).margin(1e-9));

    // The hanging-on engine agrees with the textbook route, which is the
    // executable content of the contrast between the two descriptions.
    const auto hanging = run_hanging(script, "wigner");
    CHECK(hanging.probability({"superposed-branch"}) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("asking before the interference measurement breaks certainty") {
    const auto script = wigner_script(true);
    const auto hanging = run_hanging(script, "wigner");
    double p_sup = 0.0;
    for (const auto& [key, p] : hanging.probabilities) {
        if (key.back() == "superposed-branch") p_sup += p;
    }
    CHECK(p_sup == Catch::Approx(0.5).margin(1e-9));
}

TEST_CASE("hanging enumeration matches the collapse oracle on EPR") {
    const auto script = epr_script();
    const auto hanging = run_hanging(script, "alice");
    const auto collapse = run_collapse(script, "alice", Mode::Textbook);
    REQUIRE(hanging.probabilities.size() == collapse.probabilities.size());
    for (const auto& [key, p] : collapse.probabilities) {
        CHECK(hanging.probability(key) == Catch::Approx(p).margin(1e-9));
    }
}

TEST_CASE("oracle equivalence over random single-agent scripts") {
    std::mt19937_64 rng(101);
    for (int round = 0; round < 25; ++round) {
        const std::size_t n_regs = 1 + rng() % 3;
        std::vector<RegisterLayout::Register> regs;
        for (std::size_t r = 0; r < n_regs; ++r) regs.push_back({"q" + std::to_string(r), 2});
        ScenarioScript s;
        s.name = "random";
        s.layout = RegisterLayout(regs);
        s.agents = {"a"};

        PrepareStep prep;
        std::vector<cplx> amps(s.layout.total_dimension());
        for (auto& a : amps) a = persim::test::random_cplx(rng);
        prep.global = std::move(amps);
        s.steps.push_back(prep);

        const std::size_t n_obs = 1 + rng() % 4;
        for (std::size_t i = 0; i < n_obs; ++i) {
            const std::string reg = "q" + std::to_string(rng() % n_regs);
            if (rng() % 2) {
                s.steps.push_back(UnitaryStep{{reg}, random_unitary(2, rng)});
            }
            const double angle = static_cast<double>(rng() % 6283) / 1000.0;
            s.steps.push_back(ObserveStep{"a", ProjectorSpec::spin(reg, angle)});
        }

        const auto hanging = run_hanging(s, "a");
        const auto collapse = run_collapse(s, "a", Mode::Textbook);
        double total = 0.0;
        for (const auto& [key, p] : collapse.probabilities) {
            CHECK(std::abs(hanging.probability(key) - p) < 1e-9);
            total += p;
        }
        CHECK(total == Catch::Approx(1.0).margin(1e-10));
        for (const auto& [key, p] : hanging.probabilities) {
            CHECK(std::abs(collapse.probability(key) - p) < 1e-9);
        }
    }
}

TEST_CASE("sampled frequencies approach the analytic distribution") {
    const auto script = epr_script();
    const auto freqs =
        sample_frequencies(EngineKind::HangingOn, script, "alice", 10000, 42);
    double plus = 0.0;
    for (const auto& [key, f] : freqs) {
        // Only anticorrelated transcripts appear.
        REQUIRE(key.size() == 2);
        CHECK(key[1] != key[0]);
        if (key[0] == "+") plus = f;
    }
    CHECK(std::abs(plus - 0.5) < 0.02);

    const auto again = sample_frequencies(EngineKind::HangingOn, script, "alice", 200, 42);
    const auto same = sample_frequencies(EngineKind::HangingOn, script, "alice", 200, 42);
    CHECK(again == same);

    const auto single = sample_frequencies(EngineKind::HangingOn, script, "alice", 1, 7);
    REQUIRE(single.size() == 1);
    CHECK(single.begin()->second == 1.0);
}

TEST_CASE("collapse-engine sampling agrees with its own enumeration") {
    const auto script = epr_script();
    const auto analytic = run_collapse(script, "alice", Mode::Textbook);
    const auto freqs = sample_frequencies(EngineKind::Collapse, script, "alice", 4000, 3);
    const auto verdict = compare(analytic, freqs, 4000);
    CHECK(verdict.pass);
}

TEST_CASE("comparison bounds") {
    TranscriptDistribution analytic;
    analytic.probabilities[{"+"}] = 0.5;
    analytic.probabilities[{"-"}] = 0.5;

    std::map<TranscriptKey, double> close{{{"+"}, 0.49}, {{"-"}, 0.51}};
    CHECK(compare(analytic, close, 10000).pass);

    std::map<TranscriptKey, double> far{{{"+"}, 0.9}, {{"-"}, 0.1}};
    const auto verdict = compare(analytic, far, 10000);
    CHECK_FALSE(verdict.pass);
    for (const auto& e : verdict.entries) CHECK(e.z > 4.0);

    TranscriptDistribution certain;
    certain.probabilities[{"x"}] = 1.0;
    std::map<TranscriptKey, double> exact{{{"x"}, 1.0}};
    CHECK(compare(certain, exact, 50).pass);

    std::map<TranscriptKey, double> alien{{{"y"}, 1.0}};
    CHECK_THROWS_AS(compare(certain, alien, 50), OutcomeSpaceMismatch);
}

TEST_CASE("enumeration rejects unelaborated choose steps") {
    ScenarioScript s = epr_script();
    ChooseObserveStep choose;
    choose.agent = "alice";
    choose.options.push_back({"a1", ProjectorSpec::spin("A", 0.0)});
    choose.options.push_back({"a2", ProjectorSpec::spin("A", M_PI / 2.0)});
    s.steps[1] = choose;
    CHECK_THROWS_AS(run_collapse(s, "alice", Mode::Textbook), BadParams);
}

TEST_CASE("trials below one are rejected") {
    CHECK_THROWS_AS(sample_frequencies(EngineKind::HangingOn, epr_script(), "alice", 0, 1),
                    BadParams);
}
