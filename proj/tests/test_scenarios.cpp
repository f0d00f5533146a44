#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "persim/audit.hpp"
#include "persim/scenarios.hpp"

using namespace persim;
using namespace persim::scenarios;

TEST_CASE("builtin catalogue") {
    for (const auto& name : builtin_names()) CHECK_NOTHROW(builtin(name));
    CHECK_THROWS_AS(builtin("nonesuch"), UnknownScenario);
    BuiltinParams params;
    params.variant = "sideways";
    CHECK_THROWS_AS(builtin("wigner_friend", params), BadParams);
}

TEST_CASE("epr_singlet run is perfectly anticorrelated") {
    const auto report = run_scenario(builtin("epr_singlet"), 2000, 42);
    CHECK(report.derived.at("anticorrelation_rate") == 1.0);
    CHECK(report.derived.at("anticorrelation_analytic") == Catch::Approx(1.0).margin(1e-12));
    CHECK(report.agents.at("alice").comparison->pass);
    CHECK(report.agents.at("bob").comparison->pass);
    CHECK(report.collapse_freedom.checked);
    CHECK(report.collapse_freedom.passed);
    CHECK(report.collapse_freedom.seed_deviation == 0.0);
    for (const auto& a : report.assertions) CHECK(a.passed);
    CHECK(report.all_passed());
}

TEST_CASE("chsh reaches the quantum bound") {
    const auto report = run_scenario(builtin("chsh"), 20000, 7);
    const double s_analytic = report.derived.at("S_analytic");
    CHECK(std::abs(std::abs(s_analytic) - 2.0 * std::sqrt(2.0)) < 1e-9);

    const double s = report.derived.at("S");
    CHECK(std::abs(s - s_analytic) < 4.0 * report.derived.at("S_sigma"));
    CHECK(chsh_statistic(report) == Catch::Approx(s).margin(1e-12));

    // Analytic no-signaling: Bob's marginal ignores Alice's setting.
    CHECK(report.derived.at("ns_analytic_diff") < 1e-12);

    // Empirical no-signaling within 4 sigma.
    const double f1 = report.derived.at("bob_plus_given_a1");
    const double f2 = report.derived.at("bob_plus_given_a2");
    const double n1 = report.derived.at("trials_given_a1");
    const double n2 = report.derived.at("trials_given_a2");
    const double bound = 4.0 * std::sqrt(0.25 * (1.0 / n1 + 1.0 / n2));
    CHECK(std::abs(f1 - f2) < bound);

    CHECK(report.agents.at("alice").comparison->pass);
    CHECK(report.agents.at("bob").comparison->pass);
}

TEST_CASE("chsh statistic demands a chsh report") {
    const auto report = run_scenario(builtin("epr_singlet"), 10, 1);
    CHECK_THROWS_AS(chsh_statistic(report), WrongScenario);
}

TEST_CASE("no deterministic strategy beats the classical bound") {
    // Every strategy pre-assigns +/-1 to both settings of each party.
    double best = 0.0;
    for (int mask = 0; mask < 16; ++mask) {
        const double a1 = mask & 1 ? 1.0 : -1.0;
        const double a2 = mask & 2 ? 1.0 : -1.0;
        const double b1 = mask & 4 ? 1.0 : -1.0;
        const double b2 = mask & 8 ? 1.0 : -1.0;
        best = std::max(best, std::abs(a1 * b1 - a1 * b2 + a2 * b1 + a2 * b2));
    }
    CHECK(best == 2.0);
}

TEST_CASE("wigner friend: interference certainty vs premature collapse") {
    const auto report = run_scenario(builtin("wigner_friend"), 1500, 11);
    CHECK(report.derived.at("p_superposed_frequency") == 1.0);
    CHECK(report.derived.at("p_superposed_analytic") == Catch::Approx(1.0).margin(1e-9));
    CHECK(report.oracle_reference.at("p_superposed_premature_collapse") ==
          Catch::Approx(0.5).margin(1e-9));
    CHECK(report.derived.at("determinacy_before_ask") == 0.0);
    CHECK(report.derived.at("determinacy_after_ask") == 1.0);
    CHECK(report.all_passed());
}

TEST_CASE("wigner friend: asking first destroys the certainty") {
    BuiltinParams params;
    params.variant = "ask_first";
    const auto report = run_scenario(builtin("wigner_friend", params), 4000, 13);
    CHECK(report.derived.at("p_superposed_analytic") == Catch::Approx(0.5).margin(1e-9));
    CHECK(std::abs(report.derived.at("p_superposed_frequency") - 0.5) < 0.04);
    CHECK(report.all_passed());
}

TEST_CASE("frauchiger_renner joint ask probability") {
    const auto report = run_scenario(builtin("frauchiger_renner"), 1200, 3);
    CHECK(report.derived.at("p_okbar_ok_oracle") == Catch::Approx(1.0 / 12.0).margin(1e-9));
    CHECK(std::abs(report.derived.at("p_okbar_ok_engine") -
                   report.derived.at("p_okbar_ok_oracle")) < 1e-9);
    const double f = report.derived.at("p_okbar_ok_frequency");
    CHECK(std::abs(f - 1.0 / 12.0) < 4.0 * std::sqrt((1.0 / 12.0) * (11.0 / 12.0) / 1200.0));
    CHECK(report.all_passed());
}

TEST_CASE("rule audit: contradiction under absolute facts, blocked otherwise") {
    const auto script = builtin("frauchiger_renner");
    const auto trials = run_trials(script, 150, 5);
    bool found = false;
    for (const auto& trial : trials) {
        const auto& auditor = trial.signatures.at("auditor");
        if (!(auditor.size() == 2 && auditor[0] == "okbar" && auditor[1] == "ok")) continue;
        found = true;

        const auto absolute = fr_rule_audit(trial.signatures, AuditMode::AbsoluteFacts);
        CHECK(absolute.verdict == "contradiction");
        CHECK(absolute.has_completed_rule("C"));
        CHECK(absolute.has_completed_rule("S"));
        for (const auto& step : absolute.trace) {
            if (step.rule == "Q") {
                REQUIRE(step.verified_probability.has_value());
                CHECK(*step.verified_probability >= 1.0 - 1e-9);
            }
        }

        const auto consol = fr_rule_audit(trial.signatures, AuditMode::ConSol);
        CHECK(consol.verdict == "blocked-at-C");
        CHECK_FALSE(consol.has_completed_rule("C"));
        CHECK(consol.blocked.has_value());
        CHECK(consol.blocked->rule == "C");
        break;
    }
    REQUIRE(found);
}

TEST_CASE("rule audit precondition") {
    std::map<std::string, std::vector<std::string>> transcripts;
    transcripts["auditor"] = {"failbar", "ok"};
    CHECK_THROWS_AS(fr_rule_audit(transcripts, AuditMode::AbsoluteFacts), PreconditionNotMet);
    transcripts.clear();
    CHECK_THROWS_AS(fr_rule_audit(transcripts, AuditMode::ConSol), PreconditionNotMet);
}

TEST_CASE("transcript access guard") {
    std::map<std::string, std::vector<std::string>> transcripts;
    transcripts["w"] = {"ok"};
    CHECK_NOTHROW(transcript_access(transcripts, "w", "w"));
    CHECK_THROWS_AS(transcript_access(transcripts, "w", "wbar"), ForbiddenComparison);
}

TEST_CASE("sync actions stay with the agent who acted") {
    const auto report = run_scenario(builtin("sync_actions"), 1, 99);
    const auto& alice = report.agents.at("alice");
    REQUIRE(alice.action_frequencies.size() == 1);
    const auto& [action, freq] = *alice.action_frequencies.begin();
    CHECK(freq == 1.0);
    const auto& outcome = alice.empirical.begin()->first[0];
    CHECK(action == (outcome == "+" ? "tea" : "wine"));

    CHECK_THROWS_AS(joint_outcome_table(report, "alice", "bob"), ForbiddenComparison);
}

TEST_CASE("trial aggregation is independent of the thread count") {
    const auto script = builtin("chsh");
    const auto serial = run_trials(script, 64, 17, 1);
    const auto parallel = run_trials(script, 64, 17, 4);
    REQUIRE(serial.size() == parallel.size());
    for (std::size_t t = 0; t < serial.size(); ++t) {
        CHECK(serial[t].signatures == parallel[t].signatures);
        CHECK(serial[t].choices == parallel[t].choices);
    }
}

TEST_CASE("failing mid-run assertions abort the scenario") {
    auto script = builtin("epr_singlet");
    auto* assert_step = std::get_if<AssertDistributionStep>(&script.steps[1]);
    REQUIRE(assert_step != nullptr);
    assert_step->expected = {{"+", 0.9}, {"-", 0.1}};
    CHECK_THROWS_AS(run_scenario(script, 2, 1), AssertionFailed);
}

TEST_CASE("choice fixing validates its arguments") {
    const auto script = builtin("chsh");
    CHECK_THROWS_AS(fix_choices(script, {{0, "a1"}}), BadParams);
    CHECK_THROWS_AS(fix_choices(script, {{1, "zz"}}), BadParams);
    const auto fixed = fix_choices(script, {{1, "a1"}, {2, "b1"}});
    for (const auto& step : fixed.steps) {
        CHECK_FALSE(std::holds_alternative<ChooseObserveStep>(step));
    }
}

TEST_CASE("zero trials are rejected") {
    CHECK_THROWS_AS(run_scenario(builtin("epr_singlet"), 0, 1), BadParams);
}
