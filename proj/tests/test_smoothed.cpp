#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "generators.hpp"
#include "smoothedvotes/errors.hpp"
#include "smoothedvotes/smoothed.hpp"

#include <cmath>
#include <sstream>

using namespace smoothedvotes;
using testgen::make;

namespace {

const MallowsModel kMallows;

Scenario library_scenario(const std::string& name, std::optional<Rational> alpha = std::nullopt) {
    return scenario_of(counterexample_library(name, alpha));
}

}  // namespace

TEST_CASE("wilson interval") {
    // Reference values from statsmodels' proportion_confint(method="wilson").
    const auto a = wilson_estimate(5, 100);
    CHECK(a.p_hat == doctest::Approx(0.05));
    CHECK(a.ci_low == doctest::Approx(0.021543679154367966).epsilon(1e-12));
    CHECK(a.ci_high == doctest::Approx(0.11175046923191914).epsilon(1e-12));
    const auto zero = wilson_estimate(0, 10);
    CHECK(zero.ci_low == 0.0);
    CHECK(zero.ci_high == doctest::Approx(0.27753279986288926).epsilon(1e-12));
    const auto all = wilson_estimate(100, 100, 9);
    CHECK(all.ci_low == doctest::Approx(0.9630065017930143).epsilon(1e-12));
    CHECK(all.ci_high == 1.0);
    CHECK(all.seed == 9);

    for (std::int64_t k = 0; k <= 50; ++k) {
        const auto e = wilson_estimate(k, 50);
        CHECK(e.ci_low <= e.p_hat);
        CHECK(e.p_hat <= e.ci_high);
    }
    CHECK_THROWS_AS(wilson_estimate(3, 0), ArgumentError);
    CHECK_THROWS_AS(wilson_estimate(4, 3), ArgumentError);
}

TEST_CASE("schedules") {
    CHECK(DeltaSchedule::zero().is_zero());
    CHECK(DeltaSchedule::zero()(1000) == 0.0);
    const auto d = DeltaSchedule::parse("pow:1,-0.75");
    CHECK(d(10000) == doctest::Approx(0.001));
    CHECK_THROWS(DeltaSchedule::power(1.0, -0.5));
    CHECK_THROWS(DeltaSchedule::parse("pow:x"));
    CHECK(DeltaSchedule::parse(d.to_string())(256) == doctest::Approx(d(256)));
}

TEST_CASE("base generators") {
    const auto tie = generate_base("tie", 3, 5);
    CHECK(tie.counts() == make({{2, "abc"}, {2, "bac"}, {1, "cab"}}).counts());
    CHECK(generate_base("unanimous", 4, 7).counts() == make({{7, "abcd"}}).counts());
    const auto uni = generate_base("uniform", 3, 12);
    for (auto c : uni.counts()) CHECK(c == 2);
    const auto cyc = generate_base("cycle", 3, 6);
    CHECK(cyc.counts() == make({{2, "abc"}, {2, "bca"}, {2, "cab"}}).counts());
    CHECK(generate_base("random", 3, 40, 5) == generate_base("random", 3, 40, 5));
    CHECK(generate_base("random", 3, 40, 5).n() == 40);
    CHECK_THROWS_AS(generate_base("spiral", 3, 4), ConfigurationError);
    CHECK(base_generator_names().size() == 5);
}

TEST_CASE("replicating scenarios") {
    const auto s = library_scenario("psr-iia", Rational(1, 2));
    const auto r = replicate(s, 3);
    CHECK(r.base.n() == 3 * s.base.n());
    REQUIRE(r.witness.has_value());
    CHECK(std::get<IIAWitness>(*r.witness).other == replicate(std::get<IIAWitness>(*s.witness).other, 3));

    const Profile whole = make({{1, "abc"}, {1, "bca"}, {2, "cab"}});
    const Scenario cs{whole, ConsistencyWitness{{make({{1, "abc"}, {1, "bca"}}), make({{2, "cab"}})}}};
    const auto rc = replicate(cs, 2);
    CHECK(rc.base.n() == 8);
    CHECK(histogram_of(rc.base) == histogram_of(whole));
}

TEST_CASE("violation estimates") {
    const auto plurality = make_rule("plurality");
    const auto condorcet = parse_axiom("condorcet");
    const auto s = library_scenario("plurality-condorcet");

    SUBCASE("no noise keeps a strict counterexample violating") {
        for (const auto& name : {"plurality-condorcet", "psr-condorcet", "psr-majority", "appendixD", "condorcet-cycle"}) {
            CAPTURE(name);
            const auto cx = counterexample_library(name);
            const auto rule = make_rule(cx.rule.empty() ? "plurality" : cx.rule);
            const auto e = estimate_violation(*rule, AxiomSpec{cx.axiom, std::nullopt}, scenario_of(cx), kMallows, 0.0, 200, 1);
            CHECK(e.p_hat == 1.0);
        }
        const auto iia = counterexample_library("psr-iia", Rational(1, 2));
        CHECK(estimate_violation(*make_rule(iia.rule), parse_axiom("iia"), scenario_of(iia), kMallows, 0.0, 200, 1).p_hat == 1.0);
    }

    SUBCASE("worker count does not change the result") {
        const auto one = estimate_violation(*plurality, condorcet, replicate(s, 4), kMallows, 0.5, 3000, 17, 1);
        const auto four = estimate_violation(*plurality, condorcet, replicate(s, 4), kMallows, 0.5, 3000, 17, 4);
        CHECK(one.hits == four.hits);
        const auto other_seed = estimate_violation(*plurality, condorcet, replicate(s, 4), kMallows, 0.5, 3000, 18, 1);
        CHECK(other_seed.seed == 18);
    }

    SUBCASE("sweep points match the plain estimator") {
        SweepSpec spec;
        spec.rule = "plurality";
        spec.axiom = condorcet;
        spec.phis = {0.2, 0.6};
        spec.z_list = {1, 3};
        spec.scenario = s;
        spec.trials = 500;
        spec.seed = 99;
        const auto rows = convergence_sweep(spec);
        REQUIRE(rows.size() == 4);
        CHECK(rows[0].phi == 0.2);
        CHECK(rows[1].z == 3);
        CHECK(rows[2].phi == 0.6);
        const auto direct = estimate_violation(*plurality, condorcet, replicate(s, 3), kMallows, 0.6, 500, 99);
        CHECK(rows[3].estimate.hits == direct.hits);
        CHECK(rows[3].n == 3 * s.base.n());
    }

    SUBCASE("argument checks") {
        CHECK_THROWS_AS(estimate_violation(*plurality, condorcet, s, kMallows, 0.5, 99, 1), ArgumentError);
        CHECK_THROWS(estimate_violation(*plurality, condorcet, s, kMallows, 1.5, 100, 1));
        CHECK_THROWS_AS(estimate_violation(*plurality, parse_axiom("consistency"), s, kMallows, 0.5, 100, 1),
                        ConfigurationError);
    }

    SUBCASE("exact plurality stability and the certificate") {
        // First-place gap 3 exceeds 2 rho; gap 2 does not.
        const auto gap = make({{5, "abc"}, {2, "bac"}, {1, "cab"}});
        const auto near = make({{4, "abc"}, {2, "bac"}, {1, "cab"}});
        const auto stab = parse_axiom("group-stability:rho=const:1");
        CHECK(estimate_violation(*plurality, stab, Scenario{gap, std::nullopt}, kMallows, 0.0, 100, 1).p_hat == 0.0);
        CHECK(estimate_violation(*plurality, stab, Scenario{near, std::nullopt}, kMallows, 0.0, 100, 1).p_hat == 1.0);
        const auto tie = make({{2, "abc"}, {2, "bac"}});
        CHECK(estimate_violation(*plurality, stab, Scenario{tie, std::nullopt}, kMallows, 0.0, 100, 1).p_hat == 1.0);
        CHECK(estimate_violation(*make_rule("borda"), stab, Scenario{tie, std::nullopt}, kMallows, 0.0, 100, 1).p_hat == 1.0);
    }
}

TEST_CASE("sup and inf over phi grids") {
    const auto above = phi_grid_above(0.3, 3);
    CHECK(above.front() == 0.3);
    CHECK(above.back() == 1.0);
    CHECK(above.size() == 5);
    const auto below = phi_grid_below(0.3, 3);
    CHECK(below.front() == 0.0);
    CHECK(below.back() == 0.3);

    const auto s = replicate(library_scenario("plurality-condorcet"), 2);
    const auto rule = make_rule("plurality");
    const auto axiom = parse_axiom("condorcet");
    const auto inf = inf_violation(*rule, axiom, s, kMallows, 0.3, 400, 4);
    CHECK(inf.estimate.p_hat <= 1.0);
    for (double phi : below) {
        CHECK(estimate_violation(*rule, axiom, s, kMallows, phi, 400, 4).p_hat >= inf.estimate.p_hat);
    }
    const auto sup = sup_violation(*rule, axiom, s, kMallows, 0.3, 400, 4);
    for (double phi : above) {
        CHECK(estimate_violation(*rule, axiom, s, kMallows, phi, 400, 4).p_hat <= sup.estimate.p_hat);
    }
}

TEST_CASE("thick hyperplanes") {
    const auto plurality = make_rule("plurality");
    const std::vector<std::int64_t> ns{30, 90};
    const auto exact = thick_hyperplane_probability(*plurality, "uniform", 3, kMallows, 1.0, DeltaSchedule::zero(), ns, 4000, 3);
    const auto thick = thick_hyperplane_probability(*plurality, "uniform", 3, kMallows, 1.0,
                                                    DeltaSchedule::power(1.0, -0.75), ns, 4000, 3);
    for (std::size_t i = 0; i < ns.size(); ++i) {
        CHECK(exact[i].delta == 0.0);
        CHECK(exact[i].estimate.hits <= thick[i].estimate.hits);
    }

    // At phi = 1 every voter is uniform: compare with an impartial-culture simulation
    // of a first-place tie between some pair.
    for (std::size_t i = 0; i < ns.size(); ++i) {
        std::mt19937_64 rng(1234 + i);
        std::uniform_int_distribution<int> pick(0, 5);
        const std::int64_t reps = 20000;
        std::int64_t ties = 0;
        for (std::int64_t t = 0; t < reps; ++t) {
            std::array<std::int64_t, 3> first{};
            for (std::int64_t v = 0; v < ns[i]; ++v) ++first[static_cast<std::size_t>(pick(rng) / 2)];
            ties += (first[0] == first[1] || first[0] == first[2] || first[1] == first[2]) ? 1 : 0;
        }
        const double q = static_cast<double>(ties) / static_cast<double>(reps);
        const auto& e = exact[i].estimate;
        const double se = std::sqrt(q * (1 - q) / static_cast<double>(reps) + e.p_hat * (1 - e.p_hat) / 4000.0);
        CAPTURE(ns[i]);
        CHECK(std::abs(e.p_hat - q) < 4.0 * se);
    }
    CHECK_THROWS_AS(thick_hyperplane_probability(*make_rule("kemeny"), "uniform", 5, kMallows, 0.5,
                                                 DeltaSchedule::zero(), {10}, 100, 1),
                    ConfigurationError);
}

TEST_CASE("group flips") {
    const auto plurality = make_rule("plurality");
    const auto tie = [](std::int64_t n) { return generate_base("tie", 3, n); };
    const auto rows = group_flip_probability(*plurality, tie, kMallows, 0.5, RhoSchedule::power(1.0, 0.25),
                                             {64, 256}, 2000, 11);
    REQUIRE(rows.size() == 2);
    for (const auto& r : rows) {
        REQUIRE(r.exact.has_value());
        CHECK(r.contradictions == 0);
        CHECK(r.exact->hits <= r.certificate.hits);
    }
    CHECK(rows[0].rho == 2);
    CHECK(rows[1].rho == 4);

    // A coalition as large as the electorate can always flip.
    for (std::int64_t n : {20, 50}) {
        const auto full = group_flip_probability(*plurality, tie, kMallows, 0.5, RhoSchedule::constant(n), {n}, 200, 2);
        CHECK(full[0].certificate.p_hat == 1.0);
        CHECK(full[0].exact->p_hat == 1.0);
    }
    const auto borda = group_flip_probability(*make_rule("borda"), tie, kMallows, 0.5, RhoSchedule::constant(1), {40}, 200, 2);
    CHECK_FALSE(borda[0].exact.has_value());
}

TEST_CASE("appendix D margins") {
    const auto rows = verify_appendixD_margins({0.0, 0.5, 0.9, 0.999});
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].normalizer == 1.0);
    CHECK(rows[0].b_over_a == doctest::Approx(17.0 / 75));
    CHECK(rows[0].b_over_c == doctest::Approx(1.0 / 150));
    CHECK(rows[0].a_over_b_psr == doctest::Approx(1.0 / 300));
    CHECK(rows[1].normalizer == doctest::Approx(2.625));
    CHECK(rows[1].poly_b_over_a == doctest::Approx(39.0 / 600));
    CHECK(rows[1].b_over_a == doctest::Approx(39.0 / 1575));
    for (const auto& r : rows) {
        CHECK(r.max_abs_error < 1e-12);
        CHECK(r.all_positive);
    }
    CHECK(std::abs(rows[3].b_over_a) < 1e-3);
    CHECK(std::abs(rows[3].b_over_c) < 1e-3);
    CHECK(std::abs(rows[3].a_over_b_psr) < 1e-3);
    CHECK(rows[2].b_over_a < rows[1].b_over_a);
    CHECK_THROWS_AS(verify_appendixD_margins({1.0}), ArgumentError);
    CHECK_THROWS_AS(verify_appendixD_margins({-0.1}), ArgumentError);
}

TEST_CASE("concentration diagnostics") {
    const auto base = generate_base("random", 3, 2000, 7);
    const auto p = concentration_probability(kMallows, base, 0.5, 0.2, Center::expected, 400, 3);
    CHECK(p.p_hat >= 1.0 - hoeffding_bound(0.2, 2000, 3));
    // With no noise the starting histogram is exact.
    CHECK(concentration_probability(kMallows, base, 0.0, 1e-9, Center::base, 100, 3).p_hat == 1.0);

    const auto be = berry_esseen_point(kMallows, 3, 1000, 0.5, 4000, 5);
    CHECK(be.n == 1000);
    CHECK(be.threshold > 0.0);
    CHECK(be.threshold < 1.0);
    CHECK(be.gap == doctest::Approx(std::abs(be.empirical - be.gaussian)));
    CHECK(be.gap < 0.05);
}

TEST_CASE("log-log slope") {
    std::vector<double> x, y;
    for (double n : {10.0, 100.0, 1000.0, 10000.0}) {
        x.push_back(n);
        y.push_back(3.0 / std::sqrt(n));
    }
    CHECK(fit_loglog_slope(x, y) == doctest::Approx(-0.5));
    y.push_back(0.0);
    x.push_back(1e5);
    CHECK(fit_loglog_slope(x, y) == doctest::Approx(-0.5));
}

TEST_CASE("csv output") {
    SweepRow row;
    row.experiment = "demo";
    row.rule = "psr:[1,1/2,0]";
    row.axiom = "condorcet";
    row.model = "mallows";
    row.phi = 0.25;
    row.n = 12;
    row.z = 1;
    row.estimate = wilson_estimate(1, 4, 42);
    row.ms = 12.5;

    std::ostringstream plain;
    write_csv(plain, {row});
    CHECK(plain.str() == std::string(kCsvHeader) +
                             "\ndemo,\"psr:[1,1/2,0]\",condorcet,mallows,0.25,12,1,4,0.25,0.04558726081,0.6993581574,42,\n");

    std::ostringstream timed;
    write_csv(timed, {row}, true);
    CHECK(timed.str().substr(timed.str().size() - 8) == ",12.500\n");

    row.experiment = "say \"hi\"";
    std::ostringstream quoted;
    write_csv(quoted, {row});
    CHECK(quoted.str().find("\"say \"\"hi\"\"\"") != std::string::npos);
}
