#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "generators.hpp"
#include "oracles.hpp"
#include "smoothedvotes/axioms.hpp"
#include "smoothedvotes/errors.hpp"

#include <functional>

using namespace smoothedvotes;
using testgen::appendix_d;
using testgen::make;
using testgen::parse;

namespace {

const Profile kCycle = make({{1, "abc"}, {1, "bca"}, {1, "cab"}});

/// Can some coalition of at most rho voters change the winner set? Voter-level search.
bool naive_flippable(const std::string& rule, const Profile& p, int rho) {
    const auto before = oracle::winners(rule, p);
    const auto all = enumerate_rankings(p.m());
    const auto n = static_cast<int>(p.n());
    std::vector<int> chosen;
    std::function<bool(int)> grow = [&](int from) -> bool {
        if (!chosen.empty()) {
            // Try every assignment of new rankings to the chosen voters.
            std::vector<std::size_t> pick(chosen.size(), 0);
            while (true) {
                auto voters = p.rankings();
                for (std::size_t j = 0; j < chosen.size(); ++j) voters[static_cast<std::size_t>(chosen[j])] = all[pick[j]];
                if (oracle::winners(rule, Profile(voters)) != before) return true;
                std::size_t j = 0;
                while (j < pick.size() && ++pick[j] == all.size()) pick[j++] = 0;
                if (j == pick.size()) break;
            }
        }
        if (static_cast<int>(chosen.size()) == rho) return false;
        for (int i = from; i < n; ++i) {
            chosen.push_back(i);
            if (grow(i + 1)) return true;
            chosen.pop_back();
        }
        return false;
    };
    return grow(0);
}

}  // namespace

TEST_CASE("axiom registry") {
    CHECK(parse_axiom("condorcet").axiom == Axiom::condorcet);
    CHECK(parse_axiom("no-condorcet-cycle").axiom == Axiom::no_condorcet_cycle);
    const auto g = parse_axiom("group-stability:rho=pow:1,0.25");
    CHECK(g.axiom == Axiom::group_stability);
    REQUIRE(g.rho.has_value());
    CHECK((*g.rho)(10000) == 10);
    CHECK((*g.rho)(100) == 3);
    CHECK(parse_axiom("group-sp:rho=const:2").rho->operator()(50) == 2);
    CHECK_THROWS_AS(parse_axiom("group-stability"), ConfigurationError);
    CHECK_THROWS_AS(parse_axiom("pareto"), ConfigurationError);
    CHECK_THROWS(RhoSchedule::power(1.0, 0.5));
    CHECK_THROWS(RhoSchedule::parse("pow:1"));
    CHECK(is_absolute(Axiom::majority));
    CHECK_FALSE(is_absolute(Axiom::iia));
    CHECK(is_group_axiom(Axiom::group_participation));
    for (const auto& name : {"resolvability", "condorcet", "majority", "consistency", "iia"}) {
        CHECK(parse_axiom(name).to_string() == name);
    }
}

TEST_CASE("condorcet and majority winners") {
    CHECK(condorcet_winner(appendix_d()) == 1);
    CHECK_FALSE(condorcet_winner(kCycle).has_value());
    CHECK(condorcet_winner(make({{1, "abc"}})) == 0);
    CHECK(majority_winner(make({{2, "abc"}, {1, "bac"}})) == 0);
    CHECK_FALSE(majority_winner(appendix_d()).has_value());
    CHECK(majority_winner(make({{1, "abc"}})) == 0);

    std::mt19937_64 rng(3);
    for (int t = 0; t < 300; ++t) {
        const auto p = testgen::clumpy_profile(rng, 3 + t % 3, 1 + t % 11);
        CHECK(condorcet_winner(p) == oracle::condorcet(p));
        CHECK(majority_winner(p) == oracle::majority(p));
    }
}

TEST_CASE("absolute checks") {
    const auto plurality = make_rule("plurality");
    CHECK(check_absolute(Axiom::resolvability, *plurality, appendix_d()));
    CHECK_FALSE(check_absolute(Axiom::condorcet, *plurality, appendix_d()));
    for (const auto& spec : {"plurality", "borda", "veto", "minimax", "copeland", "kemeny"}) {
        CHECK(check_absolute(Axiom::majority, *make_rule(spec), appendix_d()));
    }
    CHECK_FALSE(check_absolute(Axiom::no_condorcet_cycle, *plurality, kCycle));
    CHECK_FALSE(check_absolute(Axiom::resolvability, *make_rule("copeland"), kCycle));

    std::mt19937_64 rng(8);
    for (const auto& spec : {"plurality", "borda", "veto", "minimax", "copeland", "kemeny"}) {
        const auto rule = make_rule(spec);
        for (int t = 0; t < 120; ++t) {
            const auto p = testgen::clumpy_profile(rng, 3 + t % 2, 1 + t % 9);
            for (const auto& [axiom, name] : {std::pair{Axiom::resolvability, "resolvability"},
                                              std::pair{Axiom::condorcet, "condorcet"},
                                              std::pair{Axiom::majority, "majority"},
                                              std::pair{Axiom::no_condorcet_cycle, "no-condorcet-cycle"}}) {
                CHECK(check_absolute(axiom, *rule, p) == oracle::absolute_holds(name, spec, p));
                CHECK(check_absolute(axiom, *rule, p.m(), p.counts()) == check_absolute(axiom, *rule, p));
            }
        }
    }
    CHECK_THROWS_AS(check_absolute(Axiom::iia, *plurality, kCycle), ConfigurationError);
}

TEST_CASE("IIA witnesses") {
    const auto rule = make_rule("psr:[1,1/2,0]");
    const auto first = replicate(make({{2, "acb"}, {1, "bca"}, {1, "bac"}}), 2);
    const auto second = replicate(make({{2, "abc"}, {1, "bca"}, {1, "bac"}}), 2);
    CHECK(first.n() == 8);
    CHECK(rule->evaluate(first) == WinnerSet::of({0}));
    CHECK(rule->evaluate(second) == WinnerSet::of({1}));
    CHECK(check_witness(Axiom::iia, *rule, first, IIAWitness{second, 0, 1}));
    // Identical outcomes never violate.
    CHECK_FALSE(check_witness(Axiom::iia, *rule, first, IIAWitness{first, 0, 1}));
    // The partner must keep every voter's order of the pair.
    CHECK_THROWS_AS(check_witness(Axiom::iia, *rule, first, IIAWitness{replicate(make({{4, "bac"}}), 2), 0, 1}),
                    WitnessInvalid);
    CHECK_THROWS_AS(check_witness(Axiom::iia, *rule, first, ConsistencyWitness{{first}}), WitnessInvalid);

    const auto found = find_iia_violation(*rule, first);
    REQUIRE(found.has_value());
    CHECK(check_witness(Axiom::iia, *rule, first, *found));
    CHECK_FALSE(find_iia_violation(*make_rule("plurality"), make({{1, "abc"}})).has_value());
}

TEST_CASE("consistency witnesses") {
    // Minimax violates Consistency first at seven voters; search random 7-voter profiles.
    const auto rule = make_rule("minimax");
    std::mt19937_64 rng(40);
    int found = 0;
    for (int t = 0; t < 20000 && found < 3; ++t) {
        const auto p = testgen::random_profile(rng, 3, 7);
        const auto w = find_consistency_violation(*rule, p);
        if (!w) continue;
        ++found;
        CHECK(check_witness(Axiom::consistency, *rule, p, *w));
        // Re-derive with the naive rule.
        const auto common = oracle::winners("minimax", w->parts.front());
        for (const auto& part : w->parts) CHECK(oracle::winners("minimax", part) == common);
        CHECK(oracle::winners("minimax", p) != common);
    }
    CHECK(found > 0);

    // Positional rules are consistent.
    for (int t = 0; t < 100; ++t) {
        const auto p = testgen::clumpy_profile(rng, 3, 2 + t % 6);
        CHECK_FALSE(find_consistency_violation(*make_rule("borda"), p).has_value());
    }
    const auto p = make({{2, "abc"}, {1, "bca"}});
    CHECK_THROWS_AS(check_witness(Axiom::consistency, *rule, p, ConsistencyWitness{{make({{1, "abc"}})}}), WitnessInvalid);
}

TEST_CASE("group witnesses") {
    const auto plurality = make_rule("plurality");
    const auto tie = make({{2, "abc"}, {2, "bac"}});
    const auto rho1 = RhoSchedule::constant(1);
    const GroupDeviationWitness one_switch{{2}, {parse("abc")}};
    CHECK(check_witness(Axiom::group_stability, *plurality, tie, one_switch, rho1));
    CHECK_THROWS_AS(check_witness(Axiom::group_stability, *plurality, tie, GroupDeviationWitness{{0, 1}, {parse("abc"), parse("abc")}}, rho1),
                    WitnessInvalid);
    // Voter 2 (b first) gains nothing by making a the sole winner.
    CHECK_FALSE(check_witness(Axiom::group_sp, *plurality, tie, one_switch, rho1));
    // b-supporters leaving cannot help them.
    CHECK_FALSE(check_witness(Axiom::group_participation, *plurality, tie, ParticipationWitness{{2}}, rho1));
    // a-supporter 0 leaving makes b the sole winner; worse for that voter.
    CHECK_FALSE(check_witness(Axiom::group_participation, *plurality, tie, ParticipationWitness{{0}}, rho1));

    // Raising a winner keeps it winning under Plurality.
    CHECK_FALSE(check_witness(Axiom::group_monotonicity, *plurality, tie, MonotonicityWitness{0, {2}, {parse("abc")}}, rho1));
    // Lowering is rejected as an invalid witness.
    CHECK_THROWS_AS(check_witness(Axiom::group_monotonicity, *plurality, tie, MonotonicityWitness{0, {0}, {parse("bac")}}, rho1),
                    WitnessInvalid);
    // Reordering the other candidates is rejected too.
    CHECK_THROWS_AS(check_witness(Axiom::group_monotonicity, *plurality, tie, MonotonicityWitness{2, {0}, {parse("cba")}}, rho1),
                    WitnessInvalid);
    CHECK(favorite_in(parse("cab"), WinnerSet::of({0, 1})) == 0);
}

TEST_CASE("group stability") {
    const auto plurality = make_rule("plurality");
    // First-place counts 6, 3, 1: gap 3, so rho = 1 is stable and rho = 2 is not.
    const auto gap3 = make({{6, "abc"}, {3, "bac"}, {1, "cab"}});
    CHECK(check_group_stability(*plurality, gap3, 1).status == Stability::stable);
    CHECK(plurality_group_stable(3, gap3.counts(), 1));
    CHECK_FALSE(plurality_group_stable(3, gap3.counts(), 2));
    CHECK(check_group_stability(*plurality, gap3, 2).status == Stability::unstable);
    const auto tie = make({{2, "abc"}, {2, "bac"}});
    CHECK(check_group_stability(*plurality, tie, 1).status == Stability::unstable);
    CHECK(plurality_group_stable(3, tie.counts(), 0));

    // Certificate-stable verdicts against a voter-level brute force.
    std::mt19937_64 rng(77);
    int certified = 0;
    for (const auto& spec : {"plurality", "borda", "minimax", "copeland"}) {
        const auto rule = make_rule(spec);
        for (int t = 0; t < 60; ++t) {
            const auto p = testgen::clumpy_profile(rng, 3, 3 + t % 6);
            const int rho = 1 + t % 2;
            const auto r = check_group_stability(*rule, p, rho);
            const bool flippable = naive_flippable(spec, p, rho);
            if (r.status == Stability::stable) {
                ++certified;
                CHECK_FALSE(flippable);
            }
            if (r.status == Stability::unstable) {
                CHECK(flippable);
                if (r.witness) CHECK(check_witness(Axiom::group_stability, *rule, p, *r.witness, RhoSchedule::constant(rho)));
            }
        }
    }
    CHECK(certified > 0);
}

TEST_CASE("counterexample library") {
    const auto d = counterexample_library("appendixD");
    CHECK(d.profile.n() == 300);
    CHECK(d.profile.counts() == appendix_d().counts());

    const auto pc = counterexample_library("psr-condorcet", Rational(1, 2));
    CHECK(pc.profile.n() == 12);
    CHECK(pc.profile.counts() == make({{5, "acb"}, {7, "bac"}}).counts());

    const auto cyc = counterexample_library("condorcet-cycle");
    CHECK(cyc.profile.counts() == kCycle.counts());
    CHECK(cyc.radius == Rational(1, 3));

    CHECK_THROWS(counterexample_library("psr-iia", Rational(1)));
    CHECK_THROWS(counterexample_library("nonsense"));

    for (const auto& name : counterexample_names()) {
        CAPTURE(name);
        const auto cx = counterexample_library(name);
        CHECK(cx.radius > Rational(0));
        const Profile* partner = nullptr;
        if (cx.witness) partner = &std::get<IIAWitness>(*cx.witness).other;
        CHECK(counterexample_violated(cx, cx.profile, partner));
        const auto cert = certify(cx, 200, 5);
        CHECK(cert.passed());
        CHECK(cert.max_distance < boost::rational_cast<double>(cx.radius));
    }
}

TEST_CASE("brute-force audit") {
    const auto cases4 = brute_force_audit(*make_rule("plurality"), parse_axiom("majority"), 4, 3);
    CHECK(cases4.cases == 1554);
    CHECK(cases4.violations == 0);
    CHECK(brute_force_audit(*make_rule("borda"), parse_axiom("condorcet"), 5, 3).violations > 0);
    CHECK(brute_force_audit(*make_rule("minimax"), parse_axiom("condorcet"), 5, 3).violations == 0);
    CHECK_THROWS(brute_force_audit(*make_rule("borda"), parse_axiom("condorcet"), 6, 3));
    CHECK_THROWS(brute_force_audit(*make_rule("borda"), parse_axiom("condorcet"), 3, 4));

    std::int64_t total = 0;
    for (int n = 1; n <= 3; ++n) {
        for (const auto& c : enumerate_count_vectors(3, n)) {
            std::int64_t s = 0;
            for (auto x : c) s += x;
            CHECK(s == n);
            ++total;
        }
    }
    CHECK(total == 6 + 21 + 56);
}
