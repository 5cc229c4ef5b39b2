#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "generators.hpp"
#include "smoothedvotes/core.hpp"
#include "smoothedvotes/errors.hpp"

#include <set>

using namespace smoothedvotes;
using testgen::make;
using testgen::parse;

TEST_CASE("rankings enumerate lexicographically") {
    const auto r3 = enumerate_rankings(3);
    std::vector<std::string> names;
    for (const auto& r : r3) names.push_back(r.to_string());
    CHECK(names == std::vector<std::string>{"abc", "acb", "bac", "bca", "cab", "cba"});

    const auto r4 = enumerate_rankings(4);
    CHECK(r4.size() == 24);
    CHECK(r4.front().to_string() == "abcd");
    CHECK(std::set<Ranking>(r4.begin(), r4.end()).size() == 24);
    CHECK(RankingIndex::get(3).ranking(RankingIndex::get(3).missing()).to_string() == "cba");

    CHECK_THROWS_AS(enumerate_rankings(7), ConfigurationError);
    CHECK_THROWS_AS(enumerate_rankings(2), ConfigurationError);
}

TEST_CASE("compose applies the position permutation") {
    const auto abc = parse("abc");
    CHECK(compose(std::vector<int>{0, 1, 2}, abc).to_string() == "abc");
    CHECK(compose(std::vector<int>{2, 1, 0}, abc).to_string() == "cba");
    CHECK(compose(std::vector<int>{1, 0, 2}, abc).to_string() == "bac");
    CHECK(compose(std::vector<int>{1, 2, 0}, parse("bca")).to_string() == "cab");
    CHECK_THROWS_AS(compose(std::vector<int>{0, 0, 1}, abc), InvariantViolation);
}

TEST_CASE("index tables agree with the free functions") {
    const auto& idx = RankingIndex::get(4);
    for (int s = 0; s < idx.size(); ++s) {
        std::vector<int> sigma(idx.ranking(s).perm().begin(), idx.ranking(s).perm().end());
        for (int p = 0; p < idx.size(); ++p) {
            CHECK(idx.ranking(idx.compose(s, p)) == compose(sigma, idx.ranking(p)));
            CHECK(idx.kendall_tau(s, p) == kendall_tau(idx.ranking(s), idx.ranking(p)));
        }
    }
}

TEST_CASE("kendall tau") {
    CHECK(kendall_tau(parse("abc"), parse("abc")) == 0);
    CHECK(kendall_tau(parse("abc"), parse("cba")) == 3);
    CHECK(kendall_tau(parse("abc"), parse("bac")) == 1);

    std::mt19937_64 rng(11);
    for (int t = 0; t < 200; ++t) {
        const auto a = testgen::random_ranking(rng, 5);
        const auto b = testgen::random_ranking(rng, 5);
        const auto c = testgen::random_ranking(rng, 5);
        CHECK(kendall_tau(a, b) == kendall_tau(b, a));
        CHECK(kendall_tau(a, b) <= 10);
        CHECK(kendall_tau(a, c) <= kendall_tau(a, b) + kendall_tau(b, c));
    }
}

TEST_CASE("histograms") {
    const auto one = make({{1, "abc"}});
    const auto h = histogram_of(one);
    CHECK(h.entries() == std::vector<Rational>{1, 0, 0, 0, 0});
    CHECK(h.implicit_entry() == Rational(0));

    const auto h2 = histogram_of(make({{2, "cba"}}));
    for (const auto& e : h2.entries()) CHECK(e == Rational(0));
    CHECK(h2.implicit_entry() == Rational(1));

    const auto d = histogram_of(testgen::appendix_d());
    CHECK(d.entries() == std::vector<Rational>{Rational(36, 300), Rational(80, 300), Rational(115, 300), 0, 0});
    CHECK(d.implicit_entry() == Rational(69, 300));

    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const auto hp = histogram_of(testgen::random_profile(rng, 4, 1 + t));
        Rational total = hp.implicit_entry();
        for (const auto& e : hp.entries()) {
            CHECK(e >= Rational(0));
            total += e;
        }
        CHECK(total == Rational(1));
    }
}

TEST_CASE("replication") {
    std::mt19937_64 rng(5);
    const auto p = testgen::random_profile(rng, 3, 9);
    CHECK(replicate(p, 1) == p);
    CHECK(replicate(make({{1, "abc"}}), 3) == make({{3, "abc"}}));
    const auto d2 = replicate(testgen::appendix_d(), 2);
    CHECK(d2.n() == 600);
    CHECK(histogram_of(d2) == histogram_of(testgen::appendix_d()));
    CHECK_THROWS_AS(replicate(p, 0), ArgumentError);
}

TEST_CASE("l1 distance") {
    const auto a = histogram_of(make({{1, "abc"}}));
    const auto b = histogram_of(make({{1, "acb"}}));
    CHECK(l1_distance(a, a) == Rational(0));
    CHECK(l1_distance(a, b) == Rational(2));
    CHECK(l1_distance(histogram_of(make({{1, "abc"}, {1, "acb"}})), a) == Rational(1));
}

TEST_CASE("profile text round trip") {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 100; ++t) {
        const int m = 3 + t % 3;
        const auto p = t % 2 ? testgen::random_profile(rng, m, 1 + t) : testgen::clumpy_profile(rng, m, 1 + t);
        const auto parsed = parse_profile(format_profile(p));
        // Grouping reorders voters, so compare ranking counts after mapping names back.
        std::vector<int> back;
        for (const auto& nm : parsed.names) back.push_back(nm[0] - 'a');
        CHECK(testgen::relabel(parsed.profile, back).counts() == p.counts());
    }
}

TEST_CASE("profile parse errors carry line numbers") {
    CHECK_THROWS_AS(parse_profile(""), ParseError);
    try {
        parse_profile("2 x a > b > c\n# note\n1 x a > b\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_profile("0 x a > b > c"), ParseError);
    CHECK_THROWS_AS(parse_profile("1 x a > a > c"), ParseError);
    CHECK_THROWS_AS(parse_profile("1 x a > b > c\n1 x a > b > d"), ParseError);

    const auto ok = parse_profile("# header\n\n3 x x > y > z  # trailing\n1 x z > y > x\n");
    CHECK(ok.profile.n() == 4);
    CHECK(ok.names == std::vector<std::string>{"x", "y", "z"});
}
