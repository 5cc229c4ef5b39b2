#pragma once

// Naive reference implementations working voter by voter on Ranking objects.
// They share no code with the library beyond the Ranking and Profile types.

#include "smoothedvotes/core.hpp"
#include "smoothedvotes/rules.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace oracle {

using namespace smoothedvotes;

inline WinnerSet argmax(const std::vector<Rational>& score) {
    const auto best = *std::max_element(score.begin(), score.end());
    WinnerSet w;
    for (std::size_t c = 0; c < score.size(); ++c) {
        if (score[c] == best) w.insert(static_cast<Candidate>(c));
    }
    return w;
}

inline std::int64_t naive_margin(const Profile& p, Candidate x, Candidate y) {
    if (x == y) return 0;
    std::int64_t d = 0;
    for (const auto& r : p.rankings()) d += r.prefers(x, y) ? 1 : -1;
    return d;
}

inline WinnerSet naive_psr(const std::vector<Rational>& w, const Profile& p) {
    std::vector<Rational> score(static_cast<std::size_t>(p.m()), Rational(0));
    for (const auto& r : p.rankings()) {
        for (int j = 0; j < p.m(); ++j) score[static_cast<std::size_t>(r.at(j))] += w[static_cast<std::size_t>(j)];
    }
    return argmax(score);
}

inline WinnerSet naive_minimax(const Profile& p) {
    std::vector<Rational> score;
    for (int x = 0; x < p.m(); ++x) {
        std::int64_t worst = std::numeric_limits<std::int64_t>::min();
        for (int y = 0; y < p.m(); ++y) {
            if (y != x) worst = std::max(worst, naive_margin(p, y, x));
        }
        score.emplace_back(-worst);
    }
    return argmax(score);
}

inline WinnerSet naive_copeland(const Profile& p) {
    std::vector<Rational> score(static_cast<std::size_t>(p.m()), Rational(0));
    for (int x = 0; x < p.m(); ++x) {
        for (int y = 0; y < p.m(); ++y) {
            if (x == y) continue;
            const auto d = naive_margin(p, x, y);
            score[static_cast<std::size_t>(x)] += d > 0 ? Rational(1) : d == 0 ? Rational(1, 2) : Rational(0);
        }
    }
    return argmax(score);
}

inline WinnerSet naive_kemeny(const Profile& p) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    WinnerSet w;
    for (const auto& cand : enumerate_rankings(p.m())) {
        std::int64_t cost = 0;
        for (const auto& r : p.rankings()) cost += kendall_tau(cand, r);
        if (cost < best) {
            best = cost;
            w = WinnerSet();
        }
        if (cost == best) w.insert(cand.top());
    }
    return w;
}

inline std::vector<Rational> weights_of(const std::string& spec, int m) {
    std::vector<Rational> w(static_cast<std::size_t>(m), Rational(0));
    if (spec == "plurality") {
        w[0] = 1;
    } else if (spec == "borda") {
        for (int j = 0; j < m; ++j) w[static_cast<std::size_t>(j)] = m - 1 - j;
    } else if (spec == "veto") {
        for (int j = 0; j + 1 < m; ++j) w[static_cast<std::size_t>(j)] = 1;
    }
    return w;
}

inline WinnerSet winners(const std::string& rule, const Profile& p) {
    if (rule == "minimax") return naive_minimax(p);
    if (rule == "copeland") return naive_copeland(p);
    if (rule == "kemeny") return naive_kemeny(p);
    return naive_psr(weights_of(rule, p.m()), p);
}

inline std::optional<Candidate> condorcet(const Profile& p) {
    for (int x = 0; x < p.m(); ++x) {
        bool beats_all = true;
        for (int y = 0; y < p.m(); ++y) beats_all = beats_all && (x == y || naive_margin(p, x, y) > 0);
        if (beats_all) return x;
    }
    return std::nullopt;
}

inline std::optional<Candidate> majority(const Profile& p) {
    for (int x = 0; x < p.m(); ++x) {
        std::int64_t first = 0;
        for (const auto& r : p.rankings()) first += r.top() == x;
        if (2 * first > p.n()) return x;
    }
    return std::nullopt;
}

/// Satisfaction of an absolute axiom, from first principles.
inline bool absolute_holds(const std::string& axiom, const std::string& rule, const Profile& p) {
    const auto w = winners(rule, p);
    if (axiom == "resolvability") return w.size() == 1;
    if (axiom == "no-condorcet-cycle") return condorcet(p).has_value();
    const auto target = axiom == "condorcet" ? condorcet(p) : majority(p);
    return !target || w == WinnerSet::of({*target});
}

}  // namespace oracle
