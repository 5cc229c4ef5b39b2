#pragma once

// Rankings, profiles and histograms over a fixed candidate count m.
//
// Candidates are indices 0..m-1. A Ranking stores the candidate at each
// position (position 0 is the top choice). All m! rankings are enumerated
// lexicographically; the last one (the fully descending ranking) is the
// coordinate a Histogram leaves implicit.

#include <boost/rational.hpp>

#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smoothedvotes {

using Candidate = int;
using Rational = boost::rational<std::int64_t>;

inline constexpr int kMinCandidates = 3;
/// Largest m for which m!-indexed tables are built (720 rankings).
inline constexpr int kMaxCandidates = 6;

std::int64_t factorial(int m);

class Ranking {
public:
    /// `perm[j]` is the candidate ranked at position j. Must be a bijection on 0..m-1.
    explicit Ranking(std::vector<Candidate> perm);

    static Ranking identity(int m);

    int m() const noexcept { return static_cast<int>(perm_.size()); }
    Candidate at(int position) const { return perm_.at(static_cast<std::size_t>(position)); }
    Candidate top() const noexcept { return perm_.front(); }
    int position_of(Candidate c) const;
    bool prefers(Candidate x, Candidate y) const { return position_of(x) < position_of(y); }
    std::span<const Candidate> perm() const noexcept { return perm_; }

    /// Letters a, b, c, ... joined without separators, e.g. "acb".
    std::string to_string() const;

    bool operator==(const Ranking&) const = default;
    auto operator<=>(const Ranking&) const = default;

private:
    std::vector<Candidate> perm_;
};

/// Fixed lexicographic enumeration of all m! rankings plus the lookup tables
/// every other module indexes into. One immutable instance per m.
class RankingIndex {
public:
    static const RankingIndex& get(int m);

    int m() const noexcept { return m_; }
    int size() const noexcept { return static_cast<int>(rankings_.size()); }
    /// Index of the ranking whose coordinate histograms omit.
    int missing() const noexcept { return size() - 1; }

    const Ranking& ranking(int idx) const { return rankings_.at(static_cast<std::size_t>(idx)); }
    const std::vector<Ranking>& rankings() const noexcept { return rankings_; }
    int index_of(const Ranking& r) const;
    int index_of(std::span<const Candidate> perm) const;

    Candidate top(int idx) const { return at(idx, 0); }
    Candidate at(int idx, int position) const { return ranking_pos_[idx * m_ + position]; }
    int position(int idx, Candidate c) const { return position_of_[idx * m_ + c]; }
    bool prefers(int idx, Candidate x, Candidate y) const { return position(idx, x) < position(idx, y); }

    int kendall_tau(int a, int b) const { return kendall_tau_[a * size() + b]; }
    /// Index of compose(ranking(sigma), ranking(pi)).
    int compose(int sigma, int pi) const { return compose_[sigma * size() + pi]; }

private:
    explicit RankingIndex(int m);

    int m_;
    std::vector<Ranking> rankings_;
    std::vector<int> ranking_pos_;
    std::vector<int> position_of_;
    std::vector<int> kendall_tau_;
    std::vector<int> compose_;
};

/// All m! rankings in lexicographic order; the last element is the implicit coordinate.
std::vector<Ranking> enumerate_rankings(int m);

/// Applies a position permutation: result(i) = pi(sigma(i)), i.e. the
/// post-noise position i holds the candidate that sat at position sigma(i).
Ranking compose(std::span<const int> sigma, const Ranking& pi);

/// Number of candidate pairs ordered oppositely.
int kendall_tau(const Ranking& a, const Ranking& b);

class Profile {
public:
    explicit Profile(std::vector<Ranking> rankings);
    /// `counts[k]` voters with ranking k of RankingIndex::get(m); voters grouped in index order.
    static Profile from_counts(int m, std::span<const std::int64_t> counts);
    static Profile from_indices(int m, std::span<const int> ranking_indices);

    int m() const noexcept { return m_; }
    std::int64_t n() const noexcept { return static_cast<std::int64_t>(rankings_.size()); }
    const Ranking& operator[](std::size_t i) const { return rankings_.at(i); }
    const std::vector<Ranking>& rankings() const noexcept { return rankings_; }
    std::vector<int> indices() const;
    std::vector<std::int64_t> counts() const;

    bool operator==(const Profile&) const = default;

private:
    int m_;
    std::vector<Ranking> rankings_;
};

Profile concatenate(const Profile& a, const Profile& b);
/// z copies of the profile laid end to end.
Profile replicate(const Profile& profile, std::int64_t z);

/// Ranking proportions. Stores the exact count of every ranking (including
/// the implicit one) so entries are exact rationals count/n.
class Histogram {
public:
    Histogram(int m, std::vector<std::int64_t> counts);

    int m() const noexcept { return m_; }
    std::int64_t n() const noexcept { return n_; }
    const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

    /// The m!-1 explicit coordinates.
    std::vector<Rational> entries() const;
    Rational entry(int idx) const { return Rational(counts_.at(static_cast<std::size_t>(idx)), n_); }
    /// Share of the omitted ranking: 1 - sum(entries()).
    Rational implicit_entry() const { return entry(static_cast<int>(counts_.size()) - 1); }

    /// All m! shares as doubles.
    std::vector<double> full_reals() const;
    /// The m!-1 explicit shares as doubles.
    std::vector<double> explicit_reals() const;

    /// Equal as rational points (profiles of different sizes can coincide).
    bool operator==(const Histogram& other) const;

private:
    int m_;
    std::int64_t n_;
    std::vector<std::int64_t> counts_;
};

Histogram histogram_of(const Profile& profile);

/// L1 distance over all m! coordinates, including the implicit one.
Rational l1_distance(const Histogram& a, const Histogram& b);
double l1_distance(std::span<const double> full_a, std::span<const double> full_b);

/// Completes m!-1 explicit coordinates with the implicit one.
std::vector<double> complete_histogram(std::span<const double> explicit_entries);

// Profile text format: one line per ranking group, `<count> x <cand> > <cand> > ...`.
// Blank lines and `#` comments are ignored; candidates are numbered in order of
// first appearance.

struct ParsedProfile {
    Profile profile;
    std::vector<std::string> names;
};

ParsedProfile parse_profile(std::string_view text);
ParsedProfile read_profile_file(const std::string& path);
std::string format_profile(const Profile& profile, const std::vector<std::string>& names = {});
std::vector<std::string> default_candidate_names(int m);

}  // namespace smoothedvotes
