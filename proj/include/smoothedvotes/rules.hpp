#pragma once

// Voting rules returning full winner sets, plus the affine hyperplanes in
// histogram space on whose complement each rule is locally constant.

#include "smoothedvotes/core.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smoothedvotes {

/// Nonempty set of candidates, stored as a bitmask (m <= 6).
class WinnerSet {
public:
    WinnerSet() = default;
    static WinnerSet of(std::initializer_list<Candidate> members);
    static WinnerSet from_bits(std::uint32_t bits) { WinnerSet w; w.bits_ = bits; return w; }

    void insert(Candidate c) { bits_ |= 1u << c; }
    bool contains(Candidate c) const noexcept { return (bits_ >> c) & 1u; }
    int size() const noexcept;
    bool empty() const noexcept { return bits_ == 0; }
    std::optional<Candidate> single() const;
    std::vector<Candidate> members() const;
    std::uint32_t bits() const noexcept { return bits_; }

    /// "{a,b}" using the given names, or letters by default.
    std::string to_string(const std::vector<std::string>& names = {}) const;

    bool operator==(const WinnerSet&) const = default;

private:
    std::uint32_t bits_ = 0;
};

/// margin(x, y) = #voters with x above y minus #voters with y above x.
class PairwiseMatrix {
public:
    PairwiseMatrix(int m, std::vector<std::int64_t> margins) : m_(m), margins_(std::move(margins)) {}

    int m() const noexcept { return m_; }
    std::int64_t margin(Candidate x, Candidate y) const { return margins_[static_cast<std::size_t>(x * m_ + y)]; }

private:
    int m_;
    std::vector<std::int64_t> margins_;
};

PairwiseMatrix pairwise_margins(const Profile& profile);
PairwiseMatrix pairwise_margins(int m, std::span<const std::int64_t> counts);

/// { h : sum_k coeffs[k] * h_k = constant } over the m!-1 explicit coordinates.
/// Rational input is rescaled to coprime integers; scaling does not move the plane.
class Hyperplane {
public:
    Hyperplane(const std::vector<Rational>& coeffs, Rational constant);
    Hyperplane(std::vector<std::int64_t> coeffs, std::int64_t constant);

    /// Plane sum_{all m! k} full[k] h_k = constant, rewritten without the implicit coordinate.
    static Hyperplane from_full_form(std::span<const std::int64_t> full, std::int64_t constant);

    const std::vector<std::int64_t>& coeffs() const noexcept { return coeffs_; }
    std::int64_t constant() const noexcept { return constant_; }
    std::int64_t max_abs_coeff() const noexcept { return max_abs_; }

    /// n * (a.h - b) for a histogram given by full counts summing to n. Exact.
    std::int64_t scaled_residual(std::span<const std::int64_t> full_counts, std::int64_t n) const;
    /// Sign of a.h - b.
    int side(const Histogram& h) const;

    bool operator==(const Hyperplane&) const = default;

private:
    void normalize();

    std::vector<std::int64_t> coeffs_;
    std::int64_t constant_;
    std::int64_t max_abs_ = 0;
};

/// |a.h - b| / max_k |a_k|: the L1 distance, in explicit coordinates, to the plane.
Rational l1_distance_to_hyperplane(const Histogram& h, const Hyperplane& plane);
double l1_distance_to_hyperplane(std::span<const double> explicit_point, const Hyperplane& plane);
/// Same quantity from raw counts, in floating point.
double l1_distance_to_hyperplane(std::span<const std::int64_t> full_counts, std::int64_t n, const Hyperplane& plane);

/// Largest r such that no histogram of the simplex within full m!-coordinate
/// L1 distance < r of `h` lies on the other side of (or on) the plane.
/// Zero when h is on the plane.
Rational simplex_radius(const Histogram& h, const Hyperplane& plane);

class VotingRule {
public:
    virtual ~VotingRule() = default;

    virtual std::string name() const = 0;
    /// Winners for the profile with `counts[k]` voters of ranking k.
    virtual WinnerSet evaluate_counts(int m, std::span<const std::int64_t> counts) const = 0;
    /// Single winner whenever the histogram is off every hyperplane.
    virtual bool decisive() const = 0;
    /// nullopt when the rule does not expose a decomposition for this m.
    virtual std::optional<std::vector<Hyperplane>> hyperplanes(int m) const = 0;

    WinnerSet evaluate(const Profile& profile) const { return evaluate_counts(profile.m(), profile.counts()); }
};

class PositionalScoringRule final : public VotingRule {
public:
    enum class Family { fixed, plurality, borda, veto };

    /// Fixed weight vector; must be nonincreasing and not constant.
    explicit PositionalScoringRule(std::vector<Rational> weights);
    static PositionalScoringRule plurality() { return PositionalScoringRule(Family::plurality); }
    static PositionalScoringRule borda() { return PositionalScoringRule(Family::borda); }
    static PositionalScoringRule veto() { return PositionalScoringRule(Family::veto); }

    std::string name() const override;
    WinnerSet evaluate_counts(int m, std::span<const std::int64_t> counts) const override;
    bool decisive() const override { return true; }
    std::optional<std::vector<Hyperplane>> hyperplanes(int m) const override;

    /// Integer weights equivalent (same winners) to the rule's weights at this m.
    std::vector<std::int64_t> integer_weights(int m) const;
    /// Total positional score of each candidate, in integer-weight units.
    std::vector<std::int64_t> scores(int m, std::span<const std::int64_t> counts) const;
    Family family() const noexcept { return family_; }

private:
    explicit PositionalScoringRule(Family family) : family_(family) {}

    Family family_;
    std::vector<Rational> weights_;
};

class MinimaxRule final : public VotingRule {
public:
    std::string name() const override { return "minimax"; }
    WinnerSet evaluate_counts(int m, std::span<const std::int64_t> counts) const override;
    bool decisive() const override { return true; }
    /// Margin-zero planes plus the planes where two margins coincide up to sign;
    /// Minimax compares margins of different pairs, so zero planes alone do not suffice.
    std::optional<std::vector<Hyperplane>> hyperplanes(int m) const override;
};

/// Score = pairwise wins + 1/2 pairwise ties.
class CopelandRule final : public VotingRule {
public:
    std::string name() const override { return "copeland"; }
    WinnerSet evaluate_counts(int m, std::span<const std::int64_t> counts) const override;
    bool decisive() const override { return false; }
    std::optional<std::vector<Hyperplane>> hyperplanes(int m) const override;
};

/// Winners are the top candidates of every ranking of minimum total Kendall-tau distance.
class KemenyRule final : public VotingRule {
public:
    /// Largest m for which all pairwise ranking-cost planes are emitted.
    static constexpr int kMaxHyperplaneM = 4;

    std::string name() const override { return "kemeny"; }
    WinnerSet evaluate_counts(int m, std::span<const std::int64_t> counts) const override;
    bool decisive() const override { return true; }
    std::optional<std::vector<Hyperplane>> hyperplanes(int m) const override;
};

WinnerSet psr_evaluate(const std::vector<Rational>& weights, const Profile& profile);
WinnerSet minimax_evaluate(const Profile& profile);
WinnerSet copeland_evaluate(const Profile& profile);
WinnerSet kemeny_evaluate(const Profile& profile);

struct HyperplaneSet {
    bool exposed = false;
    std::vector<Hyperplane> planes;
};

HyperplaneSet hyperplanes_of(const VotingRule& rule, int m);

/// Smallest explicit-coordinate L1 distance from the histogram to any plane.
double min_distance_to_planes(std::span<const std::int64_t> full_counts, std::int64_t n,
                              std::span<const Hyperplane> planes);

/// `plurality`, `borda`, `veto`, `psr:[1,0.5,0]`, `minimax`, `copeland`, `kemeny`.
std::unique_ptr<VotingRule> make_rule(std::string_view spec);
std::vector<std::string> rule_names();

/// Parses "0.5", "1/3", "2" as an exact rational.
Rational parse_rational(std::string_view text);

}  // namespace smoothedvotes
