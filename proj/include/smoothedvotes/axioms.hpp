#pragma once

// Axiom predicates. Absolute axioms are decided on a single profile;
// relative axioms need a witness naming the second profile(s) involved.

#include "smoothedvotes/core.hpp"
#include "smoothedvotes/rules.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace smoothedvotes {

enum class Axiom {
    resolvability,
    condorcet,
    majority,
    no_condorcet_cycle,
    consistency,
    iia,
    group_stability,
    group_sp,
    group_participation,
    group_monotonicity,
};

bool is_absolute(Axiom axiom) noexcept;
bool is_group_axiom(Axiom axiom) noexcept;
std::string axiom_name(Axiom axiom);

/// Coalition bound: rho(n) = k, or rho(n) = floor(c * n^e) with e < 1/2.
class RhoSchedule {
public:
    static RhoSchedule constant(std::int64_t k);
    static RhoSchedule power(double c, double e);
    /// `const:<k>` or `pow:<c>,<e>`.
    static RhoSchedule parse(std::string_view text);

    std::int64_t operator()(std::int64_t n) const;
    std::string to_string() const;

private:
    bool is_power_ = false;
    std::int64_t k_ = 0;
    double c_ = 0.0;
    double e_ = 0.0;
};

struct AxiomSpec {
    Axiom axiom;
    std::optional<RhoSchedule> rho;  ///< present exactly for the group axioms

    std::string to_string() const;
};

/// `resolvability`, `condorcet`, `majority`, `no-condorcet-cycle`, `consistency`, `iia`,
/// `group-stability:rho=<expr>` (also `group-sp`, `group-participation`, `group-monotonicity`).
AxiomSpec parse_axiom(std::string_view spec);
std::vector<std::string> axiom_names();

std::optional<Candidate> condorcet_winner(const Profile& profile);
std::optional<Candidate> condorcet_winner(int m, std::span<const std::int64_t> counts);
std::optional<Candidate> majority_winner(const Profile& profile);
std::optional<Candidate> majority_winner(int m, std::span<const std::int64_t> counts);

/// True when the axiom holds. Condorcet and Majority hold vacuously without such a winner.
bool check_absolute(Axiom axiom, const VotingRule& rule, const Profile& profile);
bool check_absolute(Axiom axiom, const VotingRule& rule, int m, std::span<const std::int64_t> counts);

struct ConsistencyWitness {
    std::vector<Profile> parts;  ///< must concatenate (as a multiset) to the checked profile
};

struct IIAWitness {
    Profile other;  ///< voter i of `other` orders (a, b) as voter i of the checked profile does
    Candidate a;
    Candidate b;
};

/// Voters `coalition[j]` switch to `replacement[j]`.
struct GroupDeviationWitness {
    std::vector<std::size_t> coalition;
    std::vector<Ranking> replacement;
};

struct ParticipationWitness {
    std::vector<std::size_t> leaving;
};

/// Voters `coalition[j]` switch to `replacement[j]`, each raising (or keeping) candidate c
/// while leaving the relative order of the other candidates untouched.
struct MonotonicityWitness {
    Candidate c;
    std::vector<std::size_t> coalition;
    std::vector<Ranking> replacement;
};

using Witness = std::variant<ConsistencyWitness, IIAWitness, GroupDeviationWitness, ParticipationWitness,
                             MonotonicityWitness>;

/// True iff the witness certifies a violation on `profile`. Throws WitnessInvalid
/// when the witness breaks its own invariants (wrong variant, oversized coalition, ...).
/// `rho` is required for the group axioms and evaluated at profile.n().
bool check_witness(Axiom axiom, const VotingRule& rule, const Profile& profile, const Witness& witness,
                   std::optional<RhoSchedule> rho = std::nullopt);

/// The voter's most preferred member of the set.
Candidate favorite_in(const Ranking& voter, const WinnerSet& set);

/// Profile obtained by applying a deviation.
Profile apply_deviation(const Profile& profile, const GroupDeviationWitness& witness);

/// Search every set partition of the voters (n <= 10) for a Consistency violation.
std::optional<ConsistencyWitness> find_consistency_violation(const VotingRule& rule, const Profile& profile);
/// Search every profile agreeing with `profile` on each voter's (a, b) order for an IIA violation.
std::optional<IIAWitness> find_iia_violation(const VotingRule& rule, const Profile& profile);

enum class Stability { stable, unstable, undecided };

struct GroupStabilityResult {
    Stability status = Stability::undecided;
    std::string method;             ///< "certificate", "brute-force" or "none"
    double min_distance = 0.0;      ///< to the nearest exposed hyperplane (inf when none)
    double threshold = 0.0;         ///< 2 rho / n
    std::optional<GroupDeviationWitness> witness;
};

/// Certificate first (nearest exposed hyperplane farther than 2 rho / n), then an
/// exhaustive anonymous search when the deviation space has at most `brute_force_limit` cases.
GroupStabilityResult check_group_stability(const VotingRule& rule, const Profile& profile, std::int64_t rho,
                                           std::int64_t brute_force_limit = 2'000'000);

/// Exact answer for Plurality from first-place counts: unstable iff rho >= 1 and top gap <= 2 rho.
bool plurality_group_stable(int m, std::span<const std::int64_t> counts, std::int64_t rho);

struct StrictCounterexample {
    std::string name;
    std::string rule;       ///< rule spec; empty for rule-independent criteria
    Axiom axiom;
    Profile profile;
    std::optional<Witness> witness;  ///< IIA partner profile for relative axioms
    Rational radius;        ///< every same-size profile within this L1 distance is also a counterexample
    std::vector<std::string> names;
};

/// `psr-condorcet` (alpha in (0,1]), `psr-majority` (alpha in (0,1]), `psr-iia` (alpha in (0,1)),
/// `plurality-condorcet`, `appendixD`, `condorcet-cycle`, `copeland-resolvability`.
/// `rule` overrides the rule used for appendixD (plurality by default).
StrictCounterexample counterexample_library(std::string_view name, std::optional<Rational> alpha = std::nullopt,
                                            std::string_view rule = {});
std::vector<std::string> counterexample_names();

/// The 300-voter profile: 36 abc, 80 acb, 115 bac, 69 cba.
Profile appendix_d_profile();

/// Violation check of a counterexample's criterion on a profile (and partner for IIA).
bool counterexample_violated(const StrictCounterexample& cx, const Profile& profile,
                             const Profile* partner = nullptr);

struct CertificationResult {
    std::int64_t samples = 0;
    std::int64_t violating = 0;
    std::int64_t z = 0;
    double max_distance = 0.0;  ///< largest L1 distance among the sampled profiles
    bool passed() const noexcept { return samples > 0 && violating == samples; }
};

/// Samples same-size profiles (on replicate(profile, z)) strictly inside the radius by
/// reassigning random voters, and checks each is still a counterexample.
CertificationResult certify(const StrictCounterexample& cx, std::int64_t samples, std::uint64_t seed,
                            std::int64_t z = 10);

struct AuditViolation {
    Profile profile;
    std::optional<Witness> witness;
};

struct AuditResult {
    std::int64_t cases = 0;              ///< ordered profiles (voter sequences) covered
    std::int64_t distinct_profiles = 0;  ///< anonymous profiles actually evaluated
    std::int64_t violations = 0;         ///< ordered profiles violating
    std::int64_t distinct_violations = 0;
    std::vector<AuditViolation> examples;  ///< first few, smallest n first
};

/// Exhaustive search over all m = 3 profiles with 1..n_max voters (n_max <= 5).
AuditResult brute_force_audit(const VotingRule& rule, const AxiomSpec& axiom, int n_max, int m,
                              std::size_t max_examples = 5);

/// Every multiset of n rankings of m candidates as count vectors, in lexicographic order.
std::vector<std::vector<std::int64_t>> enumerate_count_vectors(int m, int n);

}  // namespace smoothedvotes
