#pragma once

// Phi-parameterized permutation noise applied independently to every voter.
//
// A noise model is a distribution over position permutations sigma; a voter
// with ranking pi reports compose(sigma, pi). Every shipped model is neutral,
// so the probability of moving from pi to pi' depends only on the permutation
// relating them. Note the convention: sigma(i) = j means post-noise position i
// holds the candidate that was at position j (formally the inverse of the
// usual relabelling permutation; the two agree for the identity).

#include "smoothedvotes/core.hpp"

#include <Eigen/Dense>
#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace smoothedvotes {

using BigRational = boost::multiprecision::cpp_rational;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based stream keyed by (seed, trial, stream). Two streams with
/// different keys are independent; the same key always replays the same
/// sequence, whatever thread draws it.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, std::uint64_t trial, std::uint64_t stream) noexcept
        : state_(mix64(seed ^ mix64(trial ^ mix64(stream ^ 0x5851f42d4c957f2dULL)))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept { return next_u64(); }
    std::uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    /// Uniform in [0, 1) with 53 random bits.
    double next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// The one 64-bit draw a voter consumes per perturbation.
inline std::uint64_t voter_draw(std::uint64_t seed, std::uint64_t trial, std::uint64_t voter) noexcept {
    return RandomStream(seed, trial, voter).next_u64();
}

class NoiseModel {
public:
    virtual ~NoiseModel() = default;

    virtual std::string name() const = 0;
    /// Probability of every position permutation, indexed like RankingIndex::get(m).
    virtual std::vector<double> permutation_pmf(int m, double phi) const = 0;
    virtual std::vector<BigRational> exact_permutation_pmf(int m, const BigRational& phi) const = 0;
};

/// Pr[sigma] = phi^inv(sigma) / Z, with inv(sigma) the Kendall-tau distance to the identity.
class MallowsModel final : public NoiseModel {
public:
    std::string name() const override { return "mallows"; }
    std::vector<double> permutation_pmf(int m, double phi) const override;
    std::vector<BigRational> exact_permutation_pmf(int m, const BigRational& phi) const override;
};

/// With probability phi resample uniformly, otherwise keep: (1-phi)[sigma = id] + phi/m!.
class UniformMixtureModel final : public NoiseModel {
public:
    std::string name() const override { return "uniform-mixture"; }
    std::vector<double> permutation_pmf(int m, double phi) const override;
    std::vector<BigRational> exact_permutation_pmf(int m, const BigRational& phi) const override;
};

std::unique_ptr<NoiseModel> make_noise_model(std::string_view name);
std::vector<std::string> noise_model_names();

void check_phi(double phi);

/// Distribution over outcome rankings (indexed like RankingIndex) when `base` is perturbed.
std::vector<double> pmf(const NoiseModel& model, const Ranking& base, double phi);
std::vector<BigRational> exact_pmf(const NoiseModel& model, const Ranking& base, const BigRational& phi);

double min_prob(const NoiseModel& model, double phi, int m);
BigRational exact_min_prob(const NoiseModel& model, const BigRational& phi, int m);

/// Walker/Vose alias table; one 64-bit draw per sample.
class AliasTable {
public:
    explicit AliasTable(std::span<const double> weights);

    int size() const noexcept { return static_cast<int>(prob_.size()); }
    int sample(std::uint64_t bits) const noexcept {
        // High bits pick the column, the low 32 bits decide between column and alias.
        const auto column = static_cast<std::size_t>((bits >> 32) * prob_.size() >> 32);
        const double u = static_cast<double>(bits & 0xffffffffULL) * 0x1.0p-32;
        return u < prob_[column] ? static_cast<int>(column) : alias_[column];
    }

private:
    std::vector<double> prob_;
    std::vector<int> alias_;
};

/// Exact sampler for one (model, m, phi). Built eagerly, immutable afterwards.
/// Because the models are neutral, a single table over sigma serves every base ranking.
class PerturbationSampler {
public:
    PerturbationSampler(const NoiseModel& model, int m, double phi);

    int m() const noexcept { return index_->m(); }
    double phi() const noexcept { return phi_; }
    const RankingIndex& index() const noexcept { return *index_; }
    const std::vector<double>& sigma_pmf() const noexcept { return sigma_pmf_; }

    int sample_sigma(std::uint64_t bits) const noexcept {
        return identity_only_ ? 0 : table_.sample(bits);
    }
    /// Outcome ranking index for a voter whose ranking index is `base`.
    int sample(int base, std::uint64_t bits) const noexcept { return index_->compose(sample_sigma(bits), base); }

private:
    const RankingIndex* index_;
    double phi_;
    std::vector<double> sigma_pmf_;
    AliasTable table_;
    bool identity_only_;
};

Ranking sample_ranking(const NoiseModel& model, const Ranking& base, double phi, RandomStream& rng);

/// Voter i draws from stream (seed, trial, i); output has the same n and m.
Profile perturb_profile(const NoiseModel& model, const Profile& profile, double phi, std::uint64_t seed,
                        std::uint64_t trial = 0);

/// Fast path used by the estimators: writes perturbed ranking indices of `base` into `out`.
void perturb_indices(const PerturbationSampler& sampler, std::span<const int> base, std::uint64_t seed,
                     std::uint64_t trial, std::span<int> out);
/// Same draws as perturb_indices, but only the per-ranking counts are kept. `counts` is overwritten.
void perturb_counts(const PerturbationSampler& sampler, std::span<const int> base, std::uint64_t seed,
                    std::uint64_t trial, std::span<std::int64_t> counts);

/// Mean of the per-voter outcome distributions over all m! coordinates.
std::vector<double> expected_full_histogram(const NoiseModel& model, const Profile& profile, double phi);
/// The m!-1 explicit coordinates of expected_full_histogram.
std::vector<double> expected_histogram(const NoiseModel& model, const Profile& profile, double phi);

struct CovarianceMatrix {
    Eigen::MatrixXd matrix;  ///< Cov of the perturbed histogram, (m!-1) x (m!-1), already scaled.
    double scale;            ///< The 1/n^2 factor applied to the summed per-voter covariances.
};

/// Covariance of the perturbed histogram's explicit coordinates.
/// Throws SingularMatrixError at phi = 0.
CovarianceMatrix covariance(const NoiseModel& model, const Profile& profile, double phi);

/// Covariance of one voter's outcome indicator vector, given its full outcome pmf `q`.
Eigen::MatrixXd single_voter_covariance(std::span<const double> q);
/// Closed-form inverse of single_voter_covariance: diagonal 1/q_j + 1/q_last, off-diagonal 1/q_last.
Eigen::MatrixXd closed_form_inverse(std::span<const double> q);
double min_eigenvalue(const Eigen::MatrixXd& symmetric);

/// Lower bound 1 - 2 m! exp(-2 eps^2 n / m!) on Pr[|H - E H|_1 < eps].
double hoeffding_bound(double epsilon, std::int64_t n, int m);
/// Lower bound 1 - exp(-eps^2 n / 2) on Pr[|H - h|_1 < eps] for small enough phi.
double starting_concentration_bound(double epsilon, std::int64_t n);

double normal_cdf(double z);

}  // namespace smoothedvotes
