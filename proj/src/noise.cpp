#include "smoothedvotes/noise.hpp"

#include "smoothedvotes/errors.hpp"

#include <algorithm>
#include <cmath>

namespace smoothedvotes {

void check_phi(double phi) {
    if (!(phi >= 0.0 && phi <= 1.0)) {
        throw ArgumentError("dispersion phi must lie in [0, 1], got " + std::to_string(phi));
    }
}

namespace {

void check_phi(const BigRational& phi) {
    if (phi < 0 || phi > 1) throw ArgumentError("dispersion phi must lie in [0, 1]");
}

BigRational power(const BigRational& base, int exponent) {
    BigRational r = 1;
    for (int k = 0; k < exponent; ++k) r *= base;
    return r;
}

}  // namespace

std::vector<double> MallowsModel::permutation_pmf(int m, double phi) const {
    check_phi(phi);
    const auto& index = RankingIndex::get(m);
    std::vector<double> p(static_cast<std::size_t>(index.size()));
    double z = 0.0;
    for (int s = 0; s < index.size(); ++s) {
        // pow(0, 0) == 1, so phi = 0 yields the point mass on the identity.
        p[static_cast<std::size_t>(s)] = std::pow(phi, index.kendall_tau(0, s));
        z += p[static_cast<std::size_t>(s)];
    }
    for (auto& v : p) v /= z;
    return p;
}

std::vector<BigRational> MallowsModel::exact_permutation_pmf(int m, const BigRational& phi) const {
    check_phi(phi);
    const auto& index = RankingIndex::get(m);
    std::vector<BigRational> p(static_cast<std::size_t>(index.size()));
    BigRational z = 0;
    for (int s = 0; s < index.size(); ++s) {
        p[static_cast<std::size_t>(s)] = power(phi, index.kendall_tau(0, s));
        z += p[static_cast<std::size_t>(s)];
    }
    for (auto& v : p) v /= z;
    return p;
}

std::vector<double> UniformMixtureModel::permutation_pmf(int m, double phi) const {
    check_phi(phi);
    const auto& index = RankingIndex::get(m);
    std::vector<double> p(static_cast<std::size_t>(index.size()), phi / static_cast<double>(index.size()));
    p[0] += 1.0 - phi;
    return p;
}

std::vector<BigRational> UniformMixtureModel::exact_permutation_pmf(int m, const BigRational& phi) const {
    check_phi(phi);
    const auto& index = RankingIndex::get(m);
    std::vector<BigRational> p(static_cast<std::size_t>(index.size()), phi / index.size());
    p[0] += 1 - phi;
    return p;
}

std::unique_ptr<NoiseModel> make_noise_model(std::string_view name) {
    if (name == "mallows") return std::make_unique<MallowsModel>();
    if (name == "uniform-mixture") return std::make_unique<UniformMixtureModel>();
    throw ConfigurationError("unknown noise model `" + std::string(name) + "`; valid: mallows, uniform-mixture");
}

std::vector<std::string> noise_model_names() { return {"mallows", "uniform-mixture"}; }

std::vector<double> pmf(const NoiseModel& model, const Ranking& base, double phi) {
    const auto& index = RankingIndex::get(base.m());
    const auto sigma = model.permutation_pmf(base.m(), phi);
    const int b = index.index_of(base);
    std::vector<double> out(sigma.size());
    for (int s = 0; s < index.size(); ++s) out[static_cast<std::size_t>(index.compose(s, b))] = sigma[static_cast<std::size_t>(s)];
    return out;
}

std::vector<BigRational> exact_pmf(const NoiseModel& model, const Ranking& base, const BigRational& phi) {
    const auto& index = RankingIndex::get(base.m());
    const auto sigma = model.exact_permutation_pmf(base.m(), phi);
    const int b = index.index_of(base);
    std::vector<BigRational> out(sigma.size());
    for (int s = 0; s < index.size(); ++s) out[static_cast<std::size_t>(index.compose(s, b))] = sigma[static_cast<std::size_t>(s)];
    return out;
}

double min_prob(const NoiseModel& model, double phi, int m) {
    const auto p = model.permutation_pmf(m, phi);
    return *std::min_element(p.begin(), p.end());
}

BigRational exact_min_prob(const NoiseModel& model, const BigRational& phi, int m) {
    const auto p = model.exact_permutation_pmf(m, phi);
    return *std::min_element(p.begin(), p.end());
}

AliasTable::AliasTable(std::span<const double> weights)
    : prob_(weights.size(), 0.0), alias_(weights.size(), 0) {
    if (weights.empty()) throw ArgumentError("alias table needs at least one weight");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ArgumentError("alias table weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw ArgumentError("alias table weights sum to zero");

    const auto k = weights.size();
    std::vector<double> scaled(k);
    std::vector<std::size_t> small;
    std::vector<std::size_t> large;
    for (std::size_t i = 0; i < k; ++i) {
        scaled[i] = weights[i] * static_cast<double>(k) / total;
        (scaled[i] < 1.0 ? small : large).push_back(i);
    }
    while (!small.empty() && !large.empty()) {
        auto s = small.back();
        small.pop_back();
        auto l = large.back();
        prob_[s] = scaled[s];
        alias_[s] = static_cast<int>(l);
        scaled[l] -= 1.0 - scaled[s];
        if (scaled[l] < 1.0) {
            large.pop_back();
            small.push_back(l);
        }
    }
    for (auto i : large) {
        prob_[i] = 1.0;
        alias_[i] = static_cast<int>(i);
    }
    // Leftovers from rounding drift.
    for (auto i : small) {
        prob_[i] = 1.0;
        alias_[i] = static_cast<int>(i);
    }
}

PerturbationSampler::PerturbationSampler(const NoiseModel& model, int m, double phi)
    : index_(&RankingIndex::get(m)),
      phi_(phi),
      sigma_pmf_(model.permutation_pmf(m, phi)),
      table_(sigma_pmf_),
      identity_only_(sigma_pmf_[0] == 1.0) {}

Ranking sample_ranking(const NoiseModel& model, const Ranking& base, double phi, RandomStream& rng) {
    PerturbationSampler sampler(model, base.m(), phi);
    return sampler.index().ranking(sampler.sample(sampler.index().index_of(base), rng.next_u64()));
}

Profile perturb_profile(const NoiseModel& model, const Profile& profile, double phi, std::uint64_t seed,
                        std::uint64_t trial) {
    PerturbationSampler sampler(model, profile.m(), phi);
    const auto base = profile.indices();
    std::vector<int> out(base.size());
    perturb_indices(sampler, base, seed, trial, out);
    return Profile::from_indices(profile.m(), out);
}

void perturb_indices(const PerturbationSampler& sampler, std::span<const int> base, std::uint64_t seed,
                     std::uint64_t trial, std::span<int> out) {
    for (std::size_t i = 0; i < base.size(); ++i) {
        out[i] = sampler.sample(base[i], voter_draw(seed, trial, i));
    }
}

void perturb_counts(const PerturbationSampler& sampler, std::span<const int> base, std::uint64_t seed,
                    std::uint64_t trial, std::span<std::int64_t> counts) {
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < base.size(); ++i) {
        ++counts[static_cast<std::size_t>(sampler.sample(base[i], voter_draw(seed, trial, i)))];
    }
}

std::vector<double> expected_full_histogram(const NoiseModel& model, const Profile& profile, double phi) {
    const auto& index = RankingIndex::get(profile.m());
    const auto sigma = model.permutation_pmf(profile.m(), phi);
    const auto counts = profile.counts();
    std::vector<double> mean(static_cast<std::size_t>(index.size()), 0.0);
    for (int b = 0; b < index.size(); ++b) {
        if (counts[static_cast<std::size_t>(b)] == 0) continue;
        const double w = static_cast<double>(counts[static_cast<std::size_t>(b)]) / static_cast<double>(profile.n());
        for (int s = 0; s < index.size(); ++s) {
            mean[static_cast<std::size_t>(index.compose(s, b))] += w * sigma[static_cast<std::size_t>(s)];
        }
    }
    return mean;
}

std::vector<double> expected_histogram(const NoiseModel& model, const Profile& profile, double phi) {
    auto full = expected_full_histogram(model, profile, phi);
    full.pop_back();
    return full;
}

Eigen::MatrixXd single_voter_covariance(std::span<const double> q) {
    const auto d = static_cast<Eigen::Index>(q.size()) - 1;
    Eigen::MatrixXd c(d, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = 0; k < d; ++k) {
            const double qj = q[static_cast<std::size_t>(j)];
            const double qk = q[static_cast<std::size_t>(k)];
            c(j, k) = j == k ? qj * (1.0 - qj) : -qj * qk;
        }
    }
    return c;
}

Eigen::MatrixXd closed_form_inverse(std::span<const double> q) {
    const auto d = static_cast<Eigen::Index>(q.size()) - 1;
    const double last = q.back();
    Eigen::MatrixXd inv = Eigen::MatrixXd::Constant(d, d, 1.0 / last);
    for (Eigen::Index j = 0; j < d; ++j) inv(j, j) += 1.0 / q[static_cast<std::size_t>(j)];
    return inv;
}

CovarianceMatrix covariance(const NoiseModel& model, const Profile& profile, double phi) {
    check_phi(phi);
    if (phi == 0.0) throw SingularMatrixError("covariance at phi = 0 is the zero matrix");
    const auto& index = RankingIndex::get(profile.m());
    const auto counts = profile.counts();
    const auto d = static_cast<Eigen::Index>(index.size()) - 1;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
    for (int b = 0; b < index.size(); ++b) {
        if (counts[static_cast<std::size_t>(b)] == 0) continue;
        const auto q = pmf(model, index.ranking(b), phi);
        sum += static_cast<double>(counts[static_cast<std::size_t>(b)]) * single_voter_covariance(q);
    }
    const double n = static_cast<double>(profile.n());
    const double scale = 1.0 / (n * n);
    return CovarianceMatrix{sum * scale, scale};
}

double min_eigenvalue(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

double hoeffding_bound(double epsilon, std::int64_t n, int m) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    if (n < 1) throw ArgumentError("n must be >= 1");
    const double f = static_cast<double>(factorial(m));
    return 1.0 - 2.0 * f * std::exp(-2.0 * epsilon * epsilon * static_cast<double>(n) / f);
}

double starting_concentration_bound(double epsilon, std::int64_t n) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
    return 1.0 - std::exp(-epsilon * epsilon * static_cast<double>(n) / 2.0);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace smoothedvotes
