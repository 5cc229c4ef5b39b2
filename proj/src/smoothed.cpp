#include "smoothedvotes/smoothed.hpp"

#include "smoothedvotes/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace smoothedvotes {

Estimate wilson_estimate(std::int64_t hits, std::int64_t trials, std::uint64_t seed) {
    if (trials < 1) throw ArgumentError("an estimate needs at least one trial");
    if (hits < 0 || hits > trials) throw ArgumentError("hit count outside [0, trials]");
    constexpr double z = 1.959963984540054;
    const double t = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / t;
    const double denom = 1.0 + z * z / t;
    const double center = (p + z * z / (2.0 * t)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / t + z * z / (4.0 * t * t)) / denom;
    Estimate e;
    e.hits = hits;
    e.trials = trials;
    e.p_hat = p;
    e.ci_low = std::clamp(center - half, 0.0, p);
    e.ci_high = std::clamp(center + half, p, 1.0);
    e.seed = seed;
    return e;
}

DeltaSchedule DeltaSchedule::power(double c, double e) {
    if (!(c > 0.0)) throw ArgumentError("delta coefficient must be positive");
    if (!(e < -0.5)) throw ArgumentError("delta exponent must be < -1/2");
    DeltaSchedule d;
    d.zero_ = false;
    d.c_ = c;
    d.e_ = e;
    return d;
}

DeltaSchedule DeltaSchedule::parse(std::string_view text) {
    if (text == "zero" || text == "0") return zero();
    if (text.starts_with("pow:")) {
        const std::string body(text.substr(4));
        const auto comma = body.find(',');
        if (comma != std::string::npos) {
            try {
                std::size_t used_c = 0;
                std::size_t used_e = 0;
                const double c = std::stod(body.substr(0, comma), &used_c);
                const double e = std::stod(body.substr(comma + 1), &used_e);
                if (used_c == comma && used_e == body.size() - comma - 1) return power(c, e);
            } catch (const std::invalid_argument&) {
            } catch (const std::out_of_range&) {
            }
        }
    }
    throw ArgumentError("delta schedule must be `zero` or pow:<c>,<e>, got `" + std::string(text) + "`");
}

double DeltaSchedule::operator()(std::int64_t n) const {
    return zero_ ? 0.0 : c_ * std::pow(static_cast<double>(n), e_);
}

std::string DeltaSchedule::to_string() const {
    if (zero_) return "zero";
    std::ostringstream os;
    os << "pow:" << c_ << ',' << e_;
    return os.str();
}

// ---------------------------------------------------------------------------
// Worker pool

namespace {

using Tally = std::vector<std::int64_t>;
using TrialFn = std::function<void(std::uint64_t, Tally&)>;

/// Sums per-trial tallies. Trials are split into contiguous blocks; integer sums make
/// the reduction independent of the split.
Tally parallel_tally(std::int64_t trials, int workers, std::size_t width, const std::function<TrialFn()>& make_trial) {
    if (trials < 0) throw ArgumentError("negative trial count");
    const auto hw = static_cast<std::int64_t>(std::max(1, workers));
    const auto k = std::min<std::int64_t>(hw, std::max<std::int64_t>(1, trials));
    std::vector<Tally> partial(static_cast<std::size_t>(k), Tally(width, 0));
    const auto block = (trials + k - 1) / k;
    const auto run = [&](std::int64_t w) {
        auto trial = make_trial();
        const auto lo = w * block;
        const auto hi = std::min(trials, lo + block);
        for (auto t = lo; t < hi; ++t) trial(static_cast<std::uint64_t>(t), partial[static_cast<std::size_t>(w)]);
    };
    if (k == 1) {
        run(0);
    } else {
        std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));
        std::vector<std::thread> pool;
        for (std::int64_t w = 0; w < k; ++w) {
            pool.emplace_back([&, w] {
                try {
                    run(w);
                } catch (...) {
                    errors[static_cast<std::size_t>(w)] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    Tally total(width, 0);
    for (const auto& p : partial) {
        for (std::size_t j = 0; j < width; ++j) total[j] += p[j];
    }
    return total;
}

}  // namespace

std::int64_t parallel_count(std::int64_t trials, int workers,
                            const std::function<std::function<bool(std::uint64_t)>()>& make_trial) {
    return parallel_tally(trials, workers, 1, [&]() -> TrialFn {
        auto hit = make_trial();
        return [hit](std::uint64_t t, Tally& tally) { tally[0] += hit(t) ? 1 : 0; };
    })[0];
}

// ---------------------------------------------------------------------------
// Scenarios

Scenario replicate(const Scenario& scenario, std::int64_t z) {
    if (z < 1) throw ArgumentError("replication factor must be >= 1");
    Scenario out{replicate(scenario.base, z), std::nullopt};
    if (!scenario.witness) return out;
    if (const auto* w = std::get_if<IIAWitness>(&*scenario.witness)) {
        out.witness = IIAWitness{replicate(w->other, z), w->a, w->b};
    } else if (const auto* w = std::get_if<ConsistencyWitness>(&*scenario.witness)) {
        ConsistencyWitness parts;
        for (const auto& p : w->parts) parts.parts.push_back(replicate(p, z));
        Profile whole = parts.parts.front();
        for (std::size_t j = 1; j < parts.parts.size(); ++j) whole = concatenate(whole, parts.parts[j]);
        out.base = std::move(whole);
        out.witness = std::move(parts);
    } else {
        throw ConfigurationError("only IIA and consistency witnesses can be replicated");
    }
    return out;
}

Scenario scenario_of(const StrictCounterexample& cx) { return Scenario{cx.profile, cx.witness}; }

namespace {

bool is_plurality(const VotingRule& rule) {
    const auto* psr = dynamic_cast<const PositionalScoringRule*>(&rule);
    return psr && psr->family() == PositionalScoringRule::Family::plurality;
}

bool near_any_plane(std::span<const Hyperplane> planes, std::span<const std::int64_t> counts, std::int64_t n,
                    double width_times_n) {
    for (const auto& p : planes) {
        const auto r = p.scaled_residual(counts, n);
        const auto abs_r = static_cast<double>(r < 0 ? -r : r);
        if (abs_r <= width_times_n * static_cast<double>(p.max_abs_coeff())) return true;
    }
    return false;
}

}  // namespace

Estimate estimate_violation(const VotingRule& rule, const AxiomSpec& axiom, const Scenario& scenario,
                            const NoiseModel& noise, double phi, std::int64_t trials, std::uint64_t seed,
                            int workers) {
    if (trials < 100) throw ArgumentError("estimates need at least 100 trials");
    const int m = scenario.base.m();
    const PerturbationSampler sampler(noise, m, phi);
    const auto& index = sampler.index();
    const auto base = scenario.base.indices();
    const auto width = static_cast<std::size_t>(index.size());
    const auto n = scenario.base.n();

    std::function<std::function<bool(std::uint64_t)>()> factory;

    if (is_absolute(axiom.axiom)) {
        factory = [&] {
            return [&, counts = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
                perturb_counts(sampler, base, seed, t, counts);
                return !check_absolute(axiom.axiom, rule, m, counts);
            };
        };
    } else if (axiom.axiom == Axiom::iia) {
        const auto* w = scenario.witness ? std::get_if<IIAWitness>(&*scenario.witness) : nullptr;
        if (!w) throw ConfigurationError("IIA estimates need a paired-profile witness (use a library counterexample)");
        if (w->other.n() != n || w->other.m() != m) throw WitnessInvalid("IIA partner differs in shape");
        const auto partner = w->other.indices();
        const Candidate a = w->a;
        const Candidate b = w->b;
        std::vector<int> swapped(width);
        for (int k = 0; k < index.size(); ++k) {
            std::vector<Candidate> perm(index.ranking(k).perm().begin(), index.ranking(k).perm().end());
            std::swap(perm[static_cast<std::size_t>(index.position(k, a))], perm[static_cast<std::size_t>(index.position(k, b))]);
            swapped[static_cast<std::size_t>(k)] = index.index_of(perm);
        }
        const auto want_a = WinnerSet::of({a});
        const auto want_b = WinnerSet::of({b});
        factory = [&, partner, swapped, a, b, want_a, want_b] {
            return [&, partner, swapped, a, b, want_a, want_b, c1 = std::vector<std::int64_t>(width),
                    c2 = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
                std::fill(c1.begin(), c1.end(), 0);
                std::fill(c2.begin(), c2.end(), 0);
                for (std::size_t i = 0; i < base.size(); ++i) {
                    const int s = sampler.sample_sigma(voter_draw(seed, t, i));
                    const int r1 = index.compose(s, base[i]);
                    int r2 = index.compose(s, partner[i]);
                    if (index.prefers(r1, a, b) != index.prefers(r2, a, b)) r2 = swapped[static_cast<std::size_t>(r2)];
                    ++c1[static_cast<std::size_t>(r1)];
                    ++c2[static_cast<std::size_t>(r2)];
                }
                return rule.evaluate_counts(m, c1) == want_a && rule.evaluate_counts(m, c2) == want_b;
            };
        };
    } else if (axiom.axiom == Axiom::consistency) {
        const auto* w = scenario.witness ? std::get_if<ConsistencyWitness>(&*scenario.witness) : nullptr;
        if (!w) throw ConfigurationError("consistency estimates need a partition witness");
        std::vector<std::size_t> ends;
        std::size_t acc = 0;
        std::vector<int> joined;
        for (const auto& p : w->parts) {
            const auto idx = p.indices();
            joined.insert(joined.end(), idx.begin(), idx.end());
            acc += idx.size();
            ends.push_back(acc);
        }
        if (joined != base) throw WitnessInvalid("partition parts must be consecutive voter blocks of the base");
        factory = [&, ends] {
            return [&, ends, idx = std::vector<int>(base.size()),
                    counts = std::vector<std::vector<std::int64_t>>(ends.size() + 1, std::vector<std::int64_t>(width))](
                       std::uint64_t t) mutable {
                perturb_indices(sampler, base, seed, t, idx);
                for (auto& c : counts) std::fill(c.begin(), c.end(), 0);
                std::size_t part = 0;
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    while (i >= ends[part]) ++part;
                    ++counts[part][static_cast<std::size_t>(idx[i])];
                    ++counts.back()[static_cast<std::size_t>(idx[i])];
                }
                const auto common = rule.evaluate_counts(m, counts[0]);
                for (std::size_t j = 1; j < ends.size(); ++j) {
                    if (rule.evaluate_counts(m, counts[j]) != common) return false;
                }
                return rule.evaluate_counts(m, counts.back()) != common;
            };
        };
    } else if (axiom.axiom == Axiom::group_stability) {
        const auto rho = (*axiom.rho)(n);
        if (is_plurality(rule)) {
            factory = [&, rho] {
                return [&, rho, counts = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
                    perturb_counts(sampler, base, seed, t, counts);
                    return !plurality_group_stable(m, counts, rho);
                };
            };
        } else {
            const auto planes = hyperplanes_of(rule, m);
            if (!planes.exposed) throw ConfigurationError("rule `" + rule.name() + "` exposes no hyperplanes for this m");
            factory = [&, rho, planes] {
                return [&, rho, planes, counts = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
                    perturb_counts(sampler, base, seed, t, counts);
                    return rho > 0 && near_any_plane(planes.planes, counts, n, 2.0 * static_cast<double>(rho));
                };
            };
        }
    } else {
        throw ConfigurationError("axiom `" + axiom_name(axiom.axiom) +
                                 "` has no estimator; estimate group-stability, which implies it");
    }
    return wilson_estimate(parallel_count(trials, workers, factory), trials, seed);
}

// ---------------------------------------------------------------------------
// Base generators

Profile generate_base(std::string_view kind, int m, std::int64_t n, std::uint64_t seed) {
    if (n < 1) throw ArgumentError("base profiles need n >= 1");
    const auto& index = RankingIndex::get(m);
    std::vector<int> idx(static_cast<std::size_t>(n));
    const auto shifted = [&](int shift) {
        std::vector<Candidate> perm(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) perm[static_cast<std::size_t>(j)] = (j + shift) % m;
        return index.index_of(perm);
    };
    if (kind == "unanimous") {
        std::fill(idx.begin(), idx.end(), 0);
    } else if (kind == "tie") {
        std::vector<Candidate> second(static_cast<std::size_t>(m));
        std::iota(second.begin(), second.end(), 0);
        std::swap(second[0], second[1]);
        std::vector<Candidate> third(second);
        std::swap(third[0], third[2]);
        const int first = 0;
        const int other = index.index_of(second);
        for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i < n / 2 ? first : other;
        if (n % 2 == 1) idx.back() = index.index_of(third);
    } else if (kind == "cycle") {
        // Cyclic shifts of the identity in equal shares; remainder to the first shifts.
        std::int64_t pos = 0;
        for (int s = 0; s < m; ++s) {
            const auto share = n / m + (s < n % m ? 1 : 0);
            for (std::int64_t j = 0; j < share; ++j) idx[static_cast<std::size_t>(pos++)] = shifted(s);
        }
    } else if (kind == "uniform") {
        for (std::int64_t i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = static_cast<int>(i % index.size());
    } else if (kind == "random") {
        for (std::int64_t i = 0; i < n; ++i) {
            idx[static_cast<std::size_t>(i)] =
                static_cast<int>(voter_draw(seed, 0x6261736555ULL, static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(index.size()));
        }
    } else {
        std::string valid;
        for (const auto& g : base_generator_names()) valid += (valid.empty() ? "" : ", ") + g;
        throw ConfigurationError("unknown base generator `" + std::string(kind) + "`; valid: " + valid);
    }
    return Profile::from_indices(m, idx);
}

std::vector<std::string> base_generator_names() { return {"tie", "cycle", "uniform", "unanimous", "random"}; }

// ---------------------------------------------------------------------------
// Sweeps

std::vector<SweepRow> convergence_sweep(const SweepSpec& spec) {
    if (spec.phis.empty()) throw ConfigurationError("sweep needs at least one phi");
    const bool over_n = !spec.n_list.empty();
    if (over_n == !spec.z_list.empty()) throw ConfigurationError("sweep needs exactly one of an n grid and a z grid");
    if (!over_n && !spec.scenario) throw ConfigurationError("z sweeps need a base scenario");
    const auto rule = make_rule(spec.rule);
    const auto noise = make_noise_model(spec.model);
    std::vector<SweepRow> rows;
    for (double phi : spec.phis) {
        const auto& grid = over_n ? spec.n_list : spec.z_list;
        for (auto g : grid) {
            const Scenario sc = over_n ? Scenario{generate_base(spec.generator, spec.m, g, spec.seed), std::nullopt}
                                       : replicate(*spec.scenario, g);
            const auto start = std::chrono::steady_clock::now();
            SweepRow row;
            row.experiment = spec.experiment;
            row.rule = rule->name();
            row.axiom = spec.axiom.to_string();
            row.model = noise->name();
            row.phi = phi;
            row.n = sc.base.n();
            row.z = over_n ? 1 : g;
            row.estimate = estimate_violation(*rule, spec.axiom, sc, *noise, phi, spec.trials, spec.seed, spec.workers);
            row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<ThickRow> thick_hyperplane_probability(const VotingRule& rule, std::string_view generator, int m,
                                                   const NoiseModel& noise, double phi, const DeltaSchedule& delta,
                                                   const std::vector<std::int64_t>& n_list, std::int64_t trials,
                                                   std::uint64_t seed, int workers) {
    const auto planes = hyperplanes_of(rule, m);
    if (!planes.exposed) throw ConfigurationError("rule `" + rule.name() + "` exposes no hyperplanes for this m");
    const PerturbationSampler sampler(noise, m, phi);
    const auto width = static_cast<std::size_t>(sampler.index().size());
    std::vector<ThickRow> rows;
    for (auto n : n_list) {
        const auto base = generate_base(generator, m, n, seed).indices();
        const double d = delta(n);
        const auto hits = parallel_count(trials, workers, [&] {
            return [&, counts = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
                perturb_counts(sampler, base, seed, t, counts);
                if (delta.is_zero()) {
                    for (const auto& p : planes.planes) {
                        if (p.scaled_residual(counts, n) == 0) return true;
                    }
                    return false;
                }
                return near_any_plane(planes.planes, counts, n, d * static_cast<double>(n));
            };
        });
        rows.push_back({n, d, wilson_estimate(hits, trials, seed)});
    }
    return rows;
}

std::vector<GroupFlipRow> group_flip_probability(const VotingRule& rule,
                                                 const std::function<Profile(std::int64_t)>& base_of,
                                                 const NoiseModel& noise, double phi, const RhoSchedule& rho,
                                                 const std::vector<std::int64_t>& n_list, std::int64_t trials,
                                                 std::uint64_t seed, int workers) {
    const bool plurality = is_plurality(rule);
    std::vector<GroupFlipRow> rows;
    for (auto requested : n_list) {
        const auto profile = base_of(requested);
        const int m = profile.m();
        const auto n = profile.n();
        const auto planes = hyperplanes_of(rule, m);
        if (!planes.exposed) throw ConfigurationError("rule `" + rule.name() + "` exposes no hyperplanes for this m");
        const PerturbationSampler sampler(noise, m, phi);
        const auto width = static_cast<std::size_t>(sampler.index().size());
        const auto base = profile.indices();
        const auto r = rho(n);
        const auto tally = parallel_tally(trials, workers, 3, [&]() -> TrialFn {
            return [&, counts = std::vector<std::int64_t>(width)](std::uint64_t t, Tally& out) mutable {
                perturb_counts(sampler, base, seed, t, counts);
                const bool cert_unstable = r > 0 && near_any_plane(planes.planes, counts, n, 2.0 * static_cast<double>(r));
                out[0] += cert_unstable;
                if (plurality) {
                    const bool exact_unstable = !plurality_group_stable(m, counts, r);
                    out[1] += exact_unstable;
                    out[2] += exact_unstable && !cert_unstable;
                }
            };
        });
        GroupFlipRow row;
        row.n = n;
        row.rho = r;
        row.certificate = wilson_estimate(tally[0], trials, seed);
        if (plurality) row.exact = wilson_estimate(tally[1], trials, seed);
        row.contradictions = tally[2];
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Margins of the 300-voter example

std::vector<MarginRow> verify_appendixD_margins(const std::vector<double>& phi_grid) {
    const MallowsModel mallows;
    const auto profile = appendix_d_profile();
    const auto& index = RankingIndex::get(3);
    const auto counts = profile.counts();
    const BigRational n = profile.n();
    std::vector<MarginRow> rows;
    for (double phi_d : phi_grid) {
        if (!(phi_d >= 0.0 && phi_d < 1.0)) throw ArgumentError("margin grid values must lie in [0, 1)");
        const BigRational phi(phi_d);
        std::vector<BigRational> h(static_cast<std::size_t>(index.size()), BigRational(0));
        for (int b = 0; b < index.size(); ++b) {
            if (counts[static_cast<std::size_t>(b)] == 0) continue;
            const auto q = exact_pmf(mallows, index.ranking(b), phi);
            const BigRational w = BigRational(counts[static_cast<std::size_t>(b)]) / n;
            for (int k = 0; k < index.size(); ++k) h[static_cast<std::size_t>(k)] += w * q[static_cast<std::size_t>(k)];
        }
        const Candidate a = 0;
        const Candidate b = 1;
        const Candidate c = 2;
        BigRational ba = 0;
        BigRational bc = 0;
        BigRational first = 0;
        BigRational second = 0;
        for (int k = 0; k < index.size(); ++k) {
            const auto& hk = h[static_cast<std::size_t>(k)];
            ba += index.prefers(k, b, a) ? hk : BigRational(-hk);
            bc += index.prefers(k, b, c) ? hk : BigRational(-hk);
            if (index.at(k, 0) == a) first += hk;
            if (index.at(k, 0) == b) first -= hk;
            if (index.at(k, 1) == a) second += hk;
            if (index.at(k, 1) == b) second -= hk;
        }
        const BigRational one = 1;
        const BigRational z = one + 2 * phi + 2 * phi * phi + phi * phi * phi;
        const BigRational p1 = BigRational(1, 75) * (one - phi) * (17 - 23 * phi + 17 * phi * phi);
        const BigRational p2 = BigRational(1, 150) * (one - phi) * (one + 116 * phi + phi * phi);
        const BigRational p3 = BigRational(1, 300) * (one - phi) * (one + phi) * (one + 11 * phi);
        const auto abs_big = [](const BigRational& x) { return x < 0 ? BigRational(-x) : x; };
        const BigRational err = std::max({abs_big(z * ba - p1), abs_big(z * bc - p2), abs_big(z * first - p3)});

        MarginRow row;
        row.phi = phi_d;
        row.normalizer = z.convert_to<double>();
        row.b_over_a = ba.convert_to<double>();
        row.b_over_c = bc.convert_to<double>();
        row.a_over_b_psr = first.convert_to<double>();
        row.s_coefficient = second.convert_to<double>();
        row.poly_b_over_a = p1.convert_to<double>();
        row.poly_b_over_c = p2.convert_to<double>();
        row.poly_a_over_b = p3.convert_to<double>();
        row.max_abs_error = err.convert_to<double>();
        // Linear in s, so positivity on [0, 1] reduces to the endpoints.
        row.all_positive = ba > 0 && bc > 0 && first > 0 && first + second > 0;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Phi grids

std::vector<double> phi_grid_above(double phi, int midpoints) {
    check_phi(phi);
    std::vector<double> g;
    for (int j = 0; j <= midpoints + 1; ++j) g.push_back(phi + (1.0 - phi) * j / (midpoints + 1));
    g.back() = 1.0;
    return g;
}

std::vector<double> phi_grid_below(double phi, int midpoints) {
    check_phi(phi);
    std::vector<double> g;
    for (int j = 0; j <= midpoints + 1; ++j) g.push_back(phi * j / (midpoints + 1));
    g.back() = phi;
    return g;
}

GridExtreme sup_violation(const VotingRule& rule, const AxiomSpec& axiom, const Scenario& scenario,
                          const NoiseModel& noise, double phi, std::int64_t trials, std::uint64_t seed, int workers) {
    std::optional<GridExtreme> best;
    for (double p : phi_grid_above(phi)) {
        const auto e = estimate_violation(rule, axiom, scenario, noise, p, trials, seed, workers);
        if (!best || e.p_hat > best->estimate.p_hat) best = GridExtreme{p, e};
    }
    return *best;
}

GridExtreme inf_violation(const VotingRule& rule, const AxiomSpec& axiom, const Scenario& scenario,
                          const NoiseModel& noise, double phi, std::int64_t trials, std::uint64_t seed, int workers) {
    std::optional<GridExtreme> best;
    for (double p : phi_grid_below(phi)) {
        const auto e = estimate_violation(rule, axiom, scenario, noise, p, trials, seed, workers);
        if (!best || e.p_hat < best->estimate.p_hat) best = GridExtreme{p, e};
    }
    return *best;
}

// ---------------------------------------------------------------------------
// Diagnostics

Estimate concentration_probability(const NoiseModel& noise, const Profile& base, double phi, double eps,
                                   Center center, std::int64_t trials, std::uint64_t seed, int workers) {
    if (!(eps > 0.0)) throw ArgumentError("epsilon must be positive");
    const int m = base.m();
    const PerturbationSampler sampler(noise, m, phi);
    const auto width = static_cast<std::size_t>(sampler.index().size());
    const auto idx = base.indices();
    const auto target = center == Center::expected ? expected_full_histogram(noise, base, phi) : histogram_of(base).full_reals();
    const double n = static_cast<double>(base.n());
    const auto hits = parallel_count(trials, workers, [&] {
        return [&, counts = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
            perturb_counts(sampler, idx, seed, t, counts);
            double d = 0.0;
            for (std::size_t k = 0; k < width; ++k) d += std::abs(static_cast<double>(counts[k]) / n - target[k]);
            return d < eps;
        };
    });
    return wilson_estimate(hits, trials, seed);
}

BerryEsseenPoint berry_esseen_point(const NoiseModel& noise, int m, std::int64_t n, double phi, std::int64_t trials,
                                    std::uint64_t seed, int workers) {
    const PerturbationSampler sampler(noise, m, phi);
    const auto width = static_cast<std::size_t>(sampler.index().size());
    const std::vector<int> base(static_cast<std::size_t>(n), 0);
    const double mu = sampler.sigma_pmf()[0];
    const auto cut = static_cast<std::int64_t>(std::floor(mu * static_cast<double>(n)));
    const auto hits = parallel_count(trials, workers, [&] {
        return [&, counts = std::vector<std::int64_t>(width)](std::uint64_t t) mutable {
            perturb_counts(sampler, base, seed, t, counts);
            return counts[0] <= cut;
        };
    });
    BerryEsseenPoint pt;
    pt.n = n;
    pt.threshold = static_cast<double>(cut) / static_cast<double>(n);
    pt.empirical = static_cast<double>(hits) / static_cast<double>(trials);
    const double sd = std::sqrt(mu * (1.0 - mu) / static_cast<double>(n));
    pt.gaussian = normal_cdf((pt.threshold - mu) / sd);
    pt.gap = std::abs(pt.empirical - pt.gaussian);
    return pt;
}

double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ArgumentError("slope fit needs paired samples");
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) throw ArgumentError("slope fit needs at least two positive points");
    const double k = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char ch : s) {
        if (ch == '"') q += '"';
        q += ch;
    }
    return q + "\"";
}

std::string num(double v, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_timing) {
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        out << csv_field(r.experiment) << ',' << csv_field(r.rule) << ',' << csv_field(r.axiom) << ','
            << csv_field(r.model) << ',' << num(r.phi, "%.6g") << ',' << r.n << ',' << r.z << ',' << r.estimate.trials
            << ',' << num(r.estimate.p_hat, "%.10g") << ',' << num(r.estimate.ci_low, "%.10g") << ','
            << num(r.estimate.ci_high, "%.10g") << ',' << r.estimate.seed << ',';
        if (with_timing) out << num(r.ms, "%.3f");
        out << '\n';
    }
}

}  // namespace smoothedvotes
