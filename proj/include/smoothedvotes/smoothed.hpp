#pragma once

// Monte Carlo estimation of smoothed violation probabilities, sweeps over n, z
// and phi, and the concentration diagnostics.
//
// Every trial t draws voter i's noise from RandomStream(seed, t, i), so a
// result depends only on (inputs, seed) and never on the worker count.

#include "smoothedvotes/axioms.hpp"
#include "smoothedvotes/core.hpp"
#include "smoothedvotes/noise.hpp"
#include "smoothedvotes/rules.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace smoothedvotes {

struct Estimate {
    std::int64_t hits = 0;
    std::int64_t trials = 0;
    double p_hat = 0.0;
    double ci_low = 0.0;   ///< 95% Wilson interval
    double ci_high = 0.0;
    std::uint64_t seed = 0;
};

Estimate wilson_estimate(std::int64_t hits, std::int64_t trials, std::uint64_t seed = 0);

/// Thick-hyperplane width delta(n) = c * n^e with e < -1/2, or identically zero.
class DeltaSchedule {
public:
    static DeltaSchedule zero() { return DeltaSchedule(); }
    static DeltaSchedule power(double c, double e);
    /// `zero` or `pow:<c>,<e>`.
    static DeltaSchedule parse(std::string_view text);

    double operator()(std::int64_t n) const;
    bool is_zero() const noexcept { return zero_; }
    std::string to_string() const;

private:
    bool zero_ = true;
    double c_ = 0.0;
    double e_ = 0.0;
};

/// Runs `trials` independent trials on up to `workers` threads and counts hits.
/// `make_trial` is called once per worker and returns that worker's trial
/// function (so scratch buffers are never shared).
std::int64_t parallel_count(std::int64_t trials, int workers,
                            const std::function<std::function<bool(std::uint64_t)>()>& make_trial);

/// The profile perturbed in an experiment plus, for relative axioms, the witness
/// (IIA partner or consistency partition) perturbed alongside it.
struct Scenario {
    Profile base;
    std::optional<Witness> witness;
};

/// z-fold replication of the base and of every witness profile; preserves histograms.
Scenario replicate(const Scenario& scenario, std::int64_t z);
/// Scenario for a library counterexample.
Scenario scenario_of(const StrictCounterexample& cx);

/// Estimates Pr[axiom violated on the perturbed profile(s)].
///
/// IIA: voter i of both profiles receives the same permutation; when it leaves the
/// pair ordered differently in the two outcomes, the pair is swapped in the partner
/// so the perturbed witness stays valid. Consistency: parts are perturbed as
/// consecutive voter blocks of one profile. Group stability: exact for Plurality,
/// otherwise the hyperplane certificate (reports "flip possible").
Estimate estimate_violation(const VotingRule& rule, const AxiomSpec& axiom, const Scenario& scenario,
                            const NoiseModel& noise, double phi, std::int64_t trials, std::uint64_t seed,
                            int workers = 1);

/// Named base-profile generators: `tie`, `cycle`, `uniform`, `unanimous`, `random`.
/// `tie` splits voters between abc.. and bac.. (odd n puts one voter on the third candidate).
Profile generate_base(std::string_view kind, int m, std::int64_t n, std::uint64_t seed = 0);
std::vector<std::string> base_generator_names();

struct SweepRow {
    std::string experiment;
    std::string rule;
    std::string axiom;
    std::string model;
    double phi = 0.0;
    std::int64_t n = 0;
    std::int64_t z = 1;
    Estimate estimate;
    double ms = 0.0;
};

struct SweepSpec {
    std::string experiment = "sweep";
    std::string rule;
    AxiomSpec axiom{Axiom::resolvability, std::nullopt};
    std::string model = "mallows";
    std::vector<double> phis;
    /// Exactly one of the two grids is used: n_list with `generator`, or z_list with `scenario`.
    std::vector<std::int64_t> n_list;
    std::string generator;
    std::vector<std::int64_t> z_list;
    std::optional<Scenario> scenario;
    int m = 3;
    std::int64_t trials = 10'000;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// One Estimate per (phi, n or z) grid point, phi-major.
std::vector<SweepRow> convergence_sweep(const SweepSpec& spec);

struct ThickRow {
    std::int64_t n = 0;
    double delta = 0.0;
    Estimate estimate;
};

/// Pr[min distance from the perturbed histogram to the rule's hyperplanes <= delta(n)], per n.
std::vector<ThickRow> thick_hyperplane_probability(const VotingRule& rule, std::string_view generator, int m,
                                                   const NoiseModel& noise, double phi, const DeltaSchedule& delta,
                                                   const std::vector<std::int64_t>& n_list, std::int64_t trials,
                                                   std::uint64_t seed, int workers = 1);

struct GroupFlipRow {
    std::int64_t n = 0;
    std::int64_t rho = 0;
    Estimate certificate;            ///< Pr[some hyperplane within 2 rho / n]
    std::optional<Estimate> exact;   ///< Plurality only: Pr[top-two gap <= 2 rho]
    std::int64_t contradictions = 0; ///< trials certified stable yet exactly unstable (must be 0)
};

/// `base(n)` supplies the unperturbed profile for each n.
std::vector<GroupFlipRow> group_flip_probability(const VotingRule& rule,
                                                 const std::function<Profile(std::int64_t)>& base,
                                                 const NoiseModel& noise, double phi, const RhoSchedule& rho,
                                                 const std::vector<std::int64_t>& n_list, std::int64_t trials,
                                                 std::uint64_t seed, int workers = 1);

/// Pairwise and positional margins of the expected perturbed 300-voter profile under Mallows noise.
struct MarginRow {
    double phi = 0.0;
    double normalizer = 0.0;     ///< Z = 1 + 2 phi + 2 phi^2 + phi^3
    double b_over_a = 0.0;       ///< expected pairwise margin share, b vs a
    double b_over_c = 0.0;
    double a_over_b_psr = 0.0;   ///< first-place share of a minus that of b
    double s_coefficient = 0.0;  ///< second-place share of a minus that of b (multiplies s)
    double poly_b_over_a = 0.0;  ///< (1/75)(1-phi)(17-23phi+17phi^2)
    double poly_b_over_c = 0.0;  ///< (1/150)(1-phi)(1+116phi+phi^2)
    double poly_a_over_b = 0.0;  ///< (1/300)(1-phi)(1+phi)(1+11phi)
    double max_abs_error = 0.0;  ///< max |Z * margin - poly| over the three, computed exactly
    bool all_positive = false;   ///< all three margins > 0 for every s in [0, 1]
};

/// Exact rational evaluation; each phi in the grid must lie in [0, 1).
std::vector<MarginRow> verify_appendixD_margins(const std::vector<double>& phi_grid);

/// {phi, k midpoints, 1} and {0, k midpoints, phi}: grids standing in for the sup over
/// [phi, 1] and the inf over [0, phi].
std::vector<double> phi_grid_above(double phi, int midpoints = 3);
std::vector<double> phi_grid_below(double phi, int midpoints = 3);

struct GridExtreme {
    double phi = 0.0;
    Estimate estimate;
};

/// Largest violation estimate over phi_grid_above(phi): the smoothed-satisfaction failure rate.
GridExtreme sup_violation(const VotingRule& rule, const AxiomSpec& axiom, const Scenario& scenario,
                          const NoiseModel& noise, double phi, std::int64_t trials, std::uint64_t seed,
                          int workers = 1);
/// Smallest violation estimate over phi_grid_below(phi): the smoothed-violation rate.
GridExtreme inf_violation(const VotingRule& rule, const AxiomSpec& axiom, const Scenario& scenario,
                          const NoiseModel& noise, double phi, std::int64_t trials, std::uint64_t seed,
                          int workers = 1);

// Concentration diagnostics.

/// Pr[|H - center|_1 < eps] where center is the expected histogram (Hoeffding) or the
/// base histogram itself (starting concentration).
enum class Center { expected, base };
Estimate concentration_probability(const NoiseModel& noise, const Profile& base, double phi, double eps,
                                   Center center, std::int64_t trials, std::uint64_t seed, int workers = 1);

struct BerryEsseenPoint {
    std::int64_t n = 0;
    double threshold = 0.0;  ///< t = floor(mu n) / n
    double empirical = 0.0;  ///< Pr[h_top <= t] for the unanimous base
    double gaussian = 0.0;   ///< matched-moment normal probability of the same half-space
    double gap = 0.0;        ///< |empirical - gaussian|
};

/// Half-space {h : h_id <= t} for n voters all ranking the identity.
BerryEsseenPoint berry_esseen_point(const NoiseModel& noise, int m, std::int64_t n, double phi,
                                    std::int64_t trials, std::uint64_t seed, int workers = 1);

/// Least-squares slope of log(y) on log(x); pairs with y <= 0 are skipped.
double fit_loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

inline constexpr std::string_view kCsvHeader = "experiment,rule,axiom,model,phi,n,z,trials,p_hat,ci_low,ci_high,seed,ms";

/// Header plus one line per row. The ms column stays empty unless `with_timing`,
/// which keeps files byte-identical across reruns.
void write_csv(std::ostream& out, const std::vector<SweepRow>& rows, bool with_timing = false);

}  // namespace smoothedvotes
