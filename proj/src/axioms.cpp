#include "smoothedvotes/axioms.hpp"

#include "smoothedvotes/errors.hpp"
#include "smoothedvotes/noise.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

namespace smoothedvotes {

namespace {

const std::map<Axiom, std::string>& axiom_table() {
    static const std::map<Axiom, std::string> table = {
        {Axiom::resolvability, "resolvability"},
        {Axiom::condorcet, "condorcet"},
        {Axiom::majority, "majority"},
        {Axiom::no_condorcet_cycle, "no-condorcet-cycle"},
        {Axiom::consistency, "consistency"},
        {Axiom::iia, "iia"},
        {Axiom::group_stability, "group-stability"},
        {Axiom::group_sp, "group-sp"},
        {Axiom::group_participation, "group-participation"},
        {Axiom::group_monotonicity, "group-monotonicity"},
    };
    return table;
}

}  // namespace

bool is_absolute(Axiom axiom) noexcept {
    return axiom == Axiom::resolvability || axiom == Axiom::condorcet || axiom == Axiom::majority ||
           axiom == Axiom::no_condorcet_cycle;
}

bool is_group_axiom(Axiom axiom) noexcept {
    return axiom == Axiom::group_stability || axiom == Axiom::group_sp || axiom == Axiom::group_participation ||
           axiom == Axiom::group_monotonicity;
}

std::string axiom_name(Axiom axiom) { return axiom_table().at(axiom); }

// ---------------------------------------------------------------------------
// Specs

RhoSchedule RhoSchedule::constant(std::int64_t k) {
    if (k < 0) throw ArgumentError("constant coalition bound must be >= 0");
    RhoSchedule r;
    r.k_ = k;
    return r;
}

RhoSchedule RhoSchedule::power(double c, double e) {
    if (!(c > 0.0)) throw ArgumentError("coalition bound coefficient must be positive");
    if (!(e < 0.5)) throw ArgumentError("coalition bound exponent must be < 1/2");
    RhoSchedule r;
    r.is_power_ = true;
    r.c_ = c;
    r.e_ = e;
    return r;
}

RhoSchedule RhoSchedule::parse(std::string_view text) {
    const auto number = [&](std::string_view s) {
        std::size_t used = 0;
        const std::string str(s);
        double v = 0.0;
        try {
            v = std::stod(str, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != str.size()) throw ArgumentError("bad number `" + str + "` in coalition bound");
        return v;
    };
    if (text.starts_with("const:")) {
        const double k = number(text.substr(6));
        if (k != std::floor(k)) throw ArgumentError("constant coalition bound must be an integer");
        return constant(static_cast<std::int64_t>(k));
    }
    if (text.starts_with("pow:")) {
        const auto body = text.substr(4);
        const auto comma = body.find(',');
        if (comma == std::string_view::npos) throw ArgumentError("power coalition bound must look like pow:<c>,<e>");
        return power(number(body.substr(0, comma)), number(body.substr(comma + 1)));
    }
    throw ArgumentError("coalition bound must be const:<k> or pow:<c>,<e>, got `" + std::string(text) + "`");
}

std::int64_t RhoSchedule::operator()(std::int64_t n) const {
    if (!is_power_) return k_;
    // The small slack keeps exact powers (10000^0.25 = 10) from rounding down.
    return static_cast<std::int64_t>(std::floor(c_ * std::pow(static_cast<double>(n), e_) + 1e-9));
}

std::string RhoSchedule::to_string() const {
    if (!is_power_) return "const:" + std::to_string(k_);
    std::ostringstream os;
    os << "pow:" << c_ << ',' << e_;
    return os.str();
}

std::string AxiomSpec::to_string() const {
    auto s = axiom_name(axiom);
    if (rho) s += ":rho=" + rho->to_string();
    return s;
}

AxiomSpec parse_axiom(std::string_view spec) {
    const auto colon = spec.find(':');
    const auto head = spec.substr(0, colon);
    for (const auto& [axiom, name] : axiom_table()) {
        if (name != head) continue;
        if (!is_group_axiom(axiom)) {
            if (colon != std::string_view::npos) throw ConfigurationError("axiom `" + name + "` takes no parameters");
            return {axiom, std::nullopt};
        }
        const auto rest = colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
        if (!rest.starts_with("rho=")) {
            throw ConfigurationError("axiom `" + name + "` needs a coalition bound, e.g. " + name + ":rho=pow:1,0.25");
        }
        try {
            return {axiom, RhoSchedule::parse(rest.substr(4))};
        } catch (const ArgumentError& e) {
            throw ConfigurationError(e.what());
        }
    }
    std::string valid;
    for (const auto& n : axiom_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigurationError("unknown axiom `" + std::string(spec) + "`; valid: " + valid);
}

std::vector<std::string> axiom_names() {
    return {"resolvability",
            "condorcet",
            "majority",
            "no-condorcet-cycle",
            "consistency",
            "iia",
            "group-stability:rho=<const:k|pow:c,e>",
            "group-sp:rho=<expr>",
            "group-participation:rho=<expr>",
            "group-monotonicity:rho=<expr>"};
}

// ---------------------------------------------------------------------------
// Absolute axioms

std::optional<Candidate> condorcet_winner(int m, std::span<const std::int64_t> counts) {
    const auto pm = pairwise_margins(m, counts);
    for (Candidate c = 0; c < m; ++c) {
        bool beats_all = true;
        for (Candidate y = 0; y < m && beats_all; ++y) {
            if (y != c && pm.margin(c, y) <= 0) beats_all = false;
        }
        if (beats_all) return c;
    }
    return std::nullopt;
}

std::optional<Candidate> condorcet_winner(const Profile& profile) {
    return condorcet_winner(profile.m(), profile.counts());
}

std::optional<Candidate> majority_winner(int m, std::span<const std::int64_t> counts) {
    const auto& index = RankingIndex::get(m);
    std::vector<std::int64_t> first(static_cast<std::size_t>(m), 0);
    std::int64_t n = 0;
    for (int k = 0; k < index.size(); ++k) {
        first[static_cast<std::size_t>(index.top(k))] += counts[static_cast<std::size_t>(k)];
        n += counts[static_cast<std::size_t>(k)];
    }
    for (Candidate c = 0; c < m; ++c) {
        if (2 * first[static_cast<std::size_t>(c)] > n) return c;
    }
    return std::nullopt;
}

std::optional<Candidate> majority_winner(const Profile& profile) { return majority_winner(profile.m(), profile.counts()); }

bool check_absolute(Axiom axiom, const VotingRule& rule, int m, std::span<const std::int64_t> counts) {
    switch (axiom) {
        case Axiom::resolvability: return rule.evaluate_counts(m, counts).size() == 1;
        case Axiom::condorcet: {
            const auto c = condorcet_winner(m, counts);
            return !c || rule.evaluate_counts(m, counts) == WinnerSet::of({*c});
        }
        case Axiom::majority: {
            const auto c = majority_winner(m, counts);
            return !c || rule.evaluate_counts(m, counts) == WinnerSet::of({*c});
        }
        case Axiom::no_condorcet_cycle: return condorcet_winner(m, counts).has_value();
        default: break;
    }
    throw ConfigurationError("axiom `" + axiom_name(axiom) + "` is relative and needs a witness");
}

bool check_absolute(Axiom axiom, const VotingRule& rule, const Profile& profile) {
    return check_absolute(axiom, rule, profile.m(), profile.counts());
}

// ---------------------------------------------------------------------------
// Relative axioms

Candidate favorite_in(const Ranking& voter, const WinnerSet& set) {
    for (int j = 0; j < voter.m(); ++j) {
        if (set.contains(voter.at(j))) return voter.at(j);
    }
    throw InvariantViolation("favorite of an empty winner set");
}

namespace {

void check_coalition(const std::vector<std::size_t>& coalition, std::int64_t n, std::int64_t rho) {
    if (static_cast<std::int64_t>(coalition.size()) > rho) {
        throw WitnessInvalid("coalition of " + std::to_string(coalition.size()) + " voters exceeds rho(n) = " +
                             std::to_string(rho));
    }
    std::vector<std::size_t> sorted = coalition;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw WitnessInvalid("coalition lists a voter twice");
    if (!sorted.empty() && static_cast<std::int64_t>(sorted.back()) >= n) throw WitnessInvalid("coalition voter index out of range");
}

/// All coalition members weakly better off and at least one strictly.
bool coalition_improves(const Profile& profile, const std::vector<std::size_t>& coalition, const WinnerSet& before,
                        const WinnerSet& after) {
    bool strict = false;
    for (auto i : coalition) {
        const auto& voter = profile[i];
        const int old_pos = voter.position_of(favorite_in(voter, before));
        const int new_pos = voter.position_of(favorite_in(voter, after));
        if (new_pos > old_pos) return false;
        if (new_pos < old_pos) strict = true;
    }
    return strict;
}

bool raises_only(const Ranking& before, const Ranking& after, Candidate c) {
    if (after.position_of(c) > before.position_of(c)) return false;
    std::vector<Candidate> a;
    std::vector<Candidate> b;
    for (auto x : before.perm()) {
        if (x != c) a.push_back(x);
    }
    for (auto x : after.perm()) {
        if (x != c) b.push_back(x);
    }
    return a == b;
}

std::int64_t required_rho(const std::optional<RhoSchedule>& rho, Axiom axiom, std::int64_t n) {
    if (!rho) throw ConfigurationError("axiom `" + axiom_name(axiom) + "` needs a coalition bound");
    return (*rho)(n);
}

}  // namespace

Profile apply_deviation(const Profile& profile, const GroupDeviationWitness& witness) {
    if (witness.coalition.size() != witness.replacement.size()) {
        throw WitnessInvalid("coalition and replacement lists differ in length");
    }
    auto rankings = profile.rankings();
    for (std::size_t j = 0; j < witness.coalition.size(); ++j) {
        if (witness.replacement[j].m() != profile.m()) throw WitnessInvalid("replacement ranking has the wrong m");
        rankings.at(witness.coalition[j]) = witness.replacement[j];
    }
    return Profile(std::move(rankings));
}

bool check_witness(Axiom axiom, const VotingRule& rule, const Profile& profile, const Witness& witness,
                   std::optional<RhoSchedule> rho) {
    const auto n = profile.n();
    switch (axiom) {
        case Axiom::consistency: {
            const auto* w = std::get_if<ConsistencyWitness>(&witness);
            if (!w) throw WitnessInvalid("consistency needs a partition witness");
            if (w->parts.empty()) throw WitnessInvalid("partition has no parts");
            std::vector<std::int64_t> total(static_cast<std::size_t>(factorial(profile.m())), 0);
            for (const auto& part : w->parts) {
                if (part.m() != profile.m()) throw WitnessInvalid("partition part has the wrong m");
                const auto c = part.counts();
                for (std::size_t k = 0; k < c.size(); ++k) total[k] += c[k];
            }
            if (total != profile.counts()) throw WitnessInvalid("partition parts do not add up to the profile");
            const auto common = rule.evaluate(w->parts.front());
            for (const auto& part : w->parts) {
                if (rule.evaluate(part) != common) return false;
            }
            return rule.evaluate(profile) != common;
        }
        case Axiom::iia: {
            const auto* w = std::get_if<IIAWitness>(&witness);
            if (!w) throw WitnessInvalid("IIA needs a paired-profile witness");
            if (w->other.m() != profile.m() || w->other.n() != n) throw WitnessInvalid("IIA profiles differ in shape");
            if (w->a == w->b || w->a < 0 || w->b < 0 || w->a >= profile.m() || w->b >= profile.m()) {
                throw WitnessInvalid("IIA candidates must be two distinct candidates");
            }
            for (std::int64_t i = 0; i < n; ++i) {
                const auto idx = static_cast<std::size_t>(i);
                if (profile[idx].prefers(w->a, w->b) != w->other[idx].prefers(w->a, w->b)) {
                    throw WitnessInvalid("voter " + std::to_string(i) + " orders the pair differently");
                }
            }
            return rule.evaluate(profile) == WinnerSet::of({w->a}) && rule.evaluate(w->other) == WinnerSet::of({w->b});
        }
        case Axiom::group_stability:
        case Axiom::group_sp: {
            const auto* w = std::get_if<GroupDeviationWitness>(&witness);
            if (!w) throw WitnessInvalid(axiom_name(axiom) + " needs a deviation witness");
            check_coalition(w->coalition, n, required_rho(rho, axiom, n));
            const auto before = rule.evaluate(profile);
            const auto after = rule.evaluate(apply_deviation(profile, *w));
            if (axiom == Axiom::group_stability) return before != after;
            return coalition_improves(profile, w->coalition, before, after);
        }
        case Axiom::group_participation: {
            const auto* w = std::get_if<ParticipationWitness>(&witness);
            if (!w) throw WitnessInvalid("group participation needs a leaving-coalition witness");
            check_coalition(w->leaving, n, required_rho(rho, axiom, n));
            if (static_cast<std::int64_t>(w->leaving.size()) >= n) throw WitnessInvalid("every voter cannot leave");
            std::vector<bool> gone(static_cast<std::size_t>(n), false);
            for (auto i : w->leaving) gone[i] = true;
            std::vector<Ranking> rest;
            for (std::int64_t i = 0; i < n; ++i) {
                if (!gone[static_cast<std::size_t>(i)]) rest.push_back(profile[static_cast<std::size_t>(i)]);
            }
            return coalition_improves(profile, w->leaving, rule.evaluate(profile), rule.evaluate(Profile(std::move(rest))));
        }
        case Axiom::group_monotonicity: {
            const auto* w = std::get_if<MonotonicityWitness>(&witness);
            if (!w) throw WitnessInvalid("group monotonicity needs a raising witness");
            if (w->c < 0 || w->c >= profile.m()) throw WitnessInvalid("raised candidate out of range");
            check_coalition(w->coalition, n, required_rho(rho, axiom, n));
            if (w->coalition.size() != w->replacement.size()) throw WitnessInvalid("coalition and replacement lists differ in length");
            for (std::size_t j = 0; j < w->coalition.size(); ++j) {
                if (w->replacement[j].m() != profile.m() || !raises_only(profile[w->coalition[j]], w->replacement[j], w->c)) {
                    throw WitnessInvalid("replacement must only raise the candidate");
                }
            }
            const auto after = rule.evaluate(apply_deviation(profile, GroupDeviationWitness{w->coalition, w->replacement}));
            return rule.evaluate(profile).contains(w->c) && !after.contains(w->c);
        }
        default: break;
    }
    throw ConfigurationError("axiom `" + axiom_name(axiom) + "` is absolute and takes no witness");
}

std::optional<ConsistencyWitness> find_consistency_violation(const VotingRule& rule, const Profile& profile) {
    const auto n = static_cast<int>(profile.n());
    if (n > 10) throw ConfigurationError("consistency search is limited to n <= 10");
    if (n < 2) return std::nullopt;
    const int m = profile.m();
    const auto whole = rule.evaluate(profile);
    const auto idx = profile.indices();
    const auto width = static_cast<std::size_t>(factorial(m));

    // Restricted growth strings enumerate each set partition once.
    std::vector<int> block(static_cast<std::size_t>(n), 0);
    std::vector<int> max_prefix(static_cast<std::size_t>(n), 0);
    while (true) {
        const int blocks = *std::max_element(block.begin(), block.end()) + 1;
        if (blocks >= 2) {
            std::vector<std::vector<std::int64_t>> counts(static_cast<std::size_t>(blocks), std::vector<std::int64_t>(width, 0));
            for (int i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(block[static_cast<std::size_t>(i)])][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
            const auto common = rule.evaluate_counts(m, counts[0]);
            bool same = common != whole;
            for (int b = 1; b < blocks && same; ++b) same = rule.evaluate_counts(m, counts[static_cast<std::size_t>(b)]) == common;
            if (same) {
                ConsistencyWitness w;
                for (const auto& c : counts) w.parts.push_back(Profile::from_counts(m, c));
                return w;
            }
        }
        // Next restricted growth string.
        int i = n - 1;
        while (i > 0 && block[static_cast<std::size_t>(i)] > max_prefix[static_cast<std::size_t>(i - 1)]) --i;
        if (i == 0) break;
        ++block[static_cast<std::size_t>(i)];
        max_prefix[static_cast<std::size_t>(i)] = std::max(max_prefix[static_cast<std::size_t>(i - 1)], block[static_cast<std::size_t>(i)]);
        for (int j = i + 1; j < n; ++j) {
            block[static_cast<std::size_t>(j)] = 0;
            max_prefix[static_cast<std::size_t>(j)] = max_prefix[static_cast<std::size_t>(i)];
        }
    }
    return std::nullopt;
}

std::optional<IIAWitness> find_iia_violation(const VotingRule& rule, const Profile& profile) {
    const auto winner = rule.evaluate(profile).single();
    if (!winner) return std::nullopt;
    const int m = profile.m();
    const auto& index = RankingIndex::get(m);
    const auto n = static_cast<std::size_t>(profile.n());
    const double space = std::pow(static_cast<double>(index.size()) / 2.0, static_cast<double>(n));
    if (space > 2e6) throw ConfigurationError("IIA search space too large for exhaustive enumeration");
    const auto base = profile.indices();
    const Candidate a = *winner;
    for (Candidate b = 0; b < m; ++b) {
        if (b == a) continue;
        // Per voter, the rankings agreeing on the (a, b) order.
        std::vector<std::vector<int>> options(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 0; k < index.size(); ++k) {
                if (index.prefers(k, a, b) == index.prefers(base[i], a, b)) options[i].push_back(k);
            }
        }
        std::vector<std::size_t> choice(n, 0);
        std::vector<std::int64_t> counts(static_cast<std::size_t>(index.size()));
        while (true) {
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(options[i][choice[i]])];
            if (rule.evaluate_counts(m, counts) == WinnerSet::of({b})) {
                std::vector<int> other(n);
                for (std::size_t i = 0; i < n; ++i) other[i] = options[i][choice[i]];
                return IIAWitness{Profile::from_indices(m, other), a, b};
            }
            std::size_t i = 0;
            while (i < n && ++choice[i] == options[i].size()) choice[i++] = 0;
            if (i == n) break;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Group stability

bool plurality_group_stable(int m, std::span<const std::int64_t> counts, std::int64_t rho) {
    if (rho <= 0) return true;
    const auto& index = RankingIndex::get(m);
    std::vector<std::int64_t> first(static_cast<std::size_t>(m), 0);
    for (int k = 0; k < index.size(); ++k) first[static_cast<std::size_t>(index.top(k))] += counts[static_cast<std::size_t>(k)];
    std::sort(first.begin(), first.end(), std::greater<>());
    // ceil(gap / 2) supporters of the leader switching to the runner-up force at least a tie;
    // a tied leader loses sole possession to any single switch.
    return first[0] - first[1] > 2 * rho;
}

namespace {

double multiset_count(int kinds, std::int64_t size) {
    double r = 1.0;
    for (std::int64_t j = 1; j <= size; ++j) r = r * static_cast<double>(kinds - 1 + j) / static_cast<double>(j);
    return r;
}

/// Calls f(sub) for every sub-multiset of `bound` with exactly `size` elements; stops when f returns true.
bool for_each_submultiset(std::span<const std::int64_t> bound, std::int64_t size,
                          const std::function<bool(const std::vector<std::int64_t>&)>& f) {
    std::vector<std::int64_t> sub(bound.size(), 0);
    std::function<bool(std::size_t, std::int64_t)> rec = [&](std::size_t k, std::int64_t left) -> bool {
        if (k + 1 == bound.size()) {
            if (left > bound[k]) return false;
            sub[k] = left;
            const bool stop = f(sub);
            sub[k] = 0;
            return stop;
        }
        for (std::int64_t take = std::min(left, bound[k]); take >= 0; --take) {
            sub[k] = take;
            if (rec(k + 1, left - take)) return true;
        }
        sub[k] = 0;
        return false;
    };
    return rec(0, size);
}

}  // namespace

GroupStabilityResult check_group_stability(const VotingRule& rule, const Profile& profile, std::int64_t rho,
                                           std::int64_t brute_force_limit) {
    GroupStabilityResult result;
    const int m = profile.m();
    const auto n = profile.n();
    const auto counts = profile.counts();
    result.threshold = 2.0 * static_cast<double>(rho) / static_cast<double>(n);
    result.min_distance = std::numeric_limits<double>::infinity();
    if (rho <= 0) {
        result.status = Stability::stable;
        result.method = "trivial";
        return result;
    }

    const auto planes = hyperplanes_of(rule, m);
    if (planes.exposed) {
        bool certified = true;
        for (const auto& p : planes.planes) {
            const auto r = p.scaled_residual(counts, n);
            // Exact form of: |r| / (n max|a|) > 2 rho / n.
            if ((r < 0 ? -r : r) <= 2 * rho * p.max_abs_coeff()) certified = false;
        }
        result.min_distance = min_distance_to_planes(counts, n, planes.planes);
        if (certified) {
            result.status = Stability::stable;
            result.method = "certificate";
            return result;
        }
    }

    const auto kinds = static_cast<int>(counts.size());
    const auto max_size = std::min(rho, n);
    double space = 0.0;
    for (std::int64_t s = 1; s <= max_size; ++s) space += multiset_count(kinds, s) * multiset_count(kinds, s);
    if (space > static_cast<double>(brute_force_limit)) {
        result.status = Stability::undecided;
        result.method = "none";
        return result;
    }

    const auto before = rule.evaluate_counts(m, counts);
    const std::vector<std::int64_t> unlimited(counts.size(), std::numeric_limits<std::int64_t>::max());
    std::vector<std::int64_t> work(counts.size());
    for (std::int64_t s = 1; s <= max_size && !result.witness; ++s) {
        for_each_submultiset(counts, s, [&](const std::vector<std::int64_t>& removed) {
            return for_each_submultiset(unlimited, s, [&](const std::vector<std::int64_t>& added) {
                for (std::size_t k = 0; k < work.size(); ++k) work[k] = counts[k] - removed[k] + added[k];
                if (rule.evaluate_counts(m, work) == before) return false;
                // Materialize voter indices for the removed rankings, in profile order.
                GroupDeviationWitness w;
                auto need = removed;
                const auto idx = profile.indices();
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    auto& left = need[static_cast<std::size_t>(idx[i])];
                    if (left > 0) {
                        --left;
                        w.coalition.push_back(i);
                    }
                }
                const auto& index = RankingIndex::get(m);
                for (std::size_t k = 0; k < added.size(); ++k) {
                    for (std::int64_t j = 0; j < added[k]; ++j) w.replacement.push_back(index.ranking(static_cast<int>(k)));
                }
                result.witness = std::move(w);
                return true;
            });
        });
    }
    result.status = result.witness ? Stability::unstable : Stability::stable;
    result.method = "brute-force";
    return result;
}

// ---------------------------------------------------------------------------
// Counterexample library

namespace {

Profile make_profile(std::initializer_list<std::pair<std::int64_t, std::string_view>> rows) {
    std::vector<Ranking> rankings;
    for (const auto& [count, letters] : rows) {
        std::vector<Candidate> perm;
        for (char ch : letters) perm.push_back(ch - 'a');
        const Ranking r(std::move(perm));
        for (std::int64_t i = 0; i < count; ++i) rankings.push_back(r);
    }
    return Profile(std::move(rankings));
}

std::vector<std::int64_t> margin_full_form(int m, Candidate x, Candidate y) {
    const auto& index = RankingIndex::get(m);
    std::vector<std::int64_t> f(static_cast<std::size_t>(index.size()));
    for (int k = 0; k < index.size(); ++k) f[static_cast<std::size_t>(k)] = index.prefers(k, x, y) ? 1 : -1;
    return f;
}

std::vector<std::int64_t> score_gap_form(const PositionalScoringRule& rule, int m, Candidate x, Candidate y) {
    const auto& index = RankingIndex::get(m);
    const auto w = rule.integer_weights(m);
    std::vector<std::int64_t> f(static_cast<std::size_t>(index.size()));
    for (int k = 0; k < index.size(); ++k) {
        f[static_cast<std::size_t>(k)] =
            w[static_cast<std::size_t>(index.position(k, x))] - w[static_cast<std::size_t>(index.position(k, y))];
    }
    return f;
}

/// 2 [top = x] - 1: positive iff x holds a strict majority of first places.
std::vector<std::int64_t> majority_form(int m, Candidate x) {
    const auto& index = RankingIndex::get(m);
    std::vector<std::int64_t> f(static_cast<std::size_t>(index.size()));
    for (int k = 0; k < index.size(); ++k) f[static_cast<std::size_t>(k)] = index.top(k) == x ? 1 : -1;
    return f;
}

/// Largest radius keeping every form's sign; each form must be strictly nonzero at the profile.
Rational strict_radius(const Profile& profile, const std::vector<std::vector<std::int64_t>>& forms) {
    const auto h = histogram_of(profile);
    std::optional<Rational> best;
    for (const auto& f : forms) {
        const auto r = simplex_radius(h, Hyperplane::from_full_form(f, 0));
        if (r.numerator() == 0) throw InvariantViolation("counterexample lies on one of its own boundaries");
        if (!best || r < *best) best = r;
    }
    return *best;
}

/// Forms keeping `w` the unique PSR winner.
void add_psr_winner_forms(std::vector<std::vector<std::int64_t>>& forms, const PositionalScoringRule& rule, int m, Candidate w) {
    for (Candidate y = 0; y < m; ++y) {
        if (y != w) forms.push_back(score_gap_form(rule, m, w, y));
    }
}

void add_condorcet_forms(std::vector<std::vector<std::int64_t>>& forms, int m, Candidate c) {
    for (Candidate y = 0; y < m; ++y) {
        if (y != c) forms.push_back(margin_full_form(m, c, y));
    }
}

std::string rational_text(const Rational& r) {
    auto s = std::to_string(r.numerator());
    if (r.denominator() != 1) s += "/" + std::to_string(r.denominator());
    return s;
}

const PositionalScoringRule& as_psr(const VotingRule& rule) {
    const auto* psr = dynamic_cast<const PositionalScoringRule*>(&rule);
    if (!psr) throw ConfigurationError("this counterexample is defined for positional scoring rules only");
    return *psr;
}

}  // namespace

Profile appendix_d_profile() { return make_profile({{36, "abc"}, {80, "acb"}, {115, "bac"}, {69, "cba"}}); }

StrictCounterexample counterexample_library(std::string_view name, std::optional<Rational> alpha, std::string_view rule_spec) {
    const int m = 3;
    StrictCounterexample cx{std::string(name), "", Axiom::condorcet, Profile({Ranking::identity(m)}), std::nullopt, Rational(0),
                            default_candidate_names(m)};
    std::vector<std::vector<std::int64_t>> forms;

    if (name == "psr-condorcet" || name == "psr-majority") {
        const Rational a = alpha.value_or(Rational(1, 2));
        if (a <= Rational(0) || a > Rational(1)) throw ArgumentError("alpha must lie in (0, 1]");
        // Fractions 1/2 -+ alpha / (4 (2 - alpha)), integerized at their common denominator.
        const Rational x = a / (Rational(4) * (Rational(2) - a));
        const Rational lo = Rational(1, 2) - x;
        const Rational hi = Rational(1, 2) + x;
        const auto n = std::lcm(lo.denominator(), hi.denominator());
        cx.profile = make_profile({{(lo * n).numerator(), "acb"}, {(hi * n).numerator(), "bac"}});
        cx.rule = "psr:[1," + rational_text(a) + ",0]";
        const auto rule = make_rule(cx.rule);
        add_psr_winner_forms(forms, as_psr(*rule), m, 0);
        if (name == "psr-condorcet") {
            cx.axiom = Axiom::condorcet;
            add_condorcet_forms(forms, m, 1);
        } else {
            cx.axiom = Axiom::majority;
            forms.push_back(majority_form(m, 1));
        }
    } else if (name == "psr-iia") {
        const Rational a = alpha.value_or(Rational(1, 2));
        // At alpha = 1 the first profile ties a1 with a3, so the open interval is required.
        if (a <= Rational(0) || a >= Rational(1)) throw ArgumentError("alpha must lie in (0, 1)");
        cx.rule = "psr:[1," + rational_text(a) + ",0]";
        cx.axiom = Axiom::iia;
        cx.profile = make_profile({{2, "acb"}, {1, "bca"}, {1, "bac"}});
        const auto partner = make_profile({{2, "abc"}, {1, "bca"}, {1, "bac"}});
        cx.witness = IIAWitness{partner, 0, 1};
        const auto rule = make_rule(cx.rule);
        add_psr_winner_forms(forms, as_psr(*rule), m, 0);
        std::vector<std::vector<std::int64_t>> partner_forms;
        add_psr_winner_forms(partner_forms, as_psr(*rule), m, 1);
        cx.radius = std::min(strict_radius(cx.profile, forms), strict_radius(partner, partner_forms));
        return cx;
    } else if (name == "plurality-condorcet") {
        if (alpha) throw ArgumentError("plurality-condorcet takes no alpha");
        cx.rule = "plurality";
        cx.profile = make_profile({{4, "abc"}, {3, "bca"}, {2, "cba"}});
        add_psr_winner_forms(forms, PositionalScoringRule::plurality(), m, 0);
        add_condorcet_forms(forms, m, 1);
    } else if (name == "appendixD") {
        if (alpha) throw ArgumentError("appendixD takes no alpha");
        cx.rule = rule_spec.empty() ? "plurality" : std::string(rule_spec);
        cx.profile = appendix_d_profile();
        const auto rule = make_rule(cx.rule);
        const auto& psr = as_psr(*rule);
        if (psr.evaluate(cx.profile) != WinnerSet::of({0})) {
            throw ArgumentError("appendixD is a counterexample only for rules electing a; `" + cx.rule + "` does not");
        }
        add_psr_winner_forms(forms, psr, m, 0);
        add_condorcet_forms(forms, m, 1);
    } else if (name == "condorcet-cycle" || name == "copeland-resolvability") {
        if (alpha) throw ArgumentError(std::string(name) + " takes no alpha");
        cx.profile = make_profile({{1, "abc"}, {1, "bca"}, {1, "cab"}});
        if (name == "condorcet-cycle") {
            cx.axiom = Axiom::no_condorcet_cycle;
        } else {
            cx.rule = "copeland";
            cx.axiom = Axiom::resolvability;
        }
        for (Candidate x = 0; x < m; ++x) {
            for (Candidate y = x + 1; y < m; ++y) forms.push_back(margin_full_form(m, x, y));
        }
    } else {
        std::string valid;
        for (const auto& n : counterexample_names()) valid += (valid.empty() ? "" : ", ") + n;
        throw ConfigurationError("unknown counterexample `" + std::string(name) + "`; valid: " + valid);
    }
    cx.radius = strict_radius(cx.profile, forms);
    return cx;
}

std::vector<std::string> counterexample_names() {
    return {"psr-condorcet", "psr-majority", "psr-iia", "plurality-condorcet", "appendixD", "condorcet-cycle",
            "copeland-resolvability"};
}

bool counterexample_violated(const StrictCounterexample& cx, const Profile& profile, const Profile* partner) {
    const auto rule = make_rule(cx.rule.empty() ? "plurality" : cx.rule);
    if (cx.axiom == Axiom::iia) {
        const auto& template_witness = std::get<IIAWitness>(*cx.witness);
        const Profile& other = partner ? *partner : template_witness.other;
        return check_witness(Axiom::iia, *rule, profile, IIAWitness{other, template_witness.a, template_witness.b});
    }
    return !check_absolute(cx.axiom, *rule, profile);
}

CertificationResult certify(const StrictCounterexample& cx, std::int64_t samples, std::uint64_t seed, std::int64_t z) {
    if (samples < 1) throw ArgumentError("certification needs at least one sample");
    if (z < 1) throw ArgumentError("replication factor must be >= 1");
    const int m = cx.profile.m();
    const auto& index = RankingIndex::get(m);
    // Grow z until at least one voter can move while staying strictly inside the ball.
    std::int64_t max_moves = 0;
    while (true) {
        const auto zn = z * cx.profile.n();
        // 2k / zn < r  <=>  k < r zn / 2.
        const Rational bound = cx.radius * Rational(zn, 2);
        max_moves = bound.numerator() / bound.denominator();
        if (Rational(max_moves) == bound) --max_moves;
        if (max_moves >= 1) break;
        z *= 2;
    }
    const auto base = replicate(cx.profile, z).indices();
    std::optional<std::vector<int>> partner_base;
    if (cx.axiom == Axiom::iia) partner_base = replicate(std::get<IIAWitness>(*cx.witness).other, z).indices();
    const auto zn = static_cast<std::int64_t>(base.size());
    const auto reference = Histogram(m, Profile::from_indices(m, base).counts());

    CertificationResult result;
    result.z = z;
    std::vector<int> moved(base.size());
    std::vector<int> partner_moved;
    std::vector<std::size_t> voters(base.size());
    for (std::int64_t s = 0; s < samples; ++s) {
        RandomStream rng(seed, static_cast<std::uint64_t>(s), 0);
        const auto k = 1 + static_cast<std::int64_t>(rng.next_u64() % static_cast<std::uint64_t>(max_moves));
        std::iota(voters.begin(), voters.end(), std::size_t{0});
        moved = base;
        if (partner_base) partner_moved = *partner_base;
        // Partial Fisher-Yates picks k distinct voters.
        for (std::int64_t j = 0; j < k; ++j) {
            const auto pick = static_cast<std::size_t>(j) + static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(zn - j));
            std::swap(voters[static_cast<std::size_t>(j)], voters[pick]);
            const auto v = voters[static_cast<std::size_t>(j)];
            const int to = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(index.size()));
            moved[v] = to;
            if (partner_base) partner_moved[v] = to;
        }
        const auto perturbed = Profile::from_indices(m, moved);
        const auto d = l1_distance(reference, histogram_of(perturbed));
        result.max_distance = std::max(result.max_distance, boost::rational_cast<double>(d));
        bool violated = false;
        if (partner_base) {
            const auto partner = Profile::from_indices(m, partner_moved);
            violated = counterexample_violated(cx, perturbed, &partner);
        } else {
            violated = counterexample_violated(cx, perturbed);
        }
        ++result.samples;
        if (violated) ++result.violating;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Brute-force audit

std::vector<std::vector<std::int64_t>> enumerate_count_vectors(int m, int n) {
    const auto width = static_cast<std::size_t>(factorial(m));
    std::vector<std::vector<std::int64_t>> out;
    std::vector<std::int64_t> cur(width, 0);
    std::function<void(std::size_t, std::int64_t)> rec = [&](std::size_t k, std::int64_t left) {
        if (k + 1 == width) {
            cur[k] = left;
            out.push_back(cur);
            return;
        }
        for (std::int64_t take = left; take >= 0; --take) {
            cur[k] = take;
            rec(k + 1, left - take);
        }
    };
    rec(0, n);
    return out;
}

namespace {

std::int64_t orderings(std::span<const std::int64_t> counts) {
    std::int64_t n = 0;
    std::int64_t r = 1;
    for (auto c : counts) {
        for (std::int64_t j = 1; j <= c; ++j) {
            ++n;
            r = r * n / j;
        }
    }
    return r;
}

/// Exhaustive deviation search for a group axiom on one small profile.
std::optional<Witness> find_group_violation(const VotingRule& rule, const AxiomSpec& spec, const Profile& profile) {
    const auto n = profile.n();
    const auto rho = std::min((*spec.rho)(n), n);
    const auto& index = RankingIndex::get(profile.m());
    const auto before = rule.evaluate(profile);
    std::optional<Witness> found;

    std::vector<std::size_t> coalition;
    std::function<void(std::size_t)> choose = [&](std::size_t start) {
        if (found) return;
        if (!coalition.empty()) {
            if (spec.axiom == Axiom::group_participation) {
                if (static_cast<std::int64_t>(coalition.size()) < n) {
                    ParticipationWitness w{coalition};
                    if (check_witness(spec.axiom, rule, profile, w, spec.rho)) found = w;
                }
            } else {
                std::vector<int> pick(coalition.size(), 0);
                while (!found) {
                    std::vector<Ranking> repl;
                    for (int p : pick) repl.push_back(index.ranking(p));
                    if (spec.axiom == Axiom::group_monotonicity) {
                        for (Candidate c = 0; c < profile.m() && !found; ++c) {
                            bool ok = before.contains(c);
                            for (std::size_t j = 0; j < coalition.size() && ok; ++j) {
                                ok = raises_only(profile[coalition[j]], repl[j], c);
                            }
                            if (!ok) continue;
                            MonotonicityWitness w{c, coalition, repl};
                            if (check_witness(spec.axiom, rule, profile, w, spec.rho)) found = w;
                        }
                    } else {
                        GroupDeviationWitness w{coalition, repl};
                        if (check_witness(spec.axiom, rule, profile, w, spec.rho)) found = w;
                    }
                    std::size_t j = 0;
                    while (j < pick.size() && ++pick[j] == index.size()) pick[j++] = 0;
                    if (j == pick.size()) break;
                }
            }
        }
        if (static_cast<std::int64_t>(coalition.size()) == rho) return;
        for (auto i = start; i < static_cast<std::size_t>(n) && !found; ++i) {
            coalition.push_back(i);
            choose(i + 1);
            coalition.pop_back();
        }
    };
    choose(0);
    return found;
}

}  // namespace

AuditResult brute_force_audit(const VotingRule& rule, const AxiomSpec& axiom, int n_max, int m, std::size_t max_examples) {
    if (m != 3) throw ConfigurationError("brute-force audit supports m = 3 only");
    if (n_max < 1 || n_max > 5) throw ConfigurationError("brute-force audit supports 1 <= n_max <= 5");
    if (is_group_axiom(axiom.axiom) && !axiom.rho) throw ConfigurationError("group axioms need a coalition bound");

    AuditResult result;
    for (int n = 1; n <= n_max; ++n) {
        for (const auto& counts : enumerate_count_vectors(m, n)) {
            const auto weight = orderings(counts);
            result.cases += weight;
            ++result.distinct_profiles;
            const auto profile = Profile::from_counts(m, counts);
            bool violated = false;
            std::optional<Witness> witness;
            if (is_absolute(axiom.axiom)) {
                violated = !check_absolute(axiom.axiom, rule, m, counts);
            } else if (axiom.axiom == Axiom::consistency) {
                if (auto w = find_consistency_violation(rule, profile)) witness = std::move(*w);
            } else if (axiom.axiom == Axiom::iia) {
                if (auto w = find_iia_violation(rule, profile)) witness = std::move(*w);
            } else {
                witness = find_group_violation(rule, axiom, profile);
            }
            violated = violated || witness.has_value();
            if (!violated) continue;
            result.violations += weight;
            ++result.distinct_violations;
            if (result.examples.size() < max_examples) result.examples.push_back({profile, std::move(witness)});
        }
    }
    return result;
}

}  // namespace smoothedvotes
