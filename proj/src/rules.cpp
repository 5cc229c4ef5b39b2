#include "smoothedvotes/rules.hpp"

#include "smoothedvotes/errors.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace smoothedvotes {

WinnerSet WinnerSet::of(std::initializer_list<Candidate> members) {
    WinnerSet w;
    for (Candidate c : members) w.insert(c);
    return w;
}

int WinnerSet::size() const noexcept { return std::popcount(bits_); }

std::optional<Candidate> WinnerSet::single() const {
    if (size() != 1) return std::nullopt;
    return std::countr_zero(bits_);
}

std::vector<Candidate> WinnerSet::members() const {
    std::vector<Candidate> out;
    for (Candidate c = 0; c < 32; ++c) {
        if (contains(c)) out.push_back(c);
    }
    return out;
}

std::string WinnerSet::to_string(const std::vector<std::string>& names) const {
    std::string s = "{";
    bool first = true;
    for (Candidate c : members()) {
        if (!first) s += ',';
        first = false;
        s += c < static_cast<Candidate>(names.size()) ? names[static_cast<std::size_t>(c)]
                                                      : std::string(1, static_cast<char>('a' + c));
    }
    return s + "}";
}

PairwiseMatrix pairwise_margins(int m, std::span<const std::int64_t> counts) {
    const auto& index = RankingIndex::get(m);
    if (static_cast<int>(counts.size()) != index.size()) throw InvariantViolation("count vector length must be m!");
    std::vector<std::int64_t> margins(static_cast<std::size_t>(m * m), 0);
    for (int k = 0; k < index.size(); ++k) {
        const auto c = counts[static_cast<std::size_t>(k)];
        if (c == 0) continue;
        for (int i = 0; i < m; ++i) {
            for (int j = i + 1; j < m; ++j) {
                const Candidate hi = index.at(k, i);
                const Candidate lo = index.at(k, j);
                margins[static_cast<std::size_t>(hi * m + lo)] += c;
                margins[static_cast<std::size_t>(lo * m + hi)] -= c;
            }
        }
    }
    return PairwiseMatrix(m, std::move(margins));
}

PairwiseMatrix pairwise_margins(const Profile& profile) { return pairwise_margins(profile.m(), profile.counts()); }

// ---------------------------------------------------------------------------
// Hyperplanes

Hyperplane::Hyperplane(const std::vector<Rational>& coeffs, Rational constant) : constant_(0) {
    std::int64_t scale = constant.denominator();
    for (const auto& c : coeffs) scale = std::lcm(scale, c.denominator());
    coeffs_.reserve(coeffs.size());
    for (const auto& c : coeffs) coeffs_.push_back(c.numerator() * (scale / c.denominator()));
    constant_ = constant.numerator() * (scale / constant.denominator());
    normalize();
}

Hyperplane::Hyperplane(std::vector<std::int64_t> coeffs, std::int64_t constant)
    : coeffs_(std::move(coeffs)), constant_(constant) {
    normalize();
}

void Hyperplane::normalize() {
    std::int64_t g = 0;
    for (auto c : coeffs_) g = std::gcd(g, c);
    if (g == 0) throw InvariantViolation("hyperplane with an all-zero coefficient vector");
    g = std::gcd(g, constant_);
    // Sign convention: first nonzero coefficient positive, so equal planes compare equal.
    const auto lead = *std::find_if(coeffs_.begin(), coeffs_.end(), [](auto c) { return c != 0; });
    if (lead < 0) g = -g;
    for (auto& c : coeffs_) c /= g;
    constant_ /= g;
    max_abs_ = 0;
    for (auto c : coeffs_) max_abs_ = std::max(max_abs_, c < 0 ? -c : c);
}

Hyperplane Hyperplane::from_full_form(std::span<const std::int64_t> full, std::int64_t constant) {
    if (full.size() < 2) throw InvariantViolation("full-form hyperplane needs m! coefficients");
    const auto last = full.back();
    std::vector<std::int64_t> a(full.size() - 1);
    for (std::size_t k = 0; k + 1 < full.size(); ++k) a[k] = full[k] - last;
    return Hyperplane(std::move(a), constant - last);
}

std::int64_t Hyperplane::scaled_residual(std::span<const std::int64_t> full_counts, std::int64_t n) const {
    if (full_counts.size() != coeffs_.size() + 1) throw InvariantViolation("hyperplane and histogram differ in m");
    std::int64_t s = -constant_ * n;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) s += coeffs_[k] * full_counts[k];
    return s;
}

int Hyperplane::side(const Histogram& h) const {
    const auto r = scaled_residual(h.counts(), h.n());
    return (r > 0) - (r < 0);
}

Rational l1_distance_to_hyperplane(const Histogram& h, const Hyperplane& plane) {
    const auto r = plane.scaled_residual(h.counts(), h.n());
    return Rational(r < 0 ? -r : r, h.n() * plane.max_abs_coeff());
}

double l1_distance_to_hyperplane(std::span<const double> explicit_point, const Hyperplane& plane) {
    const auto& a = plane.coeffs();
    if (explicit_point.size() != a.size()) throw InvariantViolation("hyperplane and point differ in dimension");
    double s = -static_cast<double>(plane.constant());
    for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a[k]) * explicit_point[k];
    return std::abs(s) / static_cast<double>(plane.max_abs_coeff());
}

double l1_distance_to_hyperplane(std::span<const std::int64_t> full_counts, std::int64_t n, const Hyperplane& plane) {
    const auto r = plane.scaled_residual(full_counts, n);
    return static_cast<double>(r < 0 ? -r : r) / (static_cast<double>(n) * static_cast<double>(plane.max_abs_coeff()));
}

Rational simplex_radius(const Histogram& h, const Hyperplane& plane) {
    // In full coordinates the form is a.h - b with a zero coefficient on the
    // implicit ranking. Moving total L1 mass d shifts it by at most (d/2)*range.
    std::int64_t hi = 0;
    std::int64_t lo = 0;
    for (auto c : plane.coeffs()) {
        hi = std::max(hi, c);
        lo = std::min(lo, c);
    }
    const auto r = plane.scaled_residual(h.counts(), h.n());
    return Rational(2 * (r < 0 ? -r : r), h.n() * (hi - lo));
}

double min_distance_to_planes(std::span<const std::int64_t> full_counts, std::int64_t n,
                              std::span<const Hyperplane> planes) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : planes) best = std::min(best, l1_distance_to_hyperplane(full_counts, n, p));
    return best;
}

namespace {

void dedupe(std::vector<Hyperplane>& planes) {
    std::vector<Hyperplane> unique;
    for (auto& p : planes) {
        if (std::find(unique.begin(), unique.end(), p) == unique.end()) unique.push_back(std::move(p));
    }
    planes = std::move(unique);
}

/// Full-form coefficients of margin(x, y) / n: +1 where x is above y, -1 otherwise.
std::vector<std::int64_t> margin_form(const RankingIndex& index, Candidate x, Candidate y) {
    std::vector<std::int64_t> f(static_cast<std::size_t>(index.size()));
    for (int k = 0; k < index.size(); ++k) f[static_cast<std::size_t>(k)] = index.prefers(k, x, y) ? 1 : -1;
    return f;
}

std::vector<Hyperplane> margin_zero_planes(int m) {
    const auto& index = RankingIndex::get(m);
    std::vector<Hyperplane> planes;
    for (Candidate x = 0; x < m; ++x) {
        for (Candidate y = x + 1; y < m; ++y) planes.push_back(Hyperplane::from_full_form(margin_form(index, x, y), 0));
    }
    return planes;
}

template <typename Score>
WinnerSet argmax(int m, Score score) {
    WinnerSet w;
    auto best = score(0);
    w.insert(0);
    for (Candidate c = 1; c < m; ++c) {
        const auto s = score(c);
        if (s > best) {
            best = s;
            w = WinnerSet();
            w.insert(c);
        } else if (s == best) {
            w.insert(c);
        }
    }
    return w;
}

void check_counts(int m, std::span<const std::int64_t> counts) {
    if (static_cast<std::int64_t>(counts.size()) != factorial(m)) throw InvariantViolation("count vector length must be m!");
}

}  // namespace

// ---------------------------------------------------------------------------
// Positional scoring rules

PositionalScoringRule::PositionalScoringRule(std::vector<Rational> weights)
    : family_(Family::fixed), weights_(std::move(weights)) {
    if (weights_.size() < static_cast<std::size_t>(kMinCandidates)) throw ArgumentError("scoring vector needs at least 3 entries");
    for (std::size_t j = 1; j < weights_.size(); ++j) {
        if (weights_[j] > weights_[j - 1]) throw ArgumentError("scoring vector must be nonincreasing");
    }
    if (weights_.front() == weights_.back()) throw ArgumentError("scoring vector must not be constant");
}

std::string PositionalScoringRule::name() const {
    switch (family_) {
        case Family::plurality: return "plurality";
        case Family::borda: return "borda";
        case Family::veto: return "veto";
        case Family::fixed: break;
    }
    std::string s = "psr:[";
    for (std::size_t j = 0; j < weights_.size(); ++j) {
        if (j) s += ',';
        s += std::to_string(weights_[j].numerator());
        if (weights_[j].denominator() != 1) s += "/" + std::to_string(weights_[j].denominator());
    }
    return s + "]";
}

std::vector<std::int64_t> PositionalScoringRule::integer_weights(int m) const {
    std::vector<std::int64_t> w(static_cast<std::size_t>(m), 0);
    switch (family_) {
        case Family::plurality:
            w[0] = 1;
            return w;
        case Family::borda:
            for (int j = 0; j < m; ++j) w[static_cast<std::size_t>(j)] = m - 1 - j;
            return w;
        case Family::veto:
            std::fill(w.begin(), w.end() - 1, 1);
            return w;
        case Family::fixed: break;
    }
    if (static_cast<int>(weights_.size()) != m) {
        throw ConfigurationError("scoring vector has " + std::to_string(weights_.size()) + " entries but the profile has " +
                                 std::to_string(m) + " candidates");
    }
    std::int64_t scale = 1;
    for (const auto& x : weights_) scale = std::lcm(scale, x.denominator());
    for (int j = 0; j < m; ++j) {
        const auto& x = weights_[static_cast<std::size_t>(j)];
        w[static_cast<std::size_t>(j)] = x.numerator() * (scale / x.denominator());
    }
    return w;
}

std::vector<std::int64_t> PositionalScoringRule::scores(int m, std::span<const std::int64_t> counts) const {
    check_counts(m, counts);
    const auto& index = RankingIndex::get(m);
    const auto w = integer_weights(m);
    std::vector<std::int64_t> s(static_cast<std::size_t>(m), 0);
    for (int k = 0; k < index.size(); ++k) {
        const auto c = counts[static_cast<std::size_t>(k)];
        if (c == 0) continue;
        for (int j = 0; j < m; ++j) s[static_cast<std::size_t>(index.at(k, j))] += c * w[static_cast<std::size_t>(j)];
    }
    return s;
}

WinnerSet PositionalScoringRule::evaluate_counts(int m, std::span<const std::int64_t> counts) const {
    const auto s = scores(m, counts);
    return argmax(m, [&](Candidate c) { return s[static_cast<std::size_t>(c)]; });
}

std::optional<std::vector<Hyperplane>> PositionalScoringRule::hyperplanes(int m) const {
    const auto& index = RankingIndex::get(m);
    const auto w = integer_weights(m);
    std::vector<Hyperplane> planes;
    for (Candidate x = 0; x < m; ++x) {
        for (Candidate y = x + 1; y < m; ++y) {
            std::vector<std::int64_t> f(static_cast<std::size_t>(index.size()));
            for (int k = 0; k < index.size(); ++k) {
                f[static_cast<std::size_t>(k)] =
                    w[static_cast<std::size_t>(index.position(k, x))] - w[static_cast<std::size_t>(index.position(k, y))];
            }
            planes.push_back(Hyperplane::from_full_form(f, 0));
        }
    }
    return planes;
}

WinnerSet psr_evaluate(const std::vector<Rational>& weights, const Profile& profile) {
    return PositionalScoringRule(weights).evaluate(profile);
}

// ---------------------------------------------------------------------------
// Pairwise rules

WinnerSet MinimaxRule::evaluate_counts(int m, std::span<const std::int64_t> counts) const {
    check_counts(m, counts);
    const auto pm = pairwise_margins(m, counts);
    // Negated worst defeat, so the argmax helper picks the smallest.
    return argmax(m, [&](Candidate x) {
        std::int64_t worst = std::numeric_limits<std::int64_t>::min();
        for (Candidate y = 0; y < m; ++y) {
            if (y != x) worst = std::max(worst, pm.margin(y, x));
        }
        return -worst;
    });
}

std::optional<std::vector<Hyperplane>> MinimaxRule::hyperplanes(int m) const {
    const auto& index = RankingIndex::get(m);
    auto planes = margin_zero_planes(m);
    std::vector<std::vector<std::int64_t>> forms;
    for (Candidate x = 0; x < m; ++x) {
        for (Candidate y = x + 1; y < m; ++y) forms.push_back(margin_form(index, x, y));
    }
    for (std::size_t p = 0; p < forms.size(); ++p) {
        for (std::size_t q = p + 1; q < forms.size(); ++q) {
            std::vector<std::int64_t> diff(forms[p].size());
            std::vector<std::int64_t> sum(forms[p].size());
            for (std::size_t k = 0; k < diff.size(); ++k) {
                diff[k] = forms[p][k] - forms[q][k];
                sum[k] = forms[p][k] + forms[q][k];
            }
            planes.push_back(Hyperplane::from_full_form(diff, 0));
            planes.push_back(Hyperplane::from_full_form(sum, 0));
        }
    }
    dedupe(planes);
    return planes;
}

WinnerSet CopelandRule::evaluate_counts(int m, std::span<const std::int64_t> counts) const {
    check_counts(m, counts);
    const auto pm = pairwise_margins(m, counts);
    return argmax(m, [&](Candidate x) {
        int score = 0;
        for (Candidate y = 0; y < m; ++y) {
            if (y == x) continue;
            const auto d = pm.margin(x, y);
            score += d > 0 ? 2 : (d == 0 ? 1 : 0);
        }
        return score;
    });
}

std::optional<std::vector<Hyperplane>> CopelandRule::hyperplanes(int m) const { return margin_zero_planes(m); }

WinnerSet KemenyRule::evaluate_counts(int m, std::span<const std::int64_t> counts) const {
    check_counts(m, counts);
    const auto& index = RankingIndex::get(m);
    std::vector<int> support;
    for (int k = 0; k < index.size(); ++k) {
        if (counts[static_cast<std::size_t>(k)] != 0) support.push_back(k);
    }
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    WinnerSet w;
    for (int r = 0; r < index.size(); ++r) {
        std::int64_t cost = 0;
        for (int k : support) cost += counts[static_cast<std::size_t>(k)] * index.kendall_tau(r, k);
        if (cost < best) {
            best = cost;
            w = WinnerSet();
        }
        if (cost == best) w.insert(index.top(r));
    }
    return w;
}

std::optional<std::vector<Hyperplane>> KemenyRule::hyperplanes(int m) const {
    if (m > kMaxHyperplaneM) return std::nullopt;
    const auto& index = RankingIndex::get(m);
    std::vector<Hyperplane> planes;
    for (int r = 0; r < index.size(); ++r) {
        for (int s = r + 1; s < index.size(); ++s) {
            std::vector<std::int64_t> f(static_cast<std::size_t>(index.size()));
            for (int k = 0; k < index.size(); ++k) {
                f[static_cast<std::size_t>(k)] = index.kendall_tau(r, k) - index.kendall_tau(s, k);
            }
            planes.push_back(Hyperplane::from_full_form(f, 0));
        }
    }
    dedupe(planes);
    return planes;
}

WinnerSet minimax_evaluate(const Profile& profile) { return MinimaxRule().evaluate(profile); }
WinnerSet copeland_evaluate(const Profile& profile) { return CopelandRule().evaluate(profile); }
WinnerSet kemeny_evaluate(const Profile& profile) { return KemenyRule().evaluate(profile); }

HyperplaneSet hyperplanes_of(const VotingRule& rule, int m) {
    auto planes = rule.hyperplanes(m);
    if (!planes) return {};
    return {true, std::move(*planes)};
}

// ---------------------------------------------------------------------------
// Registry

Rational parse_rational(std::string_view text) {
    const auto bad = [&] { return ArgumentError("not a rational number: `" + std::string(text) + "`"); };
    if (text.empty()) throw bad();
    bool negative = false;
    std::string_view t = text;
    if (t.front() == '-') {
        negative = true;
        t.remove_prefix(1);
    }
    const auto read_int = [&](std::string_view s) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) throw bad();
        return v;
    };
    Rational value;
    if (const auto slash = t.find('/'); slash != std::string_view::npos) {
        const auto den = read_int(t.substr(slash + 1));
        if (den == 0) throw bad();
        value = Rational(read_int(t.substr(0, slash)), den);
    } else if (const auto dot = t.find('.'); dot != std::string_view::npos) {
        const auto frac = t.substr(dot + 1);
        if (frac.size() > 15) throw bad();
        std::int64_t den = 1;
        for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
        const auto whole = dot == 0 ? 0 : read_int(t.substr(0, dot));
        value = Rational(whole * den + (frac.empty() ? 0 : read_int(frac)), den);
    } else {
        value = Rational(read_int(t));
    }
    return negative ? -value : value;
}

namespace {

std::string_view trim_spaces(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    return s;
}

std::string registry_hint() {
    std::string s;
    for (const auto& n : rule_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

}  // namespace

std::unique_ptr<VotingRule> make_rule(std::string_view spec) {
    if (spec == "plurality") return std::make_unique<PositionalScoringRule>(PositionalScoringRule::plurality());
    if (spec == "borda") return std::make_unique<PositionalScoringRule>(PositionalScoringRule::borda());
    if (spec == "veto") return std::make_unique<PositionalScoringRule>(PositionalScoringRule::veto());
    if (spec == "minimax") return std::make_unique<MinimaxRule>();
    if (spec == "copeland") return std::make_unique<CopelandRule>();
    if (spec == "kemeny") return std::make_unique<KemenyRule>();
    if (spec.starts_with("psr:")) {
        auto body = trim_spaces(spec.substr(4));
        if (body.size() < 2 || body.front() != '[' || body.back() != ']') {
            throw ConfigurationError("scoring rule must look like psr:[1,0.5,0], got `" + std::string(spec) + "`");
        }
        body = body.substr(1, body.size() - 2);
        std::vector<Rational> weights;
        while (true) {
            const auto comma = body.find(',');
            const auto item = trim_spaces(body.substr(0, comma));
            try {
                weights.push_back(parse_rational(item));
            } catch (const ArgumentError& e) {
                throw ConfigurationError(std::string("bad scoring vector: ") + e.what());
            }
            if (comma == std::string_view::npos) break;
            body.remove_prefix(comma + 1);
        }
        try {
            return std::make_unique<PositionalScoringRule>(std::move(weights));
        } catch (const ArgumentError& e) {
            throw ConfigurationError(std::string("bad scoring vector: ") + e.what());
        }
    }
    throw ConfigurationError("unknown rule `" + std::string(spec) + "`; valid: " + registry_hint());
}

std::vector<std::string> rule_names() {
    return {"plurality", "borda", "veto", "psr:[w1,...,wm]", "minimax", "copeland", "kemeny"};
}

}  // namespace smoothedvotes
