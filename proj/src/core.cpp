#include "smoothedvotes/core.hpp"

#include "smoothedvotes/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

namespace smoothedvotes {

std::int64_t factorial(int m) {
    std::int64_t f = 1;
    for (int k = 2; k <= m; ++k) f *= k;
    return f;
}

namespace {

void check_supported_m(int m) {
    if (m < kMinCandidates || m > kMaxCandidates) {
        throw ConfigurationError("candidate count " + std::to_string(m) + " outside supported range [" +
                                 std::to_string(kMinCandidates) + ", " + std::to_string(kMaxCandidates) + "]");
    }
}

bool is_bijection(std::span<const int> p) {
    std::vector<bool> seen(p.size(), false);
    for (int v : p) {
        if (v < 0 || static_cast<std::size_t>(v) >= p.size() || seen[static_cast<std::size_t>(v)]) return false;
        seen[static_cast<std::size_t>(v)] = true;
    }
    return true;
}

}  // namespace

Ranking::Ranking(std::vector<Candidate> perm) : perm_(std::move(perm)) {
    if (perm_.size() < static_cast<std::size_t>(kMinCandidates)) {
        throw InvariantViolation("a ranking needs at least 3 candidates");
    }
    if (!is_bijection(perm_)) throw InvariantViolation("ranking is not a bijection on 0..m-1");
}

Ranking Ranking::identity(int m) {
    std::vector<Candidate> p(static_cast<std::size_t>(m));
    std::iota(p.begin(), p.end(), 0);
    return Ranking(std::move(p));
}

int Ranking::position_of(Candidate c) const {
    auto it = std::find(perm_.begin(), perm_.end(), c);
    if (it == perm_.end()) throw InvariantViolation("candidate " + std::to_string(c) + " not in ranking");
    return static_cast<int>(it - perm_.begin());
}

std::string Ranking::to_string() const {
    std::string s;
    for (Candidate c : perm_) s.push_back(static_cast<char>('a' + c));
    return s;
}

const RankingIndex& RankingIndex::get(int m) {
    check_supported_m(m);
    static std::array<std::unique_ptr<RankingIndex>, kMaxCandidates + 1> cache;
    static std::array<std::once_flag, kMaxCandidates + 1> flags;
    auto slot = static_cast<std::size_t>(m);
    std::call_once(flags[slot], [&] { cache[slot].reset(new RankingIndex(m)); });
    return *cache[slot];
}

RankingIndex::RankingIndex(int m) : m_(m) {
    std::vector<Candidate> p(static_cast<std::size_t>(m));
    std::iota(p.begin(), p.end(), 0);
    do {
        rankings_.emplace_back(p);
    } while (std::next_permutation(p.begin(), p.end()));

    const int count = size();
    ranking_pos_.resize(static_cast<std::size_t>(count * m));
    position_of_.resize(static_cast<std::size_t>(count * m));
    for (int k = 0; k < count; ++k) {
        for (int j = 0; j < m; ++j) {
            Candidate c = rankings_[static_cast<std::size_t>(k)].at(j);
            ranking_pos_[static_cast<std::size_t>(k * m + j)] = c;
            position_of_[static_cast<std::size_t>(k * m + c)] = j;
        }
    }

    kendall_tau_.resize(static_cast<std::size_t>(count * count));
    compose_.resize(static_cast<std::size_t>(count * count));
    std::vector<Candidate> composed(static_cast<std::size_t>(m));
    for (int a = 0; a < count; ++a) {
        for (int b = 0; b < count; ++b) {
            int d = 0;
            for (Candidate x = 0; x < m; ++x) {
                for (Candidate y = x + 1; y < m; ++y) {
                    if (prefers(a, x, y) != prefers(b, x, y)) ++d;
                }
            }
            kendall_tau_[static_cast<std::size_t>(a * count + b)] = d;
            for (int i = 0; i < m; ++i) composed[static_cast<std::size_t>(i)] = at(b, at(a, i));
            compose_[static_cast<std::size_t>(a * count + b)] = index_of(composed);
        }
    }
}

int RankingIndex::index_of(const Ranking& r) const {
    if (r.m() != m_) throw InvariantViolation("ranking has m=" + std::to_string(r.m()) + ", index has m=" + std::to_string(m_));
    return index_of(r.perm());
}

int RankingIndex::index_of(std::span<const Candidate> perm) const {
    // Lexicographic rank via the Lehmer code.
    int rank = 0;
    const int m = static_cast<int>(perm.size());
    for (int i = 0; i < m; ++i) {
        int smaller = 0;
        for (int j = i + 1; j < m; ++j) {
            if (perm[static_cast<std::size_t>(j)] < perm[static_cast<std::size_t>(i)]) ++smaller;
        }
        rank += smaller * static_cast<int>(factorial(m - 1 - i));
    }
    return rank;
}

std::vector<Ranking> enumerate_rankings(int m) { return RankingIndex::get(m).rankings(); }

Ranking compose(std::span<const int> sigma, const Ranking& pi) {
    if (static_cast<int>(sigma.size()) != pi.m()) {
        throw InvariantViolation("permutation length does not match ranking length");
    }
    if (!is_bijection(sigma)) throw InvariantViolation("sigma is not a bijection on 0..m-1");
    std::vector<Candidate> out(sigma.size());
    for (std::size_t i = 0; i < sigma.size(); ++i) out[i] = pi.at(sigma[i]);
    return Ranking(std::move(out));
}

int kendall_tau(const Ranking& a, const Ranking& b) {
    if (a.m() != b.m()) throw InvariantViolation("kendall_tau on rankings of different m");
    int d = 0;
    for (Candidate x = 0; x < a.m(); ++x) {
        for (Candidate y = x + 1; y < a.m(); ++y) {
            if (a.prefers(x, y) != b.prefers(x, y)) ++d;
        }
    }
    return d;
}

Profile::Profile(std::vector<Ranking> rankings) : m_(0), rankings_(std::move(rankings)) {
    if (rankings_.empty()) throw InvariantViolation("a profile needs at least one voter");
    m_ = rankings_.front().m();
    for (const auto& r : rankings_) {
        if (r.m() != m_) throw InvariantViolation("profile mixes rankings of different m");
    }
}

Profile Profile::from_counts(int m, std::span<const std::int64_t> counts) {
    const auto& index = RankingIndex::get(m);
    if (static_cast<int>(counts.size()) != index.size()) {
        throw InvariantViolation("count vector length must be m!");
    }
    std::vector<Ranking> rankings;
    for (int k = 0; k < index.size(); ++k) {
        if (counts[static_cast<std::size_t>(k)] < 0) throw InvariantViolation("negative ranking count");
        for (std::int64_t c = 0; c < counts[static_cast<std::size_t>(k)]; ++c) rankings.push_back(index.ranking(k));
    }
    return Profile(std::move(rankings));
}

Profile Profile::from_indices(int m, std::span<const int> ranking_indices) {
    const auto& index = RankingIndex::get(m);
    std::vector<Ranking> rankings;
    rankings.reserve(ranking_indices.size());
    for (int k : ranking_indices) rankings.push_back(index.ranking(k));
    return Profile(std::move(rankings));
}

std::vector<int> Profile::indices() const {
    const auto& index = RankingIndex::get(m_);
    std::vector<int> out;
    out.reserve(rankings_.size());
    for (const auto& r : rankings_) out.push_back(index.index_of(r));
    return out;
}

std::vector<std::int64_t> Profile::counts() const {
    const auto& index = RankingIndex::get(m_);
    std::vector<std::int64_t> c(static_cast<std::size_t>(index.size()), 0);
    for (const auto& r : rankings_) ++c[static_cast<std::size_t>(index.index_of(r))];
    return c;
}

Profile concatenate(const Profile& a, const Profile& b) {
    if (a.m() != b.m()) throw InvariantViolation("cannot concatenate profiles of different m");
    std::vector<Ranking> all = a.rankings();
    all.insert(all.end(), b.rankings().begin(), b.rankings().end());
    return Profile(std::move(all));
}

Profile replicate(const Profile& profile, std::int64_t z) {
    if (z < 1) throw ArgumentError("replication factor must be >= 1");
    std::vector<Ranking> all;
    all.reserve(static_cast<std::size_t>(profile.n() * z));
    for (std::int64_t k = 0; k < z; ++k) all.insert(all.end(), profile.rankings().begin(), profile.rankings().end());
    return Profile(std::move(all));
}

Histogram::Histogram(int m, std::vector<std::int64_t> counts) : m_(m), n_(0), counts_(std::move(counts)) {
    if (static_cast<std::int64_t>(counts_.size()) != factorial(m)) {
        throw InvariantViolation("histogram needs one count per ranking");
    }
    for (auto c : counts_) {
        if (c < 0) throw InvariantViolation("negative ranking count");
        n_ += c;
    }
    if (n_ == 0) throw InvariantViolation("histogram of an empty profile");
}

std::vector<Rational> Histogram::entries() const {
    std::vector<Rational> out;
    out.reserve(counts_.size() - 1);
    for (std::size_t k = 0; k + 1 < counts_.size(); ++k) out.emplace_back(counts_[k], n_);
    return out;
}

std::vector<double> Histogram::full_reals() const {
    std::vector<double> out;
    out.reserve(counts_.size());
    for (auto c : counts_) out.push_back(static_cast<double>(c) / static_cast<double>(n_));
    return out;
}

std::vector<double> Histogram::explicit_reals() const {
    auto out = full_reals();
    out.pop_back();
    return out;
}

bool Histogram::operator==(const Histogram& other) const {
    if (m_ != other.m_) return false;
    for (std::size_t k = 0; k < counts_.size(); ++k) {
        if (counts_[k] * other.n_ != other.counts_[k] * n_) return false;
    }
    return true;
}

Histogram histogram_of(const Profile& profile) { return Histogram(profile.m(), profile.counts()); }

Rational l1_distance(const Histogram& a, const Histogram& b) {
    if (a.m() != b.m()) throw InvariantViolation("l1_distance on histograms of different m");
    // Common denominator n_a * n_b keeps the sum in integers.
    std::int64_t numer = 0;
    for (std::size_t k = 0; k < a.counts().size(); ++k) {
        std::int64_t diff = a.counts()[k] * b.n() - b.counts()[k] * a.n();
        numer += diff < 0 ? -diff : diff;
    }
    return Rational(numer, a.n() * b.n());
}

double l1_distance(std::span<const double> full_a, std::span<const double> full_b) {
    if (full_a.size() != full_b.size()) throw InvariantViolation("l1_distance on vectors of different length");
    double d = 0.0;
    for (std::size_t k = 0; k < full_a.size(); ++k) d += std::abs(full_a[k] - full_b[k]);
    return d;
}

std::vector<double> complete_histogram(std::span<const double> explicit_entries) {
    std::vector<double> out(explicit_entries.begin(), explicit_entries.end());
    double rest = 1.0;
    for (double v : explicit_entries) rest -= v;
    out.push_back(rest);
    return out;
}

std::vector<std::string> default_candidate_names(int m) {
    std::vector<std::string> names;
    for (int c = 0; c < m; ++c) names.emplace_back(1, static_cast<char>('a' + c));
    return names;
}

namespace {

std::string_view trim(std::string_view s) {
    const auto* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

}  // namespace

ParsedProfile parse_profile(std::string_view text) {
    std::vector<std::string> names;
    std::map<std::string, int, std::less<>> ids;
    std::vector<std::pair<std::int64_t, std::vector<int>>> groups;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        auto x_pos = line.find(" x ");
        if (x_pos == std::string_view::npos) throw ParseError(line_no, "expected `<count> x <ranking>`");
        auto count_text = trim(line.substr(0, x_pos));
        std::int64_t count = 0;
        auto [ptr, ec] = std::from_chars(count_text.data(), count_text.data() + count_text.size(), count);
        if (ec != std::errc() || ptr != count_text.data() + count_text.size() || count < 1) {
            throw ParseError(line_no, "voter count must be a positive integer, got `" + std::string(count_text) + "`");
        }

        std::vector<int> perm;
        std::string_view rest = line.substr(x_pos + 3);
        while (true) {
            auto gt = rest.find('>');
            auto token = trim(rest.substr(0, gt));
            if (token.empty()) throw ParseError(line_no, "empty candidate name");
            auto it = ids.find(token);
            int id = 0;
            if (it == ids.end()) {
                if (!groups.empty()) throw ParseError(line_no, "unknown candidate `" + std::string(token) + "`");
                id = static_cast<int>(names.size());
                names.emplace_back(token);
                ids.emplace(std::string(token), id);
            } else {
                id = it->second;
            }
            if (std::find(perm.begin(), perm.end(), id) != perm.end()) {
                throw ParseError(line_no, "candidate `" + std::string(token) + "` listed twice");
            }
            perm.push_back(id);
            if (gt == std::string_view::npos) break;
            rest = rest.substr(gt + 1);
        }
        if (perm.size() != names.size()) throw ParseError(line_no, "ranking must list all " + std::to_string(names.size()) + " candidates");
        if (static_cast<int>(perm.size()) < kMinCandidates || static_cast<int>(perm.size()) > kMaxCandidates) {
            throw ParseError(line_no, "candidate count must be between 3 and 6");
        }
        groups.emplace_back(count, std::move(perm));
    }
    if (groups.empty()) throw ParseError(line_no, "profile contains no rankings");

    std::vector<Ranking> rankings;
    for (auto& [count, perm] : groups) {
        Ranking r(perm);
        for (std::int64_t k = 0; k < count; ++k) rankings.push_back(r);
    }
    return ParsedProfile{Profile(std::move(rankings)), std::move(names)};
}

ParsedProfile read_profile_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open profile file `" + path + "`");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_profile(buf.str());
}

std::string format_profile(const Profile& profile, const std::vector<std::string>& names) {
    auto labels = names.empty() ? default_candidate_names(profile.m()) : names;
    // Group identical rankings in order of first appearance.
    std::vector<std::pair<Ranking, std::int64_t>> groups;
    for (const auto& r : profile.rankings()) {
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == r; });
        if (it == groups.end()) {
            groups.emplace_back(r, 1);
        } else {
            ++it->second;
        }
    }
    std::ostringstream out;
    for (const auto& [r, count] : groups) {
        out << count << " x ";
        for (int j = 0; j < r.m(); ++j) {
            if (j > 0) out << " > ";
            out << labels.at(static_cast<std::size_t>(r.at(j)));
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace smoothedvotes
