#include "smoothedvotes/cli.hpp"

#include "smoothedvotes/errors.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#ifndef SMOOTHEDVOTES_VERSION
#define SMOOTHEDVOTES_VERSION "0.0.0"
#endif

namespace smoothedvotes {

using nlohmann::json;

namespace {

constexpr std::array kKindNames = {"estimate", "sweep", "thick-hyperplane", "group-flip",
                                   "audit", "margins", "diagnostics"};
constexpr std::array kDiagnostics = {"hoeffding", "starting", "berry-esseen"};

std::string joined(const std::vector<std::string>& items) {
    std::string s;
    for (const auto& it : items) s += (s.empty() ? "" : ", ") + it;
    return s;
}

/// Field access that remembers which keys were read, so leftovers can be rejected.
class Fields {
public:
    Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) throw ConfigurationError(where_ + " must be a JSON object");
    }

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key) {
        const auto* v = get(key);
        if (!v) throw ConfigurationError(where_ + ": missing field `" + key + "`");
        return *v;
    }

    std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
        const auto* v = fallback ? get(key) : &require(key);
        if (!v) return *fallback;
        if (!v->is_string()) throw ConfigurationError(where_ + ": `" + key + "` must be a string");
        return v->get<std::string>();
    }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> fallback = std::nullopt) {
        const auto* v = fallback ? get(key) : &require(key);
        if (!v) return *fallback;
        if (!v->is_number_integer()) throw ConfigurationError(where_ + ": `" + key + "` must be an integer");
        return v->get<std::int64_t>();
    }

    std::vector<std::int64_t> integers(const std::string& key) {
        const auto* v = get(key);
        if (!v) return {};
        std::vector<std::int64_t> out;
        for (const auto& x : v->is_array() ? *v : json::array({*v})) {
            if (!x.is_number_integer()) throw ConfigurationError(where_ + ": `" + key + "` must hold integers");
            out.push_back(x.get<std::int64_t>());
        }
        if (out.empty()) throw ConfigurationError(where_ + ": `" + key + "` must be nonempty");
        return out;
    }

    std::vector<double> numbers(const std::string& key) {
        const auto* v = get(key);
        if (!v) return {};
        std::vector<double> out;
        for (const auto& x : v->is_array() ? *v : json::array({*v})) {
            if (!x.is_number()) throw ConfigurationError(where_ + ": `" + key + "` must hold numbers");
            out.push_back(x.get<double>());
        }
        if (out.empty()) throw ConfigurationError(where_ + ": `" + key + "` must be nonempty");
        return out;
    }

    void reject_unknown() const {
        for (const auto& [key, _] : obj_.items()) {
            if (!seen_.contains(key)) throw ConfigurationError(where_ + ": unknown field `" + key + "`");
        }
    }

private:
    const json& obj_;
    std::string where_;
    std::set<std::string> seen_;
};

ExperimentKind kind_from(const std::string& s) {
    for (std::size_t i = 0; i < kKindNames.size(); ++i) {
        if (s == kKindNames[i]) return static_cast<ExperimentKind>(i);
    }
    throw ConfigurationError("unknown experiment kind `" + s + "`; valid: " + joined(experiment_kind_names()));
}

bool monte_carlo(ExperimentKind k) {
    return k != ExperimentKind::audit && k != ExperimentKind::margins;
}

StrictCounterexample library_base(const BaseSource& b, std::string_view rule = {}) {
    return counterexample_library(*b.library, b.alpha, rule);
}

Profile load_base(const BaseSource& b) {
    if (b.library) return library_base(b).profile;
    return read_profile_file(b.file->string()).profile;
}

Estimate point_estimate(double value, std::int64_t trials, std::uint64_t seed) {
    Estimate e;
    e.trials = trials;
    e.p_hat = e.ci_low = e.ci_high = value;
    e.seed = seed;
    return e;
}

SweepRow make_row(const ExperimentConfig& c, std::string rule, std::string axiom, double phi, std::int64_t n,
                  std::int64_t z, Estimate e) {
    SweepRow r;
    r.experiment = c.name;
    r.rule = std::move(rule);
    r.axiom = std::move(axiom);
    r.model = c.model;
    r.phi = phi;
    r.n = n;
    r.z = z;
    r.estimate = e;
    return r;
}

std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

std::string experiment_kind_name(ExperimentKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::vector<std::string> experiment_kind_names() { return {kKindNames.begin(), kKindNames.end()}; }

std::string version_string() { return SMOOTHEDVOTES_VERSION; }

// ---------------------------------------------------------------------------
// Config parsing

ExperimentConfig parse_config(const json& doc, std::optional<std::uint64_t> seed_override,
                              const std::filesystem::path& base_dir) {
    Fields f(doc, "config");
    ExperimentConfig c;
    c.name = f.string("experiment");
    if (c.name.empty()) throw ConfigurationError("config: `experiment` must be nonempty");
    c.kind = kind_from(f.string("kind"));

    if (const auto* r = f.get("rule")) {
        if (!r->is_string()) throw ConfigurationError("config: `rule` must be a string");
        c.rules.push_back(r->get<std::string>());
    }
    if (const auto* r = f.get("rules")) {
        if (!c.rules.empty()) throw ConfigurationError("config: give `rule` or `rules`, not both");
        if (!r->is_array() || r->empty()) throw ConfigurationError("config: `rules` must be a nonempty array");
        for (const auto& x : *r) {
            if (!x.is_string()) throw ConfigurationError("config: `rules` must hold strings");
            c.rules.push_back(x.get<std::string>());
        }
    }
    c.axiom = f.string("axiom", "");

    if (const auto* noise = f.get("noise")) {
        Fields nf(*noise, "config.noise");
        c.model = nf.string("model", "mallows");
        c.phis = nf.numbers("phi");
        nf.reject_unknown();
    }
    c.n_list = f.integers("n");
    c.z_list = f.integers("z");
    c.trials = f.integer("trials", 10'000);
    c.delta = f.string("delta", "zero");
    c.rho = f.string("rho", "");
    c.n_max = static_cast<int>(f.integer("n_max", 0));
    c.m = static_cast<int>(f.integer("m", 3));
    c.diagnostic = f.string("diagnostic", "");
    c.eps = f.numbers("eps");

    if (const auto* base = f.get("base")) {
        Fields bf(*base, "config.base");
        if (const auto* lib = bf.get("library")) {
            if (!lib->is_string()) throw ConfigurationError("config.base: `library` must be a string");
            c.base.library = lib->get<std::string>();
        }
        if (const auto* a = bf.get("alpha")) {
            if (a->is_string()) {
                c.base.alpha = parse_rational(a->get<std::string>());
            } else if (a->is_number()) {
                c.base.alpha = parse_rational(format_number(a->get<double>()));
            } else {
                throw ConfigurationError("config.base: `alpha` must be a number or a fraction string");
            }
        }
        if (const auto* file = bf.get("file")) {
            if (!file->is_string()) throw ConfigurationError("config.base: `file` must be a string");
            std::filesystem::path p = file->get<std::string>();
            c.base.file = p.is_relative() ? base_dir / p : p;
        }
        if (const auto* gen = bf.get("generator")) {
            if (!gen->is_string()) throw ConfigurationError("config.base: `generator` must be a string");
            c.base.generator = gen->get<std::string>();
        }
        c.base.m = static_cast<int>(bf.integer("m", 3));
        bf.reject_unknown();
        const int sources = (c.base.library ? 1 : 0) + (c.base.file ? 1 : 0) + (c.base.generator ? 1 : 0);
        if (sources != 1) throw ConfigurationError("config.base: give exactly one of `library`, `file`, `generator`");
    }

    if (const auto* s = f.get("seed")) {
        if (!s->is_number_integer() || (!s->is_number_unsigned() && s->get<std::int64_t>() < 0)) throw ConfigurationError("config: `seed` must be a non-negative integer");
        c.seed = s->get<std::uint64_t>();
    } else if (!seed_override) {
        throw ConfigurationError("config: `seed` is required (or set SMOOTHEDVOTES_SEED / --seed)");
    }
    if (seed_override) c.seed = *seed_override;
    f.reject_unknown();

    // Registry resolution and per-kind requirements.
    const bool mc = monte_carlo(c.kind);
    if (mc) {
        if (c.trials < 100) throw ConfigurationError("config: `trials` must be >= 100, got " + std::to_string(c.trials));
        make_noise_model(c.model);
        if (c.phis.empty()) throw ConfigurationError("config.noise: `phi` is required");
        for (double phi : c.phis) check_phi(phi);
    }
    for (auto n : c.n_list) {
        if (n < 1) throw ConfigurationError("config: every n must be >= 1");
    }
    for (auto z : c.z_list) {
        if (z < 1) throw ConfigurationError("config: every z must be >= 1");
    }
    if (c.base.generator) {
        const auto names = base_generator_names();
        if (std::find(names.begin(), names.end(), *c.base.generator) == names.end()) {
            throw ConfigurationError("unknown base generator `" + *c.base.generator + "`; valid: " + joined(names));
        }
        if (c.base.m < 2 || c.base.m > kMaxCandidates) throw ConfigurationError("config.base: `m` out of range");
    }
    std::optional<StrictCounterexample> cx;
    if (c.base.library) {
        cx = library_base(c.base, c.rules.empty() ? std::string_view{} : std::string_view(c.rules.front()));
        if (c.rules.empty() && !cx->rule.empty()) c.rules.push_back(cx->rule);
        if (c.axiom.empty()) c.axiom = axiom_name(cx->axiom);
    }
    if (c.base.file && !std::filesystem::exists(*c.base.file)) {
        throw ConfigurationError("config.base: profile file `" + c.base.file->string() + "` not found");
    }

    const auto needs = [&](bool ok, const std::string& what) {
        if (!ok) throw ConfigurationError("config: kind `" + experiment_kind_name(c.kind) + "` needs " + what);
    };
    const auto needs_rules = [&] {
        needs(!c.rules.empty(), "`rule` or `rules`");
        for (const auto& r : c.rules) make_rule(r);
    };
    const auto needs_profile_grid = [&] {
        needs(c.base.library || c.base.file || c.base.generator, "a `base`");
        if (c.base.generator) {
            needs(!c.n_list.empty() && c.z_list.empty(), "an `n` grid (and no `z`) for generated bases");
        } else {
            needs(c.n_list.empty(), "a `z` grid (not `n`) for library and file bases");
            if (c.z_list.empty()) c.z_list = {1};
        }
    };

    switch (c.kind) {
        case ExperimentKind::estimate:
        case ExperimentKind::sweep: {
            needs_rules();
            needs(!c.axiom.empty(), "an `axiom`");
            const auto spec = parse_axiom(c.axiom);
            needs_profile_grid();
            if (spec.axiom == Axiom::iia || spec.axiom == Axiom::consistency) {
                needs(cx && cx->witness && cx->axiom == spec.axiom,
                      "a library base carrying a witness for `" + c.axiom + "`");
            }
            if (c.kind == ExperimentKind::estimate) {
                needs(c.phis.size() == 1 && c.n_list.size() + c.z_list.size() == 1, "a single phi and a single n or z");
            }
            break;
        }
        case ExperimentKind::thick_hyperplane:
            needs_rules();
            needs(c.base.generator.has_value(), "a generated base");
            needs_profile_grid();
            DeltaSchedule::parse(c.delta);
            break;
        case ExperimentKind::group_flip:
            needs_rules();
            needs(!c.rho.empty(), "a `rho` schedule");
            RhoSchedule::parse(c.rho);
            needs_profile_grid();
            break;
        case ExperimentKind::audit:
            needs_rules();
            needs(!c.axiom.empty(), "an `axiom`");
            parse_axiom(c.axiom);
            needs(c.n_max >= 1 && c.n_max <= 5 && c.m == 3, "`n_max` in [1, 5] and `m` = 3");
            break;
        case ExperimentKind::margins:
            needs(!c.phis.empty(), "a `noise.phi` grid");
            for (double phi : c.phis) {
                if (!(phi >= 0.0 && phi < 1.0)) throw ConfigurationError("config: margin phis must lie in [0, 1)");
            }
            break;
        case ExperimentKind::diagnostics:
            needs(std::find(kDiagnostics.begin(), kDiagnostics.end(), c.diagnostic) != kDiagnostics.end(),
                  "`diagnostic` in {hoeffding, starting, berry-esseen}");
            needs(!c.n_list.empty() && c.z_list.empty(), "an `n` grid");
            if (c.diagnostic != "berry-esseen") {
                needs(!c.eps.empty(), "an `eps` grid");
                for (double e : c.eps) needs(e > 0.0, "positive `eps` values");
                if (!c.base.generator) c.base.generator = "random";
            }
            break;
    }

    c.source = doc;
    c.source["seed"] = c.seed;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw ConfigurationError("cannot open config `" + path.string() + "`");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigurationError("config `" + path.string() + "` is not valid JSON: " + e.what());
    }
    return parse_config(doc, seed_override, path.parent_path());
}

// ---------------------------------------------------------------------------
// Execution

std::vector<SweepRow> execute(const ExperimentConfig& c, int workers) {
    std::vector<SweepRow> rows;
    const auto noise = make_noise_model(c.model);

    switch (c.kind) {
        case ExperimentKind::estimate:
        case ExperimentKind::sweep: {
            const auto axiom = parse_axiom(c.axiom);
            for (const auto& rule_spec : c.rules) {
                SweepSpec s;
                s.experiment = c.name;
                s.rule = rule_spec;
                s.axiom = axiom;
                s.model = c.model;
                s.phis = c.phis;
                s.trials = c.trials;
                s.seed = c.seed;
                s.workers = workers;
                if (c.base.generator) {
                    s.n_list = c.n_list;
                    s.generator = *c.base.generator;
                    s.m = c.base.m;
                } else {
                    s.z_list = c.z_list;
                    s.scenario = c.base.library ? scenario_of(library_base(c.base, rule_spec))
                                                : Scenario{load_base(c.base), std::nullopt};
                }
                auto part = convergence_sweep(s);
                rows.insert(rows.end(), part.begin(), part.end());
            }
            break;
        }
        case ExperimentKind::thick_hyperplane: {
            const auto delta = DeltaSchedule::parse(c.delta);
            for (const auto& rule_spec : c.rules) {
                const auto rule = make_rule(rule_spec);
                for (double phi : c.phis) {
                    for (const auto& t : thick_hyperplane_probability(*rule, *c.base.generator, c.base.m, *noise, phi,
                                                                      delta, c.n_list, c.trials, c.seed, workers)) {
                        rows.push_back(make_row(c, rule->name(), "thick-hyperplane:delta=" + delta.to_string(), phi,
                                                t.n, 1, t.estimate));
                    }
                }
            }
            break;
        }
        case ExperimentKind::group_flip: {
            const auto rho = RhoSchedule::parse(c.rho);
            const bool generated = c.base.generator.has_value();
            const Profile fixed = generated ? Profile({Ranking::identity(3)}) : load_base(c.base);
            const auto base_of = [&](std::int64_t g) {
                return generated ? generate_base(*c.base.generator, c.base.m, g, c.seed) : replicate(fixed, g);
            };
            const auto axiom = "group-stability:rho=" + rho.to_string();
            for (const auto& rule_spec : c.rules) {
                const auto rule = make_rule(rule_spec);
                for (double phi : c.phis) {
                    const auto& grid = generated ? c.n_list : c.z_list;
                    const auto out = group_flip_probability(*rule, base_of, *noise, phi, rho, grid, c.trials, c.seed, workers);
                    for (std::size_t i = 0; i < out.size(); ++i) {
                        const auto& g = out[i];
                        if (g.contradictions > 0) {
                            throw InvariantViolation("certificate contradicted the exact check in " +
                                                     std::to_string(g.contradictions) + " trials");
                        }
                        const auto z = generated ? 1 : grid[i];
                        auto row = make_row(c, rule->name(), axiom, phi, g.n, z, g.certificate);
                        row.experiment += "/certificate";
                        rows.push_back(row);
                        if (g.exact) {
                            row.experiment = c.name + "/exact";
                            row.estimate = *g.exact;
                            rows.push_back(row);
                        }
                    }
                }
            }
            break;
        }
        case ExperimentKind::audit: {
            const auto axiom = parse_axiom(c.axiom);
            for (const auto& rule_spec : c.rules) {
                const auto rule = make_rule(rule_spec);
                const auto a = brute_force_audit(*rule, axiom, c.n_max, c.m, 0);
                auto row = make_row(c, rule->name(), axiom.to_string(), 0.0, c.n_max, 1,
                                    wilson_estimate(a.violations, a.cases, c.seed));
                row.model = "none";
                rows.push_back(row);
            }
            break;
        }
        case ExperimentKind::margins: {
            for (const auto& r : verify_appendixD_margins(c.phis)) {
                const std::pair<const char*, double> values[] = {
                    {"margin:b-over-a", r.b_over_a},         {"margin:b-over-c", r.b_over_c},
                    {"margin:a-over-b-first", r.a_over_b_psr}, {"margin:s-coefficient", r.s_coefficient},
                    {"margin:max-abs-error", r.max_abs_error},
                };
                for (const auto& [name, v] : values) {
                    auto row = make_row(c, "", name, r.phi, 300, 1, point_estimate(v, 0, c.seed));
                    row.model = "mallows";
                    rows.push_back(row);
                }
            }
            break;
        }
        case ExperimentKind::diagnostics: {
            for (double phi : c.phis) {
                for (auto n : c.n_list) {
                    if (c.diagnostic == "berry-esseen") {
                        const auto p = berry_esseen_point(*noise, c.base.m, n, phi, c.trials, c.seed, workers);
                        const auto hits = static_cast<std::int64_t>(std::llround(p.empirical * static_cast<double>(c.trials)));
                        rows.push_back(make_row(c, "", "berry-esseen:empirical", phi, n, 1,
                                                wilson_estimate(hits, c.trials, c.seed)));
                        rows.push_back(make_row(c, "", "berry-esseen:gaussian", phi, n, 1,
                                                point_estimate(p.gaussian, 0, c.seed)));
                        rows.push_back(make_row(c, "", "berry-esseen:gap", phi, n, 1,
                                                point_estimate(p.gap, c.trials, c.seed)));
                        continue;
                    }
                    const auto base = generate_base(*c.base.generator, c.base.m, n, c.seed);
                    const bool hoeffding = c.diagnostic == "hoeffding";
                    for (double eps : c.eps) {
                        const auto tag = c.diagnostic + ":eps=" + format_number(eps);
                        const auto e = concentration_probability(*noise, base, phi, eps,
                                                                 hoeffding ? Center::expected : Center::base,
                                                                 c.trials, c.seed, workers);
                        rows.push_back(make_row(c, "", tag, phi, n, 1, e));
                        const double bound = hoeffding ? hoeffding_bound(eps, n, c.base.m)
                                                       : starting_concentration_bound(eps, n);
                        rows.push_back(make_row(c, "", tag + ":bound", phi, n, 1, point_estimate(bound, 0, c.seed)));
                    }
                }
            }
            break;
        }
    }
    return rows;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash(const ExperimentConfig& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.source.dump())));
    return buf;
}

json RunManifest::to_json() const {
    return json{{"config_hash", config_hash}, {"version", version},  {"started", started},
                {"finished", finished},       {"outputs", outputs},  {"config", config}};
}

RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, int workers,
                           bool timing) {
    RunManifest m;
    m.config_hash = config_hash(config);
    m.version = version_string();
    m.config = config.source;
    m.started = utc_now();
    const auto rows = execute(config, workers);
    std::filesystem::create_directories(out_dir);
    const auto csv_path = out_dir / "results.csv";
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write `" + csv_path.string() + "`");
        write_csv(out, rows, timing);
    }
    m.finished = utc_now();
    m.outputs = {csv_path.string()};
    const auto manifest_path = out_dir / "manifest.json";
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write `" + manifest_path.string() + "`");
    out << m.to_json().dump(2) << '\n';
    return m;
}

// ---------------------------------------------------------------------------
// Subcommands

namespace {

std::string describe(const Profile& p, const std::vector<std::string>& names) {
    auto text = format_profile(p, names);
    std::replace(text.begin(), text.end(), '\n', ';');
    if (!text.empty()) text.pop_back();
    return text;
}

std::string describe(const Witness& w, const std::vector<std::string>& names) {
    return std::visit(
        [&](const auto& x) -> std::string {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ConsistencyWitness>) {
                std::string s = "partition";
                for (const auto& part : x.parts) s += " [" + describe(part, names) + "]";
                return s;
            } else if constexpr (std::is_same_v<T, IIAWitness>) {
                return "partner [" + describe(x.other, names) + "] on pair " + names[static_cast<std::size_t>(x.a)] +
                       "," + names[static_cast<std::size_t>(x.b)];
            } else if constexpr (std::is_same_v<T, ParticipationWitness>) {
                return std::to_string(x.leaving.size()) + " voter(s) abstain";
            } else {
                std::string s = std::to_string(x.coalition.size()) + " voter(s) switch to";
                for (const auto& r : x.replacement) {
                    s += ' ';
                    for (int j = 0; j < r.m(); ++j) s += names[static_cast<std::size_t>(r.at(j))];
                }
                return s;
            }
        },
        w);
}

std::optional<std::uint64_t> parse_seed(const std::string& text) {
    std::uint64_t v = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end) throw ConfigurationError("seed must be a non-negative integer, got `" + text + "`");
    return v;
}

std::optional<std::uint64_t> env_seed() {
    const char* v = std::getenv("SMOOTHEDVOTES_SEED");
    if (!v || !*v) return std::nullopt;
    return parse_seed(v);
}

int cmd_eval(const std::string& path, const std::string& rule_spec, bool as_json, std::ostream& out) {
    const auto parsed = read_profile_file(path);
    const auto& p = parsed.profile;
    const auto rule = make_rule(rule_spec);
    const auto winners = rule->evaluate(p);
    const auto margins = pairwise_margins(p);
    const int m = p.m();
    std::vector<std::int64_t> first(static_cast<std::size_t>(m), 0);
    for (const auto& r : p.rankings()) ++first[static_cast<std::size_t>(r.top())];

    if (as_json) {
        json j;
        j["rule"] = rule->name();
        j["n"] = p.n();
        j["m"] = m;
        j["candidates"] = parsed.names;
        j["winners"] = json::array();
        for (auto c : winners.members()) j["winners"].push_back(parsed.names[static_cast<std::size_t>(c)]);
        j["first_place"] = json::object();
        for (int c = 0; c < m; ++c) j["first_place"][parsed.names[static_cast<std::size_t>(c)]] = first[static_cast<std::size_t>(c)];
        j["margins"] = json::array();
        for (int x = 0; x < m; ++x) {
            json row = json::array();
            for (int y = 0; y < m; ++y) row.push_back(margins.margin(x, y));
            j["margins"].push_back(row);
        }
        out << j.dump(2) << '\n';
        return 0;
    }
    out << "rule: " << rule->name() << "  (n=" << p.n() << ", m=" << m << ")\n";
    out << "winners: " << winners.to_string(parsed.names) << '\n';
    out << "first-place counts:";
    for (int c = 0; c < m; ++c) out << ' ' << parsed.names[static_cast<std::size_t>(c)] << '=' << first[static_cast<std::size_t>(c)];
    out << "\npairwise margins (row minus column):\n";
    std::size_t width = 4;
    for (const auto& nm : parsed.names) width = std::max(width, nm.size() + 1);
    out << std::setw(static_cast<int>(width)) << "";
    for (const auto& nm : parsed.names) out << std::setw(static_cast<int>(width + 2)) << nm;
    out << '\n';
    for (int x = 0; x < m; ++x) {
        out << std::setw(static_cast<int>(width)) << parsed.names[static_cast<std::size_t>(x)];
        for (int y = 0; y < m; ++y) out << std::setw(static_cast<int>(width + 2)) << margins.margin(x, y);
        out << '\n';
    }
    return 0;
}

int cmd_audit(const std::string& rule_spec, const std::string& axiom_spec, int n_max, int m, std::ostream& out) {
    const auto rule = make_rule(rule_spec);
    const auto axiom = parse_axiom(axiom_spec);
    const auto r = brute_force_audit(*rule, axiom, n_max, m);
    const auto names = default_candidate_names(m);
    out << "rule: " << rule->name() << "  axiom: " << axiom.to_string() << "  m=" << m << "  n<=" << n_max << '\n';
    out << "cases: " << r.cases << "  (distinct profiles: " << r.distinct_profiles << ")\n";
    out << "violations: " << r.violations << "  (distinct profiles: " << r.distinct_violations << ")\n";
    for (const auto& ex : r.examples) {
        out << "  n=" << ex.profile.n() << "  " << describe(ex.profile, names);
        if (ex.witness) out << "  | " << describe(*ex.witness, names);
        out << '\n';
    }
    return 0;
}

int cmd_perturb(const std::string& path, const std::string& model, double phi, std::uint64_t seed,
                std::uint64_t trial, std::ostream& out) {
    const auto parsed = read_profile_file(path);
    const auto noise = make_noise_model(model);
    check_phi(phi);
    out << format_profile(perturb_profile(*noise, parsed.profile, phi, seed, trial), parsed.names);
    return 0;
}

int cmd_margins(const std::vector<double>& grid, std::ostream& out) {
    const auto rows = verify_appendixD_margins(grid);
    out << std::setw(6) << "phi" << std::setw(12) << "Z" << std::setw(14) << "b>a" << std::setw(14) << "b>c"
        << std::setw(14) << "a>b first" << std::setw(14) << "s coeff" << std::setw(12) << "max err" << "  positive\n";
    out << std::setprecision(8);
    for (const auto& r : rows) {
        out << std::setw(6) << r.phi << std::setw(12) << r.normalizer << std::setw(14) << r.b_over_a << std::setw(14)
            << r.b_over_c << std::setw(14) << r.a_over_b_psr << std::setw(14) << r.s_coefficient << std::setw(12)
            << r.max_abs_error << "  " << (r.all_positive ? "yes" : "no") << '\n';
    }
    return 0;
}

std::string registry_footer() {
    std::string s = "\nRegistered names:\n";
    s += "  rules:           " + joined(rule_names()) + "\n";
    s += "  axioms:          " + joined(axiom_names()) + "\n";
    s += "  noise models:    " + joined(noise_model_names()) + "\n";
    s += "  base generators: " + joined(base_generator_names()) + "\n";
    s += "  counterexamples: " + joined(counterexample_names()) + "\n";
    s += "  experiment kinds: " + joined(experiment_kind_names()) + "\n";
    s += "\nSMOOTHEDVOTES_SEED overrides config seeds; an explicit --seed wins over both.\n";
    s += "Exit status: 0 success, 1 runtime failure, 2 invalid input.\n";
    return s;
}

int cli_exit(const CLI::App& app, const CLI::Error& e, std::ostream& out, std::ostream& err) {
    if (e.get_exit_code() == 0) return 0;
    err << "error: " << e.what() << "\n\n" << app.help();
    (void)out;
    return 2;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Smoothed analysis of social choice: rules, axioms, noise models and experiments.", "smoothedvotes"};
    app.footer(registry_footer());
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    std::string config_path;
    std::string out_dir;
    int workers = static_cast<int>(std::max(1U, std::thread::hardware_concurrency()));
    bool timing = false;
    std::optional<std::uint64_t> seed_flag;
    std::string seed_text;

    auto* run = app.add_subcommand("run", "Run an experiment config; writes results.csv and manifest.json");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--workers", workers, "Worker threads (results do not depend on this)")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed_text, "Seed; overrides the config and SMOOTHEDVOTES_SEED");
    run->add_flag("--timing", timing, "Fill the ms column (makes output run-dependent)");

    std::string profile_path;
    std::string rule_spec;
    bool as_json = false;
    auto* eval = app.add_subcommand("eval", "Evaluate a rule on a profile file");
    eval->add_option("profile", profile_path, "Profile file")->required();
    eval->add_option("rule", rule_spec, "Rule spec")->required();
    eval->add_flag("--json", as_json, "Machine-readable output");

    std::string axiom_spec;
    int n_max = 0;
    int m = 0;
    auto* audit = app.add_subcommand("audit", "Exhaustive worst-case search over small profiles");
    audit->add_option("rule", rule_spec, "Rule spec")->required();
    audit->add_option("axiom", axiom_spec, "Axiom spec")->required();
    audit->add_option("n_max", n_max, "Largest electorate (1..5)")->required();
    audit->add_option("m", m, "Candidates (3)")->required();

    std::string model;
    double phi = 0.0;
    std::uint64_t trial = 0;
    auto* perturb = app.add_subcommand("perturb", "Apply one draw of the noise model to a profile");
    perturb->add_option("profile", profile_path, "Profile file")->required();
    perturb->add_option("--model", model, "Noise model")->required();
    perturb->add_option("--phi", phi, "Dispersion in [0, 1]")->required();
    perturb->add_option("--seed", seed_text, "Seed (falls back to SMOOTHEDVOTES_SEED)");
    perturb->add_option("--trial", trial, "Trial index of the draw");

    std::vector<double> grid;
    auto* margins = app.add_subcommand("margins", "Exact expected margins of the 300-voter Mallows example");
    margins->add_option("--phi-grid", grid, "Comma-separated phis in [0, 1)")->required()->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForVersion&) {
        out << version_string() << '\n';
        return 0;
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::Error& e) {
        return cli_exit(app, e, out, err);
    }

    try {
        if (!seed_text.empty()) seed_flag = parse_seed(seed_text);
        if (*run) {
            const auto seed = seed_flag ? seed_flag : env_seed();
            const auto config = load_config(config_path, seed);
            const auto manifest = run_experiment(config, out_dir, workers, timing);
            out << "wrote " << joined(manifest.outputs) << " (config " << manifest.config_hash << ")\n";
            return 0;
        }
        if (*eval) return cmd_eval(profile_path, rule_spec, as_json, out);
        if (*audit) return cmd_audit(rule_spec, axiom_spec, n_max, m, out);
        if (*perturb) {
            const auto seed = seed_flag ? seed_flag : env_seed();
            if (!seed) throw ConfigurationError("perturb needs --seed or SMOOTHEDVOTES_SEED");
            return cmd_perturb(profile_path, model, phi, *seed, trial, out);
        }
        if (*margins) return cmd_margins(grid, out);
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigurationError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const ArgumentError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const WitnessInvalid& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "runtime error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace smoothedvotes
