#pragma once

// Command-line front end: experiment configs, result files and the
// subcommands of the `smoothedvotes` executable.

#include "smoothedvotes/smoothed.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace smoothedvotes {

enum class ExperimentKind { estimate, sweep, thick_hyperplane, group_flip, audit, margins, diagnostics };

std::string experiment_kind_name(ExperimentKind kind);
std::vector<std::string> experiment_kind_names();

/// Where the unperturbed profile comes from. Exactly one of the three is set.
struct BaseSource {
    std::optional<std::string> library;    ///< counterexample name
    std::optional<Rational> alpha;         ///< parameter of the psr-* counterexamples
    std::optional<std::filesystem::path> file;
    std::optional<std::string> generator;  ///< tie, cycle, uniform, unanimous, random
    int m = 3;                             ///< candidates for generated bases
};

struct ExperimentConfig {
    std::string name;
    ExperimentKind kind = ExperimentKind::sweep;
    std::vector<std::string> rules;
    std::string axiom;
    std::string model = "mallows";
    std::vector<double> phis;
    std::vector<std::int64_t> n_list;
    std::vector<std::int64_t> z_list;
    std::int64_t trials = 10'000;
    std::uint64_t seed = 0;
    BaseSource base;
    std::string delta = "zero";             ///< thick-hyperplane width schedule
    std::string rho;                         ///< group-flip coalition schedule
    int n_max = 0;                           ///< audit
    int m = 3;                               ///< audit
    std::string diagnostic;                  ///< hoeffding, starting or berry-esseen
    std::vector<double> eps;                 ///< hoeffding / starting
    nlohmann::json source;                   ///< the validated config, seed resolved
};

/// Validates a parsed config. Throws ConfigurationError naming the offending field.
/// `seed_override` replaces the config seed; a seed must come from one of the two.
/// Relative file paths resolve against `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, std::optional<std::uint64_t> seed_override = std::nullopt,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<std::uint64_t> seed_override = std::nullopt);

/// Runs the experiment and returns one CSV row per grid point (several per point for
/// kinds reporting more than one quantity).
std::vector<SweepRow> execute(const ExperimentConfig& config, int workers);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);
/// Hash of the canonical (sorted-key, compact) dump of the validated config.
std::string config_hash(const ExperimentConfig& config);

struct RunManifest {
    std::string config_hash;
    std::string version;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
    nlohmann::json config;

    nlohmann::json to_json() const;
};

/// Writes `<out>/results.csv` and `<out>/manifest.json`.
RunManifest run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir, int workers,
                           bool timing);

std::string version_string();

/// Entry point of the executable. Exit 0 on success, 2 on invalid input, 1 on runtime failure.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace smoothedvotes
