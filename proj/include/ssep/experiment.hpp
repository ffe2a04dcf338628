#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ssep/stats.hpp"

namespace ssep {

/// Invalid configuration (bad grammar, bad value, missing key).  The CLI
/// maps this to exit code 1; other runtime failures map to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
    variance_flux,
    clt_flux,
    tagged,
    exact_tables,
    identity_check,
    decomposition,
};

std::string_view to_string(ExperimentKind kind);

struct ExperimentConfig {
    ExperimentKind experiment = ExperimentKind::variance_flux;
    double rho = 0.0;
    std::vector<double> times;
    long long replicas = 10000;
    std::uint64_t seed = 1;
    double tail_bound = 1e-12;
    std::string output_path = "results.csv";
};

/// Parse the line-based `key = value` grammar (# comments, comma-separated
/// lists).  Applies defaults (replicas = 10000, tail_bound = 1e-12,
/// seed = 1) and validates field invariants.
ExperimentConfig parse_config(std::string_view text);

/// A commented template of the config grammar.
std::string config_template();

/// One CSV row: an estimate with its standard error and the prediction it
/// is tested against (fields are blank where no prediction exists).
struct ResultRow {
    std::string experiment;
    double rho = 0.0;
    double t = 0.0;
    long long n_replicas = 0;
    std::string estimator;
    double estimate = 0.0;
    double std_error = 0.0;
    double prediction = 0.0;
    double z_score = 0.0;
    bool has_std_error = false;
    bool has_prediction = false;
    bool has_z = false;
    std::uint64_t seed = 0;
};

/// Per-worker summaries keyed by (checkpoint time, estimator slot).
using SummaryKey = std::pair<double, std::string>;
using SummaryMap = std::map<SummaryKey, McSummary>;

/// Associative merge of per-worker summary maps, in worker order.  All
/// partials must carry identical key sets; the list must be nonempty.
SummaryMap merge_worker_outputs(std::span<const SummaryMap> partials);

/// Run the configured experiment and return the result rows.  Replica r
/// always uses stream (seed, r), and replicas are split into contiguous
/// blocks across workers, so the result is independent of the worker count
/// up to floating-point merge order.
std::vector<ResultRow> compute_experiment(const ExperimentConfig& config, int workers = 1);

/// Full-precision decimal form (17 significant digits).
std::string format_double(double v);

void write_csv(std::span<const ResultRow> rows, const std::string& path);

/// compute_experiment + write_csv to config.output_path.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int workers = 1);

/// True when any emitted z-score exceeds the threshold in magnitude.
bool has_z_breach(std::span<const ResultRow> rows, double threshold = 3.0);

}  // namespace ssep
