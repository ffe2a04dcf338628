#include "ssep/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include "ssep/dynamics.hpp"
#include "ssep/exact_kernel.hpp"
#include "ssep/lattice.hpp"

namespace ssep {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

double parse_double(std::string_view v, std::string_view key) {
    double out = 0.0;
    const auto* begin = v.data();
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("malformed value for '" + std::string(key) + "': " + std::string(v));
    return out;
}

template <typename Int>
Int parse_integer(std::string_view v, std::string_view key) {
    Int out = 0;
    const auto* begin = v.data();
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end)
        throw ConfigError("malformed value for '" + std::string(key) + "': " + std::string(v));
    return out;
}

std::vector<double> parse_times(std::string_view v) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= v.size()) {
        std::size_t comma = v.find(',', start);
        std::string_view item =
            trim(v.substr(start, comma == std::string_view::npos ? comma : comma - start));
        if (item.empty()) throw ConfigError("malformed times list");
        out.push_back(parse_double(item, "times"));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

ExperimentKind parse_experiment(std::string_view v) {
    if (v == "variance-flux") return ExperimentKind::variance_flux;
    if (v == "clt-flux") return ExperimentKind::clt_flux;
    if (v == "tagged") return ExperimentKind::tagged;
    if (v == "exact-tables") return ExperimentKind::exact_tables;
    if (v == "identity-check") return ExperimentKind::identity_check;
    if (v == "decomposition") return ExperimentKind::decomposition;
    throw ConfigError("unknown experiment '" + std::string(v) + "'");
}

// Contiguous replica blocks, one per worker, empty blocks dropped.
std::vector<std::pair<long long, long long>> split_blocks(long long n, int workers) {
    std::vector<std::pair<long long, long long>> blocks;
    const long long w = std::max(1, workers);
    for (long long b = 0; b < w; ++b) {
        const long long lo = n * b / w;
        const long long hi = n * (b + 1) / w;
        if (lo < hi) blocks.emplace_back(lo, hi);
    }
    return blocks;
}

// Run one job per block on its own thread; rethrow the first failure.
template <typename Fn>
void run_blocks(std::size_t block_count, Fn&& body) {
    if (block_count == 1) {
        body(0);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(block_count);
    threads.reserve(block_count);
    for (std::size_t b = 0; b < block_count; ++b) {
        threads.emplace_back([&, b] {
            try {
                body(b);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

void require_positive_times(const ExperimentConfig& cfg, std::string_view what) {
    if (cfg.times.front() <= 0.0)
        throw ConfigError(std::string(what) + " requires strictly positive times");
}

void validate_config(const ExperimentConfig& cfg) {
    if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) throw ConfigError("rho out of range [0, 1]");
    if (cfg.replicas < 1) throw ConfigError("replicas must be >= 1");
    if (cfg.times.empty()) throw ConfigError("times must be nonempty");
    double prev = -1.0;
    for (double t : cfg.times) {
        if (t < 0.0) throw ConfigError("times must be nonnegative");
        if (t <= prev) throw ConfigError("times must be sorted strictly ascending");
        prev = t;
    }
    if (!(cfg.tail_bound > 0.0 && cfg.tail_bound < 1.0))
        throw ConfigError("tail_bound must lie in (0, 1)");
}

struct RowSpec {
    std::string estimator;
    double estimate = 0.0;
    double std_error = 0.0;
    double prediction = 0.0;
    bool has_std_error = false;
    bool has_prediction = false;
};

ResultRow make_row(const ExperimentConfig& cfg, double t, long long n, const RowSpec& spec) {
    ResultRow row;
    row.experiment = std::string(to_string(cfg.experiment));
    row.rho = cfg.rho;
    row.t = t;
    row.n_replicas = n;
    row.estimator = spec.estimator;
    row.estimate = spec.estimate;
    row.std_error = spec.std_error;
    row.has_std_error = spec.has_std_error;
    row.prediction = spec.prediction;
    row.has_prediction = spec.has_prediction;
    if (spec.has_std_error && spec.has_prediction && spec.std_error > 0.0) {
        row.z_score = (spec.estimate - spec.prediction) / spec.std_error;
        row.has_z = true;
    }
    row.seed = cfg.seed;
    return row;
}

RowSpec mean_row(std::string name, const McSummary& s, double prediction, double scale = 1.0) {
    RowSpec r;
    r.estimator = std::move(name);
    r.estimate = s.mean() * scale;
    r.std_error = s.mean_std_error() * scale;
    r.has_std_error = true;
    r.prediction = prediction;
    r.has_prediction = true;
    return r;
}

const McSummary& summary_at(const SummaryMap& map, double t, const char* slot) {
    auto it = map.find(SummaryKey{t, slot});
    if (it == map.end()) throw std::logic_error("missing summary slot");
    return it->second;
}

std::vector<ResultRow> run_variance_flux(const ExperimentConfig& cfg, int workers) {
    const WindowSpec window = build_window(cfg.times.back(), cfg.tail_bound);
    const auto kernel = kernel_grid(cfg.times);
    const Density rho(cfg.rho);

    const auto blocks = split_blocks(cfg.replicas, workers);
    std::vector<SummaryMap> partials(blocks.size());
    run_blocks(blocks.size(), [&](std::size_t b) {
        SummaryMap& local = partials[b];
        for (double t : cfg.times)
            for (const char* slot : {"J2", "K", "M2"}) local[{t, slot}];
        for (long long r = blocks[b].first; r < blocks[b].second; ++r) {
            EventStream stream(cfg.seed, static_cast<std::uint64_t>(r), window.bond_count());
            Configuration initial = sample_initial(rho, window, stream);
            Simulation sim(std::move(initial), SimulationOptions{.track_stirring = true});
            drive(sim, stream, cfg.times, [&](Simulation& s, std::size_t k) {
                const double t = cfg.times[k];
                const double j = static_cast<double>(s.flux_crossings());
                local[{t, "J2"}].accumulate(j * j);
                local[{t, "K"}].accumulate(static_cast<double>(s.crossing_counts().first));
                const double m = s.martingale();
                local[{t, "M2"}].accumulate(m * m);
            });
        }
    });
    const SummaryMap merged = merge_worker_outputs(partials);

    std::vector<ResultRow> rows;
    const double rr = cfg.rho * (1.0 - cfg.rho);
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        const double t = cfg.times[i];
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("EJ2", summary_at(merged, t, "J2"),
                                         rr * kernel[i].local_time)));
        const McSummary& k_summary = summary_at(merged, t, "K");
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("EK", k_summary, kernel[i].expected_crossings)));
        const auto var_k = variance_with_se(k_summary);
        RowSpec vk;
        vk.estimator = "VarK";
        vk.estimate = var_k.variance;
        vk.std_error = var_k.std_error;
        vk.has_std_error = true;
        rows.push_back(make_row(cfg, t, cfg.replicas, vk));
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("EM2", summary_at(merged, t, "M2"), t * rr)));
    }
    return rows;
}

std::vector<ResultRow> run_clt_flux(const ExperimentConfig& cfg, int workers) {
    require_positive_times(cfg, "clt-flux");
    const WindowSpec window = build_window(cfg.times.back(), cfg.tail_bound);
    const auto kernel = kernel_grid(cfg.times);
    const Density rho(cfg.rho);
    const double rr = cfg.rho * (1.0 - cfg.rho);
    if (!(rr > 0.0)) throw ConfigError("clt-flux requires rho strictly inside (0, 1)");

    const auto n = static_cast<std::size_t>(cfg.replicas);
    std::vector<std::vector<long long>> samples(cfg.times.size(),
                                                std::vector<long long>(n, 0));
    const auto blocks = split_blocks(cfg.replicas, workers);
    std::vector<SummaryMap> partials(blocks.size());
    run_blocks(blocks.size(), [&](std::size_t b) {
        SummaryMap& local = partials[b];
        for (double t : cfg.times) local[{t, "J"}];
        for (long long r = blocks[b].first; r < blocks[b].second; ++r) {
            EventStream stream(cfg.seed, static_cast<std::uint64_t>(r), window.bond_count());
            Configuration initial = sample_initial(rho, window, stream);
            Simulation sim(std::move(initial), SimulationOptions{.track_stirring = false});
            drive(sim, stream, cfg.times, [&](Simulation& s, std::size_t k) {
                const long long j = s.flux_crossings();
                local[{cfg.times[k], "J"}].accumulate(static_cast<double>(j));
                samples[k][static_cast<std::size_t>(r)] = j;
            });
        }
    });
    const SummaryMap merged = merge_worker_outputs(partials);

    // Jitter stream sits one past the last replica id, so it never collides
    // with a replica stream of the same seed.
    EventStream jitter(cfg.seed, static_cast<std::uint64_t>(cfg.replicas), 1);

    std::vector<ResultRow> rows;
    const double nd = static_cast<double>(cfg.replicas);
    for (std::size_t i = 0; i < cfg.times.size(); ++i) {
        const double t = cfg.times[i];
        const auto moments = moment_tests(summary_at(merged, t, "J"));
        RowSpec skew{.estimator = "skew",
                     .estimate = moments.skewness,
                     .std_error = std::sqrt(6.0 / nd),
                     .prediction = 0.0,
                     .has_std_error = true,
                     .has_prediction = true};
        rows.push_back(make_row(cfg, t, cfg.replicas, skew));
        RowSpec kurt{.estimator = "excess_kurt",
                     .estimate = moments.excess_kurtosis,
                     .std_error = std::sqrt(24.0 / nd),
                     .prediction = 0.0,
                     .has_std_error = true,
                     .has_prediction = true};
        rows.push_back(make_row(cfg, t, cfg.replicas, kurt));
        // Standardize by the exact finite-time variance, not the asymptote.
        const double sigma2 = rr * kernel[i].local_time;
        const auto ks = jittered_ks(samples[i], sigma2, jitter);
        RowSpec ksrow{.estimator = "ks_d", .estimate = ks.d_stat};
        rows.push_back(make_row(cfg, t, cfg.replicas, ksrow));
    }
    return rows;
}

std::vector<ResultRow> run_tagged(const ExperimentConfig& cfg, int workers) {
    require_positive_times(cfg, "tagged");
    if (!(cfg.rho > 0.0)) throw ConfigError("tagged requires rho > 0");
    const WindowSpec window = build_window(cfg.times.back(), cfg.tail_bound);
    const Density rho(cfg.rho);
    const double inv_rho = 1.0 / cfg.rho;

    const auto blocks = split_blocks(cfg.replicas, workers);
    std::vector<SummaryMap> partials(blocks.size());
    run_blocks(blocks.size(), [&](std::size_t b) {
        SummaryMap& local = partials[b];
        for (double t : cfg.times)
            for (const char* slot : {"X2", "D2"}) local[{t, slot}];
        for (long long r = blocks[b].first; r < blocks[b].second; ++r) {
            EventStream stream(cfg.seed, static_cast<std::uint64_t>(r), window.bond_count());
            Configuration initial = sample_initial(rho, window, stream, /*tag_origin=*/true);
            Simulation sim(std::move(initial),
                           SimulationOptions{.track_stirring = false, .track_tagged = true});
            drive(sim, stream, cfg.times, [&](Simulation& s, std::size_t k) {
                const double t = cfg.times[k];
                const double x = static_cast<double>(s.tagged_position());
                const double d = x - inv_rho * static_cast<double>(s.flux_crossings());
                local[{t, "X2"}].accumulate(x * x);
                local[{t, "D2"}].accumulate(d * d);
            });
        }
    });
    const SummaryMap merged = merge_worker_outputs(partials);

    const double sigma_bar2 = asymptotic_constants(rho).sigma_bar2;
    std::vector<ResultRow> rows;
    for (double t : cfg.times) {
        const double inv_sqrt_t = 1.0 / std::sqrt(t);
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("VX_over_sqrt_t", summary_at(merged, t, "X2"),
                                         sigma_bar2, inv_sqrt_t)));
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("E_XminusJoverRho_sq_over_sqrt_t",
                                         summary_at(merged, t, "D2"), 0.0, inv_sqrt_t)));
    }
    return rows;
}

std::vector<ResultRow> run_identity_check(const ExperimentConfig& cfg, int workers) {
    const WindowSpec window = build_window(cfg.times.back(), cfg.tail_bound);
    const Density rho(cfg.rho);

    const auto blocks = split_blocks(cfg.replicas, workers);
    std::vector<std::vector<long long>> violations(blocks.size(),
                                                   std::vector<long long>(cfg.times.size(), 0));
    run_blocks(blocks.size(), [&](std::size_t b) {
        for (long long r = blocks[b].first; r < blocks[b].second; ++r) {
            EventStream stream(cfg.seed, static_cast<std::uint64_t>(r), window.bond_count());
            Configuration initial = sample_initial(rho, window, stream, /*tag_origin=*/true);
            Simulation sim(std::move(initial),
                           SimulationOptions{.track_stirring = true, .track_tagged = true});
            drive(sim, stream, cfg.times, [&](Simulation& s, std::size_t k) {
                long long& bad = violations[b][k];
                if (s.flux_crossings() != s.flux_by_stirring()) ++bad;
                const auto [kp, km] = s.crossing_counts();
                if (kp != km) ++bad;
                const auto decomposition = s.decompose_flux();
                if (decomposition.sum() != s.flux_crossings()) ++bad;
                if (!s.matches_stirring_pushforward()) ++bad;
                try {
                    if (static_cast<long long>(s.tagged_position()) !=
                        y_position(s.config(), s.flux_crossings()))
                        ++bad;
                } catch (const std::out_of_range&) {
                    ++bad;
                }
            });
        }
    });

    std::vector<ResultRow> rows;
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
        long long total = 0;
        for (const auto& per_block : violations) total += per_block[k];
        RowSpec spec{.estimator = "max_pathwise_violations",
                     .estimate = static_cast<double>(total),
                     .prediction = 0.0,
                     .has_prediction = true};
        rows.push_back(make_row(cfg, cfg.times[k], cfg.replicas, spec));
    }
    return rows;
}

std::vector<ResultRow> run_decomposition(const ExperimentConfig& cfg, int workers) {
    const WindowSpec window = build_window(cfg.times.back(), cfg.tail_bound);
    const Density rho(cfg.rho);
    const double rr = cfg.rho * (1.0 - cfg.rho);

    const auto blocks = split_blocks(cfg.replicas, workers);
    std::vector<SummaryMap> partials(blocks.size());
    run_blocks(blocks.size(), [&](std::size_t b) {
        SummaryMap& local = partials[b];
        for (double t : cfg.times)
            for (const char* slot : {"A_plus", "A_minus", "wald"}) local[{t, slot}];
        for (long long r = blocks[b].first; r < blocks[b].second; ++r) {
            EventStream stream(cfg.seed, static_cast<std::uint64_t>(r), window.bond_count());
            Configuration initial = sample_initial(rho, window, stream);
            Simulation sim(std::move(initial), SimulationOptions{.track_stirring = true});
            drive(sim, stream, cfg.times, [&](Simulation& s, std::size_t k) {
                const double t = cfg.times[k];
                const auto d = s.decompose_flux();
                McSummary& plus = local[{t, "A_plus"}];
                McSummary& minus = local[{t, "A_minus"}];
                for (int a : d.a) {
                    plus.accumulate(a == 1 ? 1.0 : 0.0);
                    minus.accumulate(a == -1 ? 1.0 : 0.0);
                }
                const double j = static_cast<double>(s.flux_crossings());
                const double gap =
                    j * j - 2.0 * rr * static_cast<double>(s.crossing_counts().first);
                local[{t, "wald"}].accumulate(gap);
            });
        }
    });
    const SummaryMap merged = merge_worker_outputs(partials);

    std::vector<ResultRow> rows;
    for (double t : cfg.times) {
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("P_A_plus", summary_at(merged, t, "A_plus"), rr)));
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("P_A_minus", summary_at(merged, t, "A_minus"), rr)));
        rows.push_back(make_row(cfg, t, cfg.replicas,
                                mean_row("wald_gap", summary_at(merged, t, "wald"), 0.0)));
    }
    return rows;
}

std::vector<ResultRow> run_exact_tables(const ExperimentConfig& cfg) {
    const auto kernel = kernel_grid(cfg.times);
    const double rr = cfg.rho * (1.0 - cfg.rho);
    std::vector<ResultRow> rows;
    for (const auto& sample : kernel) {
        const struct {
            const char* name;
            double value;
        } entries[] = {{"local_time_R", sample.local_time},
                       {"expected_crossings", sample.expected_crossings},
                       {"predicted_EJ2", rr * sample.local_time}};
        for (const auto& e : entries) {
            RowSpec spec{.estimator = e.name,
                         .estimate = e.value,
                         .std_error = 0.0,
                         .prediction = e.value,
                         .has_std_error = true,
                         .has_prediction = true};
            rows.push_back(make_row(cfg, sample.t, 0, spec));
        }
    }
    return rows;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::variance_flux: return "variance-flux";
        case ExperimentKind::clt_flux: return "clt-flux";
        case ExperimentKind::tagged: return "tagged";
        case ExperimentKind::exact_tables: return "exact-tables";
        case ExperimentKind::identity_check: return "identity-check";
        case ExperimentKind::decomposition: return "decomposition";
    }
    return "unknown";
}

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig cfg;
    bool have_experiment = false;
    bool have_rho = false;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        if (auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) {
            const std::size_t eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ConfigError("malformed line (expected key = value): " + std::string(line));
            const std::string_view key = trim(line.substr(0, eq));
            const std::string_view value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError("malformed line (empty key or value): " + std::string(line));

            if (key == "experiment") {
                cfg.experiment = parse_experiment(value);
                have_experiment = true;
            } else if (key == "rho") {
                cfg.rho = parse_double(value, key);
                have_rho = true;
            } else if (key == "times") {
                cfg.times = parse_times(value);
            } else if (key == "replicas") {
                cfg.replicas = parse_integer<long long>(value, key);
            } else if (key == "seed") {
                cfg.seed = parse_integer<std::uint64_t>(value, key);
            } else if (key == "tail_bound") {
                cfg.tail_bound = parse_double(value, key);
            } else if (key == "output_path") {
                cfg.output_path = std::string(value);
            } else {
                throw ConfigError("unknown key '" + std::string(key) + "'");
            }
        }
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }

    if (!have_experiment) throw ConfigError("missing required key 'experiment'");
    if (!have_rho) throw ConfigError("missing required key 'rho'");
    validate_config(cfg);
    return cfg;
}

std::string config_template() {
    return
        "# ssep experiment configuration\n"
        "# experiment: variance-flux | clt-flux | tagged | exact-tables |\n"
        "#             identity-check | decomposition\n"
        "experiment = variance-flux\n"
        "rho = 0.5\n"
        "times = 1, 4, 16, 64\n"
        "replicas = 100000\n"
        "seed = 42\n"
        "# tail_bound = 1e-12\n"
        "# output_path = results.csv\n";
}

SummaryMap merge_worker_outputs(std::span<const SummaryMap> partials) {
    if (partials.empty()) throw std::invalid_argument("merge_worker_outputs: empty partial list");
    SummaryMap merged = partials.front();
    for (std::size_t i = 1; i < partials.size(); ++i) {
        const SummaryMap& part = partials[i];
        if (part.size() != merged.size())
            throw std::invalid_argument("merge_worker_outputs: key sets differ");
        auto it = merged.begin();
        for (const auto& [key, summary] : part) {
            if (it->first != key)
                throw std::invalid_argument("merge_worker_outputs: key sets differ");
            it->second.merge(summary);
            ++it;
        }
    }
    return merged;
}

std::vector<ResultRow> compute_experiment(const ExperimentConfig& cfg, int workers) {
    validate_config(cfg);
    if (workers < 1) throw ConfigError("workers must be >= 1");
    switch (cfg.experiment) {
        case ExperimentKind::variance_flux: return run_variance_flux(cfg, workers);
        case ExperimentKind::clt_flux: return run_clt_flux(cfg, workers);
        case ExperimentKind::tagged: return run_tagged(cfg, workers);
        case ExperimentKind::exact_tables: return run_exact_tables(cfg);
        case ExperimentKind::identity_check: return run_identity_check(cfg, workers);
        case ExperimentKind::decomposition: return run_decomposition(cfg, workers);
    }
    throw std::logic_error("compute_experiment: unreachable");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(std::span<const ResultRow> rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    out << "experiment,rho,t,n_replicas,estimator,estimate,std_error,prediction,z_score,seed\n";
    for (const auto& row : rows) {
        out << row.experiment << ',' << format_double(row.rho) << ','
            << format_double(row.t) << ',' << row.n_replicas << ','
            << row.estimator << ',' << format_double(row.estimate) << ',';
        if (row.has_std_error) out << format_double(row.std_error);
        out << ',';
        if (row.has_prediction) out << format_double(row.prediction);
        out << ',';
        if (row.has_z) out << format_double(row.z_score);
        out << ',' << row.seed << '\n';
    }
    if (!out) throw std::runtime_error("write_csv: write failed for " + path);
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, int workers) {
    auto rows = compute_experiment(cfg, workers);
    write_csv(rows, cfg.output_path);
    return rows;
}

bool has_z_breach(std::span<const ResultRow> rows, double threshold) {
    for (const auto& row : rows)
        if (row.has_z && std::abs(row.z_score) > threshold) return true;
    return false;
}

}  // namespace ssep
