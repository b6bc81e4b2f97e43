#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "maxscore/bootstrap.hpp"
#include "maxscore/dataset.hpp"
#include "maxscore/dgp.hpp"
#include "maxscore/errors.hpp"
#include "maxscore/io.hpp"
#include "maxscore/rng.hpp"
#include "maxscore/score.hpp"
#include "maxscore/smoothing.hpp"

namespace maxscore {

/// Runs fn(0), ..., fn(total-1) on up to `workers` threads. Results must be
/// written into index-addressed slots; the work distribution never influences
/// what any index computes.
inline void parallel_for_index(Eigen::Index total, int workers,
                               const std::function<void(Eigen::Index)>& fn) {
    if (workers <= 1 || total <= 1) {
        for (Eigen::Index i = 0; i < total; ++i) fn(i);
        return;
    }
    std::atomic<Eigen::Index> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto worker = [&]() {
        while (true) {
            const Eigen::Index i = next.fetch_add(1);
            if (i >= total) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    const int count = static_cast<int>(std::min<Eigen::Index>(workers, total));
    threads.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

struct ExperimentConfig {
    DgpSpec dgp;
    Eigen::Index n = 0;
    int replications = 0;
    std::vector<BootstrapScheme> schemes;
    double level = 0.95;
    Eigen::Index coordinate = 0;
    std::uint64_t master_seed = 0;
    int workers = 1;
    std::string output_path;
    OptimizerOptions optimizer;
    Eigen::Index smoothing_mc_size = 0;  // 0 = max(10n, 10^4)
};

struct CoverageRow {
    std::string scheme;
    Eigen::Index n = 0;
    Eigen::Index m = 0;  // subsample size; 0 when not applicable
    double coverage = 0.0;
    double avg_length = 0.0;
    int replications = 0;
    std::uint64_t seed = 0;
    long covered = 0;  // exact count behind `coverage`
    // secondary diagnostic: the same draws inverted without root reflection
    double direct_coverage = 0.0;
    double direct_avg_length = 0.0;
};

namespace detail {

// fixed branch indices of the per-replication stream tree; scheme indices
// occupy 0..|schemes|-1
inline constexpr std::uint64_t kDatasetStream = 1000;
inline constexpr std::uint64_t kCenterStream = 1001;
inline constexpr std::uint64_t kEstimateStream = 1002;

}  // namespace detail

inline void validate_config(const ExperimentConfig& config) {
    if (config.n < 1) throw ConfigError("config: n must be >= 1");
    if (config.replications < 1) throw ConfigError("config: replications must be >= 1");
    if (config.schemes.empty()) throw ConfigError("config: no bootstrap schemes");
    for (const auto& scheme : config.schemes) {
        if (scheme.replicates < 1) throw ConfigError("config: scheme B must be >= 1");
        if (scheme.kind == BootstrapScheme::Kind::MOutOfN &&
            !(scheme.gamma > 0.0 && scheme.gamma < 1.0)) {
            throw ConfigError("config: moon gamma must lie in (0,1)");
        }
    }
    if (!(config.level > 0.0 && config.level < 1.0)) {
        throw ConfigError("config: level must lie in (0,1)");
    }
    if (config.coordinate < 0 || config.coordinate >= config.dgp.dim) {
        throw ConfigError("config: coordinate out of range");
    }
    if (config.workers < 1) throw ConfigError("config: workers must be >= 1");
}

/// One full coverage study: per replication draw a dataset, estimate, run every
/// scheme's bootstrap, record whether the true coordinate is covered and the
/// interval length; aggregate per scheme. Deterministic in (config, seed)
/// regardless of worker count.
inline std::vector<CoverageRow> run_coverage_experiment(const ExperimentConfig& config) {
    validate_config(config);
    const Eigen::Index d = config.dgp.dim;
    const double truth = config.dgp.beta0[config.coordinate];
    const std::size_t n_schemes = config.schemes.size();

    const bool needs_smoothing = std::any_of(
        config.schemes.begin(), config.schemes.end(), [](const BootstrapScheme& s) {
            return s.kind == BootstrapScheme::Kind::Smoothed;
        });
    const Eigen::Index mc_size = (config.smoothing_mc_size > 0)
                                     ? config.smoothing_mc_size
                                     : default_smoothing_mc_size(config.n);

    struct ReplicationResult {
        std::vector<int> covered;
        std::vector<double> length;
        std::vector<int> direct_covered;
        std::vector<double> direct_length;
    };
    std::vector<ReplicationResult> results(static_cast<std::size_t>(config.replications));

    const RandomStream root(config.master_seed);
    parallel_for_index(config.replications, config.workers, [&](Eigen::Index r) {
        const RandomStream rep = root.child(static_cast<std::uint64_t>(r));
        RandomStream data_rng = rep.child(detail::kDatasetStream);
        const Dataset data = dgp_sample(config.dgp, config.n, data_rng);

        RandomStream estimate_rng = rep.child(detail::kEstimateStream);
        const SphereVector estimate = maximize_score(data, config.optimizer, estimate_rng).beta;

        std::optional<DensityModel> density;
        std::optional<RegressionModel> regression;
        std::optional<SmoothedSampler> sampler;
        if (needs_smoothing) {
            const BandwidthVector h = scott_bandwidths(data);
            density.emplace(data.x, h);
            regression.emplace(data.x, data.y, h);
            RandomStream center_rng = rep.child(detail::kCenterStream);
            SphereVector center = smoothed_argmax(
                *density, [&](const Eigen::VectorXd& x) { return nw_eval(*regression, x); },
                mc_size, config.optimizer, center_rng);
            sampler = make_smoothed_sampler(*density, *regression, std::move(center));
        }

        ReplicationResult& slot = results[static_cast<std::size_t>(r)];
        slot.covered.resize(n_schemes);
        slot.length.resize(n_schemes);
        slot.direct_covered.resize(n_schemes);
        slot.direct_length.resize(n_schemes);
        for (std::size_t s = 0; s < n_schemes; ++s) {
            const RandomStream scheme_stream = rep.child(static_cast<std::uint64_t>(s));
            const BootstrapDistribution dist = bootstrap_distribution(
                data, config.schemes[s], scheme_stream, config.optimizer,
                sampler ? &*sampler : nullptr, &estimate);
            const ConfidenceInterval ci =
                percentile_ci(dist, estimate, config.n, config.level, config.coordinate);
            slot.covered[s] = (ci.lower <= truth && truth <= ci.upper) ? 1 : 0;
            slot.length[s] = ci.upper - ci.lower;
            const ConfidenceInterval direct =
                percentile_ci_direct(dist, estimate, config.n, config.level, config.coordinate);
            slot.direct_covered[s] = (direct.lower <= truth && truth <= direct.upper) ? 1 : 0;
            slot.direct_length[s] = direct.upper - direct.lower;
        }
    });

    std::vector<CoverageRow> rows(n_schemes);
    for (std::size_t s = 0; s < n_schemes; ++s) {
        CoverageRow& row = rows[s];
        row.scheme = config.schemes[s].label();
        row.n = config.n;
        row.m = (config.schemes[s].kind == BootstrapScheme::Kind::MOutOfN)
                    ? moon_m(config.n, config.schemes[s].gamma)
                    : 0;
        row.replications = config.replications;
        row.seed = config.master_seed;
        long covered = 0, direct_covered = 0;
        double length_sum = 0.0, direct_length_sum = 0.0;
        for (const auto& res : results) {
            covered += res.covered[s];
            length_sum += res.length[s];
            direct_covered += res.direct_covered[s];
            direct_length_sum += res.direct_length[s];
        }
        row.covered = covered;
        row.coverage = static_cast<double>(covered) / static_cast<double>(config.replications);
        row.avg_length = length_sum / static_cast<double>(config.replications);
        row.direct_coverage =
            static_cast<double>(direct_covered) / static_cast<double>(config.replications);
        row.direct_avg_length = direct_length_sum / static_cast<double>(config.replications);
    }
    return rows;
}

inline void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows) {
    os << "scheme,n,m,coverage,avg_length,replications,seed\n";
    for (const auto& row : rows) {
        os << row.scheme << ',' << row.n << ',';
        if (row.m > 0) os << row.m;
        os << ',' << format_double(row.coverage) << ',' << format_double(row.avg_length) << ','
           << row.replications << ',' << format_uint(row.seed) << '\n';
    }
}

inline void write_coverage_csv(const std::string& path, const std::vector<CoverageRow>& rows) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    write_coverage_csv(os, rows);
}

struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    long count = 0;
    double density = 0.0;
};

/// Equal-width bins spanning [min, max]; densities integrate to one. A
/// degenerate span (all samples equal) falls back to unit-width bins starting
/// at the common value.
inline std::vector<HistogramBin> make_histogram(const std::vector<double>& samples, int bins) {
    if (bins < 1) throw ConfigError("make_histogram: bins must be >= 1");
    if (samples.empty()) throw EmptySample("make_histogram: empty sample");
    const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *lo_it;
    double width = (*hi_it - lo) / static_cast<double>(bins);
    if (width <= 0.0) width = 1.0;
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int b = 0; b < bins; ++b) {
        out[static_cast<std::size_t>(b)].left = lo + width * b;
        out[static_cast<std::size_t>(b)].right = lo + width * (b + 1);
    }
    for (const double v : samples) {
        auto b = static_cast<long>((v - lo) / width);
        b = std::clamp<long>(b, 0, bins - 1);
        ++out[static_cast<std::size_t>(b)].count;
    }
    const double total = static_cast<double>(samples.size());
    for (auto& bin : out) {
        bin.density = static_cast<double>(bin.count) / (total * width);
    }
    return out;
}

inline void export_histogram(const std::vector<double>& samples, int bins, std::ostream& os) {
    const auto hist = make_histogram(samples, bins);
    os << "bin_left,bin_right,count,density\n";
    for (const auto& bin : hist) {
        os << format_double(bin.left) << ',' << format_double(bin.right) << ',' << bin.count
           << ',' << format_double(bin.density) << '\n';
    }
}

inline void export_histogram(const std::vector<double>& samples, int bins,
                             const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    export_histogram(samples, bins, os);
}

}  // namespace maxscore
