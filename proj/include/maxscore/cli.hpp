#pragma once

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "maxscore/bootstrap.hpp"
#include "maxscore/dataset.hpp"
#include "maxscore/dgp.hpp"
#include "maxscore/errors.hpp"
#include "maxscore/harness.hpp"
#include "maxscore/limit_law.hpp"
#include "maxscore/score.hpp"
#include "maxscore/smoothing.hpp"

namespace maxscore::cli {

using nlohmann::json;

namespace detail {

inline void write_text(const std::string& out_path, const std::string& content) {
    if (out_path.empty()) {
        std::cout << content;
        return;
    }
    std::ofstream os(out_path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + out_path);
    os << content;
}

inline json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

inline Dataset load_validated_dataset(const std::string& path) {
    Dataset data = read_dataset_csv(path);
    const ValidationReport report = validate_dataset(data);
    if (!report.ok()) {
        std::string message = "invalid dataset: ";
        for (std::size_t i = 0; i < report.violations.size(); ++i) {
            if (i > 0) message += "; ";
            message += report.violations[i];
        }
        throw DataError(message);
    }
    return data;
}

inline DgpSpec dgp_from_name(const std::string& model, Eigen::Index dim) {
    if (model == "hetero-normal") return DgpSpec::hetero_normal(dim);
    if (model == "hetero-t3" || model == "hetero-student-t3") {
        return DgpSpec::hetero_student_t3(dim);
    }
    throw ConfigError("unknown model: " + model);
}

inline std::string draws_csv(const BootstrapDistribution& dist) {
    std::ostringstream os;
    os << "rep";
    for (Eigen::Index j = 0; j < dist.draws.cols(); ++j) os << ",delta_" << (j + 1);
    os << '\n';
    for (Eigen::Index b = 0; b < dist.draws.rows(); ++b) {
        os << b;
        for (Eigen::Index j = 0; j < dist.draws.cols(); ++j) {
            os << ',' << format_double(dist.draws(b, j));
        }
        os << '\n';
    }
    return os.str();
}

inline json draws_metadata(const BootstrapDistribution& dist) {
    json meta;
    meta["scheme"] = dist.scheme.label();
    meta["B"] = dist.scheme.replicates;
    meta["m"] = dist.m;
    meta["seed"] = dist.seed;
    meta["center"] = vector_to_json(dist.center.coords());
    meta["rate"] = dist.rate;
    return meta;
}

inline ExperimentConfig parse_experiment_config(const json& cfg) {
    if (!cfg.contains("dgp")) throw ConfigError("config: missing dgp");
    const json& dgp = cfg.at("dgp");
    const auto dim = dgp.at("d").get<Eigen::Index>();
    const std::string kind = dgp.value("kind", "hetero-normal");
    DgpSpec spec = dgp_from_name(kind, dim);
    if (dgp.contains("beta0")) {
        const auto arr = dgp.at("beta0").get<std::vector<double>>();
        Eigen::VectorXd b0 = Eigen::Map<const Eigen::VectorXd>(arr.data(),
                                                               static_cast<Eigen::Index>(arr.size()));
        spec = (spec.kind == DgpKind::HeteroNormal)
                   ? DgpSpec::hetero_normal(dim, SphereVector(b0))
                   : DgpSpec::hetero_student_t3(dim, SphereVector(b0));
    }
    ExperimentConfig config{std::move(spec)};
    config.n = cfg.at("n").get<Eigen::Index>();
    config.replications = cfg.at("replications").get<int>();
    for (const json& s : cfg.at("schemes")) {
        const std::string sk = s.at("kind").get<std::string>();
        const int B = s.at("B").get<int>();
        if (sk == "classical") {
            config.schemes.push_back(BootstrapScheme::classical(B));
        } else if (sk == "smoothed") {
            config.schemes.push_back(BootstrapScheme::smoothed(B));
        } else if (sk == "moon") {
            config.schemes.push_back(BootstrapScheme::m_out_of_n(s.at("gamma").get<double>(), B));
        } else {
            throw ConfigError("config: unknown scheme kind " + sk);
        }
    }
    config.level = cfg.value("level", 0.95);
    config.coordinate = cfg.value("coordinate", Eigen::Index{0});
    config.master_seed = cfg.value("master_seed", std::uint64_t{0});
    config.workers = cfg.value("workers", 1);
    config.output_path = cfg.value("output_path", std::string{});
    config.smoothing_mc_size = cfg.value("smoothing_mc_size", Eigen::Index{0});
    if (cfg.contains("optimizer")) {
        const json& opt = cfg.at("optimizer");
        config.optimizer.restarts = opt.value("restarts", config.optimizer.restarts);
        config.optimizer.grid_size = opt.value("grid_size", config.optimizer.grid_size);
        config.optimizer.refine_iters = opt.value("refine_iters", config.optimizer.refine_iters);
        config.optimizer.tolerance = opt.value("tolerance", config.optimizer.tolerance);
    }
    return config;
}

inline std::vector<double> read_csv_column(const std::string& path, std::string column) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open: " + path);
    std::string line;
    if (!std::getline(is, line)) throw DataError("empty CSV: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    std::size_t col = 0;
    if (column.empty()) {
        column = header.front();
    }
    bool found = false;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == column) {
            col = j;
            found = true;
            break;
        }
    }
    if (!found) throw DataError("column not found in " + path + ": " + column);
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (col >= fields.size()) throw DataError("short row in " + path);
        double v = 0.0;
        if (!parse_double(fields[col], v)) throw DataError("unparseable number in " + path);
        values.push_back(v);
    }
    return values;
}

}  // namespace detail

/// Command-line entry point; returns the process exit code
/// (0 ok, 1 usage, 2 data error, 3 numerical failure).
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"maximum score estimation with bootstrap inference"};
    app.require_subcommand(1);
    // let the global --seed/--workers/--out appear after the subcommand name
    app.fallthrough();

    std::uint64_t seed = 0;
    int workers = 0;  // 0 = take from config / default 1
    std::string out_path;
    app.add_option("--seed", seed, "master random seed (env MAXSCORE_SEED overrides)");
    app.add_option("--workers", workers, "worker threads (env MAXSCORE_WORKERS overrides)");
    app.add_option("--out", out_path, "output path (default: stdout)");

    OptimizerOptions optimizer;
    const auto add_optimizer_flags = [&](CLI::App* cmd) {
        cmd->add_option("--restarts", optimizer.restarts, "random restarts (d >= 3 search)");
        cmd->add_option("--grid-size", optimizer.grid_size, "coarse sphere grid size");
        cmd->add_option("--refine-iters", optimizer.refine_iters, "pattern search iterations");
        cmd->add_option("--opt-tolerance", optimizer.tolerance, "pattern search step floor");
    };

    // estimate
    std::string data_path;
    auto* estimate_cmd = app.add_subcommand("estimate", "maximum score estimate from a dataset CSV");
    estimate_cmd->add_option("--data", data_path, "dataset CSV (x1,...,xd,y)")->required();
    add_optimizer_flags(estimate_cmd);

    // smooth-center
    Eigen::Index mc_size = 0;
    auto* center_cmd =
        app.add_subcommand("smooth-center", "smoothed-criterion maximizer from a dataset CSV");
    center_cmd->add_option("--data", data_path, "dataset CSV")->required();
    center_cmd->add_option("--mc-size", mc_size, "Monte Carlo sample size (0 = max(10n, 10^4))");
    add_optimizer_flags(center_cmd);

    // bootstrap
    std::string scheme_name = "classical";
    double gamma = 0.5;
    int replicates = 500;
    auto* bootstrap_cmd = app.add_subcommand("bootstrap", "bootstrap draws of the scaled estimator");
    bootstrap_cmd->add_option("--data", data_path, "dataset CSV")->required();
    bootstrap_cmd->add_option("--scheme", scheme_name, "classical | smoothed | moon");
    bootstrap_cmd->add_option("--gamma", gamma, "moon subsample exponent");
    bootstrap_cmd->add_option("--B", replicates, "bootstrap replicates");
    bootstrap_cmd->add_option("--mc-size", mc_size, "smoothed centering MC size");
    add_optimizer_flags(bootstrap_cmd);

    // ci
    std::string draws_path, estimate_str;
    double level = 0.95;
    Eigen::Index coordinate = 0;
    Eigen::Index ci_n = 0;
    auto* ci_cmd = app.add_subcommand("ci", "percentile confidence interval from exported draws");
    ci_cmd->add_option("--draws", draws_path, "draws CSV (rep,delta_1,...)")->required();
    ci_cmd->add_option("--estimate", estimate_str, "comma-separated estimate vector")->required();
    ci_cmd->add_option("--n", ci_n, "original sample size")->required();
    ci_cmd->add_option("--level", level, "confidence level");
    ci_cmd->add_option("--coordinate", coordinate, "coordinate index (0-based)");

    // coverage
    std::string config_path;
    auto* coverage_cmd = app.add_subcommand("coverage", "coverage/length table from a JSON config");
    coverage_cmd->add_option("--config", config_path, "experiment config JSON")->required();

    // limit
    std::string model_name;
    Eigen::Index model_dim = 2;
    double noise = 0.0, quad_coef = 0.0, first_scale = 1.0;
    double half_width = 6.0, step = 0.005;
    Eigen::Index limit_draws = 10000;
    long quad_points = 200000;
    auto* limit_cmd = app.add_subcommand("limit", "simulate the limit-law argmax distribution");
    limit_cmd->add_option("--a", noise, "noise scale of a*Z(s) - b*s^2");
    limit_cmd->add_option("--b", quad_coef, "quadratic drift coefficient");
    limit_cmd->add_option("--first-coord-scale", first_scale, "scale for the reported draws");
    limit_cmd->add_option("--model", model_name, "derive constants: hetero-normal | hetero-t3");
    limit_cmd->add_option("--dim", model_dim, "model dimension d");
    limit_cmd->add_option("--half-width", half_width, "grid half-width L");
    limit_cmd->add_option("--step", step, "grid step");
    limit_cmd->add_option("--draws", limit_draws, "number of argmax draws");
    limit_cmd->add_option("--quad-points", quad_points, "quadrature budget for model constants");

    // reconstruct-latent
    Eigen::Index latent_n = 0;
    auto* latent_cmd =
        app.add_subcommand("reconstruct-latent", "latent errors consistent with a model's kappa");
    latent_cmd->add_option("--model", model_name, "hetero-normal | hetero-t3")->required();
    latent_cmd->add_option("--dim", model_dim, "model dimension d");
    latent_cmd->add_option("--n", latent_n, "number of draws")->required();

    // hist
    std::string input_path, column;
    int bins = 30;
    auto* hist_cmd = app.add_subcommand("hist", "histogram CSV from a sample column");
    hist_cmd->add_option("--input", input_path, "input CSV")->required();
    hist_cmd->add_option("--column", column, "column name (default: first)");
    hist_cmd->add_option("--bins", bins, "number of bins");

    try {
        app.parse(argc, argv);

        if (const char* env_seed = std::getenv("MAXSCORE_SEED")) {
            seed = std::strtoull(env_seed, nullptr, 10);
        }
        if (const char* env_workers = std::getenv("MAXSCORE_WORKERS")) {
            workers = static_cast<int>(std::strtol(env_workers, nullptr, 10));
        }

        if (estimate_cmd->parsed()) {
            const Dataset data = detail::load_validated_dataset(data_path);
            RandomStream rng = RandomStream(seed).child(maxscore::detail::kEstimateStream);
            const ScoreMaximum result = maximize_score(data, optimizer, rng);
            json out;
            out["beta"] = detail::vector_to_json(result.beta.coords());
            out["score"] = result.value;
            out["n"] = data.n();
            out["d"] = data.dim();
            out["seed"] = seed;
            detail::write_text(out_path, out.dump(2) + "\n");
            return 0;
        }

        if (center_cmd->parsed()) {
            const Dataset data = detail::load_validated_dataset(data_path);
            const BandwidthVector h = scott_bandwidths(data);
            const DensityModel density(data.x, h);
            const RegressionModel regression(data.x, data.y, h);
            const Eigen::Index m = (mc_size > 0) ? mc_size : default_smoothing_mc_size(data.n());
            RandomStream rng = RandomStream(seed).child(maxscore::detail::kCenterStream);
            const SphereVector beta = smoothed_argmax(
                density, [&](const Eigen::VectorXd& x) { return nw_eval(regression, x); }, m,
                optimizer, rng);
            json out;
            out["beta_tilde"] = detail::vector_to_json(beta.coords());
            out["bandwidths"] = detail::vector_to_json(h.h);
            out["mc_size"] = m;
            out["n"] = data.n();
            out["d"] = data.dim();
            out["seed"] = seed;
            detail::write_text(out_path, out.dump(2) + "\n");
            return 0;
        }

        if (bootstrap_cmd->parsed()) {
            const Dataset data = detail::load_validated_dataset(data_path);
            BootstrapScheme scheme = BootstrapScheme::classical(replicates);
            if (scheme_name == "moon") {
                scheme = BootstrapScheme::m_out_of_n(gamma, replicates);
            } else if (scheme_name == "smoothed") {
                scheme = BootstrapScheme::smoothed(replicates);
            } else if (scheme_name != "classical") {
                throw ConfigError("unknown scheme: " + scheme_name);
            }
            const RandomStream root(seed);
            RandomStream estimate_rng = root.child(maxscore::detail::kEstimateStream);
            const SphereVector estimate = maximize_score(data, optimizer, estimate_rng).beta;

            std::optional<BandwidthVector> h;
            std::optional<DensityModel> density;
            std::optional<RegressionModel> regression;
            std::optional<SmoothedSampler> sampler;
            if (scheme.kind == BootstrapScheme::Kind::Smoothed) {
                h.emplace(scott_bandwidths(data));
                density.emplace(data.x, *h);
                regression.emplace(data.x, data.y, *h);
                const Eigen::Index m =
                    (mc_size > 0) ? mc_size : default_smoothing_mc_size(data.n());
                RandomStream center_rng = root.child(maxscore::detail::kCenterStream);
                SphereVector center = smoothed_argmax(
                    *density, [&](const Eigen::VectorXd& x) { return nw_eval(*regression, x); },
                    m, optimizer, center_rng);
                sampler = make_smoothed_sampler(*density, *regression, std::move(center));
            }
            const BootstrapDistribution dist =
                bootstrap_distribution(data, scheme, root.child(0), optimizer,
                                       sampler ? &*sampler : nullptr, &estimate);
            json meta = detail::draws_metadata(dist);
            meta["seed"] = seed;
            if (h) meta["bandwidths"] = detail::vector_to_json(h->h);
            detail::write_text(out_path, detail::draws_csv(dist));
            if (!out_path.empty()) {
                std::ofstream os(out_path + ".meta.json", std::ios::binary);
                if (!os) throw DataError("cannot open for writing: " + out_path + ".meta.json");
                os << meta.dump(2) << "\n";
            }
            return 0;
        }

        if (ci_cmd->parsed()) {
            std::vector<double> estimate_values;
            {
                std::istringstream ss(estimate_str);
                std::string tok;
                while (std::getline(ss, tok, ',')) {
                    double v = 0.0;
                    if (!parse_double(tok, v)) throw ConfigError("bad --estimate entry: " + tok);
                    estimate_values.push_back(v);
                }
            }
            if (estimate_values.empty()) throw ConfigError("--estimate is empty");
            const SphereVector estimate(Eigen::Map<const Eigen::VectorXd>(
                estimate_values.data(), static_cast<Eigen::Index>(estimate_values.size())));
            const std::vector<double> column = detail::read_csv_column(
                draws_path, "delta_" + format_int(coordinate + 1));
            if (column.size() < 2) throw InsufficientDraws("ci: need at least two draws");
            BootstrapDistribution dist;
            dist.draws.resize(static_cast<Eigen::Index>(column.size()), estimate.dim());
            dist.draws.setZero();
            for (std::size_t b = 0; b < column.size(); ++b) {
                dist.draws(static_cast<Eigen::Index>(b), coordinate) = column[b];
            }
            dist.center = estimate;
            dist.rate = std::cbrt(static_cast<double>(ci_n));
            const ConfidenceInterval ci = percentile_ci(dist, estimate, ci_n, level, coordinate);
            json out;
            out["lower"] = ci.lower;
            out["upper"] = ci.upper;
            out["level"] = ci.level;
            out["coordinate"] = ci.coordinate;
            detail::write_text(out_path, out.dump(2) + "\n");
            return 0;
        }

        if (coverage_cmd->parsed()) {
            std::ifstream is(config_path, std::ios::binary);
            if (!is) throw DataError("cannot open config: " + config_path);
            json cfg = json::parse(is);
            ExperimentConfig config = detail::parse_experiment_config(cfg);
            if (app.count("--seed") > 0 || std::getenv("MAXSCORE_SEED") != nullptr) {
                config.master_seed = seed;
            }
            if (workers > 0) config.workers = workers;
            const std::vector<CoverageRow> rows = run_coverage_experiment(config);
            std::ostringstream os;
            write_coverage_csv(os, rows);
            const std::string target = !out_path.empty() ? out_path : config.output_path;
            detail::write_text(target, os.str());
            return 0;
        }

        if (limit_cmd->parsed()) {
            LimitProcessSpec spec;
            json meta;
            if (!model_name.empty()) {
                const DgpSpec dgp = detail::dgp_from_name(model_name, model_dim);
                const HyperplaneBasis basis = hyperplane_basis(dgp.beta0);
                QuadratureConfig quad;
                quad.support_radius = std::sqrt(static_cast<double>(model_dim));
                quad.points = quad_points;
                const auto density = [&](const Eigen::VectorXd& x) {
                    return covariate_density(dgp, x);
                };
                const auto slope = [&](const Eigen::VectorXd& xi) {
                    return hyperplane_kappa_slope(dgp, basis.lift(xi));
                };
                const Eigen::MatrixXd v = drift_matrix(slope, density, basis, quad);
                if (model_dim == 2) {
                    Eigen::VectorXd one(1);
                    one << 1.0;
                    const double var_slope = sigma_cov(one, one, density, basis, quad);
                    spec = LimitProcessSpec::scalar(std::sqrt(var_slope), 0.5 * v(0, 0),
                                                    half_width, step, basis.h(0, 0));
                    meta["a"] = spec.noise_scale;
                    meta["b"] = 0.5 * v(0, 0);
                } else {
                    spec.drift = v;
                    spec.covariance = [density, basis, quad](const Eigen::VectorXd& s,
                                                             const Eigen::VectorXd& t) {
                        return sigma_cov(s, t, density, basis, quad);
                    };
                    spec.grid_half_width = half_width;
                    spec.grid_step = step;
                    json vj = json::array();
                    for (Eigen::Index r = 0; r < v.rows(); ++r) {
                        vj.push_back(detail::vector_to_json(v.row(r)));
                    }
                    meta["drift"] = vj;
                }
                meta["model"] = model_name;
                meta["d"] = model_dim;
            } else {
                if (!(noise >= 0.0) || quad_coef <= 0.0) {
                    throw ConfigError("limit: give --model or both --a and --b > 0");
                }
                spec = LimitProcessSpec::scalar(noise, quad_coef, half_width, step, first_scale);
                meta["a"] = noise;
                meta["b"] = quad_coef;
            }
            meta["grid_half_width"] = spec.grid_half_width;
            meta["grid_step"] = spec.grid_step;
            meta["first_coord_scale"] = spec.first_coord_scale;
            meta["draws"] = limit_draws;
            meta["seed"] = seed;
            RandomStream rng(seed);
            const LimitSample sample = simulate_limit_argmax(spec, limit_draws, rng);
            meta["boundary_hits"] = sample.boundary_hits;
            std::ostringstream os;
            const Eigen::Index dims = sample.argmax_draws.cols();
            if (dims == 1) {
                os << "s_star\n";
                for (Eigen::Index r = 0; r < sample.argmax_draws.rows(); ++r) {
                    os << format_double(sample.argmax_draws(r, 0)) << '\n';
                }
            } else {
                for (Eigen::Index j = 0; j < dims; ++j) {
                    os << (j == 0 ? "" : ",") << "s_" << (j + 1);
                }
                os << '\n';
                for (Eigen::Index r = 0; r < sample.argmax_draws.rows(); ++r) {
                    for (Eigen::Index j = 0; j < dims; ++j) {
                        os << (j == 0 ? "" : ",") << format_double(sample.argmax_draws(r, j));
                    }
                    os << '\n';
                }
            }
            detail::write_text(out_path, os.str());
            if (!out_path.empty()) {
                std::ofstream ms(out_path + ".meta.json", std::ios::binary);
                if (!ms) throw DataError("cannot open for writing: " + out_path + ".meta.json");
                ms << meta.dump(2) << "\n";
            }
            return 0;
        }

        if (latent_cmd->parsed()) {
            const DgpSpec dgp = detail::dgp_from_name(model_name, model_dim);
            RandomStream rng(seed);
            std::ostringstream os;
            for (Eigen::Index j = 0; j < model_dim; ++j) os << 'v' << (j + 1) << ',';
            os << "u,w\n";
            for (Eigen::Index i = 0; i < latent_n; ++i) {
                Eigen::VectorXd v(model_dim);
                for (Eigen::Index j = 0; j < model_dim; ++j) v[j] = rng.uniform(-1.0, 1.0);
                const LatentDraw draw = reconstruct_latent(
                    [&](const Eigen::VectorXd& x) { return kappa_true(dgp, x); }, dgp.beta0, v,
                    rng);
                for (Eigen::Index j = 0; j < model_dim; ++j) {
                    os << format_double(draw.v[j]) << ',';
                }
                os << format_double(draw.u) << ',' << draw.w << '\n';
            }
            detail::write_text(out_path, os.str());
            return 0;
        }

        if (hist_cmd->parsed()) {
            const std::vector<double> values = detail::read_csv_column(input_path, column);
            std::ostringstream os;
            export_histogram(values, bins, os);
            detail::write_text(out_path, os.str());
            return 0;
        }

        return 1;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace maxscore::cli
