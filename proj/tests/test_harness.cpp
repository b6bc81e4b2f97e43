#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "maxscore/harness.hpp"
#include "maxscore/limit_law.hpp"

using namespace maxscore;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig config{DgpSpec::hetero_normal(2)};
    config.n = 60;
    config.replications = 12;
    config.schemes = {BootstrapScheme::classical(20), BootstrapScheme::m_out_of_n(0.5, 20),
                      BootstrapScheme::smoothed(20)};
    config.level = 0.9;
    config.coordinate = 0;
    config.master_seed = 321;
    config.workers = 1;
    config.smoothing_mc_size = 2000;
    return config;
}

}  // namespace

TEST_CASE("config validation rejects bad configurations before any work", "[harness]") {
    ExperimentConfig config = small_config();
    config.replications = 0;
    REQUIRE_THROWS_AS(run_coverage_experiment(config), ConfigError);

    config = small_config();
    config.level = 1.0;
    REQUIRE_THROWS_AS(run_coverage_experiment(config), ConfigError);

    config = small_config();
    config.coordinate = 2;
    REQUIRE_THROWS_AS(run_coverage_experiment(config), ConfigError);

    config = small_config();
    config.schemes.clear();
    REQUIRE_THROWS_AS(run_coverage_experiment(config), ConfigError);
}

TEST_CASE("coverage rows carry exact counts", "[harness][mc]") {
    const ExperimentConfig config = small_config();
    const auto rows = run_coverage_experiment(config);
    REQUIRE(rows.size() == 3);
    REQUIRE(rows[0].scheme == "classical");
    REQUIRE(rows[1].scheme == "moon[0.5]");
    REQUIRE(rows[1].m == moon_m(60, 0.5));
    REQUIRE(rows[2].scheme == "smoothed");
    for (const auto& row : rows) {
        REQUIRE(row.replications == config.replications);
        REQUIRE(row.n == config.n);
        REQUIRE(row.seed == config.master_seed);
        REQUIRE(row.coverage ==
                static_cast<double>(row.covered) / static_cast<double>(row.replications));
        REQUIRE(row.coverage >= 0.0);
        REQUIRE(row.coverage <= 1.0);
        REQUIRE(row.avg_length >= 0.0);
        REQUIRE(std::abs(row.coverage * row.replications -
                         static_cast<double>(row.covered)) < 1e-9);
    }
}

TEST_CASE("coverage experiment is deterministic across worker counts", "[harness][mc]") {
    ExperimentConfig config = small_config();
    std::vector<std::string> outputs;
    for (const int workers : {1, 2, 8}) {
        config.workers = workers;
        const auto rows = run_coverage_experiment(config);
        std::ostringstream os;
        write_coverage_csv(os, rows);
        outputs.push_back(os.str());
    }
    REQUIRE(outputs[0] == outputs[1]);
    REQUIRE(outputs[0] == outputs[2]);
}

TEST_CASE("reference scheme recovers nominal coverage against a direct Monte Carlo law",
          "[harness][mc]") {
    const auto spec = DgpSpec::hetero_normal(2);
    const Eigen::Index n = 400;

    // long pre-simulated reference for the rate-scaled estimator distribution
    const int reference_size = 2000;
    Eigen::MatrixXd reference(reference_size, 2);
    const RandomStream ref_root(555);
    for (int k = 0; k < reference_size; ++k) {
        RandomStream rng = ref_root.child(static_cast<std::uint64_t>(k));
        const Dataset data = dgp_sample(spec, n, rng);
        const SphereVector beta = maximize_score_2d(data).beta;
        reference.row(k) =
            std::cbrt(static_cast<double>(n)) * (beta.coords() - spec.beta0.coords()).transpose();
    }

    ExperimentConfig config{spec};
    config.n = n;
    config.replications = 300;
    config.schemes = {BootstrapScheme::reference(reference)};
    config.level = 0.95;
    config.master_seed = 999;
    config.workers = 2;
    const auto rows = run_coverage_experiment(config);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].coverage == Catch::Approx(0.95).margin(0.04));
}

TEST_CASE("histogram hand examples", "[harness]") {
    const auto single = make_histogram({1.5}, 1);
    REQUIRE(single.size() == 1);
    REQUIRE(single[0].count == 1);
    REQUIRE(single[0].density == 1.0);  // degenerate span falls back to unit width

    const auto hist = make_histogram({0.0, 0.1, 0.2, 0.35, 0.9, 1.0}, 4);
    long total = 0;
    double mass = 0.0;
    for (const auto& bin : hist) {
        total += bin.count;
        mass += bin.density * (bin.right - bin.left);
    }
    REQUIRE(total == 6);
    REQUIRE(mass == Catch::Approx(1.0).margin(1e-9));

    REQUIRE_THROWS_AS(make_histogram({}, 4), EmptySample);
    REQUIRE_THROWS_AS(make_histogram({1.0}, 0), ConfigError);
}

TEST_CASE("histogram of uniform draws is flat", "[harness][mc]") {
    RandomStream rng(77);
    std::vector<double> samples(100000);
    for (auto& s : samples) s = rng.uniform01();
    const auto hist = make_histogram(samples, 10);
    for (const auto& bin : hist) {
        REQUIRE(bin.density == Catch::Approx(1.0).margin(0.05));
    }
}

TEST_CASE("histogram export format", "[harness]") {
    std::ostringstream os;
    export_histogram({0.0, 0.5, 1.0, 1.5}, 2, os);
    const std::string expected =
        "bin_left,bin_right,count,density\n"
        "0,0.75,2,0.6666666666666666\n"
        "0.75,1.5,2,0.6666666666666666\n";
    REQUIRE(os.str() == expected);
}

TEST_CASE("parallel_for_index covers every index exactly once", "[harness]") {
    std::vector<std::atomic<int>> hits(5000);
    parallel_for_index(5000, 8, [&](Eigen::Index i) { ++hits[static_cast<std::size_t>(i)]; });
    for (const auto& h : hits) REQUIRE(h.load() == 1);
}
