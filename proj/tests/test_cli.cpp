#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "maxscore/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run(const std::vector<std::string>& args) {
    std::vector<std::string> full = {"maxscore"};
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& a : full) argv.push_back(a.c_str());
    return maxscore::cli::run_cli(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("maxscore_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_demo_dataset(const std::string& path, std::uint64_t seed, Eigen::Index n) {
    maxscore::RandomStream rng(seed);
    const maxscore::Dataset data =
        maxscore::dgp_sample(maxscore::DgpSpec::hetero_normal(2), n, rng);
    maxscore::write_dataset_csv(path, data);
}

}  // namespace

TEST_CASE("estimate emits a unit-norm vector and is byte-deterministic", "[cli]") {
    TempDir tmp;
    const std::string data = tmp.file("data.csv");
    write_demo_dataset(data, 42, 80);

    const std::string out1 = tmp.file("est1.json");
    const std::string out2 = tmp.file("est2.json");
    REQUIRE(run({"estimate", "--data", data, "--seed", "42", "--out", out1}) == 0);
    REQUIRE(run({"estimate", "--data", data, "--seed", "42", "--out", out2}) == 0);
    REQUIRE(slurp(out1) == slurp(out2));

    const json parsed = json::parse(slurp(out1));
    const auto beta = parsed.at("beta").get<std::vector<double>>();
    REQUIRE(beta.size() == 2);
    double norm = 0.0;
    for (const double b : beta) norm += b * b;
    REQUIRE(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    REQUIRE(parsed.at("n").get<int>() == 80);
}

TEST_CASE("usage and data errors map to exit codes", "[cli]") {
    REQUIRE(run({"no-such-command"}) == 1);
    REQUIRE(run({"estimate"}) == 1);  // missing --data
    REQUIRE(run({"estimate", "--data", "/nonexistent/file.csv"}) == 2);

    TempDir tmp;
    const std::string bad = tmp.file("bad.csv");
    {
        std::ofstream os(bad);
        os << "x1,x2,y\n0.5,0.5,2\n";
    }
    REQUIRE(run({"estimate", "--data", bad}) == 2);

    const std::string one_dim = tmp.file("one.csv");
    {
        std::ofstream os(one_dim);
        os << "x1,y\n0.5,1\n-0.5,0\n";
    }
    REQUIRE(run({"estimate", "--data", one_dim}) == 2);
}

TEST_CASE("smooth-center reports the bandwidths", "[cli]") {
    TempDir tmp;
    const std::string data = tmp.file("data.csv");
    write_demo_dataset(data, 7, 120);
    const std::string out = tmp.file("center.json");
    REQUIRE(run({"smooth-center", "--data", data, "--seed", "5", "--mc-size", "4000", "--out",
                 out}) == 0);
    const json parsed = json::parse(slurp(out));
    REQUIRE(parsed.at("beta_tilde").size() == 2);
    REQUIRE(parsed.at("bandwidths").size() == 2);
    REQUIRE(parsed.at("bandwidths")[0].get<double>() > 0.0);
    REQUIRE(parsed.at("mc_size").get<int>() == 4000);
}

TEST_CASE("bootstrap draws export and ci consume each other", "[cli]") {
    TempDir tmp;
    const std::string data = tmp.file("data.csv");
    write_demo_dataset(data, 11, 100);

    const std::string draws = tmp.file("draws.csv");
    REQUIRE(run({"bootstrap", "--data", data, "--scheme", "smoothed", "--B", "60", "--seed",
                 "3", "--mc-size", "3000", "--out", draws}) == 0);
    const std::string csv = slurp(draws);
    REQUIRE(csv.rfind("rep,delta_1,delta_2\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 61);

    const json meta = json::parse(slurp(draws + ".meta.json"));
    REQUIRE(meta.at("scheme").get<std::string>() == "smoothed");
    REQUIRE(meta.at("B").get<int>() == 60);
    REQUIRE(meta.at("center").size() == 2);
    REQUIRE(meta.at("rate").get<double>() == Catch::Approx(std::cbrt(100.0)));
    REQUIRE(meta.contains("bandwidths"));

    // determinism of the export
    const std::string draws2 = tmp.file("draws2.csv");
    REQUIRE(run({"bootstrap", "--data", data, "--scheme", "smoothed", "--B", "60", "--seed",
                 "3", "--mc-size", "3000", "--out", draws2}) == 0);
    REQUIRE(slurp(draws2) == csv);

    const json est = json::parse(slurp(draws + ".meta.json")).at("center");
    const std::string estimate =
        maxscore::format_double(est[0].get<double>()) + "," +
        maxscore::format_double(est[1].get<double>());
    const std::string ci_out = tmp.file("ci.json");
    REQUIRE(run({"ci", "--draws", draws, "--estimate", estimate, "--n", "100", "--level",
                 "0.9", "--coordinate", "0", "--out", ci_out}) == 0);
    const json ci = json::parse(slurp(ci_out));
    REQUIRE(ci.at("lower").get<double>() <= ci.at("upper").get<double>());
    REQUIRE(ci.at("level").get<double>() == 0.9);
}

TEST_CASE("moon bootstrap records the subsample size", "[cli]") {
    TempDir tmp;
    const std::string data = tmp.file("data.csv");
    write_demo_dataset(data, 13, 100);
    const std::string draws = tmp.file("moon.csv");
    REQUIRE(run({"bootstrap", "--data", data, "--scheme", "moon", "--gamma", "0.5", "--B", "40",
                 "--seed", "9", "--out", draws}) == 0);
    const json meta = json::parse(slurp(draws + ".meta.json"));
    REQUIRE(meta.at("m").get<int>() == 10);
    REQUIRE(meta.at("rate").get<double>() == Catch::Approx(std::cbrt(10.0)));
}

TEST_CASE("coverage runs from a JSON config and honors worker override", "[cli]") {
    TempDir tmp;
    const std::string config_path = tmp.file("config.json");
    {
        json cfg;
        cfg["dgp"] = {{"kind", "hetero-normal"}, {"d", 2}};
        cfg["n"] = 50;
        cfg["replications"] = 8;
        cfg["schemes"] = json::array({{{"kind", "classical"}, {"B", 15}},
                                      {{"kind", "moon"}, {"gamma", 0.5}, {"B", 15}},
                                      {{"kind", "smoothed"}, {"B", 15}}});
        cfg["level"] = 0.9;
        cfg["coordinate"] = 0;
        cfg["master_seed"] = 2026;
        cfg["workers"] = 1;
        cfg["smoothing_mc_size"] = 1500;
        std::ofstream os(config_path);
        os << cfg.dump(2);
    }
    const std::string out1 = tmp.file("rows1.csv");
    const std::string out8 = tmp.file("rows8.csv");
    REQUIRE(run({"coverage", "--config", config_path, "--out", out1}) == 0);
    REQUIRE(run({"coverage", "--config", config_path, "--workers", "8", "--out", out8}) == 0);
    const std::string csv = slurp(out1);
    REQUIRE(csv == slurp(out8));
    REQUIRE(csv.rfind("scheme,n,m,coverage,avg_length,replications,seed\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 4);
    REQUIRE(csv.find("classical,50") != std::string::npos);
    REQUIRE(csv.find("moon[0.5],50,8") != std::string::npos);  // ceil(50^0.5) = 8
    REQUIRE(csv.find("smoothed,50") != std::string::npos);
}

TEST_CASE("environment seed overrides the flag", "[cli]") {
    TempDir tmp;
    const std::string data = tmp.file("data.csv");
    write_demo_dataset(data, 21, 60);
    const std::string with_env = tmp.file("env.csv");
    const std::string with_flag = tmp.file("flag.csv");

    ::setenv("MAXSCORE_SEED", "777", 1);
    REQUIRE(run({"bootstrap", "--data", data, "--scheme", "classical", "--B", "25", "--seed",
                 "1", "--out", with_env}) == 0);
    ::unsetenv("MAXSCORE_SEED");
    REQUIRE(run({"bootstrap", "--data", data, "--scheme", "classical", "--B", "25", "--seed",
                 "777", "--out", with_flag}) == 0);
    REQUIRE(slurp(with_env) == slurp(with_flag));
}

TEST_CASE("limit subcommand with explicit constants", "[cli]") {
    TempDir tmp;
    const std::string out = tmp.file("limit.csv");
    REQUIRE(run({"limit", "--a", "0.42", "--b", "0.207", "--draws", "500", "--step", "0.02",
                 "--seed", "4", "--out", out}) == 0);
    const std::string csv = slurp(out);
    REQUIRE(csv.rfind("s_star\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 501);
    const json meta = json::parse(slurp(out + ".meta.json"));
    REQUIRE(meta.at("a").get<double>() == 0.42);
    REQUIRE(meta.at("boundary_hits").get<int>() >= 0);

    // usage error without constants or model
    REQUIRE(run({"limit", "--draws", "10"}) == 1);
}

TEST_CASE("limit subcommand derives model constants", "[cli]") {
    TempDir tmp;
    const std::string out = tmp.file("model_limit.csv");
    REQUIRE(run({"limit", "--model", "hetero-normal", "--dim", "2", "--draws", "300", "--step",
                 "0.02", "--quad-points", "20000", "--seed", "6", "--out", out}) == 0);
    const json meta = json::parse(slurp(out + ".meta.json"));
    // noise scale sqrt(1/8), drift half of 11/(15 sqrt(pi))
    REQUIRE(meta.at("a").get<double>() == Catch::Approx(std::sqrt(0.125)).margin(1e-6));
    REQUIRE(meta.at("b").get<double>() ==
            Catch::Approx(0.5 * 11.0 / (15.0 * std::sqrt(maxscore::kPi))).margin(1e-6));
    REQUIRE(std::abs(meta.at("first_coord_scale").get<double>()) ==
            Catch::Approx(1.0 / std::sqrt(2.0)).margin(1e-12));
}

TEST_CASE("reconstruct-latent emits consistent rows", "[cli]") {
    TempDir tmp;
    const std::string out = tmp.file("latent.csv");
    REQUIRE(run({"reconstruct-latent", "--model", "hetero-normal", "--dim", "2", "--n", "200",
                 "--seed", "12", "--out", out}) == 0);
    std::ifstream is(out);
    std::string header;
    std::getline(is, header);
    REQUIRE(header == "v1,v2,u,w");
    std::string line;
    int rows = 0;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    while (std::getline(is, line)) {
        const auto fields = maxscore::split_csv_line(line);
        REQUIRE(fields.size() == 4);
        double v1 = 0, v2 = 0, u = 0, w = 0;
        REQUIRE(maxscore::parse_double(fields[0], v1));
        REQUIRE(maxscore::parse_double(fields[1], v2));
        REQUIRE(maxscore::parse_double(fields[2], u));
        REQUIRE(maxscore::parse_double(fields[3], w));
        const double bv = inv_sqrt2 * (v1 + v2);
        REQUIRE(w == ((u + bv >= 0.0) ? 1.0 : 0.0));
        ++rows;
    }
    REQUIRE(rows == 200);
}

TEST_CASE("hist subcommand bins a column", "[cli]") {
    TempDir tmp;
    const std::string input = tmp.file("samples.csv");
    {
        std::ofstream os(input);
        os << "value\n";
        for (int i = 0; i < 100; ++i) os << (i / 100.0) << "\n";
    }
    const std::string out = tmp.file("hist.csv");
    REQUIRE(run({"hist", "--input", input, "--bins", "5", "--out", out}) == 0);
    const std::string csv = slurp(out);
    REQUIRE(csv.rfind("bin_left,bin_right,count,density\n", 0) == 0);
    REQUIRE(std::count(csv.begin(), csv.end(), '\n') == 6);
}
