#include "spatiocorr/error.hpp"
#include "spatiocorr/pipeline.hpp"
#include "spatiocorr/synth.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

using namespace spatiocorr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("spatiocorr-test-" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_panel(const fs::path& dir, const PricePanel& prices) {
    const fs::path p = dir / "panel.csv";
    std::ofstream f(p);
    write_price_csv(f, prices);
    return p;
}

RunConfig small_config(const fs::path& input, const fs::path& out) {
    RunConfig c;
    c.input = input.string();
    c.window_size = 10;
    c.null_rounds = 20;
    c.restarts = 3;
    c.seed = 99;
    c.output_dir = out.string();
    c.timestamped = false;
    c.threads = 1;
    return c;
}

fs::path synthetic_input(const fs::path& dir) {
    const auto sp = generate_factor_panel(FactorModelSpec::blocks(8, 24, 2, 1.0, 0.8, 0.5, 5));
    return write_panel(dir, sp.prices);
}

std::set<std::string> listed(const RunManifest& m) { return {m.files.begin(), m.files.end()}; }

} // namespace

TEST_CASE("config validation") {
    RunConfig c;
    c.input = "x.csv";
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.seed = 1;
    CHECK_NOTHROW(c.validate());
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
    c.alpha = 0.05;
    c.restarts = 0;
    CHECK_THROWS_AS(c.validate(), InvalidArgument);
}

TEST_CASE("config json") {
    RunConfig c;
    c.input = "in.csv";
    c.seed = 7;
    c.window_size = 52;
    c.min_gain = 0.3;
    c.schedule.cooling = 0.99;
    c.tracking.horizon = 4;
    RunConfig back;
    back.merge_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.schedule.cooling == 0.99);
    CHECK(back.tracking.horizon == 4);
    CHECK_THROWS_AS(back.merge_json(Json{{"windw_size", 60}}), InvalidArgument);
    CHECK_THROWS_AS(back.merge_json(Json{{"schedule", {{"colling", 0.9}}}}), InvalidArgument);
    CHECK_THROWS_AS(back.merge_json(Json{{"null_criterion", "median"}}), InvalidArgument);

    const fs::path dir = scratch("config");
    std::ofstream(dir / "run.json") << "{\n  // comment\n  \"seed\": 3, \"input\": \"p.csv\", \"restarts\": 12\n}\n";
    const auto loaded = RunConfig::from_file((dir / "run.json").string());
    CHECK(*loaded.seed == 3);
    CHECK(loaded.restarts == 12);
    CHECK_THROWS_AS(RunConfig::from_file((dir / "missing.json").string()), Error);
}

TEST_CASE("stage list") {
    CHECK(stage_list(kStageAll) == "ingest,analyze,regimes,cluster");
    CHECK(stage_list(kStageIngest | kStageCluster) == "ingest,cluster");
}

TEST_CASE("full run writes a complete, listed artifact set") {
    const fs::path dir = scratch("full");
    auto cfg = small_config(synthetic_input(dir), dir / "run");
    const auto m = run_pipeline(cfg);
    const auto files = listed(m);
    const auto windows = m.document["windows"].get<std::vector<std::string>>();
    CHECK(windows.size() == 15);
    CHECK(m.document["seed"].get<std::uint64_t>() == 99);
    CHECK(m.document["entities"].size() == 8);
    for (const auto& w : windows)
        for (const char* name : {"spectrum.json", "correlation.csv", "partial_correlation.csv", "partition.json",
                                 "ordering.json", "affinity.csv"})
            CHECK_MESSAGE(files.count("windows/" + w + "/" + name) == 1, w << "/" << name);
    for (const char* name : {"panel.csv", "market_returns.csv", "market_effect.csv", "regimes.json", "timeline.json"})
        CHECK(files.count(name) == 1);
    for (const auto& f : m.files) CHECK_MESSAGE(fs::exists(m.directory / f), f);

    const auto spec = Json::parse(slurp(m.directory / "windows" / windows[0] / "spectrum.json"));
    CHECK(spec["eigenvalues"].size() == 8);
    CHECK(spec["null"]["rounds"].get<int>() == 20);
    const auto part = Json::parse(slurp(m.directory / "windows" / windows[0] / "partition.json"));
    CHECK(part.contains("clusters"));
    CHECK(part.contains("modularity"));

    const auto added = report(m.directory);
    CHECK(added.size() == 6);
    const auto after = load_manifest(m.directory);
    for (const auto& f : added) CHECK(listed(after).count(f) == 1);

    std::istringstream fig1b(slurp(m.directory / "report" / "fig1b_eigenvalues.csv"));
    std::string header, first;
    std::getline(fig1b, header);
    std::getline(fig1b, first);
    CHECK(header.substr(header.rfind(',') + 1) == "lambda_5pct");
    const double from_report = std::stod(first.substr(first.rfind(',') + 1));
    CHECK(from_report == spec["null"]["lambda_5pct"].get<double>());
}

TEST_CASE("identical seeds give byte-identical artifacts") {
    const fs::path dir = scratch("determinism");
    const auto input = synthetic_input(dir);
    auto a_cfg = small_config(input, dir / "a");
    auto b_cfg = small_config(input, dir / "b");
    b_cfg.threads = 3;
    const auto a = run_pipeline(a_cfg);
    const auto b = run_pipeline(b_cfg);
    REQUIRE(a.files == b.files);
    for (const auto& f : a.files) {
        if (f == "manifest.json") continue;
        CHECK_MESSAGE(slurp(a.directory / f) == slurp(b.directory / f), f);
    }
    auto c_cfg = small_config(input, dir / "c");
    c_cfg.seed = 100;
    const auto c = run_pipeline(c_cfg);
    CHECK(slurp(a.directory / "windows" / "1978Q2" / "spectrum.json") !=
          slurp(c.directory / "windows" / "1978Q2" / "spectrum.json"));
}

TEST_CASE("partial runs and reports") {
    const fs::path dir = scratch("partial");
    auto cfg = small_config(synthetic_input(dir), dir / "run");
    const auto m = run_pipeline(cfg, kStageIngest | kStageRegimes);
    CHECK(listed(m).count("market_effect.csv") == 1);
    CHECK(listed(m).count("panel.csv") == 1);
    CHECK_FALSE(fs::exists(m.directory / "windows"));
    CHECK_THROWS_AS(report(m.directory), Error);
    CHECK_THROWS_AS(load_manifest(dir / "nowhere"), Error);
}

TEST_CASE("timestamped runs get their own directory") {
    const fs::path dir = scratch("stamped");
    auto cfg = small_config(synthetic_input(dir), dir / "runs");
    cfg.timestamped = true;
    const auto a = run_pipeline(cfg, kStageIngest);
    const auto b = run_pipeline(cfg, kStageIngest);
    CHECK(a.directory != b.directory);
    CHECK(a.directory.parent_path() == b.directory.parent_path());
    CHECK(a.directory.filename().string().rfind("run-", 0) == 0);
}

TEST_CASE("failures name the stage and the window") {
    const fs::path dir = scratch("failure");
    auto sp = generate_factor_panel(FactorModelSpec::blocks(6, 30, 0, 1.0, 0.0, 0.5, 6));
    // E03 is flat for its first eleven quarters, so the first window has no variance
    for (Eigen::Index t = 0; t <= 10; ++t) sp.prices.levels(2, t) = 100.0;
    auto cfg = small_config(write_panel(dir, sp.prices), dir / "run");
    try {
        run_pipeline(cfg);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "corrlab");
        CHECK(e.window() == "1977Q3");
        CHECK(std::string(e.what()).find("E03") != std::string::npos);
        CHECK(std::string(e.what()).find("[corrlab 1977Q3]") == 0);
    }

    cfg.input = (dir / "absent.csv").string();
    try {
        run_pipeline(cfg);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "ingest");
        CHECK(e.window().empty());
    }
}
