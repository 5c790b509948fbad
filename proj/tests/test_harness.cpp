#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwx/error.hpp"
#include "gwx/harness.hpp"
#include "gwx/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace gwx;

namespace {

ScenarioConfig small(const std::string& name, int trials, std::uint64_t seed = 1) {
    auto c = default_scenario(name);
    c.trials = trials;
    c.seed_base = seed;
    return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& leaf) {
    auto p = std::filesystem::temp_directory_path() / ("gwx_harness_test_" + leaf);
    std::filesystem::remove_all(p);
    return p;
}

}    // namespace

TEST_CASE("false alarm closed form") {
    CHECK(false_alarm_rate({0.0, 1.0, 1.0}) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-15));
    CHECK(false_alarm_rate({0.0, 1.0, 1.0}) == doctest::Approx(0.6321).epsilon(1e-4));
    CHECK(false_alarm_rate({0.0, 1.0, 200000.0}) == doctest::Approx(5.0e-6).epsilon(1e-5));
    CHECK(false_alarm_rate({3.0, 1e-15, 1.0}) < 1e-14);
    for (int i = 0; i < 50; ++i) {
        const FalseAlarmParams p{0.5 * i, 0.1 + 0.03 * i, 2.0 + i};
        const double want = 1.0 - std::exp(-p.T / p.T_b * (1.0 + p.n_b));
        CHECK(std::abs(false_alarm_rate(p) - want) <= 1e-12);
    }
}

TEST_CASE("false alarm monotonicity and validation") {
    double prev = 0.0;
    for (double n_b = 0.0; n_b < 20.0; n_b += 1.0) {
        const double f = false_alarm_rate({n_b, 0.3, 5.0});
        CHECK(f > prev);
        prev = f;
    }
    prev = 0.0;
    for (double t = 0.01; t < 10.0; t *= 1.5) {
        const double f = false_alarm_rate({1.0, t, 5.0});
        CHECK(f > prev);
        prev = f;
    }
    prev = 1.0;
    for (double tb = 0.5; tb < 100.0; tb *= 1.5) {
        const double f = false_alarm_rate({1.0, 2.0, tb});
        CHECK(f < prev);
        prev = f;
    }
    CHECK_THROWS_AS(false_alarm_rate({-1.0, 1.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(false_alarm_rate({0.0, 0.0, 1.0}), ParameterError);
    CHECK_THROWS_AS(false_alarm_rate({0.0, 1.0, -2.0}), ParameterError);
}

TEST_CASE("quantiles") {
    const std::vector<double> v{5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(quantile(v, 0.5) == 3.0);
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 5.0);
    CHECK(quantile(v, 0.05) == doctest::Approx(1.2));
    CHECK(quantile(v, 0.95) == doctest::Approx(4.8));
    CHECK(quantile({7.0}, 0.3) == 7.0);
    CHECK_THROWS_AS(quantile({}, 0.5), ShapeError);
    CHECK_THROWS_AS(quantile(v, 1.5), ParameterError);
}

TEST_CASE("aggregate") {
    TrialReport a;
    a.peak_rho_hat = 6.0;
    a.fired = true;
    const auto one = aggregate({a});
    CHECK(one.trials == 1);
    CHECK(one.fired_fraction == 1.0);
    REQUIRE(one.rho_hat);
    CHECK(one.rho_hat->p05 == 6.0);
    CHECK(one.rho_hat->p95 == 6.0);
    CHECK_FALSE(one.abs_ccf);
    TrialReport b;
    b.peak_rho_hat = 2.0;
    const auto two = aggregate({a, b});
    const auto rev = aggregate({b, a});
    CHECK(two.fired_fraction == 0.5);
    CHECK(two.rho_hat->p50 == rev.rho_hat->p50);
    CHECK_THROWS_AS(aggregate({}), ShapeError);
}

TEST_CASE("scenario catalogue") {
    const auto& names = scenario_names();
    CHECK(names.size() == 10);
    CHECK(std::set<std::string>(names.begin(), names.end()).size() == 10);
    for (const auto& n : names) {
        CHECK_FALSE(scenario_description(n).empty());
        const auto c = default_scenario(n);
        CHECK(c.name == n);
        CHECK(c.snr_threshold == 5.0);
        CHECK(c.r3_threshold == doctest::Approx(std::exp(-1.0)));
        c.validate();
    }
    CHECK_THROWS_AS(default_scenario("no-such-scenario"), ParameterError);
}

TEST_CASE("config overlay") {
    auto c = default_scenario("h1l1-ccf");
    apply_config_json(c, R"({"trials": 7, "seed_base": 99, "params": {"band_lo": 40.0}})");
    CHECK(c.trials == 7);
    CHECK(c.seed_base == 99);
    CHECK(c.params.band_lo == 40.0);
    CHECK_THROWS_AS(apply_config_json(c, R"({"bogus_key": 1})"), ValidationError);
    CHECK_THROWS_AS(apply_config_json(c, R"({"params": {"nope": 1}})"), ValidationError);
    CHECK_THROWS_AS(apply_config_json(c, "{not json"), ValidationError);
    CHECK_THROWS_AS(apply_config_json(c, "[1, 2]"), ValidationError);
    auto bad = default_scenario("h1l1-ccf");
    bad.trials = 0;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    bad = default_scenario("h1l1-ccf");
    bad.inputs.template_file = "/nonexistent/template.txt";
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("trials draw derived seeds and come back in order") {
    const auto c = small("ccf-bogus", 4, 17);
    const auto t = monte_carlo(c);
    REQUIRE(t.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(t[i].trial_index == i);
        CHECK(t[i].seed == derive_seed(17, static_cast<std::uint64_t>(i)));
    }
    std::set<std::uint64_t> seeds;
    for (const auto& r : t) seeds.insert(r.seed);
    CHECK(seeds.size() == 4);
}

TEST_CASE("every scenario is deterministic and its verdicts follow the stored peaks") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        const auto c = small(name, name == "circular-artifact" ? 1 : 3, 5);
        const auto a = run_scenario(c);
        const auto b = run_scenario(c);
        CHECK(summary_json(a) == summary_json(b));
        CHECK(trials_csv(a.trials) == trials_csv(b.trials));
        REQUIRE(a.figures.size() == b.figures.size());
        for (std::size_t f = 0; f < a.figures.size(); ++f) CHECK(table_csv(a.figures[f]) == table_csv(b.figures[f]));

        const auto rows = parse_csv(trials_csv(a.trials));
        REQUIRE(rows.size() == a.trials.size() + 1);
        CHECK(rows[0][0] == "trial_index");
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            if (!row[2].empty()) CHECK((row[5] == "1") == (std::stod(row[2]) > c.snr_threshold));
            else CHECK(row[5] == "0");
            if (!row[4].empty()) CHECK((row[6] == "1") == (std::stod(row[4]) < c.r3_threshold));
        }
    }
}

TEST_CASE("a different seed base changes the draws") {
    const auto a = run_scenario(small("h1l1-ccf", 3, 1));
    const auto b = run_scenario(small("h1l1-ccf", 3, 2));
    CHECK(trials_csv(a.trials) != trials_csv(b.trials));
}

TEST_CASE("single-trial statistics equal the trial") {
    const auto r = run_scenario(small("mf-sine-misfire", 1, 3));
    REQUIRE(r.trials.size() == 1);
    const auto& t = r.trials.front();
    REQUIRE(t.peak_rho_hat);
    CHECK(r.stats.rho_hat->p05 == *t.peak_rho_hat);
    CHECK(r.stats.rho_hat->p50 == *t.peak_rho_hat);
    CHECK(r.stats.rho_hat->p95 == *t.peak_rho_hat);
    CHECK(r.stats.fired_fraction == (t.fired ? 1.0 : 0.0));
}

TEST_CASE("doubling the trial count keeps the median inside the 5-95 band") {
    const auto r100 = run_scenario(small("h1l1-ccf", 100, 8));
    const auto r200 = run_scenario(small("h1l1-ccf", 200, 8));
    REQUIRE(r100.stats.abs_ccf);
    CHECK(r200.stats.abs_ccf->p50 >= r100.stats.abs_ccf->p05);
    CHECK(r200.stats.abs_ccf->p50 <= r100.stats.abs_ccf->p95);
    CHECK(r100.stats.peaky_fraction <= 0.05);
}

TEST_CASE("circular-artifact witness") {
    const auto r = run_scenario(default_scenario("circular-artifact"));
    REQUIRE(r.trials.size() == 1);
    double witness = -1.0;
    for (const auto& [k, v] : r.trials.front().extras)
        if (k == "witness") witness = v;
    CHECK(witness == 1.0);
}

TEST_CASE("emit_report writes the files") {
    const auto r = run_scenario(small("whiten-distortion", 1, 1));
    const auto dir = scratch("emit");
    emit_report(r, dir);
    CHECK(std::filesystem::exists(dir / "summary.json"));
    const auto rows = parse_csv(slurp(dir / "trials.csv"));
    CHECK(rows.size() == 2);
    for (const auto& f : r.figures) CHECK(std::filesystem::exists(dir / ("whiten-distortion" + f.suffix + ".csv")));
    CHECK(slurp(dir / "summary.json").find("\"schema_version\": 1") != std::string::npos);

    const auto again = scratch("emit2");
    emit_report(run_scenario(small("whiten-distortion", 1, 1)), again);
    CHECK(slurp(dir / "trials.csv") == slurp(again / "trials.csv"));

    ScenarioReport empty;
    empty.config = default_scenario("h1l1-ccf");
    CHECK_THROWS_AS(emit_report(empty, scratch("empty")), ShapeError);

    const auto blocker = scratch("blocker");
    std::ofstream(blocker) << "file";
    CHECK_THROWS_AS(emit_report(r, blocker / "sub"), ValidationError);
    std::filesystem::remove_all(dir);
    std::filesystem::remove_all(again);
    std::filesystem::remove(blocker);
}

TEST_CASE("trial errors carry the trial index") {
    auto c = small("mf-bogus", 2, 1);
    c.params.block_duration = 0.01;
    try {
        run_scenario(c);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("trial") != std::string::npos);
    }
}
