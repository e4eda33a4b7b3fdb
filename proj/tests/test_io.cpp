#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "torsionlab/experiments.hpp"

using namespace torsionlab;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("torsionlab_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

ExperimentConfig small_config(const std::string& experiment, const std::string& out) {
    ExperimentConfig c;
    c.experiment = experiment;
    c.out = out;
    c.quiet = true;
    return c;
}

} // namespace

TEST(DomainJson, RoundTrip) {
    const std::vector<DomainSpec> all{DomainSpec(Box{{1.0, 2.0, 3.0}}), DomainSpec(Disk{{0.5, 0.5}, 0.25}),
                                      DomainSpec(Ellipse{{1.0, 2.0}, 3.0, 1.0}),
                                      DomainSpec(ConvexPolygon{{{0, 0}, {1, 0}, {0, 1}}}),
                                      make_perforated_cube(3, 2.0, 4, 0.01)};
    for (const auto& d : all) {
        const auto j = domain_to_json(d);
        const auto back = domain_from_json(json::parse(j.dump()));
        EXPECT_EQ(domain_to_json(back), j);
        EXPECT_EQ(back.variant_name(), d.variant_name());
        EXPECT_TRUE(j.contains("variant"));
    }
}

TEST(DomainJson, AlphaSelectsDeltaStar) {
    const auto d = domain_from_json(json::parse(R"({"type":"perforated_cube","m":2,"L":1,"N":6,"alpha":1.3333333333333333})"));
    EXPECT_NEAR(d.get_if<PerforatedCubeParams>()->delta, 0.00306768, 1e-8);
}

TEST(DomainJson, Errors) {
    EXPECT_THROW(domain_from_json(json::parse(R"({"type":"torus"})")), InvalidArgument);
    EXPECT_THROW(domain_from_json(json::parse(R"({"type":"box"})")), InvalidArgument);
    EXPECT_THROW(domain_from_json(json::parse(R"({"type":"disk","radius":-1})")), InvalidArgument);
    EXPECT_THROW(domain_from_json(json::parse(R"({"type":"perforated_cube","N":3})")), InvalidArgument);
    EXPECT_THROW(domain_from_json(json::parse(R"({"type":"perforated_cube","m":3,"N":2,"alpha":1.5})")), RegimeError);
}

TEST(ResultJson, SpectralRoundTrip) {
    auto r = spectral_product(DomainSpec(Box{{1.0, 1.0}}), 1.0 / 16, ProductOptions{SolverOptions{}, {}, true});
    const auto j = to_json(r);
    const auto back = spectral_from_json(json::parse(j.dump()));
    EXPECT_DOUBLE_EQ(back.lambda1, r.lambda1);
    EXPECT_DOUBLE_EQ(back.sup_norm, r.sup_norm);
    EXPECT_TRUE(back.has_error_estimate);
    EXPECT_DOUBLE_EQ(back.error.product, r.error.product);
    std::ostringstream os;
    write_field_csv(os, r);
    const auto text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')), "x0,x1,weight,v,psi");
    EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.unknowns + 1);
}

TEST(ResultJson, WosAndReportFields) {
    const auto w = wos_torsion(DomainSpec(Disk{{0.0, 0.0}, 1.0}), Point{0.1, 0.0}, 50, 1e-3, 9);
    const auto j = to_json(w);
    for (const char* k : {"mean", "stderr", "nWalks", "seed", "epsShell", "meanSteps"}) EXPECT_TRUE(j.contains(k));
    SpectralResult r;
    r.lambda1 = 1.0;
    r.sup_norm = std::numeric_limits<double>::infinity();
    const auto rep = check_all(r, DomainSpec(Box{{1.0, 1.0}}));
    const auto jr = to_json(rep);
    EXPECT_TRUE(json::accept(jr.dump()));  // infinities become null
}

TEST(Config, ParsesAndRejectsUnknownKeys) {
    const auto c = config_from_json(json::parse(R"({
        "experiment": "perforated-sweep",
        "perforated": {"m": 2, "alpha": 1.25, "N": [2, 3], "extra_cases": []},
        "solver": {"backend": "cg"},
        "seed": 42, "threads": 2, "out": "x"})"));
    EXPECT_EQ(c.experiment, "perforated-sweep");
    EXPECT_EQ(c.N_list, (std::vector<long>{2, 3}));
    EXPECT_TRUE(c.extra_cases.empty());
    EXPECT_EQ(c.solver.backend, LinearBackend::cg);
    EXPECT_EQ(c.seed, 42u);
    EXPECT_THROW(config_from_json(json::parse(R"({"experimnet": "wos"})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"experiment": "nope"})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"solver": {"backend": "lu"}})")), ConfigError);
    EXPECT_THROW(config_from_json(json::parse(R"({"seed": "abc"})")), ConfigError);
}

TEST(Config, DefaultsUseCholesky) {
    EXPECT_EQ(ExperimentConfig{}.solver.backend, LinearBackend::cholesky);
}

TEST(Resolution, SelectionRule) {
    ExperimentConfig c;
    EXPECT_DOUBLE_EQ(select_h(DomainSpec(Box{{1.0, 10.0}}), c), 1.0 / 128);
    EXPECT_DOUBLE_EQ(select_h(DomainSpec(Ellipse{{0, 0}, 2.5, 0.5}), c), 1.0 / 128);
    const auto big_holes = make_perforated_cube(2, 1.0, 2, 0.2);
    EXPECT_DOUBLE_EQ(select_h(big_holes, c), 1.0 / 128);  // L/(64N) is smaller
    const auto small_holes = make_perforated_cube(2, 1.0, 2, 0.01);
    EXPECT_DOUBLE_EQ(select_h(small_holes, c), 0.01 / 8);
    c.h = 0.3;
    EXPECT_DOUBLE_EQ(select_h(small_holes, c), 0.3);
}

TEST(Resolution, PlanRefusesAndNamesLargestFeasibleN) {
    auto c = small_config("perforated-sweep", "unused");
    c.h = 0.01;
    c.N_list = {2, 3};
    try {
        (void)plan_perforated_sweep(c);
        FAIL() << "expected refusal";
    } catch (const UnresolvableFeature& e) {
        EXPECT_NE(std::string(e.what()).find("largest feasible N for this family is 2"), std::string::npos);
        EXPECT_DOUBLE_EQ(e.max_admissible_h(), 2.0);
    }
    c.h.reset();
    c.max_unknowns = 10000;
    EXPECT_THROW((void)plan_perforated_sweep(c), UnresolvableFeature);
    c.N_list.clear();
    EXPECT_THROW((void)plan_perforated_sweep(c), ConfigError);
}

TEST(Resolution, DefaultPlanMatchesRule) {
    const auto plan = plan_perforated_sweep(ExperimentConfig{});
    ASSERT_EQ(plan.size(), 5u);
    EXPECT_EQ(plan[3].params.N, 6);
    EXPECT_NEAR(plan[3].params.delta, 0.00306768, 1e-8);
    EXPECT_DOUBLE_EQ(plan[3].h, plan[3].params.delta / 8);
    EXPECT_EQ(plan[4].kind, "extra");
    EXPECT_DOUBLE_EQ(plan[4].params.delta, 0.0125);
}

TEST(Verify, EmptyCorpusIsAnError) {
    auto c = small_config("verify-bounds", scratch("empty").string());
    c.corpus_given = true;
    try {
        (void)run_verify_bounds(c);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_STREQ(e.what(), "no domains configured");
    }
}

TEST(Verify, ReplayWithHalvedEigenvalueFails) {
    const auto dir = scratch("replay");
    auto c = small_config("verify-bounds", dir.string());
    c.corpus_given = true;
    c.corpus = {DomainSpec(Box{{1.0, 1.0}}), DomainSpec(Disk{{0.0, 0.0}, 1.0})};
    c.cells_per_width = 32;
    const auto ok = run_verify_bounds(c);
    EXPECT_EQ(ok.exit_code, 0);
    auto rec = load_json_file((dir / "verify_results.json").string());
    rec["results"][0]["result"]["lambda"] = rec["results"][0]["result"]["lambda"].get<double>() / 2;
    write_text_file((dir / "bad.json").string(), rec.dump());
    auto r = c;
    r.replay = (dir / "bad.json").string();
    r.out = (dir / "replayed").string();
    const auto bad = run_verify_bounds(r);
    EXPECT_EQ(bad.exit_code, 1);
    const auto rep = load_json_file((dir / "replayed" / "bound_report.json").string());
    bool lower_failed = false;
    for (const auto& e : rep["reports"][0]["entries"])
        if (e["name"] == "universal_lower") lower_failed = !e["satisfied"].get<bool>();
    EXPECT_TRUE(lower_failed);
}

TEST(Sweeps, ConvexCsvIsReproducibleAndThreadIndependent) {
    auto c = small_config("convex-sweep", scratch("convex1").string());
    c.aspects = {1, 3};
    c.families = {"rectangle", "ellipse"};
    c.cells_per_width = 16;
    const auto a = run_convex_sweep(c);
    EXPECT_EQ(a.exit_code, 0);
    auto c2 = c;
    c2.out = scratch("convex2").string();
    c2.threads = 3;
    (void)run_convex_sweep(c2);
    EXPECT_EQ(slurp(std::filesystem::path(c.out) / "convex_sweep.csv"),
              slurp(std::filesystem::path(c2.out) / "convex_sweep.csv"));
    const auto csv = slurp(std::filesystem::path(c.out) / "convex_sweep.csv");
    EXPECT_NE(csv.find(",seed,version"), std::string::npos);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

TEST(Sweeps, SmallPerforatedSweep) {
    auto c = small_config("perforated-sweep", scratch("perf").string());
    c.N_list = {2, 3};
    c.extra_cases.clear();
    c.cells_per_cube_cell = 16;  // coarse; the holes still get their 8 cells
    const auto res = run_perforated_sweep(c);
    EXPECT_EQ(res.exit_code, 0);
    const auto j = load_json_file((std::filesystem::path(c.out) / "perforated_sweep.json").string());
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_GT(j["rows"][0]["unit_cell"]["mu1"].get<double>(), 0.0);
    EXPECT_TRUE(j["trend"].contains("strictly_decreasing"));
    EXPECT_FALSE(j["notes"].empty());
}

TEST(Trend, DetectsIncreaseAndSquareExcess) {
    const auto row = [](long N, double p, double err) {
        PerforatedRow r;
        r.kind = "sweep";
        r.params.N = N;
        r.result.lambda1 = p;
        r.result.sup_norm = 1.0;
        r.result.product = p;
        r.result.error = {err, err, err};
        return r;
    };
    const auto good = perforated_trend({row(2, 1.4, 1e-4), row(3, 1.3, 1e-4), row(4, 1.2, 1e-4)}, 1.45);
    EXPECT_TRUE(good.decreasing && good.above_lower && good.below_square);
    const auto flat = perforated_trend({row(2, 1.3, 1e-3), row(3, 1.3005, 1e-3)}, 1.45);
    EXPECT_TRUE(flat.decreasing);  // increase within the combined tolerance
    const auto up = perforated_trend({row(2, 1.3, 1e-4), row(3, 1.35, 1e-4)}, 1.45);
    EXPECT_FALSE(up.decreasing);
    const auto high = perforated_trend({row(2, 1.5, 1e-4)}, 1.45);
    EXPECT_FALSE(high.below_square);
}

TEST(Oracle, DiskCentreThreeWayAgreement) {
    auto c = small_config("oracle-check", scratch("oracle").string());
    c.probes = {{DomainSpec(Disk{{0.0, 0.0}, 1.0}), {0.0, 0.0}}};
    c.cells_per_width = 64;
    c.n_walks = 2000;
    const auto res = run_oracle_check(c);
    EXPECT_EQ(res.exit_code, 0);
    const auto j = load_json_file((std::filesystem::path(c.out) / "oracle_check.json").string());
    EXPECT_NEAR(j["rows"][0]["fd"].get<double>(), 0.25, 1e-3);
    EXPECT_TRUE(j["rows"][0]["wos_agrees"].get<bool>());
    EXPECT_TRUE(j["rows"][0]["survival_agrees"].get<bool>());
}

TEST(Single, ProductWritesJsonAndField) {
    auto c = small_config("product", scratch("single").string());
    c.domain = DomainSpec(Box{{1.0, 2.0}});
    c.cells_per_width = 16;
    const auto res = run_experiment(c);
    EXPECT_EQ(res.files.size(), 2u);
    const auto j = load_json_file(res.files[0]);
    EXPECT_EQ(j["version"], version);
    EXPECT_TRUE(j["result"]["has_error_estimate"].get<bool>());
    c.domain.reset();
    EXPECT_THROW((void)run_experiment(c), ConfigError);
}
