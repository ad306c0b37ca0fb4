#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "bodyfit/errors.hpp"
#include "bodyfit/run_config.hpp"

using namespace bodyfit;
namespace fs = std::filesystem;

TEST_CASE("run config: defaults round trip through json") {
    const RunConfig def;
    const std::string text = to_json(def);
    const RunConfig back = run_config_from_json(text);
    CHECK(to_json(back) == text);
    CHECK(back.seed == def.seed);
    CHECK(back.regist_lr == def.regist_lr);
    CHECK(back.regist_beta2 == def.regist_beta2);
    CHECK(back.prior.views_deg == def.prior.views_deg);
    CHECK(back.rounds == def.rounds);
}

TEST_CASE("run config: partial documents merge over defaults") {
    const RunConfig cfg = run_config_from_json(R"({"regist": {"lr": 0.05}, "seed": 9})");
    CHECK(cfg.regist_lr == 0.05);
    CHECK(cfg.seed == 9);
    // Everything else keeps its default.
    const RunConfig def;
    CHECK(cfg.regist_iterations == def.regist_iterations);
    CHECK(cfg.synth.count == def.synth.count);
}

TEST_CASE("run config: unknown keys and type mismatches fail loudly") {
    CHECK_THROWS_AS(run_config_from_json(R"({"regist": {"lrr": 0.05}})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"bogus": 1})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"regist": {"lr": "fast"}})"), IoError);
    CHECK_THROWS_AS(run_config_from_json(R"({"synth": {"count": [1]}})"), IoError);

    try {
        run_config_from_json(R"({"regist": {"weights": {"densee": 1}}})");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("regist.weights.densee") != std::string::npos);
    }
}

TEST_CASE("run config: file round trip and missing-file error") {
    const fs::path dir = fs::temp_directory_path() / "bodyfit_runcfg";
    fs::remove_all(dir);
    fs::create_directories(dir);

    RunConfig cfg;
    cfg.seed = 123;
    cfg.synth.count = 7;
    cfg.held_out = {1, 3};
    const fs::path f = dir / "run.json";
    save_run_config(cfg, f.string());
    const RunConfig back = load_run_config(f.string());
    CHECK(back.seed == 123);
    CHECK(back.synth.count == 7);
    CHECK(back.held_out == std::vector<int>{1, 3});

    CHECK_THROWS_AS(load_run_config((dir / "absent" / "x.json").string()), IoError);
}

TEST_CASE("run config: dotted overrides") {
    RunConfig cfg;
    apply_override(cfg, "regist.lr=0.02");
    CHECK(cfg.regist_lr == 0.02);
    apply_override(cfg, "seed=77");
    CHECK(cfg.seed == 77);
    apply_override(cfg, "regist.weights.dense=500");
    CHECK(cfg.weights.dense == 500.0);
    apply_override(cfg, "prior.views_deg=[30, 60]");
    CHECK(cfg.prior.views_deg == std::vector<double>{30.0, 60.0});
    apply_override(cfg, "loop.held_out=[0,2]");
    CHECK(cfg.held_out == std::vector<int>{0, 2});
    apply_override(cfg, "synth.truth_gan_depths=true");
    CHECK(cfg.synth.truth_gan_depths);

    CHECK_THROWS_AS(apply_override(cfg, "regist.nope=1"), IoError);
    CHECK_THROWS_AS(apply_override(cfg, "regist=1"), IoError);
    CHECK_THROWS_AS(apply_override(cfg, "no_equals_sign"), IoError);
}

TEST_CASE("run config: derived configs inherit the right fields") {
    RunConfig cfg;
    cfg.seed = 31;
    cfg.regist_lr = 0.07;
    cfg.regist_beta2 = 0.95;
    cfg.regist_iterations = 123;
    cfg.regist_stiff = true;
    cfg.rounds = 2;
    cfg.held_out = {0};
    cfg.weights.dense = 900.0;

    const RegistConfig rc = cfg.regist_config();
    CHECK(rc.lr == 0.07);
    CHECK(rc.beta2 == 0.95);
    CHECK(rc.iterations == 123);
    CHECK(rc.stiff);
    CHECK(rc.weights.dense == 900.0);

    const DeformLearnConfig lc = cfg.loop_config();
    CHECK(lc.rounds == 2);
    CHECK(lc.held_out == std::vector<int>{0});
    CHECK(lc.regist_lr == 0.07);
    CHECK(lc.weights.dense == 900.0);
    CHECK(lc.regressor.seed == 31);
}
