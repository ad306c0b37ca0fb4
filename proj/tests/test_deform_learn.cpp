#include <algorithm>
#include <cmath>
#include <filesystem>

#include "doctest.h"

#include "bodyfit/body_template.hpp"
#include "bodyfit/deform_learn.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/synth.hpp"

using namespace bodyfit;
namespace fs = std::filesystem;

namespace {

const BodyTemplate& tpl() {
    static const BodyTemplate t = builtin_humanoid();
    return t;
}

const KeypointMap& map16() { return KeypointMap::standard16(); }

SynthDataset dataset(int count, std::uint64_t seed) {
    SynthConfig cfg;
    cfg.count = count;
    cfg.dense_points = 60;
    cfg.truth_gan_depths = true;
    cfg.seed = seed;
    return synth_dataset(tpl(), map16(), cfg);
}

DeformLearnConfig quick_config() {
    DeformLearnConfig cfg;
    cfg.rounds = 1;
    cfg.first_round_iterations = 40;
    cfg.later_round_iterations = 20;
    cfg.regressor.epochs = 4;
    cfg.regressor.batch_size = 4;
    cfg.regressor.hidden = 16;
    return cfg;
}

bool same_state(const TrainState& a, const TrainState& b) {
    if (a.completed_rounds != b.completed_rounds) return false;
    if (a.train_indices != b.train_indices) return false;
    if (a.theta_anno.size() != b.theta_anno.size()) return false;
    for (std::size_t i = 0; i < a.theta_anno.size(); ++i)
        if (a.theta_anno[i].flatten() != b.theta_anno[i].flatten()) return false;
    return a.regressor.mlp.weights == b.regressor.mlp.weights;
}

}  // namespace

TEST_CASE("deform_learn_loop: one round fills every record column") {
    const SynthDataset data = dataset(6, 301);
    DeformLearnConfig cfg = quick_config();
    cfg.held_out = {5};

    const TrainState state =
        deform_learn_loop(tpl(), data.samples, map16(), cfg, &data.truth);

    CHECK(state.completed_rounds == 1);
    REQUIRE(state.history.size() == 1);
    REQUIRE((int)state.train_indices.size() == 5);
    REQUIRE(state.theta_anno.size() == state.train_indices.size());
    for (int idx : state.train_indices) CHECK(idx != 5);

    const RoundRecord& r = state.history[0];
    CHECK(r.round == 1);
    CHECK(r.init_mpjpe_mm >= 0.0);
    CHECK(r.regist_mpjpe_mm >= 0.0);
    CHECK(r.held_out_mpjpe_mm >= 0.0);
    CHECK(std::isfinite(r.regressor_loss));
    CHECK(r.aborted == 0);
    // Registration for round one starts from the T-pose and must improve.
    CHECK(r.regist_mpjpe_mm < r.init_mpjpe_mm);

    const std::string header = RoundRecord::csv_header();
    const std::string row = r.csv_row();
    CHECK(header.find("round") != std::string::npos);
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
}

TEST_CASE("deform_learn_loop: holding out every sample is a contract violation") {
    const SynthDataset data = dataset(3, 307);
    DeformLearnConfig cfg = quick_config();
    cfg.held_out = {0, 1, 2};
    CHECK_THROWS_AS(deform_learn_loop(tpl(), data.samples, map16(), cfg, &data.truth),
                    ContractViolation);
}

TEST_CASE("deform_learn_loop: checkpoints round trip and resume bitwise") {
    const SynthDataset data = dataset(5, 311);
    const fs::path dir = fs::temp_directory_path() / "bodyfit_dl_ckpt";
    fs::remove_all(dir);

    DeformLearnConfig cfg = quick_config();
    cfg.rounds = 2;
    cfg.held_out = {4};
    cfg.checkpoint_dir = dir.string();

    const TrainState full = deform_learn_loop(tpl(), data.samples, map16(), cfg, &data.truth);
    CHECK(full.completed_rounds == 2);
    CHECK(latest_checkpoint_round(dir.string()) == 2);
    CHECK(fs::exists(dir / "round_1" / "theta_anno.json"));
    CHECK(fs::exists(dir / "round_2" / "regressor.json"));
    CHECK(fs::exists(dir / "round_2" / "history.csv"));

    // The stored round-2 state equals the in-memory result.
    const TrainState loaded = load_checkpoint(dir.string(), 2);
    CHECK(same_state(loaded, full));

    // Restarting from round 1 reproduces round 2 exactly.
    const fs::path dir2 = fs::temp_directory_path() / "bodyfit_dl_ckpt2";
    fs::remove_all(dir2);
    DeformLearnConfig resume_cfg = cfg;
    resume_cfg.checkpoint_dir = dir2.string();
    const TrainState resumed = deform_learn_loop(tpl(), data.samples, map16(), resume_cfg,
                                                 &data.truth, load_checkpoint(dir.string(), 1));
    CHECK(same_state(resumed, full));

    CHECK(latest_checkpoint_round((dir / "does_not_exist").string()) == 0);
}

TEST_CASE("refine: non-positive iteration budget returns the input untouched") {
    const SynthDataset data = dataset(1, 313);
    RegistConfig cfg;
    cfg.iterations = 0;
    const BodyParams out = refine(tpl(), data.truth[0], data.samples[0], cfg, map16());
    CHECK(out.flatten() == data.truth[0].flatten());
}

TEST_CASE("refine: descends from a perturbed initialization") {
    const SynthDataset data = dataset(1, 317);
    BodyParams start = data.truth[0];
    for (auto& a : start.pose) a.x += 0.12;
    start.translation.x += 15.0;

    RegistConfig cfg;
    cfg.iterations = 40;
    RegistTrace trace;
    const BodyParams out = refine(tpl(), start, data.samples[0], cfg, map16(), &trace);

    REQUIRE((int)trace.loss.size() == 40);
    CHECK(!trace.aborted);
    CHECK(trace.loss.back() < trace.loss.front());
    CHECK(mpjpe_mm(tpl(), out, data.truth[0]) < mpjpe_mm(tpl(), start, data.truth[0]));
}
