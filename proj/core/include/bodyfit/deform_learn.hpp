#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bodyfit/metrics.hpp"
#include "bodyfit/registration.hpp"
#include "bodyfit/regressor.hpp"

namespace bodyfit {

struct DeformLearnConfig {
    int rounds = 5;  // K
    RegistWeights weights;
    double regist_lr = 0.1;
    int regist_batch = 10;
    int first_round_iterations = 300;  // stiff, from T-pose
    int later_round_iterations = 100;  // from regressor predictions
    int threads = 1;
    RegressorConfig regressor;
    std::vector<int> held_out;    // sample indices excluded from training
    std::string checkpoint_dir;   // empty = no checkpoints
};

struct RoundRecord {
    int round = 0;
    double init_mpjpe_mm = -1.0;      // MPJPE of this round's registration init
    double regist_mpjpe_mm = -1.0;    // after registration (training set)
    double held_out_mpjpe_mm = -1.0;  // regressor predictions on the held-out set
    double regressor_loss = -1.0;     // final L_conv step value
    int aborted = 0;                  // samples aborted during registration

    static std::string csv_header();
    std::string csv_row() const;
};

struct TrainState {
    std::vector<int> train_indices;      // into the sample list
    std::vector<BodyParams> theta_anno;  // one per training sample, latest round
    Regressor regressor;
    std::vector<RoundRecord> history;
    int completed_rounds = 0;
};

// Alternating registration / regression. Round 1 registers from T-pose in
// stiff mode; later rounds start from the regressor's predictions. theta_anno
// is replaced after every registration (latest wins). MPJPE columns are
// filled when ground truth is given. Checkpoints one directory per round.
TrainState deform_learn_loop(const BodyTemplate& tpl,
                             const std::vector<SampleAnnotation>& samples,
                             const KeypointMap& map, const DeformLearnConfig& cfg,
                             const std::vector<BodyParams>* truth = nullptr,
                             TrainState state = {});

// Inference-time refinement: registration from a predicted initialization.
// iterations <= 0 returns the input untouched.
BodyParams refine(const BodyTemplate& tpl, const BodyParams& theta_conv,
                  const SampleAnnotation& anno, RegistConfig cfg, const KeypointMap& map,
                  RegistTrace* trace = nullptr);

// Latest complete round in a checkpoint directory (0 = none).
int latest_checkpoint_round(const std::string& dir);
TrainState load_checkpoint(const std::string& dir, int round);

}  // namespace bodyfit
