#include "bodyfit/deform_learn.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bodyfit/errors.hpp"

namespace bodyfit {

namespace fs = std::filesystem;

std::string RoundRecord::csv_header() {
    return "round,init_mpjpe_mm,regist_mpjpe_mm,held_out_mpjpe_mm,regressor_loss,aborted";
}

std::string RoundRecord::csv_row() const {
    std::ostringstream os;
    os << round << ',' << init_mpjpe_mm << ',' << regist_mpjpe_mm << ',' << held_out_mpjpe_mm
       << ',' << regressor_loss << ',' << aborted;
    return os.str();
}

namespace {

double mean_mpjpe(const BodyTemplate& tpl, const std::vector<BodyParams>& fitted,
                  const std::vector<int>& indices, const std::vector<BodyParams>& truth) {
    if (fitted.empty()) return -1.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < fitted.size(); ++i)
        acc += mpjpe_mm(tpl, fitted[i], truth[indices[i]]);
    return acc / (double)fitted.size();
}

void write_checkpoint(const std::string& dir, int round, const TrainState& state,
                      const std::vector<SampleAnnotation>& samples) {
    const fs::path round_dir = fs::path(dir) / ("round_" + std::to_string(round));
    fs::create_directories(round_dir);
    std::vector<std::pair<std::string, BodyParams>> items;
    for (std::size_t i = 0; i < state.theta_anno.size(); ++i)
        items.emplace_back(samples[state.train_indices[i]].id, state.theta_anno[i]);
    save_params_map(items, (round_dir / "theta_anno.json").string());
    save_regressor(state.regressor, (round_dir / "regressor.json").string());
    std::ofstream csv(round_dir / "history.csv");
    csv << RoundRecord::csv_header() << '\n';
    for (const auto& r : state.history) csv << r.csv_row() << '\n';
}

}  // namespace

TrainState deform_learn_loop(const BodyTemplate& tpl,
                             const std::vector<SampleAnnotation>& samples,
                             const KeypointMap& map, const DeformLearnConfig& cfg,
                             const std::vector<BodyParams>* truth, TrainState state) {
    if (samples.empty()) throw ContractViolation("deform_learn_loop: empty sample set");
    if (truth && truth->size() != samples.size())
        throw ContractViolation("deform_learn_loop: truth/sample count mismatch");
    if (cfg.rounds < 1) throw ContractViolation("deform_learn_loop: rounds must be >= 1");

    if (state.train_indices.empty()) {
        for (int i = 0; i < (int)samples.size(); ++i)
            if (std::find(cfg.held_out.begin(), cfg.held_out.end(), i) == cfg.held_out.end())
                state.train_indices.push_back(i);
    }
    if (state.train_indices.empty())
        throw ContractViolation("deform_learn_loop: every sample is held out");

    std::vector<SampleAnnotation> train_samples;
    for (int i : state.train_indices) train_samples.push_back(samples[i]);

    for (int round = state.completed_rounds + 1; round <= cfg.rounds; ++round) {
        RoundRecord record;
        record.round = round;

        RegistConfig rc;
        rc.weights = cfg.weights;
        rc.lr = cfg.regist_lr;
        rc.batch_size = cfg.regist_batch;
        rc.threads = cfg.threads;
        rc.stiff = round == 1;
        rc.iterations = round == 1 ? cfg.first_round_iterations : cfg.later_round_iterations;

        std::vector<BodyParams> init;
        if (round > 1) {
            init.reserve(train_samples.size());
            for (const auto& anno : train_samples)
                init.push_back(predict(state.regressor, tpl, anno, map));
        }
        if (truth && !init.empty())
            record.init_mpjpe_mm = mean_mpjpe(tpl, init, state.train_indices, *truth);

        try {
            auto result = register_samples(tpl, train_samples, init, rc, map);
            state.theta_anno = std::move(result.fitted);
            record.aborted = result.aborted_count;
        } catch (const std::exception& e) {
            throw PhaseError("registration failed in round " + std::to_string(round) + ": " +
                            e.what());
        }
        if (truth)
            record.regist_mpjpe_mm =
                mean_mpjpe(tpl, state.theta_anno, state.train_indices, *truth);

        RegressorConfig reg_cfg = cfg.regressor;
        reg_cfg.seed = cfg.regressor.seed + (std::uint64_t)round;
        RegressorHistory reg_history;
        try {
            state.regressor = train_regressor(std::move(state.regressor), tpl, train_samples,
                                              state.theta_anno, map, reg_cfg, &reg_history);
        } catch (const std::exception& e) {
            throw PhaseError("regressor training failed in round " + std::to_string(round) +
                            ": " + e.what());
        }
        if (!reg_history.loss.empty()) record.regressor_loss = reg_history.loss.back();

        if (truth && !cfg.held_out.empty()) {
            std::vector<BodyParams> preds;
            preds.reserve(cfg.held_out.size());
            for (int i : cfg.held_out) preds.push_back(predict(state.regressor, tpl, samples[i], map));
            record.held_out_mpjpe_mm = mean_mpjpe(tpl, preds, cfg.held_out, *truth);
        }

        state.history.push_back(record);
        state.completed_rounds = round;
        if (!cfg.checkpoint_dir.empty())
            write_checkpoint(cfg.checkpoint_dir, round, state, samples);
    }
    return state;
}

BodyParams refine(const BodyTemplate& tpl, const BodyParams& theta_conv,
                  const SampleAnnotation& anno, RegistConfig cfg, const KeypointMap& map,
                  RegistTrace* trace) {
    if (cfg.iterations <= 0) {
        if (trace) *trace = RegistTrace{};
        return theta_conv;
    }
    auto result = register_samples(tpl, {anno}, {theta_conv}, cfg, map);
    if (trace) *trace = std::move(result.traces[0]);
    return result.fitted[0];
}

int latest_checkpoint_round(const std::string& dir) {
    int latest = 0;
    if (!fs::is_directory(dir)) return 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("round_", 0) != 0) continue;
        int round = 0;
        try {
            round = std::stoi(name.substr(6));
        } catch (...) {
            continue;
        }
        if (round > latest && fs::exists(e.path() / "theta_anno.json") &&
            fs::exists(e.path() / "regressor.json"))
            latest = round;
    }
    return latest;
}

TrainState load_checkpoint(const std::string& dir, int round) {
    const fs::path round_dir = fs::path(dir) / ("round_" + std::to_string(round));
    TrainState state;
    const auto items = load_params_map((round_dir / "theta_anno.json").string());
    for (const auto& [id, params] : items) state.theta_anno.push_back(params);
    state.regressor = load_regressor((round_dir / "regressor.json").string());
    state.completed_rounds = round;

    std::ifstream csv(round_dir / "history.csv");
    if (csv) {
        std::string line;
        std::getline(csv, line);  // header
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            RoundRecord r;
            char comma;
            std::istringstream is(line);
            if (is >> r.round >> comma >> r.init_mpjpe_mm >> comma >> r.regist_mpjpe_mm >>
                comma >> r.held_out_mpjpe_mm >> comma >> r.regressor_loss >> comma >> r.aborted)
                state.history.push_back(r);
        }
    }
    return state;
}

}  // namespace bodyfit
