#include <cstdio>
#include <fstream>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include <bodyfit/bodyfit.hpp>

namespace fs = std::filesystem;
using namespace bodyfit;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out = ".";
    std::int64_t seed = -1;
    int threads = 0;
};

void add_global_flags(CLI::App* cmd, GlobalArgs& g) {
    cmd->add_option("--config", g.config_path, "run configuration JSON");
    cmd->add_option("--set", g.overrides, "override a config key, key=value (repeatable)");
    cmd->add_option("--out", g.out, "output directory");
    cmd->add_option("--seed", g.seed, "random seed (overrides config)");
    cmd->add_option("--threads", g.threads, "worker threads (overrides config)");
}

RunConfig resolve_config(const GlobalArgs& g) {
    RunConfig cfg;
    if (!g.config_path.empty()) cfg = load_run_config(g.config_path);
    for (const auto& kv : g.overrides) apply_override(cfg, kv);
    if (g.seed >= 0) cfg.seed = (std::uint64_t)g.seed;
    if (g.threads > 0) cfg.threads = g.threads;
    return cfg;
}

SynthDataset load_dataset(const std::string& dir, const BodyTemplate& tpl) {
    SynthDataset data = load_synth_dataset(dir, tpl);
    if (data.samples.empty()) throw IoError("no samples found in " + dir);
    return data;
}

void fill_depths_from_prior(const std::string& prior_path, const KeypointMap& map,
                            std::vector<SampleAnnotation>& samples) {
    const Mlp G = load_mlp(prior_path);
    const int filled = fill_gan_depths(G, map, samples);
    std::printf("prior depths: filled %d/%zu samples\n", filled, samples.size());
}

void write_fitted(const std::string& dir, const std::vector<SampleAnnotation>& samples,
                  const std::vector<BodyParams>& fitted) {
    fs::create_directories(fs::path(dir) / "fitted");
    std::vector<std::pair<std::string, BodyParams>> items;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        items.emplace_back(samples[i].id, fitted[i]);
        save_params(fitted[i], (fs::path(dir) / "fitted" / (samples[i].id + ".json")).string());
    }
    save_params_map(items, (fs::path(dir) / "fitted.json").string());
}

std::vector<BodyParams> match_params_to_samples(
    const std::vector<std::pair<std::string, BodyParams>>& items,
    const std::vector<SampleAnnotation>& samples, const std::string& what) {
    std::vector<BodyParams> out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        bool found = false;
        for (const auto& [id, p] : items)
            if (id == s.id) {
                out.push_back(p);
                found = true;
                break;
            }
        if (!found) throw IoError(what + ": no parameters for sample '" + s.id + "'");
    }
    return out;
}

int run_synth(const GlobalArgs& g, int prior_count, int prior_eval_count) {
    RunConfig cfg = resolve_config(g);
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();

    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    const SynthDataset data = synth_dataset(tpl, map, sc);
    write_synth_dataset(data, sc, g.out);

    const auto train_family = make_prior_family(tpl, map, prior_count, cfg.seed + 1);
    const auto eval_family = make_prior_family(tpl, map, prior_eval_count, cfg.seed + 2);
    write_prior_family(train_family, (fs::path(g.out) / "prior_train.jsonl").string(), false);
    write_prior_family(eval_family, (fs::path(g.out) / "prior_eval.jsonl").string(), true);

    std::printf("wrote %zu samples, %d prior poses, %d eval poses to %s\n", data.samples.size(),
                prior_count, prior_eval_count, g.out.c_str());
    return 0;
}

int run_train_prior(const GlobalArgs& g, const std::string& data_path,
                    const std::string& eval_path) {
    RunConfig cfg = resolve_config(g);
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();

    const auto poses = load_pose_dataset(data_path, map);
    if (poses.empty()) throw IoError("no usable poses in " + data_path);
    const SkeletonStats stats = SkeletonStats::from_template(tpl, map);
    PriorConfig pc = cfg.prior;
    pc.seed = cfg.seed;
    const PriorTrainResult result = train_prior(poses, stats, pc);

    fs::create_directories(g.out);
    save_mlp(result.G, (fs::path(g.out) / "prior_g.json").string());
    save_mlp(result.D, (fs::path(g.out) / "prior_d.json").string());
    {
        std::ofstream hist((fs::path(g.out) / "prior_history.csv").string());
        hist << "step,adv_g,adv_d,ratio,sym\n";
        for (const auto& p : result.history)
            hist << p.step << ',' << p.adv_g << ',' << p.adv_d << ',' << p.ratio << ',' << p.sym
                 << '\n';
    }
    if (!result.history.empty()) {
        const auto& last = result.history.back();
        std::printf("final: adv_g %.4f adv_d %.4f ratio %.4f sym %.4f\n", last.adv_g, last.adv_d,
                    last.ratio, last.sym);
    }
    if (!eval_path.empty()) {
        const auto eval_set = load_prior_eval(eval_path);
        std::printf("depth sign accuracy: %.1f%%\n",
                    100.0 * depth_sign_accuracy(result.G, eval_set, map));
    }
    return 0;
}

int run_register(const GlobalArgs& g, const std::string& data_dir,
                 const std::string& prior_path) {
    RunConfig cfg = resolve_config(g);
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();

    SynthDataset data = load_dataset(data_dir, tpl);
    if (!prior_path.empty()) fill_depths_from_prior(prior_path, map, data.samples);

    const RegistrationResult result =
        register_samples(tpl, data.samples, {}, cfg.regist_config(), map);
    fs::create_directories(g.out);
    write_fitted(g.out, data.samples, result.fitted);
    std::printf("registered %zu samples (%d aborted)\n", data.samples.size(),
                result.aborted_count);
    if (data.truth.size() == data.samples.size()) {
        const EvalReport report = evaluate_fits(tpl, result.fitted, data.truth, &data.samples);
        std::printf("%s\n%s\n", EvalReport::csv_header().c_str(), report.csv_row().c_str());
    }
    return 0;
}

int run_train_regressor(const GlobalArgs& g, const std::string& data_dir,
                        const std::string& fitted_path) {
    RunConfig cfg = resolve_config(g);
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();

    SynthDataset data = load_dataset(data_dir, tpl);
    const auto items = load_params_map(fitted_path);
    const auto theta_anno = match_params_to_samples(items, data.samples, fitted_path);

    RegressorConfig rc = cfg.regressor;
    rc.seed = cfg.seed;
    RegressorHistory history;
    const Regressor reg =
        train_regressor({}, tpl, data.samples, theta_anno, map, rc, &history);

    fs::create_directories(g.out);
    save_regressor(reg, (fs::path(g.out) / "regressor.json").string());
    {
        std::ofstream hist((fs::path(g.out) / "regressor_history.csv").string());
        hist << "step,loss\n";
        for (std::size_t i = 0; i < history.loss.size(); ++i)
            hist << i << ',' << history.loss[i] << '\n';
    }
    if (!history.loss.empty())
        std::printf("final conv loss %.6f after %zu steps\n", history.loss.back(),
                    history.loss.size());
    return 0;
}

int run_deform_learn(const GlobalArgs& g, const std::string& data_dir,
                     const std::string& prior_path, bool resume) {
    RunConfig cfg = resolve_config(g);
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();

    SynthDataset data = load_dataset(data_dir, tpl);
    if (!prior_path.empty()) fill_depths_from_prior(prior_path, map, data.samples);

    DeformLearnConfig lc = cfg.loop_config();
    lc.checkpoint_dir = g.out;
    TrainState state;
    if (resume) {
        const int round = latest_checkpoint_round(g.out);
        if (round > 0) {
            state = load_checkpoint(g.out, round);
            std::printf("resuming after round %d\n", round);
        }
    }
    const std::vector<BodyParams>* truth =
        data.truth.size() == data.samples.size() ? &data.truth : nullptr;
    state = deform_learn_loop(tpl, data.samples, map, lc, truth, std::move(state));

    std::vector<SampleAnnotation> train_samples;
    for (int i : state.train_indices) train_samples.push_back(data.samples[i]);
    write_fitted(g.out, train_samples, state.theta_anno);
    save_regressor(state.regressor, (fs::path(g.out) / "regressor.json").string());
    std::printf("%s\n", RoundRecord::csv_header().c_str());
    for (const auto& r : state.history) std::printf("%s\n", r.csv_row().c_str());
    return 0;
}

int run_refine(const GlobalArgs& g, const std::string& data_dir,
               const std::string& regressor_path, const std::string& init_path,
               const std::string& prior_path) {
    RunConfig cfg = resolve_config(g);
    const BodyTemplate tpl = builtin_humanoid();
    const KeypointMap& map = KeypointMap::standard16();

    SynthDataset data = load_dataset(data_dir, tpl);
    if (!prior_path.empty()) fill_depths_from_prior(prior_path, map, data.samples);

    std::vector<BodyParams> init;
    if (!regressor_path.empty()) {
        const Regressor reg = load_regressor(regressor_path);
        for (const auto& anno : data.samples) init.push_back(predict(reg, tpl, anno, map));
    } else if (!init_path.empty()) {
        init = match_params_to_samples(load_params_map(init_path), data.samples, init_path);
    } else {
        throw IoError("refine needs --regressor or --init");
    }

    RegistConfig rc = cfg.regist_config();
    rc.iterations = cfg.refine_iterations;
    rc.stiff = false;
    std::vector<BodyParams> refined;
    refined.reserve(data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i)
        refined.push_back(refine(tpl, init[i], data.samples[i], rc, map));

    fs::create_directories(g.out);
    write_fitted(g.out, data.samples, refined);
    std::printf("refined %zu samples\n", data.samples.size());
    if (data.truth.size() == data.samples.size()) {
        const EvalReport report = evaluate_fits(tpl, refined, data.truth, &data.samples);
        std::printf("%s\n%s\n", EvalReport::csv_header().c_str(), report.csv_row().c_str());
    }
    return 0;
}

int run_eval(const GlobalArgs& g, const std::string& data_dir, const std::string& pred_path) {
    const BodyTemplate tpl = builtin_humanoid();
    SynthDataset data = load_dataset(data_dir, tpl);
    if (data.truth.size() != data.samples.size())
        throw IoError("dataset has no ground truth: " + data_dir);
    const auto pred = match_params_to_samples(load_params_map(pred_path), data.samples, pred_path);

    const EvalReport report = evaluate_fits(tpl, pred, data.truth, &data.samples);
    std::printf("%s\n%s\n", EvalReport::csv_header().c_str(), report.csv_row().c_str());
    if (g.out != ".") {
        fs::create_directories(g.out);
        std::ofstream out((fs::path(g.out) / "eval.json").string());
        out << report.to_json() << '\n';
    }
    return 0;
}

int run_export_mesh(const GlobalArgs& g, const std::string& params_path,
                    const std::string& sample_path) {
    const BodyTemplate tpl = builtin_humanoid();
    const BodyParams params = load_params(params_path);
    const PosedBody posed = pose_body(tpl, params);

    fs::create_directories(g.out);
    const std::string obj_path = (fs::path(g.out) / "mesh.obj").string();
    export_mesh(tpl, posed, obj_path);
    std::printf("wrote %s (%zu vertices, %zu faces)\n", obj_path.c_str(), posed.vertices.size(),
                tpl.faces.size());

    const WeakPerspectiveCamera cam{params.rotation_raw, params.scale, params.translation};
    const auto pixels = project(posed.vertices, cam);
    SampleAnnotation anno;
    int width = 512, height = 512;
    const SampleAnnotation* overlay = nullptr;
    if (!sample_path.empty()) {
        anno = load_annotation(sample_path, tpl);
        width = anno.width;
        height = anno.height;
        overlay = &anno;
    }
    const std::string svg_path = (fs::path(g.out) / "overlay.svg").string();
    export_overlay_svg(svg_path, width, height, pixels, tpl.faces, overlay);
    std::printf("wrote %s\n", svg_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D-supervised body shape and pose: synthesis, registration, priors, training"};
    app.require_subcommand(1);

    GlobalArgs g[8];
    int prior_count = 2000, prior_eval_count = 500;
    std::string data_dir, pose_path, eval_path, prior_path, fitted_path, regressor_path,
        init_path, pred_path, params_path, sample_path;
    bool resume = false;

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset + prior families");
    add_global_flags(synth, g[0]);
    synth->add_option("--prior-count", prior_count, "prior family training poses");
    synth->add_option("--prior-eval-count", prior_eval_count, "prior family eval poses");

    auto* train_prior_cmd = app.add_subcommand("train-prior", "adversarial 2D->depth pose prior");
    add_global_flags(train_prior_cmd, g[1]);
    train_prior_cmd->add_option("--data", pose_path, "JSONL 2D pose dataset")->required();
    train_prior_cmd->add_option("--eval", eval_path, "JSONL eval poses with true depths");

    auto* register_cmd = app.add_subcommand("register", "fit the body model to annotations");
    add_global_flags(register_cmd, g[2]);
    register_cmd->add_option("--data", data_dir, "dataset directory")->required();
    register_cmd->add_option("--prior", prior_path, "trained prior (fills keypoint depths)");

    auto* train_reg = app.add_subcommand("train-regressor", "annotation->parameter regressor");
    add_global_flags(train_reg, g[3]);
    train_reg->add_option("--data", data_dir, "dataset directory")->required();
    train_reg->add_option("--fitted", fitted_path, "registered parameters (fitted.json)")
        ->required();

    auto* loop_cmd = app.add_subcommand("deform-learn", "alternate registration and regression");
    add_global_flags(loop_cmd, g[4]);
    loop_cmd->add_option("--data", data_dir, "dataset directory")->required();
    loop_cmd->add_option("--prior", prior_path, "trained prior (fills keypoint depths)");
    loop_cmd->add_flag("--resume", resume, "continue from the latest checkpoint in --out");

    auto* refine_cmd = app.add_subcommand("refine", "refine predictions by short registration");
    add_global_flags(refine_cmd, g[5]);
    refine_cmd->add_option("--data", data_dir, "dataset directory")->required();
    refine_cmd->add_option("--regressor", regressor_path, "regressor weights (predict inits)");
    refine_cmd->add_option("--init", init_path, "initial parameters map (fitted.json)");
    refine_cmd->add_option("--prior", prior_path, "trained prior (fills keypoint depths)");

    auto* eval_cmd = app.add_subcommand("eval", "score predictions against ground truth");
    add_global_flags(eval_cmd, g[6]);
    eval_cmd->add_option("--data", data_dir, "dataset directory with truth")->required();
    eval_cmd->add_option("--pred", pred_path, "predicted parameters map")->required();

    auto* export_cmd = app.add_subcommand("export-mesh", "OBJ mesh + SVG overlay for parameters");
    add_global_flags(export_cmd, g[7]);
    export_cmd->add_option("--params", params_path, "body parameters JSON")->required();
    export_cmd->add_option("--sample", sample_path, "annotation JSON for the overlay");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems -> 1; --help -> 0
    }

    try {
        if (synth->parsed()) return run_synth(g[0], prior_count, prior_eval_count);
        if (train_prior_cmd->parsed()) return run_train_prior(g[1], pose_path, eval_path);
        if (register_cmd->parsed()) return run_register(g[2], data_dir, prior_path);
        if (train_reg->parsed()) return run_train_regressor(g[3], data_dir, fitted_path);
        if (loop_cmd->parsed()) return run_deform_learn(g[4], data_dir, prior_path, resume);
        if (refine_cmd->parsed())
            return run_refine(g[5], data_dir, regressor_path, init_path, prior_path);
        if (eval_cmd->parsed()) return run_eval(g[6], data_dir, pred_path);
        if (export_cmd->parsed()) return run_export_mesh(g[7], params_path, sample_path);
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        // missing/invalid inputs are usage-level mistakes
        return std::string(e.what()).find("cannot open config") != std::string::npos ? 1 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
