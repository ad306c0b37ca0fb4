#include "bodyfit/prior_train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bodyfit/ad/adam.hpp"
#include "bodyfit/errors.hpp"

namespace bodyfit {

using nlohmann::json;

namespace {

constexpr double kDegToRad = M_PI / 180.0;

std::vector<ad::Value> as_constants(ad::Tape& tape, std::span<const double> xs) {
    std::vector<ad::Value> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back(tape.constant(x));
    return out;
}

}  // namespace

ad::Value generator_loss(ad::Tape& tape, std::span<const ad::Value> g_weights,
                         const MlpSpec& g_spec, const Mlp& D, std::span<const Pose2D> batch,
                         std::span<const double> phis_rad, const SkeletonStats& stats,
                         double epsilon) {
    if (batch.empty()) throw ContractViolation("generator_loss: empty batch");
    if (batch.size() != phis_rad.size())
        throw ContractViolation("generator_loss: need one view angle per sample");
    const auto d_weights = bind_weights(tape, D, false);

    ad::Value adv = tape.constant(0.0);
    ad::Value geo = tape.constant(0.0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Pose2D& pose = batch[i];
        const auto input = as_constants(tape, pose.flat());
        const auto z = mlp_forward(tape, g_spec, g_weights, input);
        const auto proj = rotate_project<ad::Value>(pose, z, phis_rad[i]);
        std::vector<ad::Value> flat;
        flat.reserve(2 * proj.size());
        for (const auto& p : proj) {
            flat.push_back(p.x);
            flat.push_back(p.y);
        }
        const ad::Value logit = mlp_forward(tape, D.spec, d_weights, flat)[0];
        adv = adv - softplus(logit);  // log(1 - D) = -softplus(logit)
        const auto [ratio, sym] = geometric_losses<ad::Value>(pose, z, stats);
        geo = geo + ratio + sym;
    }
    const double inv = 1.0 / (double)batch.size();
    return (epsilon * inv) * adv + inv * geo;
}

ad::Value discriminator_loss(ad::Tape& tape, std::span<const ad::Value> d_weights,
                             const MlpSpec& d_spec, std::span<const Pose2D> real,
                             std::span<const std::vector<Vec2<double>>> fake) {
    if (real.empty() || fake.empty()) throw ContractViolation("discriminator_loss: empty batch");
    // maximize E[log D(real)] + E[log(1 - D(fake))]
    //   == minimize E[softplus(-logit_real)] + E[softplus(logit_fake)]
    ad::Value loss = tape.constant(0.0);
    for (const Pose2D& pose : real) {
        const auto input = as_constants(tape, pose.flat());
        loss = loss + softplus(-mlp_forward(tape, d_spec, d_weights, input)[0]) *
                          (1.0 / (double)real.size());
    }
    for (const auto& pose : fake) {
        std::vector<double> flat;
        flat.reserve(2 * pose.size());
        for (const auto& p : pose) {
            flat.push_back(p.x);
            flat.push_back(p.y);
        }
        const auto input = as_constants(tape, flat);
        loss = loss + softplus(mlp_forward(tape, d_spec, d_weights, input)[0]) *
                          (1.0 / (double)fake.size());
    }
    return loss;
}

namespace {

PriorEvalPoint evaluate_prior(int step, const Mlp& G, const Mlp& D,
                              std::span<const Pose2D> subset,
                              std::span<const double> views_rad, const SkeletonStats& stats) {
    PriorEvalPoint pt;
    pt.step = step;
    std::vector<std::vector<Vec2<double>>> fakes;
    double ratio_sum = 0.0, sym_sum = 0.0;
    for (const Pose2D& pose : subset) {
        const auto z = generate_depths(G, pose);
        const auto [ratio, sym] = geometric_losses<double>(pose, z, stats);
        ratio_sum += ratio;
        sym_sum += sym;
        for (double phi : views_rad) fakes.push_back(rotate_project<double>(pose, z, phi));
    }
    const auto [adv_g, adv_d] = adv_losses(D, subset, fakes);
    pt.adv_g = adv_g;
    pt.adv_d = adv_d;
    pt.ratio = ratio_sum / (double)subset.size();
    pt.sym = sym_sum / (double)subset.size();
    return pt;
}

}  // namespace

PriorTrainResult train_prior(const std::vector<Pose2D>& data, const SkeletonStats& stats,
                             const PriorConfig& cfg) {
    if (data.empty()) throw ContractViolation("train_prior: empty dataset");
    if (cfg.views_deg.empty()) throw ContractViolation("train_prior: empty view set");
    const int n_kp = data.front().size();

    std::mt19937_64 rng(cfg.seed);
    PriorTrainResult result;
    result.G = Mlp::init(MlpSpec::lifter(n_kp, cfg.hidden, cfg.layers), rng);
    result.D = Mlp::init(MlpSpec::critic(n_kp, cfg.hidden, cfg.layers), rng);

    std::vector<double> views_rad;
    for (double d : cfg.views_deg) views_rad.push_back(d * kDegToRad);

    const int batch = std::min<int>(cfg.batch_size, (int)data.size());
    const int steps_per_epoch = ((int)data.size() + batch - 1) / batch;
    int total_steps = cfg.epochs * steps_per_epoch;
    if (cfg.max_steps > 0) total_steps = std::min(total_steps, cfg.max_steps);
    const int eval_every = cfg.eval_every > 0 ? cfg.eval_every : steps_per_epoch;

    std::vector<Pose2D> eval_subset(
        data.begin(), data.begin() + std::min<int>((int)data.size(), cfg.eval_subset));

    ad::AdamState g_state(result.G.weights.size(), cfg.lr);
    ad::AdamState d_state(result.D.weights.size(), cfg.lr);
    std::uniform_int_distribution<int> pick(0, (int)data.size() - 1);
    std::uniform_int_distribution<int> pick_view(0, (int)views_rad.size() - 1);

    ad::Tape d_tape, g_tape;
    std::vector<double> grad(std::max(result.G.weights.size(), result.D.weights.size()));

    result.history.push_back(evaluate_prior(0, result.G, result.D, eval_subset, views_rad, stats));

    for (int step = 1; step <= total_steps; ++step) {
        // --- discriminator step: fakes from the current G, fixed ---
        std::vector<Pose2D> real_batch, fake_src;
        std::vector<std::vector<Vec2<double>>> fake_batch;
        for (int i = 0; i < batch; ++i) real_batch.push_back(data[pick(rng)]);
        for (int i = 0; i < batch; ++i) {
            const Pose2D& pose = data[pick(rng)];
            const auto z = generate_depths(result.G, pose);
            fake_batch.push_back(rotate_project<double>(pose, z, views_rad[pick_view(rng)]));
        }
        d_tape.clear();
        const auto d_weights = bind_weights(d_tape, result.D, true);
        const ad::Value d_loss =
            discriminator_loss(d_tape, d_weights, result.D.spec, real_batch, fake_batch);
        {
            const auto grads = d_tape.backward(d_loss);
            for (std::size_t i = 0; i < result.D.weights.size(); ++i)
                grad[i] = grads[d_weights[i]];
            ad::adam_step(d_state, result.D.weights,
                          std::span<const double>(grad.data(), result.D.weights.size()));
        }

        // --- generator step ---
        std::vector<Pose2D> g_batch;
        std::vector<double> g_phis;
        for (int i = 0; i < batch; ++i) {
            g_batch.push_back(data[pick(rng)]);
            g_phis.push_back(views_rad[pick_view(rng)]);
        }
        g_tape.clear();
        const auto g_weights = bind_weights(g_tape, result.G, true);
        const ad::Value g_loss = generator_loss(g_tape, g_weights, result.G.spec, result.D,
                                                g_batch, g_phis, stats, cfg.epsilon);
        {
            const auto grads = g_tape.backward(g_loss);
            for (std::size_t i = 0; i < result.G.weights.size(); ++i)
                grad[i] = grads[g_weights[i]];
            ad::adam_step(g_state, result.G.weights,
                          std::span<const double>(grad.data(), result.G.weights.size()));
        }

        if (step % eval_every == 0 || step == total_steps)
            result.history.push_back(
                evaluate_prior(step, result.G, result.D, eval_subset, views_rad, stats));
    }
    return result;
}

int fill_gan_depths(const Mlp& G, const KeypointMap& map,
                    std::vector<SampleAnnotation>& annotations) {
    int filled = 0;
    for (auto& anno : annotations) {
        if ((int)anno.keypoints.size() != map.size()) continue;
        std::vector<Vec2<double>> pts;
        std::vector<bool> vis;
        bool all_visible = true;
        for (const auto& kp : anno.keypoints) {
            pts.push_back(kp.pos);
            vis.push_back(kp.visible);
            all_visible = all_visible && kp.visible;
        }
        if (!all_visible) continue;
        const double trunk_px =
            std::sqrt(squared_norm(pts[map.trunk_top] - pts[map.trunk_root]));
        if (trunk_px < 1e-9) continue;
        Pose2D pose;
        try {
            pose = normalize_pose(pts, vis, map);
        } catch (const DegenerateInput&) {
            continue;
        }
        auto z = generate_depths(G, pose);
        const double z_root = z[map.trunk_root];
        anno.gan_depths.clear();
        for (double zi : z) anno.gan_depths.push_back((zi - z_root) * trunk_px);
        ++filled;
    }
    return filled;
}

std::vector<Pose2D> load_pose_dataset(const std::string& path, const KeypointMap& map) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pose dataset: " + path);
    std::vector<Pose2D> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        std::vector<Vec2<double>> pts;
        std::vector<bool> vis;
        try {
            for (const auto& kp : j.at("joints")) {
                pts.push_back({kp.at(0).get<double>(), kp.at(1).get<double>()});
                vis.push_back(kp.at(2).get<double>() != 0.0);
            }
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if ((int)pts.size() != map.size())
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(map.size()) + " joints");
        if (std::find(vis.begin(), vis.end(), false) != vis.end()) continue;
        try {
            out.push_back(normalize_pose(pts, vis, map));
        } catch (const DegenerateInput&) {
            continue;
        }
    }
    return out;
}

void save_pose_dataset(const std::vector<std::vector<Keypoint2D>>& poses,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& pose : poses) {
        json j;
        j["joints"] = json::array();
        for (const auto& kp : pose)
            j["joints"].push_back(json::array({kp.pos.x, kp.pos.y, kp.visible ? 1 : 0}));
        out << j.dump() << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

void save_mlp(const Mlp& mlp, const std::string& path) {
    json j;
    j["widths"] = mlp.spec.widths;
    j["leaky_slope"] = mlp.spec.leaky_slope;
    j["logistic_output"] = mlp.spec.logistic_output;
    j["layers"] = json::array();
    std::size_t off = 0;
    for (int l = 0; l < mlp.spec.layer_count(); ++l) {
        const int in = mlp.spec.widths[l], out = mlp.spec.widths[l + 1];
        json W = json::array(), b = json::array();
        for (int r = 0; r < out; ++r) {
            json row = json::array();
            for (int c = 0; c < in; ++c) row.push_back(mlp.weights[off + (std::size_t)r * in + c]);
            W.push_back(std::move(row));
        }
        for (int r = 0; r < out; ++r) b.push_back(mlp.weights[off + (std::size_t)out * in + r]);
        j["layers"].push_back(json{{"W", std::move(W)}, {"b", std::move(b)}});
        off += (std::size_t)out * (in + 1);
    }
    std::ofstream file(path);
    if (!file) throw IoError("cannot open for writing: " + path);
    file << j.dump() << '\n';
    if (!file) throw IoError("write failed: " + path);
}

Mlp load_mlp(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw IoError("cannot open: " + path);
    json j;
    try {
        file >> j;
    } catch (const json::exception& e) {
        throw IoError("parse error in " + path + ": " + e.what());
    }
    Mlp mlp;
    try {
        mlp.spec.widths = j.at("widths").get<std::vector<int>>();
        mlp.spec.leaky_slope = j.at("leaky_slope").get<double>();
        mlp.spec.logistic_output = j.at("logistic_output").get<bool>();
        const auto& layers = j.at("layers");
        if ((int)layers.size() != mlp.spec.layer_count())
            throw IoError(path + ": layer count does not match widths");
        mlp.weights.reserve(mlp.spec.weight_count());
        for (int l = 0; l < mlp.spec.layer_count(); ++l) {
            const int in = mlp.spec.widths[l], out = mlp.spec.widths[l + 1];
            const auto& W = layers[l].at("W");
            const auto& b = layers[l].at("b");
            if ((int)W.size() != out || (int)b.size() != out)
                throw IoError(path + ": layer " + std::to_string(l) + " shape mismatch");
            for (int r = 0; r < out; ++r) {
                if ((int)W[r].size() != in)
                    throw IoError(path + ": layer " + std::to_string(l) + " row width mismatch");
                for (int c = 0; c < in; ++c) mlp.weights.push_back(W[r][c].get<double>());
            }
            for (int r = 0; r < out; ++r) mlp.weights.push_back(b[r].get<double>());
        }
    } catch (const json::exception& e) {
        throw IoError("schema error in " + path + ": " + e.what());
    }
    return mlp;
}

}  // namespace bodyfit
