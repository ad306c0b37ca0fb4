#include "bodyfit/regressor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <numeric>

#include "bodyfit/ad/adam.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/registration.hpp"

namespace bodyfit {

using json = nlohmann::json;

RegressorParams132 params_to_regressor_space(const BodyParams& p) {
    RegressorParams132 r{};
    std::size_t k = 0;
    for (const auto& a : p.pose) {
        const Quaternion q = axis_angle_to_quaternion(a);
        r[k++] = q.w;
        r[k++] = q.x;
        r[k++] = q.y;
        r[k++] = q.z;
    }
    for (double s : p.scales) r[k++] = s;
    for (double m : p.rotation_raw.m) r[k++] = m;
    r[k++] = p.scale;
    r[k++] = p.translation.x;
    r[k++] = p.translation.y;
    return r;
}

BodyParams regressor_space_to_params(const RegressorParams132& r) {
    BodyParams p;
    std::size_t k = 0;
    for (auto& a : p.pose) {
        const Quaternion q{r[k], r[k + 1], r[k + 2], r[k + 3]};
        k += 4;
        a = quaternion_to_axis_angle(q);  // normalizes; zero-norm throws
    }
    for (auto& s : p.scales) s = r[k++];
    for (auto& m : p.rotation_raw.m) m = r[k++];
    p.scale = r[k++];
    p.translation = {r[k], r[k + 1]};
    p.rotation_raw = gram_schmidt(p.rotation_raw);
    return p;
}

double smooth_l1(double x, double delta) {
    const double ax = std::abs(x);
    return ax <= delta ? 0.5 * x * x : ax - 0.5 * delta;
}

ad::Value smooth_l1(ad::Value x, double delta) {
    const double v = x.value();
    if (std::abs(v) <= delta) return (x * x) * 0.5;
    return (v > 0.0 ? x : -x) - 0.5 * delta;
}

int Regressor::feature_dim(const KeypointMap& map, int dense_features) {
    return 3 * map.size() + 5 * dense_features + 3;
}

Regressor Regressor::init(const KeypointMap& map, const RegressorConfig& cfg,
                          std::mt19937_64& rng) {
    Regressor reg;
    reg.dense_features = cfg.dense_features;
    MlpSpec spec;
    spec.widths = {feature_dim(map, cfg.dense_features), cfg.hidden, cfg.hidden, kRegressorDim};
    reg.mlp = Mlp::init(spec, rng);
    return reg;
}

std::vector<double> regressor_features(const Regressor& reg, const BodyTemplate& tpl,
                                       const SampleAnnotation& anno, const KeypointMap& map) {
    if ((int)anno.keypoints.size() != map.size())
        throw ContractViolation("regressor_features: keypoint count mismatch");
    const BodyParams base = default_init(tpl, anno, map);
    const double h = std::max(base.scale * tpl.skeleton_height(), 1e-6);
    const Vec2<double> c = base.translation;

    std::vector<double> f;
    f.reserve(Regressor::feature_dim(map, reg.dense_features));
    for (const auto& kp : anno.keypoints) {
        if (kp.visible) {
            f.push_back((kp.pos.x - c.x) / h);
            f.push_back((kp.pos.y - c.y) / h);
            f.push_back(1.0);
        } else {
            f.insert(f.end(), {0.0, 0.0, 0.0});
        }
    }

    // Fixed random subset so the feature layout is stable per annotation.
    std::vector<int> idx(anno.dense.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::vector<int> chosen;
    std::mt19937_64 pick(0x0feedbeefull);
    std::sample(idx.begin(), idx.end(), std::back_inserter(chosen),
                (std::size_t)reg.dense_features, pick);
    for (int i : chosen) {
        const DensePoint& d = anno.dense[i];
        f.push_back((d.pixel.x - c.x) / h);
        f.push_back((d.pixel.y - c.y) / h);
        f.push_back((tpl.vertex_part[d.vertex] + 0.5) / BodyTemplate::kNumJoints);
        f.push_back(tpl.vertex_uv[d.vertex].x);
        f.push_back(tpl.vertex_uv[d.vertex].y);
    }
    f.resize(3 * map.size() + 5 * (std::size_t)reg.dense_features, 0.0);

    f.push_back(base.scale / 100.0);
    f.push_back(base.translation.x / 100.0);
    f.push_back(base.translation.y / 100.0);
    return f;
}

RegressorParams132 decode_prediction(std::span<const double> raw,
                                     const RegressorParams132& base) {
    if ((int)raw.size() != kRegressorDim)
        throw ContractViolation("decode_prediction: expected 132 outputs");
    RegressorParams132 out;
    for (int d = 0; d < 129; ++d) out[d] = base[d] + raw[d];
    out[129] = base[129] * std::exp(raw[129]);
    out[130] = base[130] + 100.0 * raw[130];
    out[131] = base[131] + 100.0 * raw[131];
    return out;
}

BodyParams predict(const Regressor& reg, const BodyTemplate& tpl, const SampleAnnotation& anno,
                   const KeypointMap& map) {
    const auto features = regressor_features(reg, tpl, anno, map);
    const auto raw = mlp_forward(reg.mlp, features);
    RegressorParams132 pred =
        decode_prediction(raw, params_to_regressor_space(default_init(tpl, anno, map)));
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j)
        pred[96 + j] = std::max(pred[96 + j], 0.01);
    return regressor_space_to_params(pred);
}

namespace {

// L_conv of one sample on the tape: smooth-L1 in regressor space plus the
// dense/keypoint terms of the decoded body.
ad::Value conv_loss_one(ad::Tape& tape, std::span<const ad::Value> w, const Regressor& reg,
                        const BodyTemplate& tpl, const SampleAnnotation& anno,
                        std::span<const double> features, const RegressorParams132& base,
                        const RegressorParams132& target, const KeypointMap& map,
                        const RegressorConfig& cfg) {
    std::vector<ad::Value> in;
    in.reserve(features.size());
    for (double f : features) in.push_back(tape.constant(f));
    const auto raw = mlp_forward(tape, reg.mlp.spec, w, in);

    std::array<ad::Value, kRegressorDim> pred;
    for (int d = 0; d < 129; ++d) pred[d] = raw[d] + base[d];
    pred[129] = exp(raw[129]) * base[129];
    pred[130] = raw[130] * 100.0 + base[130];
    pred[131] = raw[131] * 100.0 + base[131];

    ad::Value regress = tape.constant(0.0);
    for (int d = 0; d < kRegressorDim; ++d) regress = regress + smooth_l1(pred[d] - target[d]);
    regress = regress * (1.0 / kRegressorDim);

    std::array<Mat3<ad::Value>, BodyTemplate::kNumJoints> rotations;
    std::array<ad::Value, BodyTemplate::kNumJoints> scales;
    for (int j = 0; j < BodyTemplate::kNumJoints; ++j) {
        rotations[j] = quaternion_to_matrix<ad::Value>(pred[4 * j], pred[4 * j + 1],
                                                       pred[4 * j + 2], pred[4 * j + 3]);
        // max(S, 0.01): the decoded body must stay usable by FK.
        scales[j] = leaky_relu(pred[96 + j] - 0.01, 0.0) + 0.01;
    }
    Mat3<ad::Value> R;
    for (int i = 0; i < 9; ++i) R.m[i] = pred[120 + i];
    const auto fit = evaluate_fit_terms<ad::Value>(
        tpl, std::span<const Mat3<ad::Value>>(rotations.data(), rotations.size()),
        std::span<const ad::Value>(scales.data(), scales.size()), R, pred[129],
        Vec2<ad::Value>{pred[130], pred[131]}, anno, map);

    return cfg.alpha * regress + cfg.beta * fit.dense + cfg.gamma * fit.kp;
}

}  // namespace

ad::Value conv_loss(ad::Tape& tape, std::span<const ad::Value> weights, const Regressor& reg,
                    const BodyTemplate& tpl, const SampleAnnotation& anno,
                    const BodyParams& theta_anno, const KeypointMap& map,
                    const RegressorConfig& cfg) {
    const auto features = regressor_features(reg, tpl, anno, map);
    const auto base = params_to_regressor_space(default_init(tpl, anno, map));
    const auto target = params_to_regressor_space(theta_anno);
    return conv_loss_one(tape, weights, reg, tpl, anno, features, base, target, map, cfg);
}

Regressor train_regressor(Regressor reg, const BodyTemplate& tpl,
                          const std::vector<SampleAnnotation>& samples,
                          const std::vector<BodyParams>& theta_anno, const KeypointMap& map,
                          const RegressorConfig& cfg, RegressorHistory* history) {
    if (samples.empty()) throw ContractViolation("train_regressor: empty sample set");
    if (theta_anno.size() != samples.size())
        throw ContractViolation("train_regressor: theta_anno missing for some samples");

    std::mt19937_64 rng(cfg.seed);
    if (reg.mlp.weights.empty()) reg = Regressor::init(map, cfg, rng);

    const int n = (int)samples.size();
    std::vector<std::vector<double>> features(n);
    std::vector<RegressorParams132> base(n), target(n);
    for (int i = 0; i < n; ++i) {
        features[i] = regressor_features(reg, tpl, samples[i], map);
        base[i] = params_to_regressor_space(default_init(tpl, samples[i], map));
        target[i] = params_to_regressor_space(theta_anno[i]);
    }

    const int batch = std::clamp(cfg.batch_size, 1, n);
    const int steps_per_epoch = (n + batch - 1) / batch;
    long total_steps = (long)cfg.epochs * steps_per_epoch;
    if (cfg.max_steps > 0) total_steps = std::min(total_steps, (long)cfg.max_steps);

    ad::AdamState adam(reg.mlp.weights.size(), cfg.lr);
    ad::Tape tape;
    std::vector<double> grads(reg.mlp.weights.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);

    long step = 0;
    for (int epoch = 0; step < total_steps; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (int start = 0; start < n && step < total_steps; start += batch, ++step) {
            const int count = std::min(batch, n - start);
            tape.clear();
            const auto w = bind_weights(tape, reg.mlp, true);
            ad::Value loss = tape.constant(0.0);
            for (int b = 0; b < count; ++b) {
                const int i = order[start + b];
                loss = loss + conv_loss_one(tape, w, reg, tpl, samples[i], features[i], base[i],
                                            target[i], map, cfg);
            }
            loss = loss * (1.0 / count);
            const auto g = tape.backward(loss);
            for (std::size_t k = 0; k < grads.size(); ++k) grads[k] = g[w[k]];
            ad::adam_step(adam, reg.mlp.weights, grads);
            if (history) history->loss.push_back(loss.value());
        }
    }
    return reg;
}

void save_regressor(const Regressor& reg, const std::string& path) {
    json j{{"dense_features", reg.dense_features},
           {"widths", reg.mlp.spec.widths},
           {"leaky_slope", reg.mlp.spec.leaky_slope},
           {"logistic_output", reg.mlp.spec.logistic_output},
           {"weights", reg.mlp.weights}};
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

Regressor load_regressor(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("parse error in " + path + ": " + e.what());
    }
    Regressor reg;
    try {
        reg.dense_features = j.at("dense_features").get<int>();
        reg.mlp.spec.widths = j.at("widths").get<std::vector<int>>();
        reg.mlp.spec.leaky_slope = j.at("leaky_slope").get<double>();
        reg.mlp.spec.logistic_output = j.at("logistic_output").get<bool>();
        reg.mlp.weights = j.at("weights").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw IoError("schema error in " + path + ": " + e.what());
    }
    if ((int)reg.mlp.weights.size() != reg.mlp.spec.weight_count())
        throw IoError(path + ": weight count does not match widths");
    return reg;
}

}  // namespace bodyfit
