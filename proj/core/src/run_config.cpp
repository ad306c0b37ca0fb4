#include "bodyfit/run_config.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "bodyfit/errors.hpp"

namespace bodyfit {

using nlohmann::json;

namespace {

json to_tree(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["synth"] = {{"count", c.synth.count},
                  {"noise_sigma", c.synth.noise_sigma},
                  {"max_angle", c.synth.max_angle},
                  {"scale_lo", c.synth.scale_lo},
                  {"scale_hi", c.synth.scale_hi},
                  {"dense_points", c.synth.dense_points},
                  {"width", c.synth.width},
                  {"height", c.synth.height},
                  {"azimuth_deg", c.synth.azimuth_deg},
                  {"elevation_deg", c.synth.elevation_deg},
                  {"roll_deg", c.synth.roll_deg},
                  {"truth_gan_depths", c.synth.truth_gan_depths}};
    j["regist"] = {{"weights",
                    {{"dense", c.weights.dense},
                     {"kp", c.weights.kp},
                     {"scale", c.weights.scale},
                     {"joint", c.weights.joint},
                     {"det", c.weights.det}}},
                   {"lr", c.regist_lr},
                   {"beta2", c.regist_beta2},
                   {"batch_size", c.regist_batch},
                   {"iterations", c.regist_iterations},
                   {"stiff", c.regist_stiff}};
    j["prior"] = {{"epochs", c.prior.epochs},
                  {"batch_size", c.prior.batch_size},
                  {"lr", c.prior.lr},
                  {"epsilon", c.prior.epsilon},
                  {"views_deg", c.prior.views_deg},
                  {"hidden", c.prior.hidden},
                  {"layers", c.prior.layers},
                  {"max_steps", c.prior.max_steps},
                  {"eval_every", c.prior.eval_every},
                  {"eval_subset", c.prior.eval_subset}};
    j["regressor"] = {{"epochs", c.regressor.epochs},
                      {"batch_size", c.regressor.batch_size},
                      {"lr", c.regressor.lr},
                      {"alpha", c.regressor.alpha},
                      {"beta", c.regressor.beta},
                      {"gamma", c.regressor.gamma},
                      {"hidden", c.regressor.hidden},
                      {"dense_features", c.regressor.dense_features},
                      {"max_steps", c.regressor.max_steps}};
    j["loop"] = {{"rounds", c.rounds},
                 {"first_round_iterations", c.first_round_iterations},
                 {"later_round_iterations", c.later_round_iterations},
                 {"refine_iterations", c.refine_iterations},
                 {"held_out", c.held_out}};
    return j;
}

RunConfig from_tree(const json& j) {
    RunConfig c;
    c.seed = j.at("seed").get<std::uint64_t>();
    c.threads = j.at("threads").get<int>();
    const json& s = j.at("synth");
    c.synth.count = s.at("count").get<int>();
    c.synth.noise_sigma = s.at("noise_sigma").get<double>();
    c.synth.max_angle = s.at("max_angle").get<double>();
    c.synth.scale_lo = s.at("scale_lo").get<double>();
    c.synth.scale_hi = s.at("scale_hi").get<double>();
    c.synth.dense_points = s.at("dense_points").get<int>();
    c.synth.width = s.at("width").get<int>();
    c.synth.height = s.at("height").get<int>();
    c.synth.azimuth_deg = s.at("azimuth_deg").get<double>();
    c.synth.elevation_deg = s.at("elevation_deg").get<double>();
    c.synth.roll_deg = s.at("roll_deg").get<double>();
    c.synth.truth_gan_depths = s.at("truth_gan_depths").get<bool>();
    const json& r = j.at("regist");
    const json& w = r.at("weights");
    c.weights.dense = w.at("dense").get<double>();
    c.weights.kp = w.at("kp").get<double>();
    c.weights.scale = w.at("scale").get<double>();
    c.weights.joint = w.at("joint").get<double>();
    c.weights.det = w.at("det").get<double>();
    c.regist_lr = r.at("lr").get<double>();
    c.regist_beta2 = r.at("beta2").get<double>();
    c.regist_batch = r.at("batch_size").get<int>();
    c.regist_iterations = r.at("iterations").get<int>();
    c.regist_stiff = r.at("stiff").get<bool>();
    const json& p = j.at("prior");
    c.prior.epochs = p.at("epochs").get<int>();
    c.prior.batch_size = p.at("batch_size").get<int>();
    c.prior.lr = p.at("lr").get<double>();
    c.prior.epsilon = p.at("epsilon").get<double>();
    c.prior.views_deg = p.at("views_deg").get<std::vector<double>>();
    c.prior.hidden = p.at("hidden").get<int>();
    c.prior.layers = p.at("layers").get<int>();
    c.prior.max_steps = p.at("max_steps").get<int>();
    c.prior.eval_every = p.at("eval_every").get<int>();
    c.prior.eval_subset = p.at("eval_subset").get<int>();
    const json& g = j.at("regressor");
    c.regressor.epochs = g.at("epochs").get<int>();
    c.regressor.batch_size = g.at("batch_size").get<int>();
    c.regressor.lr = g.at("lr").get<double>();
    c.regressor.alpha = g.at("alpha").get<double>();
    c.regressor.beta = g.at("beta").get<double>();
    c.regressor.gamma = g.at("gamma").get<double>();
    c.regressor.hidden = g.at("hidden").get<int>();
    c.regressor.dense_features = g.at("dense_features").get<int>();
    c.regressor.max_steps = g.at("max_steps").get<int>();
    const json& l = j.at("loop");
    c.rounds = l.at("rounds").get<int>();
    c.first_round_iterations = l.at("first_round_iterations").get<int>();
    c.later_round_iterations = l.at("later_round_iterations").get<int>();
    c.refine_iterations = l.at("refine_iterations").get<int>();
    c.held_out = l.at("held_out").get<std::vector<int>>();
    return c;
}

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

void merge_into(json& base, const json& given, const std::string& path) {
    if (!given.is_object())
        throw IoError("config: expected an object at '" + (path.empty() ? "." : path) + "'");
    for (const auto& [key, value] : given.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        if (!base.contains(key)) throw IoError("config: unknown key '" + sub + "'");
        json& slot = base[key];
        if (slot.is_object()) {
            merge_into(slot, value, sub);
        } else {
            if (!same_kind(slot, value))
                throw IoError("config: wrong type for '" + sub + "' (expected " +
                              std::string(slot.type_name()) + ")");
            slot = value;
        }
    }
}

}  // namespace

RegistConfig RunConfig::regist_config() const {
    RegistConfig rc;
    rc.weights = weights;
    rc.lr = regist_lr;
    rc.beta2 = regist_beta2;
    rc.batch_size = regist_batch;
    rc.iterations = regist_iterations;
    rc.stiff = regist_stiff;
    rc.threads = threads;
    return rc;
}

DeformLearnConfig RunConfig::loop_config() const {
    DeformLearnConfig lc;
    lc.rounds = rounds;
    lc.weights = weights;
    lc.regist_lr = regist_lr;
    lc.regist_batch = regist_batch;
    lc.first_round_iterations = first_round_iterations;
    lc.later_round_iterations = later_round_iterations;
    lc.threads = threads;
    lc.regressor = regressor;
    lc.regressor.seed = seed;
    lc.held_out = held_out;
    return lc;
}

std::string to_json(const RunConfig& cfg) { return to_tree(cfg).dump(2) + "\n"; }

RunConfig run_config_from_json(const std::string& text) {
    json given;
    try {
        given = json::parse(text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("config: ") + e.what());
    }
    json base = to_tree(RunConfig{});
    merge_into(base, given, "");
    return from_tree(base);
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return run_config_from_json(text);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config: " + path);
    out << to_json(cfg);
    if (!out.flush()) throw IoError("write failed: " + path);
}

void apply_override(RunConfig& cfg, const std::string& key_equals_value) {
    const auto eq = key_equals_value.find('=');
    if (eq == std::string::npos || eq == 0)
        throw IoError("override must look like key=value: " + key_equals_value);
    const std::string dotted = key_equals_value.substr(0, eq);
    const std::string raw = key_equals_value.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // unquoted strings
    }

    json tree = to_tree(cfg);
    json* slot = &tree;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const std::string key = dotted.substr(start, dot - start);
        if (!slot->is_object() || !slot->contains(key))
            throw IoError("config: unknown key '" + dotted + "'");
        slot = &(*slot)[key];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    if (slot->is_object()) throw IoError("config: '" + dotted + "' is a group, not a value");
    if (!same_kind(*slot, value))
        throw IoError("config: wrong type for '" + dotted + "' (expected " +
                      std::string(slot->type_name()) + ")");
    *slot = value;
    cfg = from_tree(tree);
}

}  // namespace bodyfit
