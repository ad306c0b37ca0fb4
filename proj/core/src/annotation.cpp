#include "bodyfit/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "bodyfit/errors.hpp"

namespace bodyfit {

using nlohmann::json;

int uv_to_vertex(const DenseRawPoint& raw, const BodyTemplate& tpl, const PartCharts& charts) {
    if (raw.part < 0 || raw.part >= BodyTemplate::kNumJoints)
        throw ContractViolation("uv_to_vertex: part id out of range");
    const auto& members = charts.members[raw.part];
    if (members.empty()) throw ContractViolation("uv_to_vertex: empty part chart");
    int best = members.front();
    double best_d = squared_norm(tpl.vertex_uv[best] - raw.uv);
    for (int v : members) {
        const double d = squared_norm(tpl.vertex_uv[v] - raw.uv);
        if (d < best_d) {  // strict: ties keep the smaller index (members ascend)
            best_d = d;
            best = v;
        }
    }
    return best;
}

int uv_to_vertex(const DenseRawPoint& raw, const BodyTemplate& tpl) {
    return uv_to_vertex(raw, tpl, PartCharts::build(tpl));
}

namespace {

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("parse error in " + path + ": " + e.what());
    }
    return j;
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::string stem_of(const std::string& path) {
    const auto slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const auto dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

SampleAnnotation load_annotation(const std::string& path, const BodyTemplate& tpl) {
    const json j = read_json(path);
    SampleAnnotation anno;
    anno.id = stem_of(path);
    PartCharts charts;  // built lazily if any raw entry appears
    bool have_charts = false;
    try {
        int entry = 0;
        for (const auto& d : j.at("dense")) {
            if (d.size() == 3) {
                const int idx = d.at(2).get<int>();
                if (idx < 0 || idx >= tpl.n_vertices())
                    throw IoError(path + ": dense[" + std::to_string(entry) +
                                  "] vertex index out of range");
                anno.dense.push_back({{d.at(0).get<double>(), d.at(1).get<double>()}, idx});
            } else if (d.size() == 5) {
                if (!have_charts) {
                    charts = PartCharts::build(tpl);
                    have_charts = true;
                }
                DenseRawPoint raw{{d.at(0).get<double>(), d.at(1).get<double>()},
                                  d.at(2).get<int>(),
                                  {d.at(3).get<double>(), d.at(4).get<double>()}};
                anno.dense.push_back({raw.pixel, uv_to_vertex(raw, tpl, charts)});
            } else {
                throw IoError(path + ": dense[" + std::to_string(entry) +
                              "] must have 3 or 5 elements");
            }
            ++entry;
        }
        for (const auto& k : j.at("keypoints"))
            anno.keypoints.push_back(
                {{k.at(0).get<double>(), k.at(1).get<double>()}, k.at(2).get<double>() != 0.0});
        if (j.contains("gan_depths") && !j.at("gan_depths").is_null())
            for (const auto& z : j.at("gan_depths")) anno.gan_depths.push_back(z.get<double>());
        if (!anno.gan_depths.empty() && anno.gan_depths.size() != anno.keypoints.size())
            throw IoError(path + ": gan_depths length must match keypoints");
        anno.width = j.at("width").get<int>();
        anno.height = j.at("height").get<int>();
    } catch (const json::exception& e) {
        throw IoError("schema error in " + path + ": " + e.what());
    }
    return anno;
}

void save_annotation(const SampleAnnotation& anno, const std::string& path) {
    json j;
    j["dense"] = json::array();
    for (const auto& d : anno.dense)
        j["dense"].push_back(json::array({d.pixel.x, d.pixel.y, d.vertex}));
    j["keypoints"] = json::array();
    for (const auto& k : anno.keypoints)
        j["keypoints"].push_back(json::array({k.pos.x, k.pos.y, k.visible ? 1 : 0}));
    if (anno.has_gan_depths())
        j["gan_depths"] = anno.gan_depths;
    else
        j["gan_depths"] = nullptr;
    j["width"] = anno.width;
    j["height"] = anno.height;
    write_json(j, path);
}

std::vector<DenseRawPoint> load_densepose_grid(const std::string& path, int max_points) {
    if (max_points <= 0) throw ContractViolation("load_densepose_grid: max_points must be > 0");
    const json j = read_json(path);
    std::vector<DenseRawPoint> valid;
    try {
        const int w = j.at("width").get<int>();
        const int h = j.at("height").get<int>();
        const auto& grid = j.at("grid");
        if ((int)grid.size() != w * h)
            throw IoError(path + ": grid size must be width*height");
        for (int i = 0; i < w * h; ++i) {
            const auto& cell = grid[i];
            const int part = cell.at(0).get<int>();
            if (part < 0) continue;  // background
            if (part >= BodyTemplate::kNumJoints)
                throw IoError(path + ": grid[" + std::to_string(i) + "] part out of range");
            const double u = cell.at(1).get<double>(), v = cell.at(2).get<double>();
            if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
                throw IoError(path + ": grid[" + std::to_string(i) + "] uv outside [0,1]");
            valid.push_back({{double(i % w) + 0.5, double(i / w) + 0.5}, part, {u, v}});
        }
    } catch (const json::exception& e) {
        throw IoError("schema error in " + path + ": " + e.what());
    }
    if ((int)valid.size() <= max_points) return valid;
    const int stride = ((int)valid.size() + max_points - 1) / max_points;
    std::vector<DenseRawPoint> out;
    for (std::size_t i = 0; i < valid.size(); i += stride) out.push_back(valid[i]);
    return out;
}

namespace {

BodyParams params_from_json(const json& j, const std::string& where) {
    BodyParams p;
    const auto& pose = j.at("pose");
    if (pose.size() != BodyTemplate::kNumJoints) throw IoError(where + ": pose must have 24 entries");
    for (int i = 0; i < BodyTemplate::kNumJoints; ++i)
        p.pose[i] = {pose[i].at(0).get<double>(), pose[i].at(1).get<double>(),
                     pose[i].at(2).get<double>()};
    const auto& sc = j.at("scales");
    if (sc.size() != BodyTemplate::kNumJoints)
        throw IoError(where + ": scales must have 24 entries");
    for (int i = 0; i < BodyTemplate::kNumJoints; ++i) p.scales[i] = sc[i].get<double>();
    const auto& r = j.at("rotation");
    if (r.size() != 9) throw IoError(where + ": rotation must have 9 entries");
    for (int i = 0; i < 9; ++i) p.rotation_raw.m[i] = r[i].get<double>();
    p.scale = j.at("scale").get<double>();
    p.translation = {j.at("translation").at(0).get<double>(),
                     j.at("translation").at(1).get<double>()};
    return p;
}

json params_to_json(const BodyParams& params) {
    json j;
    j["pose"] = json::array();
    for (const auto& a : params.pose) j["pose"].push_back(json::array({a.x, a.y, a.z}));
    j["scales"] = params.scales;
    j["rotation"] = params.rotation_raw.m;
    j["scale"] = params.scale;
    j["translation"] = json::array({params.translation.x, params.translation.y});
    return j;
}

}  // namespace

BodyParams load_params(const std::string& path) {
    const json j = read_json(path);
    try {
        return params_from_json(j, path);
    } catch (const json::exception& e) {
        throw IoError("schema error in " + path + ": " + e.what());
    }
}

void save_params(const BodyParams& params, const std::string& path) {
    write_json(params_to_json(params), path);
}

std::vector<std::pair<std::string, BodyParams>> load_params_map(const std::string& path) {
    const json j = read_json(path);
    std::vector<std::pair<std::string, BodyParams>> out;
    try {
        const auto& samples = j.at("samples");
        for (auto it = samples.begin(); it != samples.end(); ++it)
            out.emplace_back(it.key(), params_from_json(it.value(), path + ":" + it.key()));
    } catch (const json::exception& e) {
        throw IoError("schema error in " + path + ": " + e.what());
    }
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    return out;
}

void save_params_map(const std::vector<std::pair<std::string, BodyParams>>& items,
                     const std::string& path) {
    json samples = json::object();
    for (const auto& [id, params] : items) samples[id] = params_to_json(params);
    write_json(json{{"samples", std::move(samples)}}, path);
}

}  // namespace bodyfit
