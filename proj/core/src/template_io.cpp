#include <fstream>

#include <nlohmann/json.hpp>

#include "bodyfit/body_template.hpp"
#include "bodyfit/errors.hpp"

namespace bodyfit {

using nlohmann::json;

namespace {

json vec3_to_json(const Vec3<double>& v) { return json::array({v.x, v.y, v.z}); }

Vec3<double> vec3_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw IoError("template: expected 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

void save_template(const BodyTemplate& tpl, const std::string& path) {
    json j;
    j["vertices"] = json::array();
    for (const auto& v : tpl.vertices) j["vertices"].push_back(vec3_to_json(v));
    j["faces"] = json::array();
    for (const auto& f : tpl.faces) j["faces"].push_back(json::array({f[0], f[1], f[2]}));
    j["parents"] = tpl.parents;
    j["rest_offsets"] = json::array();
    for (const auto& o : tpl.rest_offsets) j["rest_offsets"].push_back(vec3_to_json(o));

    // Sparse triplets (vertex, joint, weight).
    json w = json::array();
    for (int i = 0; i < tpl.n_vertices(); ++i)
        for (const auto& [jt, wt] : tpl.skin_weights[i])
            w.push_back(json::array({i, jt, wt}));
    j["skin_weights"] = std::move(w);

    j["hinge_axes"] = json::array();
    for (const auto& [jt, axis] : tpl.hinge_axes)
        j["hinge_axes"].push_back(json{{"joint", jt}, {"axis", vec3_to_json(axis)}});
    j["symmetry_pairs"] = json::array();
    for (const auto& [l, r] : tpl.symmetry_pairs) j["symmetry_pairs"].push_back(json::array({l, r}));
    j["adjacency"] = json::array();
    for (const auto& [a, b] : tpl.adjacency) j["adjacency"].push_back(json::array({a, b}));
    j["trunk_bone"] = tpl.trunk_bone;

    // One chart entry per vertex: [part, u, v].
    j["part_charts"] = json::array();
    for (int i = 0; i < tpl.n_vertices(); ++i)
        j["part_charts"].push_back(
            json::array({tpl.vertex_part[i], tpl.vertex_uv[i].x, tpl.vertex_uv[i].y}));

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << j.dump() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

BodyTemplate load_template(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open template: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("template parse error in " + path + ": " + e.what());
    }

    BodyTemplate tpl;
    try {
        for (const auto& v : j.at("vertices")) tpl.vertices.push_back(vec3_from_json(v));
        for (const auto& f : j.at("faces"))
            tpl.faces.push_back({f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()});
        const auto& parents = j.at("parents");
        if (parents.size() != BodyTemplate::kNumJoints)
            throw IoError("template: parents must have 24 entries");
        for (int k = 0; k < BodyTemplate::kNumJoints; ++k) tpl.parents[k] = parents[k].get<int>();
        const auto& offs = j.at("rest_offsets");
        if (offs.size() != BodyTemplate::kNumJoints)
            throw IoError("template: rest_offsets must have 24 entries");
        for (int k = 0; k < BodyTemplate::kNumJoints; ++k)
            tpl.rest_offsets[k] = vec3_from_json(offs[k]);

        tpl.skin_weights.assign(tpl.vertices.size(), {});
        for (const auto& t : j.at("skin_weights")) {
            int vi = t.at(0).get<int>();
            if (vi < 0 || vi >= tpl.n_vertices()) throw IoError("template: skin weight vertex out of range");
            tpl.skin_weights[vi].emplace_back(t.at(1).get<int>(), t.at(2).get<double>());
        }

        for (const auto& h : j.at("hinge_axes"))
            tpl.hinge_axes.emplace_back(h.at("joint").get<int>(), vec3_from_json(h.at("axis")));
        for (const auto& p : j.at("symmetry_pairs"))
            tpl.symmetry_pairs.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        for (const auto& p : j.at("adjacency"))
            tpl.adjacency.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
        tpl.trunk_bone = j.at("trunk_bone").get<int>();

        const auto& charts = j.at("part_charts");
        if (charts.size() != tpl.vertices.size())
            throw IoError("template: part_charts must have one entry per vertex");
        for (const auto& c : charts) {
            tpl.vertex_part.push_back(c.at(0).get<int>());
            tpl.vertex_uv.push_back({c.at(1).get<double>(), c.at(2).get<double>()});
        }
    } catch (const json::exception& e) {
        throw IoError("template schema error in " + path + ": " + e.what());
    }

    tpl.validate();
    return tpl;
}

}  // namespace bodyfit
