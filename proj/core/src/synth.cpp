#include "bodyfit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <random>

#include "bodyfit/camera.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/pose_prior.hpp"

namespace bodyfit {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Order-independent per-sample streams: sample i sees the same draws no
// matter how many samples are generated.
std::mt19937_64 sample_rng(std::uint64_t seed, std::uint64_t i) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (i + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return std::mt19937_64(x);
}

Mat3<double> rot_axis(double x, double y, double z) { return rodrigues(Vec3<double>{x, y, z}); }

std::string sample_name(int i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%03d", i);
    return buf;
}

}  // namespace

std::vector<Vec3<double>> vertex_normals(const BodyTemplate& tpl,
                                         const std::vector<Vec3<double>>& vertices) {
    std::vector<Vec3<double>> normals(vertices.size(), Vec3<double>{});
    for (const auto& f : tpl.faces) {
        const Vec3<double> n =
            cross(vertices[f[1]] - vertices[f[0]], vertices[f[2]] - vertices[f[0]]);
        for (int k = 0; k < 3; ++k) normals[f[k]] = normals[f[k]] + n;
    }
    for (auto& n : normals) {
        const double len = std::sqrt(squared_norm(n));
        if (len > 1e-20) n = (1.0 / len) * n;
    }
    return normals;
}

SynthDataset synth_dataset(const BodyTemplate& tpl, const KeypointMap& map,
                           const SynthConfig& cfg) {
    if (cfg.count < 0) throw ContractViolation("synth_dataset: negative count");
    const double deg = 3.14159265358979323846 / 180.0;
    SynthDataset out;
    out.samples.reserve(cfg.count);
    out.truth.reserve(cfg.count);

    for (int i = 0; i < cfg.count; ++i) {
        auto rng = sample_rng(cfg.seed, i);
        std::uniform_real_distribution<double> angle(-cfg.max_angle, cfg.max_angle);
        std::uniform_real_distribution<double> scale(cfg.scale_lo, cfg.scale_hi);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        BodyParams truth;
        for (auto& a : truth.pose) a = {angle(rng), angle(rng), angle(rng)};
        for (auto& s : truth.scales) s = scale(rng);

        const double az = (2.0 * unit(rng) - 1.0) * cfg.azimuth_deg * deg;
        const double el = (2.0 * unit(rng) - 1.0) * cfg.elevation_deg * deg;
        const double ro = (2.0 * unit(rng) - 1.0) * cfg.roll_deg * deg;
        truth.rotation_raw = rot_axis(0, 0, ro) * rot_axis(el, 0, 0) * front_view_rotation() *
                             rot_axis(0, az, 0);

        const double frac = 0.55 + 0.3 * unit(rng);
        truth.scale = frac * cfg.height / tpl.skeleton_height();

        const PosedBody posed = pose_body(tpl, truth);

        // Translation: center the projected joints, with a small jitter.
        double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
        for (const auto& j : posed.joints) {
            const Vec3<double> q = truth.rotation_raw * j;
            xmin = std::min(xmin, truth.scale * q.x);
            xmax = std::max(xmax, truth.scale * q.x);
            ymin = std::min(ymin, truth.scale * q.y);
            ymax = std::max(ymax, truth.scale * q.y);
        }
        truth.translation = {0.5 * cfg.width - 0.5 * (xmin + xmax) +
                                 (2.0 * unit(rng) - 1.0) * 0.08 * cfg.width,
                             0.5 * cfg.height - 0.5 * (ymin + ymax) +
                                 (2.0 * unit(rng) - 1.0) * 0.08 * cfg.height};

        SampleAnnotation anno;
        anno.id = sample_name(i);
        anno.width = cfg.width;
        anno.height = cfg.height;

        // Dense: random subset of front-facing vertices (normal z < 0 in the
        // camera frame; the viewer sits at z = -inf).
        const auto normals = vertex_normals(tpl, posed.vertices);
        std::vector<int> visible;
        for (int v = 0; v < tpl.n_vertices(); ++v)
            if ((truth.rotation_raw * normals[v]).z < 0.0) visible.push_back(v);
        std::vector<int> chosen;
        std::sample(visible.begin(), visible.end(), std::back_inserter(chosen),
                    (std::size_t)std::max(0, cfg.dense_points), rng);

        const WeakPerspectiveCamera cam{truth.rotation_raw, truth.scale, truth.translation};
        const auto pixels = project(posed.vertices, cam);
        std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
        for (int v : chosen) {
            Vec2<double> p = pixels[v];
            if (cfg.noise_sigma > 0.0) p = {p.x + noise(rng), p.y + noise(rng)};
            anno.dense.push_back({p, v});
        }

        for (int k = 0; k < map.size(); ++k) {
            const Vec3<double> q = truth.rotation_raw * posed.joints[map.model_joint[k]];
            Vec2<double> p{truth.scale * q.x + truth.translation.x,
                           truth.scale * q.y + truth.translation.y};
            if (cfg.noise_sigma > 0.0) p = {p.x + noise(rng), p.y + noise(rng)};
            anno.keypoints.push_back({p, true});
        }

        if (cfg.truth_gan_depths) {
            const double root_depth =
                truth.scale *
                (truth.rotation_raw * posed.joints[map.model_joint[map.trunk_root]]).z;
            for (int k = 0; k < map.size(); ++k) {
                const double d =
                    truth.scale * (truth.rotation_raw * posed.joints[map.model_joint[k]]).z;
                anno.gan_depths.push_back(d - root_depth);
            }
        }

        out.samples.push_back(std::move(anno));
        out.truth.push_back(truth);
    }
    return out;
}

std::vector<PriorSample> make_prior_family(const BodyTemplate& tpl, const KeypointMap& map,
                                           int count, std::uint64_t seed,
                                           const PriorFamilyConfig& cfg) {
    std::vector<PriorSample> out;
    out.reserve(std::max(0, count));
    const Mat3<double> front = front_view_rotation();

    for (int i = 0; i < count; ++i) {
        auto rng = sample_rng(seed ^ 0x5eedf00dull, i);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_real_distribution<double> jitter(-cfg.jitter, cfg.jitter);

        BodyParams p = BodyParams::t_pose();
        for (auto& a : p.pose) a = {jitter(rng), jitter(rng), jitter(rng)};
        // Consistent flexion (negative along each hinge axis) plus a forward
        // spine lean: the source of the family's depth asymmetry.
        for (const auto& [j, axis] : tpl.hinge_axes) {
            const bool knee = j == 4 || j == 5;
            const double lo = knee ? cfg.knee_lo : cfg.elbow_lo;
            const double hi = knee ? cfg.knee_hi : cfg.elbow_hi;
            const double h = lo + (hi - lo) * unit(rng);
            p.pose[j] = -h * axis;
        }
        p.pose[3].x = 0.05 + 0.25 * unit(rng);

        const auto joints = pose_body(tpl, p).joints;
        const double phi = 2.0 * 3.14159265358979323846 * unit(rng);
        const Mat3<double> R = front * rot_axis(0, phi, 0);

        PriorSample s;
        s.u.resize(map.size());
        s.z.resize(map.size());
        for (int k = 0; k < map.size(); ++k) {
            const Vec3<double> q = R * joints[map.model_joint[k]];
            s.u[k] = {q.x, q.y};
            s.z[k] = q.z;
        }
        const Vec2<double> root = s.u[map.trunk_root];
        const double trunk = std::sqrt(squared_norm(s.u[map.trunk_top] - root));
        if (trunk < 1e-9) continue;  // trunk is near-vertical; effectively unreachable
        const double zr = s.z[map.trunk_root];
        for (int k = 0; k < map.size(); ++k) {
            s.u[k] = {(s.u[k].x - root.x) / trunk, (s.u[k].y - root.y) / trunk};
            s.z[k] = (s.z[k] - zr) / trunk;
        }
        out.push_back(std::move(s));
    }
    return out;
}

double depth_sign_accuracy(const Mlp& G, const std::vector<PriorSample>& eval_set,
                           const KeypointMap& map, double margin) {
    long correct = 0, total = 0;
    for (const auto& s : eval_set) {
        Pose2D pose;
        pose.u = s.u;
        pose.visibility.assign(s.u.size(), true);
        const auto z = generate_depths(G, pose);
        const double zr = z[map.trunk_root];
        for (int k = 0; k < (int)s.z.size(); ++k) {
            if (k == map.trunk_root || std::abs(s.z[k]) < margin) continue;
            ++total;
            if ((z[k] - zr > 0.0) == (s.z[k] > 0.0)) ++correct;
        }
    }
    if (total == 0) throw DegenerateInput("depth_sign_accuracy: no unambiguous joints");
    return (double)correct / (double)total;
}

void write_synth_dataset(const SynthDataset& data, const SynthConfig& cfg,
                         const std::string& dir) {
    fs::create_directories(fs::path(dir) / "samples");
    if (!data.truth.empty()) fs::create_directories(fs::path(dir) / "truth");
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        const std::string name = data.samples[i].id.empty() ? sample_name((int)i)
                                                            : data.samples[i].id;
        save_annotation(data.samples[i], (fs::path(dir) / "samples" / (name + ".json")).string());
        if (i < data.truth.size())
            save_params(data.truth[i], (fs::path(dir) / "truth" / (name + ".json")).string());
    }
    json meta{{"count", (int)data.samples.size()},
              {"noise_sigma", cfg.noise_sigma},
              {"seed", cfg.seed},
              {"width", cfg.width},
              {"height", cfg.height}};
    std::ofstream out(fs::path(dir) / "meta.json");
    out << meta.dump(2) << '\n';
}

SynthDataset load_synth_dataset(const std::string& dir, const BodyTemplate& tpl) {
    const fs::path samples_dir = fs::path(dir) / "samples";
    if (!fs::is_directory(samples_dir))
        throw IoError("load_synth_dataset: missing directory " + samples_dir.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(samples_dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());

    SynthDataset out;
    for (const auto& f : files) {
        out.samples.push_back(load_annotation(f.string(), tpl));
        if (out.samples.back().id.empty()) out.samples.back().id = f.stem().string();
        const fs::path truth = fs::path(dir) / "truth" / f.filename();
        if (fs::exists(truth)) out.truth.push_back(load_params(truth.string()));
    }
    if (!out.truth.empty() && out.truth.size() != out.samples.size())
        throw IoError("load_synth_dataset: truth/sample count mismatch in " + dir);
    return out;
}

void write_prior_family(const std::vector<PriorSample>& family, const std::string& path,
                        bool with_depths) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    for (const auto& s : family) {
        json joints = json::array();
        for (const auto& p : s.u) joints.push_back({p.x, p.y, 1});
        json line{{"joints", joints}};
        if (with_depths) line["z"] = s.z;
        out << line.dump() << '\n';
    }
}

std::vector<PriorSample> load_prior_eval(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<PriorSample> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const json j = json::parse(line);
            PriorSample s;
            for (const auto& kp : j.at("joints"))
                s.u.push_back({kp.at(0).get<double>(), kp.at(1).get<double>()});
            s.z = j.at("z").get<std::vector<double>>();
            if (s.z.size() != s.u.size()) throw IoError("joint/depth count mismatch");
            out.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw IoError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace bodyfit
