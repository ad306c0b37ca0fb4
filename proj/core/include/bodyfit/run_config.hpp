#pragma once

#include <string>

#include "bodyfit/deform_learn.hpp"
#include "bodyfit/prior_train.hpp"
#include "bodyfit/synth.hpp"

namespace bodyfit {

// Every tunable in one place, defaulted to the standard recipe. Serializes to
// a single JSON document; loading rejects unknown keys and type mismatches so
// typos fail loudly instead of silently running defaults.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 1;

    SynthConfig synth;
    RegistWeights weights;
    double regist_lr = 0.1;
    double regist_beta2 = 0.99;
    int regist_batch = 10;
    int regist_iterations = 300;
    bool regist_stiff = false;
    PriorConfig prior;
    RegressorConfig regressor;

    int rounds = 5;
    int first_round_iterations = 300;
    int later_round_iterations = 100;
    int refine_iterations = 50;
    std::vector<int> held_out;

    RegistConfig regist_config() const;
    DeformLearnConfig loop_config() const;
};

// Serialized form (pretty JSON, stable key order).
std::string to_json(const RunConfig& cfg);

// Starts from defaults and merges the document over them; unknown keys and
// type mismatches -> IoError naming the offending dotted path.
RunConfig run_config_from_json(const std::string& text);

RunConfig load_run_config(const std::string& path);
void save_run_config(const RunConfig& cfg, const std::string& path);

// Dotted-path override, e.g. "regist.lr=0.05" or "prior.views_deg=[45,90]".
// The value is parsed as JSON when possible, else taken as a string. Unknown
// paths -> IoError.
void apply_override(RunConfig& cfg, const std::string& key_equals_value);

}  // namespace bodyfit
