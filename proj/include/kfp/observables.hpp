#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfp/estimators.hpp"
#include "kfp/model.hpp"

namespace kfp {

// Named test functions. The inequality checks need bounded f, the exact
// Gaussian oracles need polynomial f; the last two entries reconcile that by
// clipping at a radius that is effectively never reached at the experiment
// scales.
struct Observable {
    std::string name;
    ObservableFn fn;
    bool positive = false;
};

inline std::vector<std::string> observable_names() {
    return {"const_one",  "tanh_x",    "one_plus_tanh_sq_x",
            "gauss_bump", "x_clipped", "sqnorm_clipped"};
}

inline Observable make_observable(const std::string& name, double clip_radius = 1e6) {
    if (!(clip_radius > 0.0)) throw std::invalid_argument("clip radius must be positive");
    Observable obs;
    obs.name = name;
    double R = clip_radius;
    if (name == "const_one") {
        obs.fn = [](const State&) { return 1.0; };
        obs.positive = true;
    } else if (name == "tanh_x") {
        obs.fn = [](const State& p) { return std::tanh(p.x(0)); };
        obs.positive = false;
    } else if (name == "one_plus_tanh_sq_x") {
        obs.fn = [](const State& p) {
            double v = std::tanh(p.x(0));
            return 1.0 + v * v;
        };
        obs.positive = true;
    } else if (name == "gauss_bump") {
        obs.fn = [](const State& p) { return 1.0 + std::exp(-p.x.squaredNorm()); };
        obs.positive = true;
    } else if (name == "x_clipped") {
        obs.fn = [R](const State& p) { return std::clamp(p.x(0), -R, R); };
        obs.positive = false;
    } else if (name == "sqnorm_clipped") {
        obs.fn = [R](const State& p) {
            return std::min(p.x(0) * p.x(0) + p.y.squaredNorm(), R);
        };
        obs.positive = false;
    } else {
        throw std::invalid_argument("unknown observable: " + name);
    }
    return obs;
}

}  // namespace kfp
