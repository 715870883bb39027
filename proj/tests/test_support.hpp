#pragma once

#include "sapinn/network.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace sapinn::testing {

// Fourth-order central difference; error O(h^4).
inline double richardson(const std::function<double(double)>& f, double x, double h) {
    return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h);
}

inline double central(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
    return std::abs(a - b) / std::max(std::abs(b), floor);
}

inline NetworkSpec plain_spec(int inputs, int layers, int width, int outputs, std::uint64_t seed) {
    NetworkSpec s;
    for (int i = 0; i < inputs; ++i) s.input_layout.push_back({"x" + std::to_string(i), SlotKind::space, 1.0});
    s.hidden_layers = layers;
    s.hidden_width = width;
    s.output_dim = outputs;
    s.init_seed = seed;
    return s;
}

// Random biases so that even-order derivatives do not vanish at the origin.
inline Network random_network(const NetworkSpec& spec, std::uint64_t seed) {
    Network n = Network::init(spec);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    for (auto& l : n.mutable_layers()) {
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = g(rng);
    }
    return n;
}

inline std::vector<double> random_point(int dim, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> p(static_cast<std::size_t>(dim));
    for (auto& v : p) v = u(rng);
    return p;
}

}  // namespace sapinn::testing
