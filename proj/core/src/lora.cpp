#include "feddlora/lora.hpp"

#include <cmath>
#include <string>

#include "feddlora/rng.hpp"
#include "init_util.hpp"

namespace feddlora {

long long ModelSpec::full_params() const {
    long long n = 0;
    for (auto [h, w] : layer_dims) n += static_cast<long long>(h) * w;
    return n;
}

long long ModelSpec::lora_params_per_rank() const {
    long long n = 0;
    for (auto [h, w] : layer_dims) n += static_cast<long long>(h) + w;
    return n;
}

long long ModelSpec::total_singular_values() const {
    long long k = 0;
    for (auto [h, w] : layer_dims) k += std::min(h, w);
    return k;
}

int ModelSpec::min_layer_dim() const {
    int m = 0;
    for (auto [h, w] : layer_dims) {
        int d = std::min(h, w);
        m = (m == 0) ? d : std::min(m, d);
    }
    return m;
}

void ModelSpec::validate() const {
    if (layer_dims.empty()) throw ShapeError("model spec has no layers");
    for (std::size_t l = 0; l < layer_dims.size(); ++l) {
        auto [h, w] = layer_dims[l];
        if (h < 1 || w < 1)
            throw ShapeError("layer " + std::to_string(l) + " has nonpositive dims " +
                             std::to_string(h) + "x" + std::to_string(w));
    }
}

void check_rank(const ModelSpec& spec, int rank) {
    spec.validate();
    if (rank < 1) throw InvalidRankError("rank must be >= 1, got " + std::to_string(rank));
    for (std::size_t l = 0; l < spec.layer_dims.size(); ++l) {
        auto [h, w] = spec.layer_dims[l];
        if (rank > std::min(h, w))
            throw InvalidRankError("rank " + std::to_string(rank) + " exceeds min(h,w)=" +
                                   std::to_string(std::min(h, w)) + " of layer " +
                                   std::to_string(l));
    }
}

using detail::fill_gaussian;

std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> init_lora_factors(
    const ModelSpec& spec, int rank, std::uint64_t seed) {
    check_rank(spec, rank);
    Rng rng(seed);
    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> factors;
    factors.reserve(spec.layer_dims.size());
    for (auto [h, w] : spec.layer_dims) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(h, rank);
        Eigen::MatrixXd a(rank, w);
        fill_gaussian(a, rng, (5.0 / 3.0) / std::sqrt(static_cast<double>(w)));
        factors.emplace_back(std::move(b), std::move(a));
    }
    return factors;
}

std::vector<LoraLayer> new_lora_model(const ModelSpec& spec, int rank, std::uint64_t seed) {
    check_rank(spec, rank);
    auto factors = init_lora_factors(spec, rank, derive_seed(seed, 1));
    std::vector<LoraLayer> layers;
    layers.reserve(spec.layer_dims.size());
    for (std::size_t l = 0; l < spec.layer_dims.size(); ++l) {
        auto [h, w] = spec.layer_dims[l];
        LoraLayer layer;
        layer.w0.resize(h, w);
        Rng rng(derive_seed(seed, 2, l));
        fill_gaussian(layer.w0, rng, 1.0 / std::sqrt(static_cast<double>(w)));
        layer.b = std::move(factors[l].first);
        layer.a = std::move(factors[l].second);
        layer.rank = rank;
        layers.push_back(std::move(layer));
    }
    return layers;
}

Eigen::VectorXd lora_forward(const LoraLayer& layer, const Eigen::VectorXd& x) {
    if (x.size() != layer.w0.cols())
        throw ShapeError("forward: input length " + std::to_string(x.size()) +
                         " != layer width " + std::to_string(layer.w0.cols()));
    return layer.w0 * x + layer.b * (layer.a * x);
}

Eigen::MatrixXd lora_forward(const LoraLayer& layer, const Eigen::MatrixXd& x) {
    if (x.rows() != layer.w0.cols())
        throw ShapeError("forward: input rows " + std::to_string(x.rows()) +
                         " != layer width " + std::to_string(layer.w0.cols()));
    return layer.w0 * x + layer.b * (layer.a * x);
}

LoraGrads lora_gradients(const LoraLayer& layer, const Eigen::MatrixXd& weight_grad) {
    if (weight_grad.rows() != layer.w0.rows() || weight_grad.cols() != layer.w0.cols())
        throw ShapeError("gradient shape " + std::to_string(weight_grad.rows()) + "x" +
                         std::to_string(weight_grad.cols()) + " != weight shape " +
                         std::to_string(layer.w0.rows()) + "x" + std::to_string(layer.w0.cols()));
    LoraGrads g;
    g.grad_b = weight_grad * layer.a.transpose();
    g.grad_a = layer.b.transpose() * weight_grad;
    return g;
}

ParamCounts param_counts(const ModelSpec& spec, int rank) {
    spec.validate();
    if (rank < 1) throw InvalidRankError("rank must be >= 1, got " + std::to_string(rank));
    ParamCounts c;
    c.full = spec.full_params();
    c.lora = rank * spec.lora_params_per_rank();
    return c;
}

int rank_upper_bound(const ModelSpec& spec, int cap) {
    spec.validate();
    if (cap < 1) throw InvalidRankError("rank cap must be >= 1, got " + std::to_string(cap));
    long long size_cap = spec.full_params() / spec.lora_params_per_rank();
    long long r = std::min<long long>({cap, size_cap, spec.min_layer_dim()});
    if (r < 1)
        throw DegenerateSpecError("no admissible rank: floor(N / n_lora_per_rank) = " +
                                  std::to_string(size_cap));
    return static_cast<int>(r);
}

}  // namespace feddlora
