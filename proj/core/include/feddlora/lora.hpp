#pragma once

//
// Low-rank (LoRA) parameterization of dense weight matrices: a frozen base
// W0 (h x w) plus trainable thin factors B (h x r) and A (r x w). The
// effective weight is always W0 + B*A; training touches only B and A.
//

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "feddlora/errors.hpp"

namespace feddlora {

// Shapes of the dense weight matrices of a model, plus the parameter
// accounting derived from them. Bias terms are excluded from all counts.
struct ModelSpec {
    std::vector<std::pair<int, int>> layer_dims;  // (h_l, w_l)

    int layer_count() const { return static_cast<int>(layer_dims.size()); }

    // N = sum h_l * w_l
    long long full_params() const;

    // sum (h_l + w_l); total LoRA parameter count at rank r is r * this.
    long long lora_params_per_rank() const;

    // K = sum min(h_l, w_l), the total singular-value count of the model.
    long long total_singular_values() const;

    // min over layers of min(h_l, w_l); the largest admissible rank.
    int min_layer_dim() const;

    void validate() const;  // throws ShapeError on nonpositive dims
};

struct LoraLayer {
    Eigen::MatrixXd w0;  // h x w, frozen
    Eigen::MatrixXd b;   // h x r
    Eigen::MatrixXd a;   // r x w
    int rank = 0;

    int rows() const { return static_cast<int>(w0.rows()); }
    int cols() const { return static_cast<int>(w0.cols()); }

    // Materializes W0 + B*A. Convenience for tests and aggregation oracles;
    // the forward path never calls this.
    Eigen::MatrixXd effective_weight() const { return w0 + b * a; }
};

// Throws InvalidRankError naming the first violating layer.
void check_rank(const ModelSpec& spec, int rank);

// Fresh factor pairs for every layer: B = 0, A ~ N(0, 1/w) (LeCun scale)
// filled row-major from an mt19937_64 seeded with `seed`. B = 0 makes the
// initial effective weight equal W0 (warm start). A full-variance A is
// needed for the delta B*A to grow within a short local epoch budget.
std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> init_lora_factors(
    const ModelSpec& spec, int rank, std::uint64_t seed);

// Builds a full LoRA model: W0 entries i.i.d. N(0, 1/w_l) filled row-major
// (layer index mixed into the seed), factors from init_lora_factors.
// Deterministic given (spec, rank, seed).
std::vector<LoraLayer> new_lora_model(const ModelSpec& spec, int rank, std::uint64_t seed);

// y = W0*x + B*(A*x); two thin products, B*A is never materialized.
Eigen::VectorXd lora_forward(const LoraLayer& layer, const Eigen::VectorXd& x);

// Column-batched variant, X is w x batch.
Eigen::MatrixXd lora_forward(const LoraLayer& layer, const Eigen::MatrixXd& x);

struct LoraGrads {
    Eigen::MatrixXd grad_b;  // h x r
    Eigen::MatrixXd grad_a;  // r x w
};

// Given G = dLoss/d(effective weight), the factor gradients are
// grad_B = G * A^T and grad_A = B^T * G. W0 receives no gradient.
LoraGrads lora_gradients(const LoraLayer& layer, const Eigen::MatrixXd& weight_grad);

struct ParamCounts {
    long long full = 0;  // N
    long long lora = 0;  // rank * sum(h_l + w_l)
};

ParamCounts param_counts(const ModelSpec& spec, int rank);

// Largest rank R such that the LoRA model stays no larger than the full
// model and every layer's truncation is well defined:
//   min(cap, floor(N / sum(h+w)), min_l min(h_l, w_l)).
// Throws DegenerateSpecError if that is < 1.
int rank_upper_bound(const ModelSpec& spec, int cap);

}  // namespace feddlora
