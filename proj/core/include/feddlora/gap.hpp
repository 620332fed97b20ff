#pragma once

//
// Truncated-SVD gradient gap: split a gradient matrix into its best rank-r
// approximation and the spectral tail, check the per-layer tail norm against
// M*sqrt(k - r) and the whole-model tail against M*sqrt(K - L*r), and
// evaluate the descent / average-gradient bounds built on top of that.
//

#include <vector>

#include <Eigen/Dense>

#include "feddlora/errors.hpp"

namespace feddlora {

struct SvdTruncation {
    Eigen::MatrixXd retained;        // sum_{i<=r} sigma_i u_i v_i^T
    Eigen::MatrixXd residual;        // G - retained (the spectral tail)
    Eigen::VectorXd singular_values; // all of them, descending
};

// Best rank-r approximation in Frobenius norm. Singular vectors use a fixed
// sign convention (first nonzero component of each left vector nonnegative)
// so repeated calls are bit-identical.
SvdTruncation svd_truncate(const Eigen::MatrixXd& g, int rank);

struct GapLayerReport {
    Eigen::VectorXd singular_values;  // descending
    double residual_norm = 0;         // sqrt(sum_{i>r} sigma_i^2)
    double bound = 0;                 // M * sqrt(k - r)
    bool ok = false;                  // residual_norm <= bound (+1e-12)
    bool assumption_holds = false;    // sigma_max <= M (+1e-12)
};

// The bound only holds when every singular value is <= M; a violation is
// reported through the flags, never thrown.
GapLayerReport layer_gap_bound(const Eigen::VectorXd& singulars, int rank, double m);

struct TotalGap {
    double residual_norm = 0;  // sqrt(sum_l ||tail_l||_F^2)
    double bound = 0;          // M * sqrt(K - L*r)
    bool ok = false;
};

// All layers share one rank; K = sum of per-layer singular-value counts.
TotalGap total_gap(const std::vector<GapLayerReport>& layers, int rank, double m);

struct GapReport {
    int rank = 0;
    double m = 0;
    std::vector<GapLayerReport> layers;
    double total_residual_norm = 0;
    double total_bound = 0;
    bool bound_satisfied = false;  // total check AND every layer ok
};

GapReport gap_report(const std::vector<Eigen::MatrixXd>& grads, int rank, double m);

// Constants of the convergence bounds. beta and sigma2 are config inputs;
// loss_init / loss_star are estimates used only for reported curves.
struct BoundParams {
    double eta = 0.01;
    double beta = 1.0;
    double sigma2 = 1.0;
    double m = 0.1;
    long long total_singulars = 0;  // K
    int layers = 0;                 // L
    double loss_init = 0.0;
    double loss_star = 0.0;
    int rounds = 1;                 // T
};

struct DescentBound {
    double value = 0;
    bool eta_warning = false;  // set when eta > 1/beta, outside the bound's premise
};

// One-round expected-loss bound with uniform weights 1/s:
//   loss_t - (eta/2) grad2 + (eta^2 beta / 2) sigma2 / s + (eta/2) M^2 (K - L r)
DescentBound descent_bound(const BoundParams& p, int s_size, int rank, double loss_t,
                           double grad_norm_sq);

// T-round average-gradient bound, equal-size subdatasets:
//   (2 / (eta T)) (loss_init - loss_star) + eta beta sigma2 / s + M^2 (K - L r)
// Strictly decreasing in both s_size and rank (while K > L r).
double avg_grad_bound(const BoundParams& p, int s_size, int rank);

}  // namespace feddlora
