#include "feddlora/gap.hpp"

#include <cmath>
#include <string>

namespace feddlora {

SvdTruncation svd_truncate(const Eigen::MatrixXd& g, int rank) {
    const int k = static_cast<int>(std::min(g.rows(), g.cols()));
    if (rank < 1 || rank > k)
        throw InvalidRankError("truncation rank " + std::to_string(rank) +
                               " outside [1, " + std::to_string(k) + "]");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw std::runtime_error("SVD did not converge");

    Eigen::MatrixXd u = svd.matrixU();
    Eigen::MatrixXd v = svd.matrixV();
    // Sign convention: first nonzero component of each left singular vector
    // nonnegative; the matching right vector flips with it.
    for (Eigen::Index c = 0; c < u.cols(); ++c) {
        for (Eigen::Index i = 0; i < u.rows(); ++i) {
            if (u(i, c) != 0.0) {
                if (u(i, c) < 0.0) {
                    u.col(c) = -u.col(c);
                    v.col(c) = -v.col(c);
                }
                break;
            }
        }
    }

    SvdTruncation out;
    out.singular_values = svd.singularValues();
    out.retained = u.leftCols(rank) * out.singular_values.head(rank).asDiagonal() *
                   v.leftCols(rank).transpose();
    out.residual = g - out.retained;
    return out;
}

GapLayerReport layer_gap_bound(const Eigen::VectorXd& singulars, int rank, double m) {
    const int k = static_cast<int>(singulars.size());
    if (rank < 1 || rank > k)
        throw InvalidRankError("rank " + std::to_string(rank) + " outside [1, " +
                               std::to_string(k) + "]");

    GapLayerReport rep;
    rep.singular_values = singulars;
    double tail2 = 0;
    for (int i = rank; i < k; ++i) tail2 += singulars[i] * singulars[i];
    rep.residual_norm = std::sqrt(tail2);
    rep.bound = m * std::sqrt(static_cast<double>(k - rank));
    rep.assumption_holds = (k == 0) || (singulars[0] <= m + 1e-12);
    rep.ok = rep.assumption_holds && rep.residual_norm <= rep.bound + 1e-12;
    return rep;
}

TotalGap total_gap(const std::vector<GapLayerReport>& layers, int rank, double m) {
    TotalGap t;
    long long k_total = 0;
    double sum2 = 0;
    for (const auto& l : layers) {
        k_total += l.singular_values.size();
        sum2 += l.residual_norm * l.residual_norm;
    }
    const long long l_count = static_cast<long long>(layers.size());
    t.residual_norm = std::sqrt(sum2);
    t.bound = m * std::sqrt(static_cast<double>(k_total - l_count * rank));
    t.ok = t.residual_norm <= t.bound + 1e-12;
    return t;
}

GapReport gap_report(const std::vector<Eigen::MatrixXd>& grads, int rank, double m) {
    GapReport rep;
    rep.rank = rank;
    rep.m = m;
    bool all_ok = true;
    for (const auto& g : grads) {
        auto trunc = svd_truncate(g, rank);
        auto layer = layer_gap_bound(trunc.singular_values, rank, m);
        all_ok = all_ok && layer.ok;
        rep.layers.push_back(std::move(layer));
    }
    auto t = total_gap(rep.layers, rank, m);
    rep.total_residual_norm = t.residual_norm;
    rep.total_bound = t.bound;
    rep.bound_satisfied = all_ok && t.ok;
    return rep;
}

DescentBound descent_bound(const BoundParams& p, int s_size, int rank, double loss_t,
                           double grad_norm_sq) {
    if (s_size < 1) throw std::invalid_argument("s_size must be >= 1");
    DescentBound out;
    const double s = static_cast<double>(s_size);
    const double gap_cap =
        static_cast<double>(p.total_singulars) - static_cast<double>(p.layers) * rank;
    out.value = loss_t - 0.5 * p.eta * grad_norm_sq +
                0.5 * p.eta * p.eta * p.beta * p.sigma2 / s +
                0.5 * p.eta * p.m * p.m * gap_cap;
    out.eta_warning = p.eta > 1.0 / p.beta;
    return out;
}

double avg_grad_bound(const BoundParams& p, int s_size, int rank) {
    if (s_size < 1) throw std::invalid_argument("s_size must be >= 1");
    if (p.rounds < 1) throw std::invalid_argument("rounds must be >= 1");
    const double s = static_cast<double>(s_size);
    const double gap_cap =
        static_cast<double>(p.total_singulars) - static_cast<double>(p.layers) * rank;
    return 2.0 / (p.eta * p.rounds) * (p.loss_init - p.loss_star) +
           p.eta * p.beta * p.sigma2 / s + p.m * p.m * gap_cap;
}

}  // namespace feddlora
