#include "feddlora/fed.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

#include "feddlora/rng.hpp"
#include "init_util.hpp"

namespace feddlora {

using Eigen::MatrixXd;
using Eigen::VectorXd;

MixtureSpec make_mixture(int num_classes, int dim, double separation, std::uint64_t seed) {
    if (num_classes < 2 || dim < 1) throw std::invalid_argument("mixture needs >=2 classes");
    MixtureSpec mix;
    mix.num_classes = num_classes;
    mix.dim = dim;
    mix.means.resize(dim, num_classes);
    Rng rng(seed);
    detail::fill_gaussian(mix.means, rng, separation);
    return mix;
}

Dataset sample_mixture(const MixtureSpec& mix, int count, std::uint64_t seed) {
    Dataset ds;
    ds.num_classes = mix.num_classes;
    ds.features.resize(mix.dim, count);
    ds.labels.resize(count);
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
        const int c = i % mix.num_classes;  // balanced before shuffling
        ds.labels[i] = c;
        for (int d = 0; d < mix.dim; ++d)
            ds.features(d, i) = mix.means(d, c) + noise(rng);
    }
    // Seeded column permutation so partition blocks are class-mixed.
    for (int i = count - 1; i > 0; --i) {
        const int j = std::uniform_int_distribution<int>(0, i)(rng);
        ds.features.col(i).swap(ds.features.col(j));
        std::swap(ds.labels[i], ds.labels[j]);
    }
    return ds;
}

Dataset make_gaussian_mixture(int num_classes, int dim, int count, double separation,
                              std::uint64_t seed) {
    return sample_mixture(make_mixture(num_classes, dim, separation, seed), count,
                          derive_seed(seed, 1));
}

namespace {

DataPartition take_indices(const Dataset& ds, const std::vector<int>& idx, int owner) {
    DataPartition p;
    p.owner = owner;
    p.features.resize(ds.features.rows(), idx.size());
    p.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        p.features.col(i) = ds.features.col(idx[i]);
        p.labels[i] = ds.labels[idx[i]];
        p.classes_present.insert(ds.labels[idx[i]]);
    }
    return p;
}

}  // namespace

std::vector<DataPartition> partition_dataset(const Dataset& dataset, int n_icvs,
                                             PartitionMode mode, int class_budget,
                                             int samples_per_icv, std::uint64_t seed) {
    if (n_icvs < 1 || samples_per_icv < 1)
        throw std::invalid_argument("n_icvs and samples_per_icv must be >= 1");
    const int n = dataset.size();
    Rng rng(seed);
    std::vector<DataPartition> parts;
    parts.reserve(n_icvs);

    if (mode == PartitionMode::Iid) {
        if (static_cast<long long>(n_icvs) * samples_per_icv > n)
            throw PartitionError("dataset of " + std::to_string(n) + " cannot supply " +
                                 std::to_string(n_icvs) + " x " +
                                 std::to_string(samples_per_icv) + " samples");
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[std::uniform_int_distribution<int>(0, i)(rng)]);
        for (int i = 0; i < n_icvs; ++i) {
            std::vector<int> idx(perm.begin() + static_cast<long long>(i) * samples_per_icv,
                                 perm.begin() + static_cast<long long>(i + 1) * samples_per_icv);
            parts.push_back(take_indices(dataset, idx, i));
        }
        return parts;
    }

    if (class_budget < 1) throw std::invalid_argument("class_budget must be >= 1");
    std::vector<std::vector<int>> by_class(dataset.num_classes);
    for (int i = 0; i < n; ++i) by_class[dataset.labels[i]].push_back(i);

    for (int i = 0; i < n_icvs; ++i) {
        std::vector<int> classes(dataset.num_classes);
        std::iota(classes.begin(), classes.end(), 0);
        for (int j = 0; j < class_budget; ++j) {
            const int k =
                std::uniform_int_distribution<int>(j, dataset.num_classes - 1)(rng);
            std::swap(classes[j], classes[k]);
        }
        std::vector<int> pool;
        for (int j = 0; j < class_budget; ++j)
            pool.insert(pool.end(), by_class[classes[j]].begin(), by_class[classes[j]].end());
        if (static_cast<int>(pool.size()) < samples_per_icv)
            throw PartitionError("class-restricted pool of " + std::to_string(pool.size()) +
                                 " cannot supply " + std::to_string(samples_per_icv) +
                                 " samples for partition " + std::to_string(i));
        for (int j = static_cast<int>(pool.size()) - 1; j > 0; --j)
            std::swap(pool[j], pool[std::uniform_int_distribution<int>(0, j)(rng)]);
        pool.resize(samples_per_icv);
        parts.push_back(take_indices(dataset, pool, i));
    }
    return parts;
}

GlobalModel make_global_model(const ModelSpec& spec, std::uint64_t seed) {
    spec.validate();
    GlobalModel m;
    m.spec = spec;
    m.layers.reserve(spec.layer_dims.size());
    for (std::size_t l = 0; l < spec.layer_dims.size(); ++l) {
        auto [h, w] = spec.layer_dims[l];
        MatrixXd w0(h, w);
        Rng rng(derive_seed(seed, 2, l));  // matches new_lora_model's W0 stream
        detail::fill_gaussian(w0, rng, 1.0 / std::sqrt(static_cast<double>(w)));
        m.layers.push_back(std::move(w0));
    }
    return m;
}

namespace {

// Layer application hooks: index-addressed so the same backprop drives both
// the low-rank and the dense paths.
struct StackOps {
    int layers = 0;
    std::function<MatrixXd(int, const MatrixXd&)> apply;    // W_l * X
    std::function<MatrixXd(int, const MatrixXd&)> apply_t;  // W_l^T * dZ
};

// Softmax cross-entropy over columns. Fills `probs` if given.
double softmax_ce(const MatrixXd& logits, const std::vector<int>& labels, int offset,
                  int count, MatrixXd* probs) {
    const Eigen::RowVectorXd colmax = logits.colwise().maxCoeff();
    MatrixXd shifted = logits.rowwise() - colmax;
    MatrixXd expv = shifted.array().exp();
    const Eigen::RowVectorXd denom = expv.colwise().sum();
    double loss = 0;
    for (int j = 0; j < count; ++j)
        loss += std::log(denom[j]) - shifted(labels[offset + j], j);
    if (probs) *probs = expv.array().rowwise() / denom.array();
    return loss / count;
}

// Loss of one batch and, when `grads` is non-null, the gradients of the
// mean cross-entropy w.r.t. every effective weight matrix.
double stack_loss_and_grads(const StackOps& ops, const MatrixXd& x,
                            const std::vector<int>& labels, int offset, int count,
                            std::vector<MatrixXd>* grads) {
    const int layer_count = ops.layers;
    std::vector<MatrixXd> acts(layer_count);  // acts[l] = input to layer l
    acts[0] = x;
    MatrixXd logits;
    for (int l = 0; l < layer_count; ++l) {
        MatrixXd z = ops.apply(l, acts[l]);
        if (l + 1 < layer_count)
            acts[l + 1] = z.array().tanh();
        else
            logits = std::move(z);
    }

    MatrixXd probs;
    const double loss = softmax_ce(logits, labels, offset, count, grads ? &probs : nullptr);
    if (!grads) return loss;

    grads->assign(layer_count, MatrixXd());
    MatrixXd dz = probs;
    for (int j = 0; j < count; ++j) dz(labels[offset + j], j) -= 1.0;
    dz /= static_cast<double>(count);
    for (int l = layer_count - 1; l >= 0; --l) {
        (*grads)[l] = dz * acts[l].transpose();
        if (l > 0) {
            MatrixXd dx = ops.apply_t(l, dz);
            dz = (dx.array() * (1.0 - acts[l].array().square())).matrix();
        }
    }
    return loss;
}

std::vector<int> shuffled_indices(int n, Rng& rng) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(idx[i], idx[std::uniform_int_distribution<int>(0, i)(rng)]);
    return idx;
}

// Mini-batch SGD loop shared by the LoRA and full-rank paths. `step` applies
// one update from the weight gradients; returns mean batch loss.
double sgd_epochs(const StackOps& ops, const DataPartition& part, const TrainConfig& cfg,
                  Rng& batch_rng, const std::function<void(const std::vector<MatrixXd>&)>& step) {
    const int n = part.size();
    const int bs = std::max(1, cfg.batch_size);
    double loss_sum = 0;
    int batches = 0;
    std::vector<MatrixXd> grads;
    for (int epoch = 0; epoch < cfg.epochs_per_round; ++epoch) {
        const auto order = shuffled_indices(n, batch_rng);
        for (int start = 0; start < n; start += bs) {
            const int count = std::min(bs, n - start);
            MatrixXd x(part.features.rows(), count);
            std::vector<int> y(count);
            for (int j = 0; j < count; ++j) {
                x.col(j) = part.features.col(order[start + j]);
                y[j] = part.labels[order[start + j]];
            }
            const double loss = stack_loss_and_grads(ops, x, y, 0, count, &grads);
            if (!std::isfinite(loss))
                throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) +
                                      ", batch " + std::to_string(start / bs));
            loss_sum += loss;
            ++batches;
            step(grads);
        }
    }
    return batches > 0 ? loss_sum / batches : 0.0;
}

}  // namespace

ClientUpdate local_train(const GlobalModel& global, const DataPartition& partition,
                         const TrainConfig& cfg, int rank, std::uint64_t seed) {
    check_rank(global.spec, rank);
    if (partition.size() == 0) throw PartitionError("empty partition");
    if (partition.features.rows() != global.spec.layer_dims.front().second)
        throw ShapeError("partition feature dim does not match model input width");

    auto factors = init_lora_factors(global.spec, rank, seed);
    const int layer_count = global.spec.layer_count();

    StackOps ops;
    ops.layers = layer_count;
    ops.apply = [&](int l, const MatrixXd& x) -> MatrixXd {
        return global.layers[l] * x + factors[l].first * (factors[l].second * x);
    };
    ops.apply_t = [&](int l, const MatrixXd& dz) -> MatrixXd {
        return global.layers[l].transpose() * dz +
               factors[l].second.transpose() * (factors[l].first.transpose() * dz);
    };

    Rng batch_rng(derive_seed(seed, 1));
    const double mean_loss =
        sgd_epochs(ops, partition, cfg, batch_rng, [&](const std::vector<MatrixXd>& grads) {
            for (int l = 0; l < layer_count; ++l) {
                // grad_B = G A^T, grad_A = B^T G, both at the pre-step point.
                MatrixXd gb = grads[l] * factors[l].second.transpose();
                MatrixXd ga = factors[l].first.transpose() * grads[l];
                factors[l].first -= cfg.eta * gb;
                factors[l].second -= cfg.eta * ga;
            }
        });

    ClientUpdate u;
    u.vehicle_id = partition.owner;
    u.rank = rank;
    u.local_loss = mean_loss;
    u.factors = std::move(factors);
    return u;
}

GlobalModel aggregate(const GlobalModel& global, const std::vector<ClientUpdate>& updates,
                      const std::vector<double>& weights) {
    if (updates.empty()) throw AggregationError("no updates to aggregate");
    if (weights.size() != updates.size())
        throw AggregationError("got " + std::to_string(weights.size()) + " weights for " +
                               std::to_string(updates.size()) + " updates");
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-9)
        throw AggregationError("weights sum to " + std::to_string(wsum) + ", expected 1");

    const int rank = updates.front().rank;
    const int layer_count = global.spec.layer_count();
    for (const auto& u : updates) {
        if (u.rank != rank)
            throw AggregationError("mixed ranks " + std::to_string(rank) + " and " +
                                   std::to_string(u.rank));
        if (static_cast<int>(u.factors.size()) != layer_count)
            throw AggregationError("update layer count mismatch");
        for (int l = 0; l < layer_count; ++l) {
            const auto& [b, a] = u.factors[l];
            if (b.rows() != global.layers[l].rows() || b.cols() != rank ||
                a.rows() != rank || a.cols() != global.layers[l].cols())
                throw AggregationError("factor shape mismatch at layer " + std::to_string(l));
            if (!b.allFinite() || !a.allFinite())
                throw AggregationError("non-finite factors from vehicle " +
                                       std::to_string(u.vehicle_id));
        }
    }

    // Ascending vehicle-id summation keeps aggregation order-independent of
    // how updates arrive (threads, network order, ...).
    std::vector<int> order(updates.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) {
        return updates[i].vehicle_id != updates[j].vehicle_id
                   ? updates[i].vehicle_id < updates[j].vehicle_id
                   : i < j;
    });

    GlobalModel next = global;
    for (int l = 0; l < layer_count; ++l) {
        MatrixXd delta = MatrixXd::Zero(global.layers[l].rows(), global.layers[l].cols());
        for (int i : order)
            delta += weights[i] * (updates[i].factors[l].first * updates[i].factors[l].second);
        next.layers[l] += delta;
    }
    next.round = global.round + 1;
    return next;
}

EvalResult evaluate(const GlobalModel& global, const Dataset& test) {
    if (test.size() == 0) throw EvaluationError("empty test set");
    if (test.features.rows() != global.spec.layer_dims.front().second)
        throw EvaluationError("test feature dim does not match model input width");

    const int layer_count = global.spec.layer_count();
    MatrixXd cur = test.features;
    for (int l = 0; l < layer_count; ++l) {
        MatrixXd z = global.layers[l] * cur;
        cur = (l + 1 < layer_count) ? z.array().tanh().matrix() : std::move(z);
    }

    EvalResult res;
    res.loss = softmax_ce(cur, test.labels, 0, test.size(), nullptr);
    int correct = 0;
    for (int j = 0; j < test.size(); ++j) {
        int arg = 0;  // first maximum wins
        for (int c = 1; c < cur.rows(); ++c)
            if (cur(c, j) > cur(arg, j)) arg = c;
        if (arg == test.labels[j]) ++correct;
    }
    res.accuracy = static_cast<double>(correct) / test.size();
    return res;
}

std::vector<Eigen::MatrixXd> local_train_full(const GlobalModel& global,
                                              const DataPartition& partition,
                                              const TrainConfig& cfg, std::uint64_t seed,
                                              double* mean_loss) {
    if (partition.size() == 0) throw PartitionError("empty partition");
    std::vector<MatrixXd> weights = global.layers;
    const int layer_count = global.spec.layer_count();

    StackOps ops;
    ops.layers = layer_count;
    ops.apply = [&](int l, const MatrixXd& x) -> MatrixXd { return weights[l] * x; };
    ops.apply_t = [&](int l, const MatrixXd& dz) -> MatrixXd {
        return weights[l].transpose() * dz;
    };

    Rng batch_rng(derive_seed(seed, 1));
    const double loss =
        sgd_epochs(ops, partition, cfg, batch_rng, [&](const std::vector<MatrixXd>& grads) {
            for (int l = 0; l < layer_count; ++l) weights[l] -= cfg.eta * grads[l];
        });
    if (mean_loss) *mean_loss = loss;
    return weights;
}

GlobalModel fedavg_baseline_round(const GlobalModel& global,
                                  const std::vector<const DataPartition*>& partitions,
                                  const TrainConfig& cfg, std::uint64_t seed) {
    if (partitions.empty()) throw AggregationError("no partitions for FedAvg round");

    std::vector<const DataPartition*> order = partitions;
    std::sort(order.begin(), order.end(),
              [](const DataPartition* a, const DataPartition* b) { return a->owner < b->owner; });

    GlobalModel next = global;
    const double alpha = 1.0 / static_cast<double>(order.size());
    std::vector<MatrixXd> mean;
    for (const DataPartition* p : order) {
        auto w = local_train_full(global, *p, cfg, derive_seed(seed, p->owner));
        if (mean.empty()) {
            for (auto& m : w) mean.push_back(alpha * m);
        } else {
            for (std::size_t l = 0; l < w.size(); ++l) mean[l] += alpha * w[l];
        }
    }
    next.layers = std::move(mean);
    next.round = global.round + 1;
    return next;
}

}  // namespace feddlora
