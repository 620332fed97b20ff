#pragma once

//
// Federated round machinery on a synthetic classification task: data
// partitioning (IID / non-IID), local SGD on LoRA factors, low-rank upload,
// delta aggregation into the frozen base, and the full-rank FedAvg baseline.
//
// The model is a dense MLP (tanh hidden activations, linear softmax head);
// with LoRA attached, every weight is W0 + B*A and only the factors train.
//

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "feddlora/errors.hpp"
#include "feddlora/lora.hpp"

namespace feddlora {

struct Dataset {
    Eigen::MatrixXd features;  // dim x count, one sample per column
    std::vector<int> labels;
    int num_classes = 0;

    int size() const { return static_cast<int>(labels.size()); }
};

// Class means for a spherical Gaussian mixture; means ~ N(0, separation^2 I).
struct MixtureSpec {
    Eigen::MatrixXd means;  // dim x num_classes
    int num_classes = 0;
    int dim = 0;
};

MixtureSpec make_mixture(int num_classes, int dim, double separation, std::uint64_t seed);

// Exactly class-balanced when count is a multiple of num_classes; sample
// order is a seeded permutation. x = mean_c + N(0, I).
Dataset sample_mixture(const MixtureSpec& mix, int count, std::uint64_t seed);

// Convenience: fresh mixture + one draw from it.
Dataset make_gaussian_mixture(int num_classes, int dim, int count, double separation,
                              std::uint64_t seed);

enum class PartitionMode { Iid, NonIid };

struct DataPartition {
    int owner = -1;
    Eigen::MatrixXd features;  // dim x samples
    std::vector<int> labels;
    std::set<int> classes_present;

    int size() const { return static_cast<int>(labels.size()); }
};

// IID: disjoint blocks of one seeded permutation. Non-IID: each partition
// draws only from class_budget randomly chosen classes (partitions may
// overlap in samples). Every partition holds exactly samples_per_icv items.
std::vector<DataPartition> partition_dataset(const Dataset& dataset, int n_icvs,
                                             PartitionMode mode, int class_budget,
                                             int samples_per_icv, std::uint64_t seed);

struct GlobalModel {
    ModelSpec spec;
    std::vector<Eigen::MatrixXd> layers;  // W0 per layer
    int round = 0;
};

// W0 ~ N(0, 1/w_l), same initializer as new_lora_model.
GlobalModel make_global_model(const ModelSpec& spec, std::uint64_t seed);

struct ClientUpdate {
    int vehicle_id = -1;
    int rank = 0;
    double local_loss = 0;
    std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> factors;  // (b, a) per layer
};

struct TrainConfig {
    double eta = 0.01;
    int epochs_per_round = 4;  // E
    int batch_size = 32;
    int rounds = 60;  // T
    std::uint64_t seed = 0;
};

// Attaches fresh factors (seeded by `seed`; batch order by a derived
// stream), runs E epochs of mini-batch SGD on the factors only, and returns
// them with the mean batch loss. Bit-identical under identical inputs.
ClientUpdate local_train(const GlobalModel& global, const DataPartition& partition,
                         const TrainConfig& cfg, int rank, std::uint64_t seed);

// W0(t+1) = W0(t) + sum_n alpha_n * B_n A_n, deltas added in ascending
// vehicle-id order. Weights must sum to 1; all updates must share one rank.
GlobalModel aggregate(const GlobalModel& global, const std::vector<ClientUpdate>& updates,
                      const std::vector<double>& weights);

struct EvalResult {
    double loss = 0;      // mean cross-entropy
    double accuracy = 0;  // argmax (first maximum) fraction correct
};

EvalResult evaluate(const GlobalModel& global, const Dataset& test);

// Full-rank local SGD: every weight entry trains. Returns the final weights.
std::vector<Eigen::MatrixXd> local_train_full(const GlobalModel& global,
                                              const DataPartition& partition,
                                              const TrainConfig& cfg, std::uint64_t seed,
                                              double* mean_loss = nullptr);

// One FedAvg round over the given partitions with uniform weights.
GlobalModel fedavg_baseline_round(const GlobalModel& global,
                                  const std::vector<const DataPartition*>& partitions,
                                  const TrainConfig& cfg, std::uint64_t seed);

}  // namespace feddlora
