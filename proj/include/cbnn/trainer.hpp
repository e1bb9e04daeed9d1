#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cbnn/model.hpp"
#include "cbnn/oracle.hpp"

namespace cbnn {

/// Synthetic classification task: Gaussian blobs with features in [-1,1].
struct Dataset {
    Eigen::MatrixXd features; // dim x n, column per sample
    std::vector<std::size_t> labels;
    std::size_t classes = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return static_cast<std::size_t>(features.rows()); }
};

Dataset make_blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                   double spread, std::uint64_t seed);

/// Replaces the given fraction of labels with uniform draws. Applied to the
/// training split only: noisy hard labels are the regime where softened
/// teacher targets carry cleaner signal than the labels themselves.
void add_label_noise(Dataset& d, double fraction, std::uint64_t seed);

/// Deterministic head/tail split (train first, validation second).
std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction = 0.75);

/// A two-layer MLP with real latent weights. Binarized variants apply Sign to
/// the (batch-normalized) hidden pre-activations and train through a clipped
/// straight-through estimator; dense variants use ReLU.
struct ToyMlp {
    std::size_t in_dim = 0, hidden = 0, classes = 0;
    bool binarize = false;  // Sign hidden activation + BN, else ReLU
    Eigen::MatrixXd w1, w2; // hidden x in, classes x hidden
    Eigen::VectorXd b1, b2;
    Eigen::VectorXd bn_mean, bn_var; // frozen inference statistics (binarize only)
    double bn_eps = 1e-5;

    std::vector<double> logits(const Eigen::VectorXd& x) const;
    std::size_t predict(const Eigen::VectorXd& x) const;
};

struct TrainConfig {
    std::size_t epochs = 40;
    std::size_t batch = 32;
    double lr = 0.1;
    std::uint64_t seed = 1;
    DistillConfig kd; // used by train_student_kd only
};

struct TrainResult {
    ToyMlp model;
    std::vector<double> epoch_loss;
};

/// Dense teacher trained with plain cross-entropy. Reports divergence (rather
/// than continuing) when the loss turns non-finite.
TrainResult train_teacher(const Dataset& train, std::size_t hidden, const TrainConfig& cfg);

/// Binarized student trained on the combined loss; passing a null teacher or
/// lambda = 1 reduces exactly to plain BNN training (the teacher term vanishes).
TrainResult train_student_kd(const Dataset& train, const ToyMlp* teacher,
                             std::size_t hidden, const TrainConfig& cfg);

double accuracy(const ToyMlp& mlp, const Dataset& data);

/// Model graph of the MLP: FC -> (BN -> Sign | ReLU) -> FC -> Output. Hidden
/// rows are rescaled (function-preserving, absorbed by BN or the next layer)
/// so the compiled plan meets the MSB range budget.
ModelGraph export_graph(const ToyMlp& mlp, unsigned ring_bits = 32, unsigned frac_bits = 13,
                        unsigned msb_budget = 8);

} // namespace cbnn
