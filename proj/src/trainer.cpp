#include "cbnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace cbnn {

Dataset make_blobs(std::size_t per_class, std::size_t classes, std::size_t dim,
                   double spread, std::uint64_t seed) {
    if (classes < 2 || dim == 0 || per_class == 0) throw ConfigError("bad blob parameters");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> center_dist(-0.8, 0.8);
    std::normal_distribution<double> noise(0.0, spread);

    Eigen::MatrixXd centers(dim, classes);
    for (std::size_t c = 0; c < classes; ++c)
        for (std::size_t j = 0; j < dim; ++j) centers(j, c) = center_dist(gen);

    std::size_t n = per_class * classes;
    Dataset d;
    d.classes = classes;
    d.features.resize(dim, n);
    d.labels.resize(n);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i % classes;
    std::shuffle(order.begin(), order.end(), gen);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t c = order[i];
        d.labels[i] = c;
        for (std::size_t j = 0; j < dim; ++j)
            d.features(j, i) = std::clamp(centers(j, c) + noise(gen), -1.0, 1.0);
    }
    return d;
}

void add_label_noise(Dataset& d, double fraction, std::uint64_t seed) {
    if (fraction < 0.0 || fraction >= 1.0) throw ConfigError("bad label noise fraction");
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, d.classes - 1);
    for (auto& label : d.labels)
        if (coin(gen) < fraction) label = pick(gen);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& d, double train_fraction) {
    std::size_t n_train = static_cast<std::size_t>(static_cast<double>(d.size()) *
                                                   train_fraction);
    Dataset a, b;
    a.classes = b.classes = d.classes;
    a.features = d.features.leftCols(n_train);
    b.features = d.features.rightCols(d.size() - n_train);
    a.labels.assign(d.labels.begin(), d.labels.begin() + n_train);
    b.labels.assign(d.labels.begin() + n_train, d.labels.end());
    return {std::move(a), std::move(b)};
}

namespace {

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& z, double temperature) {
    Eigen::MatrixXd out(z.rows(), z.cols());
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        double m = z.col(c).maxCoeff();
        Eigen::VectorXd e = ((z.col(c).array() - m) / temperature).exp();
        out.col(c) = e / e.sum();
    }
    return out;
}

ToyMlp init_mlp(std::size_t in_dim, std::size_t hidden, std::size_t classes, bool binarize,
                std::mt19937_64& gen) {
    ToyMlp m;
    m.in_dim = in_dim;
    m.hidden = hidden;
    m.classes = classes;
    m.binarize = binarize;
    std::normal_distribution<double> dist(0.0, 1.0);
    double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    m.w1.resize(hidden, in_dim);
    m.w2.resize(classes, hidden);
    for (Eigen::Index i = 0; i < m.w1.size(); ++i) m.w1.data()[i] = dist(gen) * s1;
    for (Eigen::Index i = 0; i < m.w2.size(); ++i) m.w2.data()[i] = dist(gen) * s2;
    m.b1 = Eigen::VectorXd::Zero(hidden);
    m.b2 = Eigen::VectorXd::Zero(classes);
    m.bn_mean = Eigen::VectorXd::Zero(hidden);
    m.bn_var = Eigen::VectorXd::Ones(hidden);
    return m;
}

struct Batch {
    Eigen::MatrixXd x;             // dim x B
    std::vector<std::size_t> y;    // labels
    std::vector<std::size_t> orig; // dataset indices (soft-label lookup)
};

Batch gather(const Dataset& d, const std::vector<std::size_t>& idx, std::size_t from,
             std::size_t to) {
    Batch b;
    b.x.resize(d.dim(), to - from);
    b.y.resize(to - from);
    b.orig.resize(to - from);
    for (std::size_t i = from; i < to; ++i) {
        b.x.col(static_cast<Eigen::Index>(i - from)) =
            d.features.col(static_cast<Eigen::Index>(idx[i]));
        b.y[i - from] = d.labels[idx[i]];
        b.orig[i - from] = idx[i];
    }
    return b;
}

/// Shared SGD loop. The gradient of the loss w.r.t. the logits is supplied by
/// the caller (plain cross-entropy or the combined distillation loss).
template <typename LogitGrad>
TrainResult train_loop(const Dataset& train, std::size_t hidden, const TrainConfig& cfg,
                       bool binarize, LogitGrad logit_grad) {
    std::mt19937_64 gen(cfg.seed);
    ToyMlp m = init_mlp(train.dim(), hidden, train.classes, binarize, gen);
    std::vector<std::size_t> idx(train.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    TrainResult result;
    const double bn_momentum = 0.9;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), gen);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < train.size(); at += cfg.batch, ++batches) {
            Batch b = gather(train, idx, at, std::min(at + cfg.batch, train.size()));
            const double B = static_cast<double>(b.y.size());

            // forward
            Eigen::MatrixXd z1 = (m.w1 * b.x).colwise() + m.b1;
            Eigen::MatrixXd zn = z1, a1;
            Eigen::VectorXd inv_std = Eigen::VectorXd::Ones(m.hidden);
            if (binarize) {
                Eigen::VectorXd mu = z1.rowwise().mean();
                Eigen::VectorXd var =
                    ((z1.colwise() - mu).array().square().rowwise().sum() / B).matrix();
                inv_std = (var.array() + m.bn_eps).rsqrt().matrix();
                zn = (z1.colwise() - mu).array().colwise() * inv_std.array();
                a1 = (zn.array() >= 0.0).cast<double>();
                m.bn_mean = bn_momentum * m.bn_mean + (1 - bn_momentum) * mu;
                m.bn_var = bn_momentum * m.bn_var + (1 - bn_momentum) * var;
            } else {
                a1 = z1.array().max(0.0);
            }
            Eigen::MatrixXd logits = (m.w2 * a1).colwise() + m.b2;

            auto [loss, dlogits] = logit_grad(logits, b);
            epoch_loss += loss;

            // backward
            Eigen::MatrixXd dw2 = dlogits * a1.transpose();
            Eigen::VectorXd db2 = dlogits.rowwise().sum();
            Eigen::MatrixXd da1 = m.w2.transpose() * dlogits;
            Eigen::MatrixXd dz1;
            if (binarize) {
                // straight-through estimator, clipped at |zn| <= 1, then the
                // frozen-statistics normalization gradient
                Eigen::MatrixXd ste = (zn.array().abs() <= 1.0).cast<double>();
                dz1 = (da1.array() * ste.array()).matrix();
                dz1 = dz1.array().colwise() * inv_std.array();
            } else {
                dz1 = (da1.array() * (z1.array() > 0.0).cast<double>()).matrix();
            }
            Eigen::MatrixXd dw1 = dz1 * b.x.transpose();
            Eigen::VectorXd db1 = dz1.rowwise().sum();

            m.w2 -= cfg.lr * dw2;
            m.b2 -= cfg.lr * db2;
            m.w1 -= cfg.lr * dw1;
            m.b1 -= cfg.lr * db1;
        }
        epoch_loss /= static_cast<double>(batches);
        if (!std::isfinite(epoch_loss))
            throw RangeError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch));
        result.epoch_loss.push_back(epoch_loss);
    }
    result.model = std::move(m);
    return result;
}

} // namespace

std::vector<double> ToyMlp::logits(const Eigen::VectorXd& x) const {
    Eigen::VectorXd z1 = w1 * x + b1;
    Eigen::VectorXd a1(hidden);
    if (binarize) {
        for (std::size_t i = 0; i < hidden; ++i) {
            double zn = (z1(static_cast<Eigen::Index>(i)) - bn_mean(i)) /
                        std::sqrt(bn_var(i) + bn_eps);
            a1(static_cast<Eigen::Index>(i)) = zn >= 0.0 ? 1.0 : 0.0;
        }
    } else {
        a1 = z1.array().max(0.0);
    }
    Eigen::VectorXd z2 = w2 * a1 + b2;
    return std::vector<double>(z2.data(), z2.data() + z2.size());
}

std::size_t ToyMlp::predict(const Eigen::VectorXd& x) const {
    std::vector<double> z = logits(x);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

TrainResult train_teacher(const Dataset& train, std::size_t hidden, const TrainConfig& cfg) {
    return train_loop(train, hidden, cfg, /*binarize=*/false,
                      [&](const Eigen::MatrixXd& logits, const Batch& b) {
                          Eigen::MatrixXd q = softmax_cols(logits, 1.0);
                          const double B = static_cast<double>(b.y.size());
                          double loss = 0.0;
                          Eigen::MatrixXd d = q;
                          for (std::size_t i = 0; i < b.y.size(); ++i) {
                              Eigen::Index c = static_cast<Eigen::Index>(b.y[i]);
                              loss -= std::log(std::max(q(c, static_cast<Eigen::Index>(i)),
                                                        1e-300));
                              d(c, static_cast<Eigen::Index>(i)) -= 1.0;
                          }
                          return std::pair{loss / B, Eigen::MatrixXd(d / B)};
                      });
}

TrainResult train_student_kd(const Dataset& train, const ToyMlp* teacher,
                             std::size_t hidden, const TrainConfig& cfg) {
    cfg.kd.validate();
    const double lambda = teacher ? cfg.kd.lambda : 1.0;
    const double T = cfg.kd.temperature;

    // Teacher soft labels are fixed; precompute them per sample.
    Eigen::MatrixXd soft;
    if (teacher && lambda < 1.0) {
        Eigen::MatrixXd tz(train.classes, train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            std::vector<double> z =
                teacher->logits(train.features.col(static_cast<Eigen::Index>(i)));
            for (std::size_t c = 0; c < train.classes; ++c)
                tz(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(i)) = z[c];
        }
        soft = softmax_cols(tz, T);
    }

    return train_loop(
        train, hidden, cfg, /*binarize=*/true,
        [&, lambda, T](const Eigen::MatrixXd& logits, const Batch& b) {
            const double B = static_cast<double>(b.y.size());
            Eigen::MatrixXd q1 = softmax_cols(logits, 1.0);
            double loss = 0.0;
            Eigen::MatrixXd d = Eigen::MatrixXd::Zero(logits.rows(), logits.cols());
            for (std::size_t i = 0; i < b.y.size(); ++i) {
                Eigen::Index ic = static_cast<Eigen::Index>(i);
                Eigen::Index c = static_cast<Eigen::Index>(b.y[i]);
                loss -= lambda * std::log(std::max(q1(c, ic), 1e-300));
                d.col(ic) += lambda * q1.col(ic);
                d(c, ic) -= lambda;
            }
            if (lambda < 1.0) {
                Eigen::MatrixXd qt = softmax_cols(logits, T);
                for (std::size_t i = 0; i < b.y.size(); ++i) {
                    Eigen::Index ic = static_cast<Eigen::Index>(i);
                    const Eigen::VectorXd p = soft.col(static_cast<Eigen::Index>(b.orig[i]));
                    for (Eigen::Index c = 0; c < logits.rows(); ++c)
                        loss -= (1.0 - lambda) * p(c) *
                                std::log(std::max(qt(c, ic), 1e-300));
                    d.col(ic) += ((1.0 - lambda) / T) * (qt.col(ic) - p);
                }
            }
            return std::pair{loss / B, Eigen::MatrixXd(d / B)};
        });
}

double accuracy(const ToyMlp& mlp, const Dataset& data) {
    std::size_t hit = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        if (mlp.predict(data.features.col(static_cast<Eigen::Index>(i))) == data.labels[i])
            ++hit;
    return static_cast<double>(hit) / static_cast<double>(data.size());
}

ModelGraph export_graph(const ToyMlp& mlp, unsigned ring_bits, unsigned frac_bits,
                        unsigned msb_budget) {
    ModelGraph g;
    g.ring_bits = ring_bits;
    g.frac_bits = frac_bits;
    g.msb_budget = msb_budget;
    g.input_shape = Shape{mlp.in_dim};

    // Rescale each hidden row so the first linear output stays small; the
    // factor cancels inside the normalization (binarized) or is moved into the
    // consuming column of w2 (ReLU is positively homogeneous).
    const double target = 6.0;
    Eigen::MatrixXd w1 = mlp.w1;
    Eigen::VectorXd b1 = mlp.b1;
    Eigen::MatrixXd w2 = mlp.w2;
    Eigen::VectorXd mean = mlp.bn_mean, var = mlp.bn_var;
    for (std::size_t r = 0; r < mlp.hidden; ++r) {
        Eigen::Index ri = static_cast<Eigen::Index>(r);
        double bound = w1.row(ri).cwiseAbs().sum() + std::fabs(b1(ri));
        if (bound <= target) continue;
        double s = target / bound;
        w1.row(ri) *= s;
        b1(ri) *= s;
        if (mlp.binarize) {
            mean(ri) *= s;
            var(ri) *= s * s;
        } else {
            w2.col(ri) /= s;
        }
    }

    Layer fc1;
    fc1.kind = LayerKind::Fc;
    fc1.name = "fc1";
    fc1.in_features = mlp.in_dim;
    fc1.out_features = mlp.hidden;
    // Eigen stores column-major; copy into the row-major tensor layout
    fc1.weights = RealTensor(Shape{mlp.hidden, mlp.in_dim});
    for (std::size_t r = 0; r < mlp.hidden; ++r)
        for (std::size_t c = 0; c < mlp.in_dim; ++c)
            fc1.weights[r * mlp.in_dim + c] =
                w1(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    fc1.bias = RealTensor(Shape{mlp.hidden});
    for (std::size_t r = 0; r < mlp.hidden; ++r) fc1.bias[r] = b1(static_cast<Eigen::Index>(r));
    g.layers.push_back(std::move(fc1));

    if (mlp.binarize) {
        Layer bn;
        bn.kind = LayerKind::BatchNorm;
        bn.name = "bn1";
        bn.bn.eps = mlp.bn_eps;
        bn.bn.gamma = RealTensor(Shape{mlp.hidden}, 1.0);
        bn.bn.beta = RealTensor(Shape{mlp.hidden});
        bn.bn.mean = RealTensor(Shape{mlp.hidden});
        bn.bn.var = RealTensor(Shape{mlp.hidden});
        for (std::size_t r = 0; r < mlp.hidden; ++r) {
            bn.bn.mean[r] = mean(static_cast<Eigen::Index>(r));
            bn.bn.var[r] = var(static_cast<Eigen::Index>(r));
        }
        g.layers.push_back(std::move(bn));
        Layer sign;
        sign.kind = LayerKind::Sign;
        sign.name = "sign1";
        g.layers.push_back(std::move(sign));
    } else {
        Layer relu;
        relu.kind = LayerKind::Relu;
        relu.name = "relu1";
        g.layers.push_back(std::move(relu));
    }

    Layer fc2;
    fc2.kind = LayerKind::Fc;
    fc2.name = "fc2";
    fc2.in_features = mlp.hidden;
    fc2.out_features = mlp.classes;
    fc2.weights = RealTensor(Shape{mlp.classes, mlp.hidden});
    for (std::size_t r = 0; r < mlp.classes; ++r)
        for (std::size_t c = 0; c < mlp.hidden; ++c)
            fc2.weights[r * mlp.hidden + c] =
                w2(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    fc2.bias = RealTensor(Shape{mlp.classes});
    for (std::size_t r = 0; r < mlp.classes; ++r) fc2.bias[r] = mlp.b2(static_cast<Eigen::Index>(r));
    g.layers.push_back(std::move(fc2));

    Layer out;
    out.kind = LayerKind::Output;
    out.name = "out";
    g.layers.push_back(std::move(out));
    return g;
}

} // namespace cbnn
