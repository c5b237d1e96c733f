#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ancl/affinity.hpp"
#include "ancl/errors.hpp"
#include "ancl/features.hpp"
#include "ancl/rng.hpp"

namespace ancl {

/// Parameters of the pairwise co-membership network: a shared embedding
/// (d -> 64 -> 64, ReLU between the affine layers), symmetric sum
/// aggregation of the two embeddings, and an MLP head
/// (64 -> 256 -> 1, ReLU then sigmoid).
struct NetworkParams {
    static constexpr int kEmbedHidden = 64;
    static constexpr int kEmbedOut = 64;
    static constexpr int kHeadHidden = 256;

    int input_dim = 0;
    Eigen::MatrixXd embed_w1;  // kEmbedHidden x d
    Eigen::VectorXd embed_b1;
    Eigen::MatrixXd embed_w2;  // kEmbedOut x kEmbedHidden
    Eigen::VectorXd embed_b2;
    Eigen::MatrixXd head_w1;   // kHeadHidden x kEmbedOut
    Eigen::VectorXd head_b1;
    Eigen::MatrixXd head_w2;   // 1 x kHeadHidden
    Eigen::VectorXd head_b2;   // 1

    /// Zero-filled parameter set with the given input dimension.
    static NetworkParams zeros(int d) {
        NetworkParams p;
        p.input_dim = d;
        p.embed_w1 = Eigen::MatrixXd::Zero(kEmbedHidden, d);
        p.embed_b1 = Eigen::VectorXd::Zero(kEmbedHidden);
        p.embed_w2 = Eigen::MatrixXd::Zero(kEmbedOut, kEmbedHidden);
        p.embed_b2 = Eigen::VectorXd::Zero(kEmbedOut);
        p.head_w1 = Eigen::MatrixXd::Zero(kHeadHidden, kEmbedOut);
        p.head_b1 = Eigen::VectorXd::Zero(kHeadHidden);
        p.head_w2 = Eigen::MatrixXd::Zero(1, kHeadHidden);
        p.head_b2 = Eigen::VectorXd::Zero(1);
        return p;
    }

    template <typename F>
    void for_each_tensor(F&& f) {
        f(embed_w1); f(embed_b1); f(embed_w2); f(embed_b2);
        f(head_w1); f(head_b1); f(head_w2); f(head_b2);
    }
    template <typename F>
    void for_each_tensor(F&& f) const {
        f(embed_w1); f(embed_b1); f(embed_w2); f(embed_b2);
        f(head_w1); f(head_b1); f(head_w2); f(head_b2);
    }
};

/// Gradients share the parameter layout.
using NetworkGrads = NetworkParams;

struct TrainConfig {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::size_t pair_sample = 512;     // pairs per dataset once n exceeds all_pairs_max_n
    std::size_t all_pairs_max_n = 32;  // below this, every unordered pair is used
    std::size_t total_datasets = 2000;
    std::uint64_t seed = 0;
};

struct AdamState {
    NetworkParams m;
    NetworkParams v;
    long step = 0;

    static AdamState zeros(int d) { return {NetworkParams::zeros(d), NetworkParams::zeros(d), 0}; }
};

/// He-uniform initialization: weights ~ U[-sqrt(6/fan_in), sqrt(6/fan_in)]
/// filled in a fixed row-major order, biases zero.
inline NetworkParams init_network(int d, Rng& rng) {
    if (d < 1) throw ConfigError("init_network: feature dimension must be at least 1");
    NetworkParams p = NetworkParams::zeros(d);
    const auto fill = [&](Eigen::MatrixXd& w) {
        const double bound = std::sqrt(6.0 / static_cast<double>(w.cols()));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
        }
    };
    fill(p.embed_w1);
    fill(p.embed_w2);
    fill(p.head_w1);
    fill(p.head_w2);
    return p;
}

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Cached activations of one pair evaluation, for backpropagation.
struct PairActivations {
    Eigen::VectorXd xa, xb;
    Eigen::VectorXd ha_pre, ha, hb_pre, hb;  // embedding hidden layers
    Eigen::VectorXd ea, eb, z;               // embeddings and their sum
    Eigen::VectorXd g_pre, g;                // head hidden layer
    double logit = 0.0;
    double p = 0.5;
};

inline void check_dim(const NetworkParams& params, const FeatureVector& v) {
    if (static_cast<int>(v.values.size()) != params.input_dim) {
        throw ConfigError("network: feature dimension mismatch (got " + std::to_string(v.values.size()) +
                          ", expected " + std::to_string(params.input_dim) + ")");
    }
}

inline PairActivations forward_pair_cached(const NetworkParams& params, const FeatureVector& a,
                                           const FeatureVector& b) {
    check_dim(params, a);
    check_dim(params, b);
    PairActivations act;
    act.xa = Eigen::Map<const Eigen::VectorXd>(a.values.data(), static_cast<Eigen::Index>(a.values.size()));
    act.xb = Eigen::Map<const Eigen::VectorXd>(b.values.data(), static_cast<Eigen::Index>(b.values.size()));
    act.ha_pre = params.embed_w1 * act.xa + params.embed_b1;
    act.ha = act.ha_pre.cwiseMax(0.0);
    act.ea = params.embed_w2 * act.ha + params.embed_b2;
    act.hb_pre = params.embed_w1 * act.xb + params.embed_b1;
    act.hb = act.hb_pre.cwiseMax(0.0);
    act.eb = params.embed_w2 * act.hb + params.embed_b2;
    act.z = act.ea + act.eb;
    act.g_pre = params.head_w1 * act.z + params.head_b1;
    act.g = act.g_pre.cwiseMax(0.0);
    act.logit = (params.head_w2 * act.g)(0) + params.head_b2(0);
    act.p = sigmoid(act.logit);
    return act;
}

constexpr double kProbClamp = 1e-7;

/// Accumulates the gradient of the clamped BCE loss for one pair into `grads`.
inline void accumulate_pair_gradient(const NetworkParams& params, const PairActivations& act, double target,
                                     NetworkGrads& grads) {
    // d loss / d logit = p - y inside the clamp range; the clamp freezes the
    // loss outside it, so the exact gradient there is zero.
    double d_logit = 0.0;
    if (act.p > kProbClamp && act.p < 1.0 - kProbClamp) d_logit = act.p - target;
    if (d_logit == 0.0) return;

    grads.head_w2 += d_logit * act.g.transpose();
    grads.head_b2(0) += d_logit;
    Eigen::VectorXd d_g = params.head_w2.transpose() * d_logit;
    Eigen::VectorXd d_g_pre = (act.g_pre.array() > 0.0).select(d_g, 0.0);
    grads.head_w1 += d_g_pre * act.z.transpose();
    grads.head_b1 += d_g_pre;
    const Eigen::VectorXd d_z = params.head_w1.transpose() * d_g_pre;

    const auto backprop_branch = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& h_pre,
                                     const Eigen::VectorXd& h) {
        grads.embed_w2 += d_z * h.transpose();
        grads.embed_b2 += d_z;
        Eigen::VectorXd d_h = params.embed_w2.transpose() * d_z;
        Eigen::VectorXd d_h_pre = (h_pre.array() > 0.0).select(d_h, 0.0);
        grads.embed_w1 += d_h_pre * x.transpose();
        grads.embed_b1 += d_h_pre;
    };
    backprop_branch(act.xa, act.ha_pre, act.ha);
    backprop_branch(act.xb, act.hb_pre, act.hb);
}

}  // namespace detail

/// Co-membership probability for one unordered pair:
/// sigmoid(head(embed(a) + embed(b))). Two-term addition is commutative in
/// IEEE arithmetic, so the output is bitwise symmetric in its arguments.
inline double forward_pair(const NetworkParams& params, const FeatureVector& a, const FeatureVector& b) {
    return detail::forward_pair_cached(params, a, b).p;
}

/// Binary cross-entropy with the probability clamped to
/// [1e-7, 1 - 1e-7] before the logarithms.
inline double bce_loss(double p, double target) {
    const double pc = std::min(1.0 - detail::kProbClamp, std::max(detail::kProbClamp, p));
    return -(target * std::log(pc) + (1.0 - target) * std::log(1.0 - pc));
}

/// Exact gradient of bce_loss(forward_pair(params, a, b), y) in every
/// parameter, as a parameter-shaped bundle.
inline NetworkGrads pair_gradient(const NetworkParams& params, const FeatureVector& a, const FeatureVector& b,
                                  double target) {
    NetworkGrads grads = NetworkParams::zeros(params.input_dim);
    const auto act = detail::forward_pair_cached(params, a, b);
    detail::accumulate_pair_gradient(params, act, target, grads);
    return grads;
}

/// Standard Adam update with bias correction, applied in place.
inline void adam_step(NetworkParams& params, const NetworkGrads& grads, AdamState& state,
                      const TrainConfig& config) {
    state.step += 1;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    auto update = [&](Eigen::MatrixXd& p, const Eigen::MatrixXd& g, Eigen::MatrixXd& m, Eigen::MatrixXd& v) {
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v.array().matrix() + (1.0 - config.beta2) * g.array().square().matrix();
        p.array() -= config.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.epsilon);
    };
    auto update_vec = [&](Eigen::VectorXd& p, const Eigen::VectorXd& g, Eigen::VectorXd& m, Eigen::VectorXd& v) {
        m = config.beta1 * m + (1.0 - config.beta1) * g;
        v = config.beta2 * v.array().matrix() + (1.0 - config.beta2) * g.array().square().matrix();
        p.array() -= config.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + config.epsilon);
    };

    update(params.embed_w1, grads.embed_w1, state.m.embed_w1, state.v.embed_w1);
    update_vec(params.embed_b1, grads.embed_b1, state.m.embed_b1, state.v.embed_b1);
    update(params.embed_w2, grads.embed_w2, state.m.embed_w2, state.v.embed_w2);
    update_vec(params.embed_b2, grads.embed_b2, state.m.embed_b2, state.v.embed_b2);
    update(params.head_w1, grads.head_w1, state.m.head_w1, state.v.head_w1);
    update_vec(params.head_b1, grads.head_b1, state.m.head_b1, state.v.head_b1);
    update(params.head_w2, grads.head_w2, state.m.head_w2, state.v.head_w2);
    update_vec(params.head_b2, grads.head_b2, state.m.head_b2, state.v.head_b2);
}

namespace detail {

/// Unordered pair indices for one dataset. All C(n,2) pairs for small n;
/// otherwise up to `pair_sample` pairs stratified toward a 50/50
/// positive/negative balance, falling back to whatever counts exist.
inline std::vector<std::pair<std::size_t, std::size_t>> select_pairs(const std::vector<int>& labels,
                                                                     const TrainConfig& cfg, Rng& rng) {
    const std::size_t n = labels.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (n <= cfg.all_pairs_max_n) {
        pairs.reserve(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) pairs.push_back({i, j});
        }
        return pairs;
    }
    std::vector<std::pair<std::size_t, std::size_t>> positives, negatives;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            (labels[i] == labels[j] ? positives : negatives).push_back({i, j});
        }
    }
    const std::size_t half = cfg.pair_sample / 2;
    std::size_t take_pos = std::min(half, positives.size());
    std::size_t take_neg = std::min(cfg.pair_sample - take_pos, negatives.size());
    take_pos = std::min(cfg.pair_sample - take_neg, positives.size());
    for (const std::size_t idx : rng.sample_indices(positives.size(), take_pos)) pairs.push_back(positives[idx]);
    for (const std::size_t idx : rng.sample_indices(negatives.size(), take_neg)) pairs.push_back(negatives[idx]);
    return pairs;
}

}  // namespace detail

struct TrainResult {
    NetworkParams params;
    std::vector<double> loss_trace;  // mean batch BCE, one entry per dataset
};

/// Trains the network with a single streaming pass: `next_dataset` is invoked
/// `config.total_datasets` times; each dataset forms one pair minibatch
/// (targets y = 1 iff the two series share a label) and one Adam step on the
/// batch-averaged gradient.
inline TrainResult train(const std::function<FeatureDataset()>& next_dataset, const TrainConfig& config) {
    Rng rng(config.seed);
    TrainResult result;
    result.loss_trace.reserve(config.total_datasets);
    bool initialized = false;
    FeatureSpec layout;
    AdamState state;

    for (std::size_t index = 0; index < config.total_datasets; ++index) {
        const FeatureDataset dataset = next_dataset();
        if (dataset.labels.size() != dataset.vectors.size()) {
            throw DataError("train: dataset " + std::to_string(index) + " lacks per-series labels");
        }
        if (!initialized) {
            layout = dataset.spec;
            result.params = init_network(static_cast<int>(layout.dimension()), rng);
            state = AdamState::zeros(result.params.input_dim);
            initialized = true;
        } else if (!(dataset.spec == layout)) {
            throw DataError("train: dataset " + std::to_string(index) + " has a mismatched feature layout");
        }
        const auto pairs = detail::select_pairs(dataset.labels, config, rng);
        if (pairs.empty()) continue;

        NetworkGrads grads = NetworkParams::zeros(result.params.input_dim);
        double loss = 0.0;
        for (const auto& [i, j] : pairs) {
            const double target = dataset.labels[i] == dataset.labels[j] ? 1.0 : 0.0;
            const auto act = detail::forward_pair_cached(result.params, dataset.vectors[i], dataset.vectors[j]);
            loss += bce_loss(act.p, target);
            detail::accumulate_pair_gradient(result.params, act, target, grads);
        }
        const double scale = 1.0 / static_cast<double>(pairs.size());
        grads.for_each_tensor([&](auto& g) { g *= scale; });
        loss *= scale;
        if (!std::isfinite(loss)) {
            throw NumericError("train: non-finite loss at dataset " + std::to_string(index));
        }
        adam_step(result.params, grads, state, config);
        result.loss_trace.push_back(loss);
    }
    if (!initialized) throw ConfigError("train: total_datasets must be positive");
    return result;
}

/// Pairwise affinities for a feature dataset: A[i][j] = forward_pair(i, j)
/// for i < j, mirrored, unit diagonal.
inline AffinityMatrix affinity_matrix(const NetworkParams& params, const FeatureDataset& features) {
    const std::size_t n = features.size();
    AffinityMatrix a(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            a.set_pair(i, j, forward_pair(params, features.vectors[i], features.vectors[j]));
        }
    }
    return a;
}

// ---------------------------------------------------------------------------
// Model persistence.
//
// Layout: magic "ANCL", format version u16, then the payload — feature layout
// (kind u8, lag count u32 + lags i32, level count u32 + levels f64), the
// dimension record (input u32, embed hidden u32, embed out u32, head hidden
// u32), and every weight matrix row-major as little-endian IEEE f64 — and a
// trailing CRC-32 of the payload.
// ---------------------------------------------------------------------------

struct Model {
    NetworkParams params;
    FeatureSpec layout;
};

namespace detail {

inline std::uint32_t crc32(const unsigned char* data, std::size_t size) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int bit = 0; bit < 8; ++bit) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < size; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

struct ByteCursor {
    const unsigned char* data;
    std::size_t size;
    std::size_t pos = 0;

    void need(std::size_t bytes) const {
        if (pos + bytes > size) throw ModelTruncationError("model file: unexpected end of payload");
    }
    std::uint8_t u8() {
        need(1);
        return data[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(data[pos]) |
                          static_cast<std::uint16_t>(static_cast<std::uint16_t>(data[pos + 1]) << 8);
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(data[pos + static_cast<std::size_t>(i)]) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(bits);
    }
};

inline constexpr std::uint16_t kModelVersion = 1;
inline constexpr char kModelMagic[4] = {'A', 'N', 'C', 'L'};

}  // namespace detail

inline void save_model(const Model& model, const std::string& path) {
    std::string payload;
    detail::put_u32(payload, model.layout.kind == FeatureKind::Acf ? 0u : 1u);
    detail::put_u32(payload, static_cast<std::uint32_t>(model.layout.lags.size()));
    for (const int l : model.layout.lags) detail::put_u32(payload, static_cast<std::uint32_t>(l));
    detail::put_u32(payload, static_cast<std::uint32_t>(model.layout.levels.size()));
    for (const double tau : model.layout.levels) detail::put_f64(payload, tau);
    detail::put_u32(payload, static_cast<std::uint32_t>(model.params.input_dim));
    detail::put_u32(payload, NetworkParams::kEmbedHidden);
    detail::put_u32(payload, NetworkParams::kEmbedOut);
    detail::put_u32(payload, NetworkParams::kHeadHidden);
    model.params.for_each_tensor([&](const auto& tensor) {
        for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
            for (Eigen::Index c = 0; c < tensor.cols(); ++c) detail::put_f64(payload, tensor(r, c));
        }
    });

    std::string file;
    file.append(detail::kModelMagic, 4);
    detail::put_u16(file, detail::kModelVersion);
    file += payload;
    detail::put_u32(file, detail::crc32(reinterpret_cast<const unsigned char*>(payload.data()), payload.size()));

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("save_model: cannot open '" + path + "' for writing");
    out.write(file.data(), static_cast<std::streamsize>(file.size()));
    if (!out) throw DataError("save_model: write to '" + path + "' failed");
}

inline Model load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("load_model: cannot open '" + path + "'");
    std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (file.size() < 6) throw ModelTruncationError("model file: shorter than the header");
    if (std::string_view(file.data(), 4) != std::string_view(detail::kModelMagic, 4)) {
        throw ModelVersionError("model file: bad magic bytes (not an ANCL model)");
    }
    const auto version = static_cast<std::uint16_t>(static_cast<unsigned char>(file[4]) |
                                                    (static_cast<unsigned char>(file[5]) << 8));
    if (version != detail::kModelVersion) {
        throw ModelVersionError("model file: unsupported format version " + std::to_string(version));
    }
    if (file.size() < 10) throw ModelTruncationError("model file: missing checksum");

    const auto* payload = reinterpret_cast<const unsigned char*>(file.data()) + 6;
    const std::size_t payload_size = file.size() - 10;

    // Parse before verifying the checksum: a short file shows up as a cursor
    // overrun (truncation), while a same-length corruption falls through to
    // the CRC comparison below.
    detail::ByteCursor cur{payload, payload_size};
    Model model;
    const std::uint32_t kind = cur.u32();
    if (kind > 1) throw ModelVersionError("model file: unknown feature kind tag");
    model.layout.kind = kind == 0 ? FeatureKind::Acf : FeatureKind::Qaf;
    const std::uint32_t lag_count = cur.u32();
    if (lag_count > 4096) throw ModelTruncationError("model file: implausible lag count");
    model.layout.lags.resize(lag_count);
    for (auto& l : model.layout.lags) l = static_cast<int>(cur.u32());
    const std::uint32_t level_count = cur.u32();
    if (level_count > 4096) throw ModelTruncationError("model file: implausible level count");
    model.layout.levels.resize(level_count);
    for (auto& tau : model.layout.levels) tau = cur.f64();

    const std::uint32_t input_dim = cur.u32();
    const std::uint32_t embed_hidden = cur.u32();
    const std::uint32_t embed_out = cur.u32();
    const std::uint32_t head_hidden = cur.u32();
    if (embed_hidden != NetworkParams::kEmbedHidden || embed_out != NetworkParams::kEmbedOut ||
        head_hidden != NetworkParams::kHeadHidden) {
        throw ModelVersionError("model file: architecture record does not match this build");
    }
    if (input_dim == 0 || input_dim > 1'000'000) throw ModelTruncationError("model file: implausible input dimension");
    if (model.layout.dimension() != input_dim) {
        throw ModelVersionError("model file: feature layout dimension disagrees with the input dimension");
    }

    model.params = NetworkParams::zeros(static_cast<int>(input_dim));
    model.params.for_each_tensor([&](auto& tensor) {
        for (Eigen::Index r = 0; r < tensor.rows(); ++r) {
            for (Eigen::Index c = 0; c < tensor.cols(); ++c) tensor(r, c) = cur.f64();
        }
    });
    if (cur.pos != payload_size) throw ModelTruncationError("model file: trailing bytes after the weights");

    std::uint32_t stored_crc = 0;
    for (int i = 0; i < 4; ++i) {
        stored_crc |= static_cast<std::uint32_t>(static_cast<unsigned char>(file[file.size() - 4 +
                                                                                 static_cast<std::size_t>(i)]))
                      << (8 * i);
    }
    if (detail::crc32(payload, payload_size) != stored_crc) {
        throw ModelChecksumError("model file: checksum mismatch (corrupted payload)");
    }
    return model;
}

}  // namespace ancl
