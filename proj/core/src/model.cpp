#include "seqlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "seqlab/errors.hpp"

namespace seqlab::model {

void ModelConfig::validate() const {
    if (input_dim < 1) throw ParameterError("input_dim must be >= 1");
    if (num_classes < 1) throw ParameterError("num_classes must be >= 1");
    for (int h : hidden_dims)
        if (h < 1) throw ParameterError("hidden dims must be >= 1");
}

std::size_t ParamSet::param_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers) n += layer.weights.size() + layer.biases.size();
    return n;
}

std::vector<double> ParamSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(param_count());
    for_each([&](const double& v) { flat.push_back(v); });
    return flat;
}

void ParamSet::assign_flat(const std::vector<double>& flat) {
    if (flat.size() != param_count())
        throw ParameterError("flat parameter count mismatch: " + std::to_string(flat.size()) +
                             " vs " + std::to_string(param_count()));
    std::size_t i = 0;
    for_each([&](double& v) { v = flat[i++]; });
}

ParamSet init(const ModelConfig& config) {
    config.validate();
    std::vector<int> dims;
    dims.push_back(config.input_dim);
    dims.insert(dims.end(), config.hidden_dims.begin(), config.hidden_dims.end());
    dims.push_back(config.num_classes);

    ParamSet params;
    RngStream rng(config.init_seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        Layer layer;
        layer.in_dim = dims[l];
        layer.out_dim = dims[l + 1];
        const double bound = config.init_scale / std::sqrt(static_cast<double>(layer.in_dim));
        layer.weights.resize(static_cast<std::size_t>(layer.in_dim) * layer.out_dim);
        for (auto& w : layer.weights) w = rng.next_uniform(-bound, bound);
        layer.biases.assign(static_cast<std::size_t>(layer.out_dim), 0.0);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

Gradients zeros_like(const ParamSet& params) {
    Gradients g;
    for (const auto& layer : params.layers) {
        Layer zl;
        zl.in_dim = layer.in_dim;
        zl.out_dim = layer.out_dim;
        zl.weights.assign(layer.weights.size(), 0.0);
        zl.biases.assign(layer.biases.size(), 0.0);
        g.layers.push_back(std::move(zl));
    }
    return g;
}

std::vector<double> flatten_normalize(const Image& img) {
    std::vector<double> out(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i) out[i] = img.pixels[i] / 255.0;
    return out;
}

namespace {

// y = W x + b, W row-major (out x in).
void dense(const Layer& layer, const std::vector<double>& x, std::vector<double>& y) {
    y.assign(static_cast<std::size_t>(layer.out_dim), 0.0);
    for (int o = 0; o < layer.out_dim; ++o) {
        const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
        double acc = layer.biases[static_cast<std::size_t>(o)];
        for (int i = 0; i < layer.in_dim; ++i) acc += row[i] * x[static_cast<std::size_t>(i)];
        y[static_cast<std::size_t>(o)] = acc;
    }
}

}  // namespace

std::vector<prob::Logits> forward(const ParamSet& params,
                                  const std::vector<std::vector<double>>& batch,
                                  ForwardCache* cache) {
    if (params.layers.empty()) throw ParameterError("uninitialized model");
    const auto in_dim = static_cast<std::size_t>(params.layers.front().in_dim);
    for (const auto& x : batch)
        if (x.size() != in_dim)
            throw ParameterError("input dim " + std::to_string(x.size()) + " does not match model " +
                                 std::to_string(in_dim));

    if (cache) {
        cache->layer_dims.clear();
        cache->layer_dims.push_back(params.layers.front().in_dim);
        for (const auto& layer : params.layers) cache->layer_dims.push_back(layer.out_dim);
        cache->batch_size = batch.size();
        cache->inputs = batch;
        cache->activations.assign(params.layers.size() - 1, {});
        for (auto& acts : cache->activations) acts.resize(batch.size());
    }

    std::vector<prob::Logits> logits(batch.size());
    for (std::size_t s = 0; s < batch.size(); ++s) {
        std::vector<double> cur = batch[s];
        std::vector<double> next;
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            dense(params.layers[l], cur, next);
            const bool is_head = l + 1 == params.layers.size();
            if (!is_head) {
                for (auto& v : next) v = std::max(v, 0.0);
                if (cache) cache->activations[l][s] = next;
            }
            cur.swap(next);
        }
        logits[s].values = std::move(cur);
    }
    return logits;
}

std::vector<prob::Logits> forward(const ParamSet& params, const std::vector<Image>& batch,
                                  ForwardCache* cache) {
    std::vector<std::vector<double>> flat(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) flat[i] = flatten_normalize(batch[i]);
    return forward(params, flat, cache);
}

Gradients backward(const ParamSet& params, const ForwardCache& cache,
                   const std::vector<std::vector<double>>& dlogits) {
    if (cache.layer_dims.size() != params.layers.size() + 1)
        throw std::logic_error("forward cache does not match model depth");
    for (std::size_t l = 0; l < params.layers.size(); ++l)
        if (cache.layer_dims[l] != params.layers[l].in_dim ||
            cache.layer_dims[l + 1] != params.layers[l].out_dim)
            throw std::logic_error("forward cache does not match layer shapes");
    if (dlogits.size() != cache.batch_size)
        throw std::logic_error("dlogits batch size does not match cache");

    Gradients grads = zeros_like(params);
    const std::size_t depth = params.layers.size();

    for (std::size_t s = 0; s < cache.batch_size; ++s) {
        if (dlogits[s].size() != static_cast<std::size_t>(params.layers.back().out_dim))
            throw std::logic_error("dlogits width does not match head");

        std::vector<double> delta = dlogits[s];
        for (std::size_t l = depth; l-- > 0;) {
            const Layer& layer = params.layers[l];
            const std::vector<double>& x =
                l == 0 ? cache.inputs[s] : cache.activations[l - 1][s];
            Layer& g = grads.layers[l];

            for (int o = 0; o < layer.out_dim; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                g.biases[static_cast<std::size_t>(o)] += d;
                double* grow = g.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
                for (int i = 0; i < layer.in_dim; ++i) grow[i] += d * x[static_cast<std::size_t>(i)];
            }
            if (l == 0) break;

            // Propagate through the dense layer, then the ReLU of layer l-1.
            std::vector<double> prev(static_cast<std::size_t>(layer.in_dim), 0.0);
            for (int o = 0; o < layer.out_dim; ++o) {
                const double d = delta[static_cast<std::size_t>(o)];
                const double* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in_dim;
                for (int i = 0; i < layer.in_dim; ++i) prev[static_cast<std::size_t>(i)] += d * row[i];
            }
            for (int i = 0; i < layer.in_dim; ++i)
                if (cache.activations[l - 1][s][static_cast<std::size_t>(i)] <= 0.0)
                    prev[static_cast<std::size_t>(i)] = 0.0;
            delta.swap(prev);
        }
    }
    return grads;
}

void accumulate(Gradients& a, const Gradients& b) {
    if (a.layers.size() != b.layers.size()) throw std::logic_error("gradient shape mismatch");
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        auto& la = a.layers[l];
        const auto& lb = b.layers[l];
        if (la.weights.size() != lb.weights.size() || la.biases.size() != lb.biases.size())
            throw std::logic_error("gradient shape mismatch");
        for (std::size_t i = 0; i < la.weights.size(); ++i) la.weights[i] += lb.weights[i];
        for (std::size_t i = 0; i < la.biases.size(); ++i) la.biases[i] += lb.biases[i];
    }
}

namespace {

constexpr char kMagic[8] = {'S', 'E', 'Q', 'L', 'A', 'B', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_le(std::ofstream& out, T value) {
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    // Host is little-endian on every supported target; byte order pinned by test fixtures.
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& in, const std::filesystem::path& path) {
    unsigned char buf[sizeof(T)];
    in.read(reinterpret_cast<char*>(buf), sizeof(T));
    if (in.gcount() != sizeof(T)) throw DataError(path.string() + ": truncated checkpoint");
    T value;
    std::memcpy(&value, buf, sizeof(T));
    return value;
}

}  // namespace

void save_checkpoint(const ModelConfig& config, const ParamSet& params,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError(path.string() + ": cannot open for writing");
    out.write(kMagic, sizeof(kMagic));
    write_le(out, kVersion);
    write_le(out, static_cast<std::uint32_t>(config.input_dim));
    write_le(out, static_cast<std::uint32_t>(config.num_classes));
    write_le(out, static_cast<std::uint32_t>(config.hidden_dims.size()));
    for (int h : config.hidden_dims) write_le(out, static_cast<std::uint32_t>(h));
    write_le(out, config.init_seed);
    write_le(out, config.init_scale);
    write_le(out, static_cast<std::uint64_t>(params.param_count()));
    params.for_each([&](const double& v) { write_le(out, v); });
    if (!out) throw DataError(path.string() + ": write failed");
}

std::pair<ModelConfig, ParamSet> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError(path.string() + ": cannot open");
    char magic[8];
    in.read(magic, sizeof(magic));
    if (in.gcount() != sizeof(magic) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError(path.string() + ": not a seqlab checkpoint");
    const auto version = read_le<std::uint32_t>(in, path);
    if (version != kVersion)
        throw DataError(path.string() + ": unsupported checkpoint version " +
                        std::to_string(version));

    ModelConfig config;
    config.input_dim = static_cast<int>(read_le<std::uint32_t>(in, path));
    config.num_classes = static_cast<int>(read_le<std::uint32_t>(in, path));
    const auto n_hidden = read_le<std::uint32_t>(in, path);
    for (std::uint32_t i = 0; i < n_hidden; ++i)
        config.hidden_dims.push_back(static_cast<int>(read_le<std::uint32_t>(in, path)));
    config.init_seed = read_le<std::uint64_t>(in, path);
    config.init_scale = read_le<double>(in, path);
    config.validate();

    ParamSet params = init(config);
    const auto count = read_le<std::uint64_t>(in, path);
    if (count != params.param_count())
        throw DataError(path.string() + ": parameter count does not match config");
    std::vector<double> flat(count);
    for (auto& v : flat) v = read_le<double>(in, path);
    params.assign_flat(flat);
    return {config, params};
}

}  // namespace seqlab::model
