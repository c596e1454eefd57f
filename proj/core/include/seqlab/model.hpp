#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "seqlab/image.hpp"
#include "seqlab/prob.hpp"
#include "seqlab/rng.hpp"

namespace seqlab::model {

struct ModelConfig {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int num_classes = 0;
    std::uint64_t init_seed = 0;
    double init_scale = 1.0;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

/// One dense layer, weights row-major (out_dim x in_dim).
struct Layer {
    int in_dim = 0;
    int out_dim = 0;
    std::vector<double> weights;
    std::vector<double> biases;
};

/// Parameters of the classifier. Flat ordering is layer 0 weights, layer 0
/// biases, layer 1 weights, ... and stays fixed for the life of a config.
struct ParamSet {
    std::vector<Layer> layers;

    std::size_t param_count() const;
    std::vector<double> flatten() const;
    void assign_flat(const std::vector<double>& flat);

    /// Visit every parameter in flat order. F is invoked with a double&.
    template <typename F>
    void for_each(F&& f) {
        for (auto& layer : layers) {
            for (auto& w : layer.weights) f(w);
            for (auto& b : layer.biases) f(b);
        }
    }
    template <typename F>
    void for_each(F&& f) const {
        for (const auto& layer : layers) {
            for (const auto& w : layer.weights) f(w);
            for (const auto& b : layer.biases) f(b);
        }
    }
};

/// Same structure as ParamSet; reused for gradients and optimizer velocity.
using Gradients = ParamSet;

/// Activations retained by forward() for the matching backward() call.
struct ForwardCache {
    std::vector<int> layer_dims;          // input_dim, hidden..., num_classes
    std::size_t batch_size = 0;
    std::vector<std::vector<double>> inputs;        // per sample, normalized
    std::vector<std::vector<std::vector<double>>> activations;  // per layer output, post-ReLU
};

/// Zero-mean uniform init scaled by init_scale / sqrt(fan_in); biases zero.
ParamSet init(const ModelConfig& config);

Gradients zeros_like(const ParamSet& params);

/// Flatten an image to doubles in [0, 1] (divide by 255).
std::vector<double> flatten_normalize(const Image& img);

/// Batch forward pass: flatten -> dense/ReLU stack -> linear head.
std::vector<prob::Logits> forward(const ParamSet& params,
                                  const std::vector<std::vector<double>>& batch,
                                  ForwardCache* cache = nullptr);
std::vector<prob::Logits> forward(const ParamSet& params, const std::vector<Image>& batch,
                                  ForwardCache* cache = nullptr);

/// Exact gradients of the composed loss given d(loss)/d(logits) per sample.
/// The cache must come from a forward() call with these params; a shape
/// mismatch is a programming error (std::logic_error).
Gradients backward(const ParamSet& params, const ForwardCache& cache,
                   const std::vector<std::vector<double>>& dlogits);

/// Elementwise a += b, shapes must agree.
void accumulate(Gradients& a, const Gradients& b);

/// Versioned binary checkpoint: magic, config echo, flat little-endian f64
/// parameter array.
void save_checkpoint(const ModelConfig& config, const ParamSet& params,
                     const std::filesystem::path& path);
std::pair<ModelConfig, ParamSet> load_checkpoint(const std::filesystem::path& path);

}  // namespace seqlab::model
