#pragma once

#include <memory>
#include <string>
#include <vector>

#include "demcl/layers.hpp"

namespace demcl {

/// Shared gradient-training settings.
struct TrainConfig {
    double learning_rate = 0.0005;
    std::size_t epochs = 500;
    std::size_t batch_size = 64;
    std::uint64_t rng_seed = 1;
};

/// An ordered stack of layers trained as one unit.
class Network {
public:
    Network() = default;
    Network(Network&&) = default;
    Network& operator=(Network&&) = default;

    template <typename L, typename... Args>
    L& add(Args&&... args) {
        auto layer = std::make_unique<L>(std::forward<Args>(args)...);
        layer->set_name(std::to_string(layers_.size()) + ":" + layer->kind());
        L& ref = *layer;
        layers_.push_back(std::move(layer));
        return ref;
    }

    void push(std::unique_ptr<Layer> layer) {
        layer->set_name(std::to_string(layers_.size()) + ":" + layer->kind());
        layers_.push_back(std::move(layer));
    }

    Tensor forward(const Tensor& x) {
        Tensor y = x;
        for (auto& l : layers_) y = l->forward(y);
        return y;
    }

    /// Accumulates parameter gradients; returns the input gradient.
    Tensor backward(const Tensor& gy) {
        Tensor g = gy;
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
        return g;
    }

    std::vector<ParamRef> params() {
        std::vector<ParamRef> ps;
        for (auto& l : layers_)
            for (auto& p : l->params()) ps.push_back(p);
        return ps;
    }

    void zero_grads() {
        for (auto& p : params()) p.grad->fill(0.0);
    }

    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }
    const Layer& layer(std::size_t i) const { return *layers_[i]; }

private:
    std::vector<std::unique_ptr<Layer>> layers_;
};

/// Mean cross-entropy over a batch: labels and probs are B x X row-major,
/// labels one-hot, each probs row summing to 1 within 1e-6. Probabilities
/// are floored at 1e-12 inside the log.
double cross_entropy(const Tensor& labels, const Tensor& probs);

/// Gradient of cross_entropy(labels, softmax(scores)) w.r.t. scores for a
/// single sample, already divided by batch_size.
Tensor softmax_ce_grad(const Tensor& label, const Tensor& scores, std::size_t batch_size);

/// One gradient-descent step: param <- param - lr * grad.
/// Throws (naming the parameter) when a gradient is not finite.
void sgd_step(const std::vector<ParamRef>& params, double learning_rate);
void sgd_step(Network& net, double learning_rate);

Tensor one_hot(std::size_t index, std::size_t classes);

std::size_t argmax_index(const Tensor& scores);

}  // namespace demcl
