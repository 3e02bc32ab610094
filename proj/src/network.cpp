#include "demcl/network.hpp"

#include <cmath>
#include <stdexcept>

namespace demcl {

double cross_entropy(const Tensor& labels, const Tensor& probs) {
    if (labels.rank() != 2 || probs.rank() != 2)
        throw std::invalid_argument("cross_entropy: labels and probs must be B x X");
    if (labels.shape[0] != probs.shape[0])
        throw std::invalid_argument("cross_entropy: batch row counts differ");
    if (labels.shape[1] != probs.shape[1])
        throw std::invalid_argument("cross_entropy: class counts differ");
    const std::size_t b = probs.shape[0];
    const std::size_t x = probs.shape[1];
    double total = 0.0;
    for (std::size_t i = 0; i < b; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < x; ++j) row_sum += probs.values[i * x + j];
        if (std::abs(row_sum - 1.0) > 1e-6)
            throw std::invalid_argument("cross_entropy: probability row " + std::to_string(i) +
                                        " does not sum to 1");
        for (std::size_t j = 0; j < x; ++j) {
            double lij = labels.values[i * x + j];
            if (lij != 0.0)
                total -= lij * std::log(std::max(probs.values[i * x + j], 1e-12));
        }
    }
    return total / static_cast<double>(b);
}

Tensor softmax_ce_grad(const Tensor& label, const Tensor& scores, std::size_t batch_size) {
    if (label.size() != scores.size())
        throw std::invalid_argument("softmax_ce_grad: label/score length mismatch");
    double mx = scores[0];
    for (std::size_t i = 1; i < scores.size(); ++i) mx = std::max(mx, scores[i]);
    double sum = 0.0;
    Tensor g({scores.size()});
    for (std::size_t i = 0; i < scores.size(); ++i) {
        g[i] = std::exp(scores[i] - mx);
        sum += g[i];
    }
    const double inv_b = 1.0 / static_cast<double>(batch_size);
    for (std::size_t i = 0; i < scores.size(); ++i) g[i] = (g[i] / sum - label[i]) * inv_b;
    return g;
}

void sgd_step(const std::vector<ParamRef>& params, double learning_rate) {
    for (const auto& p : params)
        for (double g : p.grad->values)
            if (!std::isfinite(g))
                throw std::runtime_error("sgd_step: non-finite gradient in " + p.name);
    for (const auto& p : params)
        for (std::size_t i = 0; i < p.value->size(); ++i)
            p.value->values[i] -= learning_rate * p.grad->values[i];
}

void sgd_step(Network& net, double learning_rate) { sgd_step(net.params(), learning_rate); }

Tensor one_hot(std::size_t index, std::size_t classes) {
    if (index >= classes) throw std::invalid_argument("one_hot: index out of range");
    Tensor t({classes});
    t[index] = 1.0;
    return t;
}

std::size_t argmax_index(const Tensor& scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;  // ties keep the lowest index
    return best;
}

}  // namespace demcl
