#pragma once

#include <memory>
#include <string>
#include <vector>

#include "demcl/rng.hpp"
#include "demcl/tensor.hpp"

namespace demcl {

/// Named view of one trainable parameter tensor and its gradient.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

/// A network layer. forward() caches whatever backward() needs; backward()
/// accumulates parameter gradients and returns the input gradient.
class Layer {
public:
    virtual ~Layer() = default;

    virtual std::string kind() const = 0;
    virtual Tensor forward(const Tensor& x) = 0;
    virtual Tensor backward(const Tensor& gy) = 0;
    virtual std::vector<ParamRef> params() { return {}; }

    /// Hyperparameters needed to rebuild the layer from a checkpoint.
    virtual std::vector<double> meta() const { return {}; }

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

protected:
    void require_cache(bool have) const;
    [[noreturn]] void shape_error(const Tensor& x, const std::string& expected) const;

    std::string name_;
};

class DenseLayer : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out);

    std::string kind() const override { return "dense"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;
    std::vector<ParamRef> params() override;
    std::vector<double> meta() const override;

    void init(Rng& rng);

    Tensor w;  // out x in
    Tensor b;  // out
    Tensor gw, gb;

private:
    std::size_t in_, out_;
    Tensor x_;
    bool cached_ = false;
};

class Conv2dLayer : public Layer {
public:
    /// same_pad pads so a stride-1 convolution preserves spatial size
    /// (asymmetric when the kernel side is even).
    Conv2dLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                bool same_pad = true, std::size_t stride = 1);

    std::string kind() const override { return "conv2d"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;
    std::vector<ParamRef> params() override;
    std::vector<double> meta() const override;

    void init(Rng& rng);

    Tensor w;  // out_ch x in_ch x kh x kw
    Tensor b;  // out_ch
    Tensor gw, gb;

private:
    std::size_t in_ch_, out_ch_, kh_, kw_, stride_;
    bool same_pad_;
    std::size_t pad_top_ = 0, pad_left_ = 0;
    Tensor x_;
    bool cached_ = false;
};

/// Parallel convolution branches with different kernel sizes over the same
/// input; outputs are concatenated along the channel axis.
class MultiscaleConvLayer : public Layer {
public:
    MultiscaleConvLayer(std::size_t in_ch, std::size_t branch_ch,
                        std::vector<std::size_t> kernel_sizes = {3, 4, 5});

    std::string kind() const override { return "multiscale-conv"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;
    std::vector<ParamRef> params() override;
    std::vector<double> meta() const override;

    void init(Rng& rng);

private:
    std::size_t in_ch_, branch_ch_;
    std::vector<std::size_t> kernel_sizes_;
    std::vector<std::unique_ptr<Conv2dLayer>> branches_;
    bool cached_ = false;
};

class ReluLayer : public Layer {
public:
    std::string kind() const override { return "relu"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;

private:
    Tensor x_;
    bool cached_ = false;
};

class LeakyReluLayer : public Layer {
public:
    explicit LeakyReluLayer(double alpha = 0.2) : alpha_(alpha) {}

    std::string kind() const override { return "leaky-relu"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;
    std::vector<double> meta() const override { return {alpha_}; }

private:
    double alpha_;
    Tensor x_;
    bool cached_ = false;
};

class SigmoidLayer : public Layer {
public:
    std::string kind() const override { return "sigmoid"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;

private:
    Tensor y_;
    bool cached_ = false;
};

class SoftmaxLayer : public Layer {
public:
    std::string kind() const override { return "softmax"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;

private:
    Tensor y_;
    bool cached_ = false;
};

class FlattenLayer : public Layer {
public:
    std::string kind() const override { return "flatten"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;

private:
    std::vector<std::size_t> in_shape_;
    bool cached_ = false;
};

class MaxPoolLayer : public Layer {
public:
    explicit MaxPoolLayer(std::size_t ph = 2, std::size_t pw = 2);

    std::string kind() const override { return "maxpool"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;
    std::vector<double> meta() const override;

private:
    std::size_t ph_, pw_;
    std::vector<std::size_t> in_shape_;
    std::vector<std::size_t> argmax_;
    bool cached_ = false;
};

/// Gaussian RBF layer: h_j = exp(-|f - v_j|^2 / (2 sigma_j^2)),
/// out_i = c0_i + sum_j C_ji h_j. Centers and widths are trainable.
class RbfLayer : public Layer {
public:
    RbfLayer(std::size_t dim, std::size_t hidden, std::size_t out);

    std::string kind() const override { return "rbf"; }
    Tensor forward(const Tensor& x) override;
    Tensor backward(const Tensor& gy) override;
    std::vector<ParamRef> params() override;
    std::vector<double> meta() const override;

    /// Sample centers from training feature vectors; widths start at the
    /// mean pairwise center distance.
    void init_from_features(const std::vector<Tensor>& features, Rng& rng);

    Tensor centers;  // hidden x dim
    Tensor widths;   // hidden, all > 0
    Tensor weights;  // hidden x out
    Tensor bias;     // out
    Tensor gcenters, gwidths, gweights, gbias;

private:
    std::size_t dim_, hidden_, out_;
    Tensor x_, h_;
    bool cached_ = false;
};

/// Rounds through single precision so freshly initialized parameters are
/// exactly representable in checkpoint payloads.
inline double f32_exact(double x) { return static_cast<double>(static_cast<float>(x)); }

}  // namespace demcl
