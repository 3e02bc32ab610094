#include "demcl/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace demcl {

std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream ss;
    ss << "(";
    for (std::size_t i = 0; i < s.size(); ++i) ss << (i ? "," : "") << s[i];
    ss << ")";
    return ss.str();
}

void Layer::require_cache(bool have) const {
    if (!have)
        throw std::runtime_error(name_ + ": backward called without a cached forward pass");
}

void Layer::shape_error(const Tensor& x, const std::string& expected) const {
    throw std::invalid_argument(name_ + ": expected input " + expected + ", got " +
                                shape_str(x.shape));
}

namespace {

void fan_in_init(Tensor& t, std::size_t fan_in, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (auto& x : t.values) x = f32_exact(rng.uniform(-bound, bound));
}

}  // namespace

// ---------------------------------------------------------------- Dense

DenseLayer::DenseLayer(std::size_t in, std::size_t out)
    : w({out, in}), b({out}), gw({out, in}), gb({out}), in_(in), out_(out) {}

void DenseLayer::init(Rng& rng) {
    fan_in_init(w, in_, rng);
    b.fill(0.0);
}

Tensor DenseLayer::forward(const Tensor& x) {
    if (x.size() != in_) shape_error(x, "(" + std::to_string(in_) + ")");
    x_ = x;
    cached_ = true;
    Tensor y({out_});
    for (std::size_t o = 0; o < out_; ++o) {
        double acc = b[o];
        const double* wrow = &w.values[o * in_];
        for (std::size_t i = 0; i < in_; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
    return y;
}

Tensor DenseLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    if (gy.size() != out_) shape_error(gy, "(" + std::to_string(out_) + ")");
    Tensor gx({in_});
    for (std::size_t o = 0; o < out_; ++o) {
        double g = gy[o];
        gb[o] += g;
        double* gwrow = &gw.values[o * in_];
        const double* wrow = &w.values[o * in_];
        for (std::size_t i = 0; i < in_; ++i) {
            gwrow[i] += g * x_[i];
            gx[i] += wrow[i] * g;
        }
    }
    return gx;
}

std::vector<ParamRef> DenseLayer::params() {
    return {{name_ + "/W", &w, &gw}, {name_ + "/b", &b, &gb}};
}

std::vector<double> DenseLayer::meta() const {
    return {static_cast<double>(in_), static_cast<double>(out_)};
}

// ---------------------------------------------------------------- Conv2d

Conv2dLayer::Conv2dLayer(std::size_t in_ch, std::size_t out_ch, std::size_t kh, std::size_t kw,
                         bool same_pad, std::size_t stride)
    : w({out_ch, in_ch, kh, kw}),
      b({out_ch}),
      gw({out_ch, in_ch, kh, kw}),
      gb({out_ch}),
      in_ch_(in_ch),
      out_ch_(out_ch),
      kh_(kh),
      kw_(kw),
      stride_(stride),
      same_pad_(same_pad) {
    if (stride == 0) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (same_pad_) {
        pad_top_ = (kh_ - 1) / 2;
        pad_left_ = (kw_ - 1) / 2;
    }
}

void Conv2dLayer::init(Rng& rng) {
    fan_in_init(w, in_ch_ * kh_ * kw_, rng);
    b.fill(0.0);
}

Tensor Conv2dLayer::forward(const Tensor& x) {
    if (x.rank() != 3 || x.shape[0] != in_ch_)
        shape_error(x, "(" + std::to_string(in_ch_) + ",H,W)");
    const std::size_t h = x.shape[1], wd = x.shape[2];
    const std::size_t pad_bottom = same_pad_ ? kh_ - 1 - pad_top_ : 0;
    const std::size_t pad_right = same_pad_ ? kw_ - 1 - pad_left_ : 0;
    if (h + pad_top_ + pad_bottom < kh_ || wd + pad_left_ + pad_right < kw_)
        shape_error(x, "grid at least as large as the kernel");
    const std::size_t oh = (h + pad_top_ + pad_bottom - kh_) / stride_ + 1;
    const std::size_t ow = (wd + pad_left_ + pad_right - kw_) / stride_ + 1;
    x_ = x;
    cached_ = true;

    Tensor y({out_ch_, oh, ow});
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
        double* yplane = &y.values[oc * oh * ow];
        std::fill(yplane, yplane + oh * ow, b[oc]);
        for (std::size_t ic = 0; ic < in_ch_; ++ic) {
            const double* xplane = &x.values[ic * h * wd];
            for (std::size_t ky = 0; ky < kh_; ++ky) {
                for (std::size_t kx = 0; kx < kw_; ++kx) {
                    const double wv = w.values[((oc * in_ch_ + ic) * kh_ + ky) * kw_ + kx];
                    if (wv == 0.0) continue;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                                                  static_cast<std::ptrdiff_t>(pad_top_);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* xrow = xplane + static_cast<std::size_t>(iy) * wd;
                        double* yrow = yplane + oy * ow;
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                                static_cast<std::ptrdiff_t>(pad_left_);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                            yrow[ox] += wv * xrow[static_cast<std::size_t>(ix)];
                        }
                    }
                }
            }
        }
    }
    return y;
}

Tensor Conv2dLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    const std::size_t h = x_.shape[1], wd = x_.shape[2];
    const std::size_t oh = gy.shape[1], ow = gy.shape[2];
    if (gy.rank() != 3 || gy.shape[0] != out_ch_)
        shape_error(gy, "(" + std::to_string(out_ch_) + ",OH,OW)");

    Tensor gx(x_.shape);
    for (std::size_t oc = 0; oc < out_ch_; ++oc) {
        const double* gplane = &gy.values[oc * oh * ow];
        double acc = 0.0;
        for (std::size_t i = 0; i < oh * ow; ++i) acc += gplane[i];
        gb[oc] += acc;
        for (std::size_t ic = 0; ic < in_ch_; ++ic) {
            const double* xplane = &x_.values[ic * h * wd];
            double* gxplane = &gx.values[ic * h * wd];
            for (std::size_t ky = 0; ky < kh_; ++ky) {
                for (std::size_t kx = 0; kx < kw_; ++kx) {
                    const std::size_t widx = ((oc * in_ch_ + ic) * kh_ + ky) * kw_ + kx;
                    const double wv = w.values[widx];
                    double gwacc = 0.0;
                    for (std::size_t oy = 0; oy < oh; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride_ + ky) -
                                                  static_cast<std::ptrdiff_t>(pad_top_);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                        const double* xrow = xplane + static_cast<std::size_t>(iy) * wd;
                        double* gxrow = gxplane + static_cast<std::size_t>(iy) * wd;
                        const double* grow = gplane + oy * ow;
                        for (std::size_t ox = 0; ox < ow; ++ox) {
                            const std::ptrdiff_t ix =
                                static_cast<std::ptrdiff_t>(ox * stride_ + kx) -
                                static_cast<std::ptrdiff_t>(pad_left_);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(wd)) continue;
                            const double g = grow[ox];
                            gwacc += g * xrow[static_cast<std::size_t>(ix)];
                            gxrow[static_cast<std::size_t>(ix)] += wv * g;
                        }
                    }
                    gw.values[widx] += gwacc;
                }
            }
        }
    }
    return gx;
}

std::vector<ParamRef> Conv2dLayer::params() {
    return {{name_ + "/W", &w, &gw}, {name_ + "/b", &b, &gb}};
}

std::vector<double> Conv2dLayer::meta() const {
    return {static_cast<double>(in_ch_), static_cast<double>(out_ch_),
            static_cast<double>(kh_),    static_cast<double>(kw_),
            same_pad_ ? 1.0 : 0.0,       static_cast<double>(stride_)};
}

// ------------------------------------------------------- MultiscaleConv

MultiscaleConvLayer::MultiscaleConvLayer(std::size_t in_ch, std::size_t branch_ch,
                                         std::vector<std::size_t> kernel_sizes)
    : in_ch_(in_ch), branch_ch_(branch_ch), kernel_sizes_(std::move(kernel_sizes)) {
    if (kernel_sizes_.empty())
        throw std::invalid_argument("multiscale-conv: needs at least one branch");
    for (std::size_t ks : kernel_sizes_)
        branches_.push_back(std::make_unique<Conv2dLayer>(in_ch, branch_ch, ks, ks, true, 1));
}

void MultiscaleConvLayer::init(Rng& rng) {
    for (auto& br : branches_) br->init(rng);
}

Tensor MultiscaleConvLayer::forward(const Tensor& x) {
    if (x.rank() != 3 || x.shape[0] != in_ch_)
        shape_error(x, "(" + std::to_string(in_ch_) + ",H,W)");
    for (std::size_t i = 0; i < branches_.size(); ++i)
        branches_[i]->set_name(name_ + ".k" + std::to_string(kernel_sizes_[i]));
    std::vector<Tensor> outs;
    outs.reserve(branches_.size());
    for (auto& br : branches_) outs.push_back(br->forward(x));
    const std::size_t h = outs[0].shape[1], wd = outs[0].shape[2];
    Tensor y({branch_ch_ * branches_.size(), h, wd});
    double* dst = y.values.data();
    for (const auto& o : outs) {
        std::copy(o.values.begin(), o.values.end(), dst);
        dst += o.values.size();
    }
    cached_ = true;
    return y;
}

Tensor MultiscaleConvLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    const std::size_t plane = gy.shape[1] * gy.shape[2];
    Tensor gx;
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        Tensor gpart({branch_ch_, gy.shape[1], gy.shape[2]});
        std::copy(gy.values.begin() + static_cast<std::ptrdiff_t>(i * branch_ch_ * plane),
                  gy.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * branch_ch_ * plane),
                  gpart.values.begin());
        Tensor g = branches_[i]->backward(gpart);
        if (i == 0) {
            gx = std::move(g);
        } else {
            for (std::size_t j = 0; j < gx.size(); ++j) gx[j] += g[j];
        }
    }
    return gx;
}

std::vector<ParamRef> MultiscaleConvLayer::params() {
    std::vector<ParamRef> ps;
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        std::string prefix = name_ + ".k" + std::to_string(kernel_sizes_[i]);
        ps.push_back({prefix + "/W", &branches_[i]->w, &branches_[i]->gw});
        ps.push_back({prefix + "/b", &branches_[i]->b, &branches_[i]->gb});
    }
    return ps;
}

std::vector<double> MultiscaleConvLayer::meta() const {
    std::vector<double> m = {static_cast<double>(in_ch_), static_cast<double>(branch_ch_)};
    for (std::size_t ks : kernel_sizes_) m.push_back(static_cast<double>(ks));
    return m;
}

// ----------------------------------------------------------- Activations

Tensor ReluLayer::forward(const Tensor& x) {
    x_ = x;
    cached_ = true;
    Tensor y = x;
    for (auto& v : y.values) v = v > 0.0 ? v : 0.0;
    return y;
}

Tensor ReluLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    Tensor gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
        if (x_[i] <= 0.0) gx[i] = 0.0;
    return gx;
}

Tensor LeakyReluLayer::forward(const Tensor& x) {
    x_ = x;
    cached_ = true;
    Tensor y = x;
    for (auto& v : y.values)
        if (v < 0.0) v *= alpha_;
    return y;
}

Tensor LeakyReluLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    Tensor gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i)
        if (x_[i] < 0.0) gx[i] *= alpha_;
    return gx;
}

Tensor SigmoidLayer::forward(const Tensor& x) {
    Tensor y = x;
    for (auto& v : y.values) v = 1.0 / (1.0 + std::exp(-v));
    y_ = y;
    cached_ = true;
    return y;
}

Tensor SigmoidLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    Tensor gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= y_[i] * (1.0 - y_[i]);
    return gx;
}

Tensor SoftmaxLayer::forward(const Tensor& x) {
    Tensor y = x;
    double mx = *std::max_element(y.values.begin(), y.values.end());
    double sum = 0.0;
    for (auto& v : y.values) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : y.values) v /= sum;
    y_ = y;
    cached_ = true;
    return y;
}

Tensor SoftmaxLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    double dot = 0.0;
    for (std::size_t i = 0; i < gy.size(); ++i) dot += gy[i] * y_[i];
    Tensor gx = gy;
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] = y_[i] * (gy[i] - dot);
    return gx;
}

// -------------------------------------------------------- Flatten / Pool

Tensor FlattenLayer::forward(const Tensor& x) {
    in_shape_ = x.shape;
    cached_ = true;
    return Tensor({x.size()}, x.values);
}

Tensor FlattenLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    return Tensor(in_shape_, gy.values);
}

MaxPoolLayer::MaxPoolLayer(std::size_t ph, std::size_t pw) : ph_(ph), pw_(pw) {
    if (ph == 0 || pw == 0) throw std::invalid_argument("maxpool: pool size must be >= 1");
}

Tensor MaxPoolLayer::forward(const Tensor& x) {
    if (x.rank() != 3) shape_error(x, "(C,H,W)");
    const std::size_t c = x.shape[0], h = x.shape[1], wd = x.shape[2];
    const std::size_t oh = h / ph_, ow = wd / pw_;
    if (oh == 0 || ow == 0) shape_error(x, "grid at least one pool window");
    in_shape_ = x.shape;
    Tensor y({c, oh, ow});
    argmax_.assign(c * oh * ow, 0);
    for (std::size_t ci = 0; ci < c; ++ci) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = (ci * h + oy * ph_) * wd + ox * pw_;
                double bv = x.values[best];
                for (std::size_t dy = 0; dy < ph_; ++dy)
                    for (std::size_t dx = 0; dx < pw_; ++dx) {
                        std::size_t idx = (ci * h + oy * ph_ + dy) * wd + ox * pw_ + dx;
                        if (x.values[idx] > bv) {
                            bv = x.values[idx];
                            best = idx;
                        }
                    }
                y.at3(ci, oy, ox) = bv;
                argmax_[(ci * oh + oy) * ow + ox] = best;
            }
        }
    }
    cached_ = true;
    return y;
}

Tensor MaxPoolLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    Tensor gx(in_shape_);
    for (std::size_t i = 0; i < gy.size(); ++i) gx.values[argmax_[i]] += gy.values[i];
    return gx;
}

std::vector<double> MaxPoolLayer::meta() const {
    return {static_cast<double>(ph_), static_cast<double>(pw_)};
}

// ------------------------------------------------------------------ RBF

RbfLayer::RbfLayer(std::size_t dim, std::size_t hidden, std::size_t out)
    : centers({hidden, dim}),
      widths({hidden}),
      weights({hidden, out}),
      bias({out}),
      gcenters({hidden, dim}),
      gwidths({hidden}),
      gweights({hidden, out}),
      gbias({out}),
      dim_(dim),
      hidden_(hidden),
      out_(out) {
    widths.fill(1.0);
}

void RbfLayer::init_from_features(const std::vector<Tensor>& features, Rng& rng) {
    if (features.empty()) throw std::invalid_argument("rbf: no feature vectors to sample");
    for (std::size_t j = 0; j < hidden_; ++j) {
        const Tensor& f = features[rng.index(features.size())];
        if (f.size() != dim_) throw std::invalid_argument("rbf: feature dimension mismatch");
        for (std::size_t m = 0; m < dim_; ++m)
            centers.values[j * dim_ + m] = f32_exact(f[m]);
    }
    // mean pairwise center distance; falls back to 1 when centers coincide
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < hidden_; ++a)
        for (std::size_t bidx = a + 1; bidx < hidden_; ++bidx) {
            double d2 = 0.0;
            for (std::size_t m = 0; m < dim_; ++m) {
                double diff = centers.values[a * dim_ + m] - centers.values[bidx * dim_ + m];
                d2 += diff * diff;
            }
            total += std::sqrt(d2);
            ++pairs;
        }
    double sigma = pairs > 0 ? total / static_cast<double>(pairs) : 1.0;
    if (!(sigma > 0.0)) sigma = 1.0;
    for (auto& s : widths.values) s = f32_exact(sigma);
    fan_in_init(weights, hidden_, rng);
    bias.fill(0.0);
}

Tensor RbfLayer::forward(const Tensor& x) {
    if (x.size() != dim_) shape_error(x, "(" + std::to_string(dim_) + ")");
    for (std::size_t j = 0; j < hidden_; ++j)
        if (!(widths[j] > 0.0))
            throw std::invalid_argument(name_ + ": RBF width sigma_" + std::to_string(j) +
                                        " must be positive");
    x_ = x;
    h_ = Tensor({hidden_});
    for (std::size_t j = 0; j < hidden_; ++j) {
        double d2 = 0.0;
        for (std::size_t m = 0; m < dim_; ++m) {
            double diff = x[m] - centers.values[j * dim_ + m];
            d2 += diff * diff;
        }
        h_[j] = std::exp(-d2 / (2.0 * widths[j] * widths[j]));
    }
    cached_ = true;
    Tensor y({out_});
    for (std::size_t i = 0; i < out_; ++i) {
        double acc = bias[i];
        for (std::size_t j = 0; j < hidden_; ++j) acc += weights.values[j * out_ + i] * h_[j];
        y[i] = acc;
    }
    return y;
}

Tensor RbfLayer::backward(const Tensor& gy) {
    require_cache(cached_);
    if (gy.size() != out_) shape_error(gy, "(" + std::to_string(out_) + ")");
    Tensor gx({dim_});
    for (std::size_t i = 0; i < out_; ++i) gbias[i] += gy[i];
    for (std::size_t j = 0; j < hidden_; ++j) {
        double dh = 0.0;
        for (std::size_t i = 0; i < out_; ++i) {
            gweights.values[j * out_ + i] += h_[j] * gy[i];
            dh += weights.values[j * out_ + i] * gy[i];
        }
        const double sj = widths[j];
        double d2 = 0.0;
        const double coef = dh * h_[j] / (sj * sj);
        for (std::size_t m = 0; m < dim_; ++m) {
            double diff = x_[m] - centers.values[j * dim_ + m];
            d2 += diff * diff;
            gcenters.values[j * dim_ + m] += coef * diff;
            gx[m] -= coef * diff;
        }
        gwidths[j] += dh * h_[j] * d2 / (sj * sj * sj);
    }
    return gx;
}

std::vector<ParamRef> RbfLayer::params() {
    return {{name_ + "/V", &centers, &gcenters},
            {name_ + "/sigma", &widths, &gwidths},
            {name_ + "/C", &weights, &gweights},
            {name_ + "/c0", &bias, &gbias}};
}

std::vector<double> RbfLayer::meta() const {
    return {static_cast<double>(dim_), static_cast<double>(hidden_), static_cast<double>(out_)};
}

}  // namespace demcl
