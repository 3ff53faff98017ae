#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rng.hpp"

// Lets the compiler reassociate the dot-product and axpy reductions in the
// layer kernels so they vectorize; everything outside these kernels keeps
// strict IEEE semantics.
#if defined(__GNUC__) && !defined(__clang__)
#define RISORCH_KERNEL __attribute__((optimize("fast-math")))
#else
#define RISORCH_KERNEL
#endif

namespace risorch {

enum class LayerKind { conv1d, maxpool1d, dense, relu, dropout, flatten };

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    std::size_t filters = 0;       // conv1d
    std::size_t kernel_width = 0;  // conv1d
    std::size_t patch_width = 0;   // maxpool1d (stride = patch width)
    std::size_t units = 0;         // dense
    double probability = 0.0;      // dropout

    static LayerSpec conv(std::size_t filters, std::size_t kernel_width) {
        LayerSpec s;
        s.kind = LayerKind::conv1d;
        s.filters = filters;
        s.kernel_width = kernel_width;
        return s;
    }
    static LayerSpec maxpool(std::size_t patch_width) {
        LayerSpec s;
        s.kind = LayerKind::maxpool1d;
        s.patch_width = patch_width;
        return s;
    }
    static LayerSpec dense(std::size_t units) {
        LayerSpec s;
        s.kind = LayerKind::dense;
        s.units = units;
        return s;
    }
    static LayerSpec relu() {
        LayerSpec s;
        s.kind = LayerKind::relu;
        return s;
    }
    static LayerSpec dropout(double probability) {
        if (probability < 0.0 || probability >= 1.0)
            throw std::invalid_argument("dropout probability must be in [0, 1)");
        LayerSpec s;
        s.kind = LayerKind::dropout;
        s.probability = probability;
        return s;
    }
    static LayerSpec flatten() {
        LayerSpec s;
        s.kind = LayerKind::flatten;
        return s;
    }
};

// Feed-forward network over the listed layer kinds. Activations are stored
// per sample in position-major interleaved layout (entry l*C + c is channel c
// at position l), so every stride-1 convolution window is a contiguous slice
// and the whole engine reduces to dot products and axpy updates. Batches are
// stored sample-contiguous.
template <class Real>
class Network {
  public:
    Network(std::vector<LayerSpec> specs, std::size_t input_dim, std::uint64_t seed)
        : specs_(std::move(specs)), input_dim_(input_dim), rng_(seed) {
        if (input_dim_ < 1) throw std::invalid_argument("input dimension must be >= 1");
        const std::size_t n = specs_.size();
        in_len_.resize(n);
        in_ch_.resize(n);
        out_len_.resize(n);
        out_ch_.resize(n);
        w_off_.assign(n, 0);
        b_off_.assign(n, 0);
        std::size_t len = input_dim_, ch = 1, params = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const LayerSpec& s = specs_[i];
            in_len_[i] = len;
            in_ch_[i] = ch;
            switch (s.kind) {
                case LayerKind::conv1d:
                    if (s.filters < 1 || s.kernel_width < 1)
                        throw std::invalid_argument("conv1d needs filters and kernel width >= 1");
                    if (len < s.kernel_width)
                        throw std::invalid_argument("input too short for convolution kernel");
                    w_off_[i] = params;
                    params += s.filters * s.kernel_width * ch;
                    b_off_[i] = params;
                    params += s.filters;
                    len = len - s.kernel_width + 1;
                    ch = s.filters;
                    break;
                case LayerKind::maxpool1d:
                    if (s.patch_width < 1) throw std::invalid_argument("pool patch must be >= 1");
                    if (len < s.patch_width)
                        throw std::invalid_argument("input too short for pooling patch");
                    len = len / s.patch_width;
                    break;
                case LayerKind::dense:
                    if (s.units < 1) throw std::invalid_argument("dense needs units >= 1");
                    w_off_[i] = params;
                    params += s.units * len * ch;
                    b_off_[i] = params;
                    params += s.units;
                    len = s.units;
                    ch = 1;
                    break;
                case LayerKind::flatten:
                    len = len * ch;
                    ch = 1;
                    break;
                case LayerKind::relu:
                case LayerKind::dropout:
                    break;
            }
            out_len_[i] = len;
            out_ch_[i] = ch;
        }
        output_dim_ = len * ch;
        params_.assign(params, Real(0));
        adam_m_.assign(params, Real(0));
        adam_v_.assign(params, Real(0));
        initialize_weights();
        acts_.resize(n + 1);
        pool_arg_.resize(n);
        drop_mask_.resize(n);
    }

    const std::vector<LayerSpec>& layers() const { return specs_; }
    std::size_t input_dim() const { return input_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::size_t parameter_count() const { return params_.size(); }
    std::vector<Real>& parameters() { return params_; }
    const std::vector<Real>& parameters() const { return params_; }
    std::uint64_t adam_steps() const { return adam_t_; }

    // Runs the batch forward and keeps all intermediate activations for a
    // subsequent backward pass. Input holds `batch` samples back to back.
    const std::vector<Real>& forward_batch(const std::vector<Real>& input, std::size_t batch,
                                           bool training) {
        if (input.size() != input_dim_ * batch)
            throw std::domain_error("forward: input size does not match batch");
        batch_ = batch;
        training_ = training;
        acts_[0] = input;
        for (std::size_t i = 0; i < specs_.size(); ++i) layer_forward(i);
        return acts_.back();
    }

    std::vector<Real> forward(const std::vector<Real>& input) {
        return forward_batch(input, 1, false);
    }

    // Reverse-mode gradient of a scalar loss, given its gradient with respect
    // to the network outputs for every sample in the last forward batch.
    // Returns the gradient over all parameters, summed across the batch.
    std::vector<Real> backward_batch(const std::vector<Real>& output_gradient) {
        if (batch_ == 0) throw std::logic_error("backward called without a stored forward pass");
        if (output_gradient.size() != output_dim_ * batch_)
            throw std::domain_error("backward: gradient size does not match batch");
        std::vector<Real> grad(params_.size(), Real(0));
        std::vector<Real> delta = output_gradient;
        std::vector<Real> delta_prev;
        for (std::size_t i = specs_.size(); i-- > 0;) {
            const bool need_input_grad = i > 0;
            layer_backward(i, delta, delta_prev, grad, need_input_grad);
            if (need_input_grad) delta.swap(delta_prev);
        }
        return grad;
    }

    // Plain gradient-descent update w <- w - lr * g with optional elementwise
    // gradient clipping.
    void sgd_step(const std::vector<Real>& gradient, double learning_rate, double clip_lo = 0.0,
                  double clip_hi = 0.0) {
        if (gradient.size() != params_.size())
            throw std::domain_error("sgd_step: gradient length mismatch");
        const bool clip = clip_lo < clip_hi;
        for (std::size_t i = 0; i < params_.size(); ++i) {
            double g = static_cast<double>(gradient[i]);
            if (clip) g = std::min(clip_hi, std::max(clip_lo, g));
            params_[i] -= static_cast<Real>(learning_rate * g);
        }
    }

    // Standard Adam update (beta1 0.9, beta2 0.999, eps 1e-8) with optional
    // elementwise gradient clipping applied first.
    void adam_step(const std::vector<Real>& gradient, double learning_rate, double clip_lo = 0.0,
                   double clip_hi = 0.0) {
        if (gradient.size() != params_.size())
            throw std::domain_error("adam_step: gradient length mismatch");
        const bool clip = clip_lo < clip_hi;
        ++adam_t_;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_t_));
        const double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            double g = static_cast<double>(gradient[i]);
            if (clip) g = std::min(clip_hi, std::max(clip_lo, g));
            const double m = b1 * static_cast<double>(adam_m_[i]) + (1.0 - b1) * g;
            const double v = b2 * static_cast<double>(adam_v_[i]) + (1.0 - b2) * g * g;
            adam_m_[i] = static_cast<Real>(m);
            adam_v_[i] = static_cast<Real>(v);
            params_[i] -= static_cast<Real>(learning_rate * (m / c1) /
                                            (std::sqrt(v / c2) + eps));
        }
    }

  private:
    void initialize_weights() {
        // He-style uniform fan-in initialization for conv and dense weights,
        // zero biases, drawn in layer order for reproducibility
        for (std::size_t i = 0; i < specs_.size(); ++i) {
            const LayerSpec& s = specs_[i];
            std::size_t fan_in = 0, n_weights = 0, n_bias = 0;
            if (s.kind == LayerKind::conv1d) {
                fan_in = s.kernel_width * in_ch_[i];
                n_weights = s.filters * fan_in;
                n_bias = s.filters;
            } else if (s.kind == LayerKind::dense) {
                fan_in = in_len_[i] * in_ch_[i];
                n_weights = s.units * fan_in;
                n_bias = s.units;
            } else {
                continue;
            }
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
            for (std::size_t j = 0; j < n_weights; ++j)
                params_[w_off_[i] + j] = static_cast<Real>(rng_.uniform(-limit, limit));
            for (std::size_t j = 0; j < n_bias; ++j) params_[b_off_[i] + j] = Real(0);
        }
    }

    RISORCH_KERNEL void layer_forward(std::size_t i) {
        const LayerSpec& s = specs_[i];
        const std::vector<Real>& in = acts_[i];
        std::vector<Real>& out = acts_[i + 1];
        const std::size_t in_dim = in_len_[i] * in_ch_[i];
        const std::size_t out_dim = out_len_[i] * out_ch_[i];
        out.assign(out_dim * batch_, Real(0));
        switch (s.kind) {
            case LayerKind::conv1d: {
                const std::size_t wk = s.kernel_width, c = in_ch_[i], f = s.filters;
                const std::size_t lo = out_len_[i], k = wk * c;
                const Real* wgt = params_.data() + w_off_[i];
                const Real* bias = params_.data() + b_off_[i];
                for (std::size_t sm = 0; sm < batch_; ++sm) {
                    const Real* xin = in.data() + sm * in_dim;
                    Real* xout = out.data() + sm * out_dim;
                    for (std::size_t p = 0; p < lo; ++p) {
                        const Real* window = xin + p * c;
                        Real* y = xout + p * f;
                        for (std::size_t ff = 0; ff < f; ++ff) {
                            const Real* wr = wgt + ff * k;
                            Real acc = bias[ff];
                            for (std::size_t t = 0; t < k; ++t) acc += wr[t] * window[t];
                            y[ff] = acc;
                        }
                    }
                }
                break;
            }
            case LayerKind::maxpool1d: {
                const std::size_t pw = s.patch_width, c = in_ch_[i], lo = out_len_[i];
                pool_arg_[i].assign(out_dim * batch_, 0);
                for (std::size_t sm = 0; sm < batch_; ++sm) {
                    const Real* xin = in.data() + sm * in_dim;
                    Real* xout = out.data() + sm * out_dim;
                    std::uint32_t* arg = pool_arg_[i].data() + sm * out_dim;
                    for (std::size_t p = 0; p < lo; ++p) {
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            std::size_t best = (p * pw) * c + ch;
                            Real bv = xin[best];
                            for (std::size_t t = 1; t < pw; ++t) {
                                const std::size_t idx = (p * pw + t) * c + ch;
                                if (xin[idx] > bv) {
                                    bv = xin[idx];
                                    best = idx;
                                }
                            }
                            xout[p * c + ch] = bv;
                            arg[p * c + ch] = static_cast<std::uint32_t>(best);
                        }
                    }
                }
                break;
            }
            case LayerKind::dense: {
                const std::size_t d = in_dim, u = s.units;
                const Real* wgt = params_.data() + w_off_[i];
                const Real* bias = params_.data() + b_off_[i];
                for (std::size_t sm = 0; sm < batch_; ++sm) {
                    const Real* xin = in.data() + sm * d;
                    Real* y = out.data() + sm * u;
                    for (std::size_t uu = 0; uu < u; ++uu) {
                        const Real* wr = wgt + uu * d;
                        Real acc = bias[uu];
                        for (std::size_t t = 0; t < d; ++t) acc += wr[t] * xin[t];
                        y[uu] = acc;
                    }
                }
                break;
            }
            case LayerKind::relu:
                for (std::size_t t = 0; t < out.size(); ++t)
                    out[t] = in[t] > Real(0) ? in[t] : Real(0);
                break;
            case LayerKind::dropout:
                if (training_) {
                    const double p = s.probability;
                    const Real inv = static_cast<Real>(1.0 / (1.0 - p));
                    drop_mask_[i].resize(out.size());
                    for (std::size_t t = 0; t < out.size(); ++t) {
                        const Real m = rng_.uniform() < p ? Real(0) : inv;
                        drop_mask_[i][t] = m;
                        out[t] = in[t] * m;
                    }
                } else {
                    out = in;
                }
                break;
            case LayerKind::flatten:
                out = in;
                break;
        }
    }

    RISORCH_KERNEL void layer_backward(std::size_t i, const std::vector<Real>& dout, std::vector<Real>& din,
                        std::vector<Real>& grad, bool need_input_grad) {
        const LayerSpec& s = specs_[i];
        const std::vector<Real>& in = acts_[i];
        const std::size_t in_dim = in_len_[i] * in_ch_[i];
        const std::size_t out_dim = out_len_[i] * out_ch_[i];
        if (need_input_grad) din.assign(in_dim * batch_, Real(0));
        switch (s.kind) {
            case LayerKind::conv1d: {
                const std::size_t wk = s.kernel_width, c = in_ch_[i], f = s.filters;
                const std::size_t lo = out_len_[i], k = wk * c;
                const Real* wgt = params_.data() + w_off_[i];
                Real* dw = grad.data() + w_off_[i];
                Real* db = grad.data() + b_off_[i];
                for (std::size_t sm = 0; sm < batch_; ++sm) {
                    const Real* xin = in.data() + sm * in_dim;
                    const Real* dy = dout.data() + sm * out_dim;
                    Real* dx = need_input_grad ? din.data() + sm * in_dim : nullptr;
                    for (std::size_t p = 0; p < lo; ++p) {
                        const Real* window = xin + p * c;
                        const Real* dyp = dy + p * f;
                        Real* dxp = need_input_grad ? dx + p * c : nullptr;
                        for (std::size_t ff = 0; ff < f; ++ff) {
                            const Real g = dyp[ff];
                            if (g == Real(0)) continue;
                            Real* dwr = dw + ff * k;
                            for (std::size_t t = 0; t < k; ++t) dwr[t] += g * window[t];
                            db[ff] += g;
                            if (need_input_grad) {
                                const Real* wr = wgt + ff * k;
                                for (std::size_t t = 0; t < k; ++t) dxp[t] += g * wr[t];
                            }
                        }
                    }
                }
                break;
            }
            case LayerKind::maxpool1d: {
                if (!need_input_grad) break;
                for (std::size_t sm = 0; sm < batch_; ++sm) {
                    const Real* dy = dout.data() + sm * out_dim;
                    const std::uint32_t* arg = pool_arg_[i].data() + sm * out_dim;
                    Real* dx = din.data() + sm * in_dim;
                    for (std::size_t t = 0; t < out_dim; ++t) dx[arg[t]] += dy[t];
                }
                break;
            }
            case LayerKind::dense: {
                const std::size_t d = in_dim, u = s.units;
                const Real* wgt = params_.data() + w_off_[i];
                Real* dw = grad.data() + w_off_[i];
                Real* db = grad.data() + b_off_[i];
                for (std::size_t sm = 0; sm < batch_; ++sm) {
                    const Real* xin = in.data() + sm * d;
                    const Real* dy = dout.data() + sm * u;
                    Real* dx = need_input_grad ? din.data() + sm * d : nullptr;
                    for (std::size_t uu = 0; uu < u; ++uu) {
                        const Real g = dy[uu];
                        if (g == Real(0)) continue;
                        Real* dwr = dw + uu * d;
                        for (std::size_t t = 0; t < d; ++t) dwr[t] += g * xin[t];
                        db[uu] += g;
                        if (need_input_grad) {
                            const Real* wr = wgt + uu * d;
                            for (std::size_t t = 0; t < d; ++t) dx[t] += g * wr[t];
                        }
                    }
                }
                break;
            }
            case LayerKind::relu:
                if (!need_input_grad) break;
                for (std::size_t t = 0; t < din.size(); ++t)
                    din[t] = in[t] > Real(0) ? dout[t] : Real(0);
                break;
            case LayerKind::dropout:
                if (!need_input_grad) break;
                if (training_) {
                    for (std::size_t t = 0; t < din.size(); ++t)
                        din[t] = dout[t] * drop_mask_[i][t];
                } else {
                    din = dout;
                }
                break;
            case LayerKind::flatten:
                if (need_input_grad) din = dout;
                break;
        }
    }

    std::vector<LayerSpec> specs_;
    std::size_t input_dim_;
    std::size_t output_dim_ = 0;
    std::vector<std::size_t> in_len_, in_ch_, out_len_, out_ch_;
    std::vector<std::size_t> w_off_, b_off_;
    std::vector<Real> params_, adam_m_, adam_v_;
    std::uint64_t adam_t_ = 0;
    Rng rng_;
    std::size_t batch_ = 0;
    bool training_ = false;
    std::vector<std::vector<Real>> acts_;
    std::vector<std::vector<std::uint32_t>> pool_arg_;
    std::vector<std::vector<Real>> drop_mask_;
};

// Squared error on the selected output only; all other outputs contribute
// neither loss nor gradient.
template <class Real>
Real masked_mse_loss(const std::vector<Real>& predictions, std::size_t action_index,
                     Real target) {
    if (action_index >= predictions.size())
        throw std::domain_error("masked_mse_loss: action index out of range");
    const Real d = predictions[action_index] - target;
    return d * d;
}

// Gradient seed for the masked loss over a batch: entry (sample, action)
// holds 2 (prediction - target), everything else zero.
template <class Real>
std::vector<Real> masked_mse_gradient(const std::vector<Real>& predictions,
                                      std::size_t output_dim,
                                      const std::vector<std::size_t>& action_indices,
                                      const std::vector<Real>& targets) {
    const std::size_t batch = action_indices.size();
    if (predictions.size() != output_dim * batch || targets.size() != batch)
        throw std::domain_error("masked_mse_gradient: size mismatch");
    std::vector<Real> seed(predictions.size(), Real(0));
    for (std::size_t s = 0; s < batch; ++s) {
        const std::size_t a = action_indices[s];
        if (a >= output_dim) throw std::domain_error("masked_mse_gradient: bad action index");
        seed[s * output_dim + a] = Real(2) * (predictions[s * output_dim + a] - targets[s]);
    }
    return seed;
}

struct GradientReport {
    double max_relative_error = 0.0;
    std::size_t worst_parameter = 0;
    std::size_t checked_parameters = 0;
};

// Central finite differences against the analytic gradient of the masked loss
// on one (input, action, target) sample, dropout off. Large networks are
// subsampled down to `max_checked` randomly chosen parameters.
inline GradientReport gradient_check(Network<double>& net, const std::vector<double>& input,
                                     std::size_t action_index, double target, double epsilon,
                                     std::size_t max_checked = 200,
                                     std::uint64_t sample_seed = 1) {
    auto loss = [&]() {
        const std::vector<double> out = net.forward_batch(input, 1, false);
        return masked_mse_loss(out, action_index, target);
    };
    const std::vector<double> out = net.forward_batch(input, 1, false);
    const std::vector<double> seed = masked_mse_gradient<double>(
        out, net.output_dim(), std::vector<std::size_t>{action_index},
        std::vector<double>{target});
    const std::vector<double> analytic = net.backward_batch(seed);

    std::vector<std::size_t> indices;
    const std::size_t n = net.parameter_count();
    if (n <= max_checked) {
        indices.resize(n);
        for (std::size_t i = 0; i < n; ++i) indices[i] = i;
    } else {
        Rng rng(sample_seed);
        indices.reserve(max_checked);
        for (std::size_t i = 0; i < max_checked; ++i)
            indices.push_back(static_cast<std::size_t>(rng.uniform_int(n)));
    }

    GradientReport report;
    report.checked_parameters = indices.size();
    std::vector<double>& w = net.parameters();
    for (std::size_t idx : indices) {
        const double saved = w[idx];
        w[idx] = saved + epsilon;
        const double lp = loss();
        w[idx] = saved - epsilon;
        const double lm = loss();
        w[idx] = saved;
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double a = analytic[idx];
        const double scale = std::max({std::abs(a), std::abs(numeric), 1e-3});
        const double rel = std::abs(a - numeric) / scale;
        if (rel > report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_parameter = idx;
        }
    }
    return report;
}

enum class NetworkVariant { conv, dense_only };

// The reward-prediction architecture: two conv + max-pool blocks feeding two
// 32-unit hidden layers (conv variant), or a single 32-unit hidden layer for
// small observation vectors. Dropout 0.2 everywhere except the output.
template <class Real>
Network<Real> build_reward_network(std::size_t input_dim, std::size_t output_dim,
                                   NetworkVariant variant, std::uint64_t seed,
                                   double dropout_probability = 0.2) {
    if (input_dim < 1 || output_dim < 1)
        throw std::invalid_argument("network dimensions must be >= 1");
    std::vector<LayerSpec> specs;
    if (variant == NetworkVariant::conv) {
        specs.push_back(LayerSpec::conv(64, 5));
        specs.push_back(LayerSpec::maxpool(4));
        specs.push_back(LayerSpec::dropout(dropout_probability));
        specs.push_back(LayerSpec::conv(64, 5));
        specs.push_back(LayerSpec::maxpool(4));
        specs.push_back(LayerSpec::dropout(dropout_probability));
        specs.push_back(LayerSpec::flatten());
        specs.push_back(LayerSpec::dense(32));
        specs.push_back(LayerSpec::relu());
        specs.push_back(LayerSpec::dropout(dropout_probability));
        specs.push_back(LayerSpec::dense(32));
        specs.push_back(LayerSpec::relu());
        specs.push_back(LayerSpec::dropout(dropout_probability));
        specs.push_back(LayerSpec::dense(output_dim));
    } else {
        specs.push_back(LayerSpec::dense(32));
        specs.push_back(LayerSpec::relu());
        specs.push_back(LayerSpec::dropout(dropout_probability));
        specs.push_back(LayerSpec::dense(output_dim));
    }
    return Network<Real>(std::move(specs), input_dim, seed);
}

}  // namespace risorch
