#include "trimnet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>

#include "trimnet/errors.hpp"

namespace trimnet {

namespace {

// pre[B, m] = X[B, n] * W^T + bias. Runs off a transposed copy of W so the
// inner loop is a contiguous axpy.
void dense_forward_kernel(const Tensor& X, const Tensor& W, const Tensor& bias, Tensor& pre) {
    const std::size_t B = X.dim(0), n = X.dim(1), m = W.dim(0);
    std::vector<double> wt(n * m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < n; ++k) wt[k * m + i] = W.data()[i * n + k];
    for (std::size_t b = 0; b < B; ++b) {
        const double* x = X.data() + b * n;
        double* y = pre.data() + b * m;
        std::memcpy(y, bias.data(), m * sizeof(double));
        for (std::size_t k = 0; k < n; ++k) {
            const double xv = x[k];
            const double* w = wt.data() + k * m;
            for (std::size_t i = 0; i < m; ++i) y[i] += xv * w[i];
        }
    }
}

// dW[m, n] = dZ[B, m]^T * X[B, n]; db[m] = column sums of dZ.
void dense_param_grads(const Tensor& dZ, const Tensor& X, Tensor& dW, Tensor& db) {
    const std::size_t B = X.dim(0), n = X.dim(1), m = dW.dim(0);
    for (std::size_t i = 0; i < m; ++i) {
        double* dwi = dW.data() + i * n;
        double dbi = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double g = dZ.data()[b * m + i];
            dbi += g;
            const double* x = X.data() + b * n;
            for (std::size_t k = 0; k < n; ++k) dwi[k] += g * x[k];
        }
        db.data()[i] = dbi;
    }
}

// dX[B, n] = dZ[B, m] * W[m, n].
void dense_input_grads(const Tensor& dZ, const Tensor& W, Tensor& dX) {
    const std::size_t B = dZ.dim(0), m = dZ.dim(1), n = W.dim(1);
    for (std::size_t b = 0; b < B; ++b) {
        double* dx = dX.data() + b * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double g = dZ.data()[b * m + i];
            if (g == 0.0) continue;
            const double* w = W.data() + i * n;
            for (std::size_t k = 0; k < n; ++k) dx[k] += g * w[k];
        }
    }
}

void apply_activation(Activation a, const Tensor& pre, Tensor& post) {
    switch (a) {
        case Activation::identity:
            post = pre;
            return;
        case Activation::relu: {
            post = pre;
            for (double& v : post.values()) v = v > 0.0 ? v : 0.0;
            return;
        }
        case Activation::tanh: {
            post = pre;
            for (double& v : post.values()) v = std::tanh(v);
            return;
        }
        case Activation::softmax: {
            // Rows of a [B, m] tensor; max-shifted for stability.
            post = pre;
            const std::size_t B = post.dim(0), m = post.dim(1);
            for (std::size_t b = 0; b < B; ++b) {
                double* row = post.data() + b * m;
                double mx = row[0];
                for (std::size_t i = 1; i < m; ++i) mx = std::max(mx, row[i]);
                double sum = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    row[i] = std::exp(row[i] - mx);
                    sum += row[i];
                }
                for (std::size_t i = 0; i < m; ++i) row[i] /= sum;
            }
            return;
        }
    }
}

// dPost -> dPre in place, given the layer's stored pre/post activations.
void apply_activation_grad(Activation a, const Tensor& pre, const Tensor& post, Tensor& d) {
    switch (a) {
        case Activation::identity:
            return;
        case Activation::relu:
            for (std::size_t k = 0; k < d.size(); ++k)
                if (!(pre[k] > 0.0)) d[k] = 0.0;
            return;
        case Activation::tanh:
            for (std::size_t k = 0; k < d.size(); ++k) d[k] *= 1.0 - post[k] * post[k];
            return;
        case Activation::softmax:
            throw std::logic_error("softmax gradient is fused with the loss");
    }
}

Tensor conv_correlate(const Conv2dLayer& c, const Tensor& in) {
    const std::size_t B = in.dim(0), Cin = in.dim(1), H = in.dim(2), W = in.dim(3);
    const std::size_t K = c.weight.dim(0), d1 = c.weight.dim(2), d2 = c.weight.dim(3);
    const std::size_t sh = c.stride.first, sw = c.stride.second;
    const long ph = static_cast<long>(c.padding.first), pw = static_cast<long>(c.padding.second);
    const std::size_t Ho = (H + 2 * c.padding.first - d1) / sh + 1;
    const std::size_t Wo = (W + 2 * c.padding.second - d2) / sw + 1;

    Tensor out({B, K, Ho, Wo});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t y = 0; y < Ho; ++y)
                for (std::size_t x = 0; x < Wo; ++x) {
                    double s = c.bias[i];
                    for (std::size_t j = 0; j < Cin; ++j)
                        for (std::size_t u = 0; u < d1; ++u) {
                            const long iy = static_cast<long>(y * sh + u) - ph;
                            if (iy < 0 || iy >= static_cast<long>(H)) continue;
                            for (std::size_t v = 0; v < d2; ++v) {
                                const long ix = static_cast<long>(x * sw + v) - pw;
                                if (ix < 0 || ix >= static_cast<long>(W)) continue;
                                s += in.at(b, j, static_cast<std::size_t>(iy),
                                           static_cast<std::size_t>(ix)) *
                                     c.weight.at(i, j, u, v);
                            }
                        }
                    out.at(b, i, y, x) = s;
                }
    return out;
}

void conv_backward(const Conv2dLayer& c, const Tensor& in, const Tensor& dPre, Tensor& dW,
                   Tensor& db, Tensor* dIn) {
    const std::size_t B = in.dim(0), Cin = in.dim(1), H = in.dim(2), W = in.dim(3);
    const std::size_t K = c.weight.dim(0), d1 = c.weight.dim(2), d2 = c.weight.dim(3);
    const std::size_t sh = c.stride.first, sw = c.stride.second;
    const long ph = static_cast<long>(c.padding.first), pw = static_cast<long>(c.padding.second);
    const std::size_t Ho = dPre.dim(2), Wo = dPre.dim(3);

    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t y = 0; y < Ho; ++y)
                for (std::size_t x = 0; x < Wo; ++x) {
                    const double g = dPre.at(b, i, y, x);
                    if (g == 0.0) continue;
                    db[i] += g;
                    for (std::size_t j = 0; j < Cin; ++j)
                        for (std::size_t u = 0; u < d1; ++u) {
                            const long iy = static_cast<long>(y * sh + u) - ph;
                            if (iy < 0 || iy >= static_cast<long>(H)) continue;
                            for (std::size_t v = 0; v < d2; ++v) {
                                const long ix = static_cast<long>(x * sw + v) - pw;
                                if (ix < 0 || ix >= static_cast<long>(W)) continue;
                                const std::size_t yy = static_cast<std::size_t>(iy);
                                const std::size_t xx = static_cast<std::size_t>(ix);
                                dW.at(i, j, u, v) += g * in.at(b, j, yy, xx);
                                if (dIn) dIn->at(b, j, yy, xx) += g * c.weight.at(i, j, u, v);
                            }
                        }
                }
}

void pool_forward(const MaxPool2dLayer& p, const Tensor& in, Tensor& out,
                  std::vector<std::size_t>& argmax) {
    const std::size_t B = in.dim(0), C = in.dim(1), H = in.dim(2), W = in.dim(3);
    const std::size_t Ho = (H - p.window.first) / p.stride.first + 1;
    const std::size_t Wo = (W - p.window.second) / p.stride.second + 1;
    out = Tensor({B, C, Ho, Wo});
    argmax.assign(out.size(), 0);
    std::size_t o = 0;
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t y = 0; y < Ho; ++y)
                for (std::size_t x = 0; x < Wo; ++x, ++o) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_idx = 0;
                    for (std::size_t u = 0; u < p.window.first; ++u)
                        for (std::size_t v = 0; v < p.window.second; ++v) {
                            const std::size_t iy = y * p.stride.first + u;
                            const std::size_t ix = x * p.stride.second + v;
                            const std::size_t flat = ((b * C + c) * H + iy) * W + ix;
                            if (in[flat] > best) {  // first max wins
                                best = in[flat];
                                best_idx = flat;
                            }
                        }
                    out[o] = best;
                    argmax[o] = best_idx;
                }
}

struct BatchShapes {
    std::size_t batch;
    std::vector<std::vector<std::size_t>> per_layer;  // per-sample output shapes
};

BatchShapes check_batch(const Network& net, const Tensor& batch) {
    const auto shapes = net.layer_output_shapes();
    if (batch.rank() != net.input_shape.size() + 1)
        throw ConfigError("batch rank " + std::to_string(batch.rank()) +
                          " does not match input shape " + shape_to_string(net.input_shape) +
                          " plus a batch dimension");
    for (std::size_t i = 0; i < net.input_shape.size(); ++i)
        if (batch.dim(i + 1) != net.input_shape[i])
            throw ConfigError("batch shape does not match network input shape " +
                              shape_to_string(net.input_shape));
    return {batch.dim(0), shapes};
}

std::vector<std::size_t> with_batch(std::size_t B, const std::vector<std::size_t>& s) {
    std::vector<std::size_t> r{B};
    r.insert(r.end(), s.begin(), s.end());
    return r;
}

void forward_impl(const Network& net, const Tensor& batch, Tensor& out, ForwardTrace* trace) {
    const BatchShapes bs = check_batch(net, batch);
    const std::size_t B = bs.batch;

    if (trace) {
        trace->input = batch;
        trace->pre.assign(net.layers.size(), Tensor());
        trace->post.assign(net.layers.size(), Tensor());
        trace->pool_argmax.assign(net.layers.size(), {});
    }

    Tensor cur = batch;
    for (std::size_t idx = 0; idx < net.layers.size(); ++idx) {
        const Layer& layer = net.layers[idx];
        Tensor pre, post;
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            pre = Tensor({B, d->weight.dim(0)});
            dense_forward_kernel(cur, d->weight, d->bias, pre);
            apply_activation(d->activation, pre, post);
        } else if (const auto* c = std::get_if<Conv2dLayer>(&layer)) {
            pre = conv_correlate(*c, cur);
            apply_activation(c->activation, pre, post);
        } else if (const auto* p = std::get_if<MaxPool2dLayer>(&layer)) {
            std::vector<std::size_t> argmax;
            pool_forward(*p, cur, post, argmax);
            pre = post;
            if (trace) trace->pool_argmax[idx] = std::move(argmax);
        } else {
            pre = cur.reshaped(with_batch(B, bs.per_layer[idx]));
            post = pre;
        }
        if (trace) {
            trace->pre[idx] = pre;
            trace->post[idx] = post;
        }
        cur = std::move(post);
    }
    out = std::move(cur);
}

void check_trace(const Network& net, const ForwardTrace& trace) {
    if (trace.post.size() != net.layers.size() || trace.pre.size() != net.layers.size())
        throw std::logic_error("forward trace does not match the network layer count");
    if (trace.input.rank() == 0) throw std::logic_error("forward trace has no input batch");
}

}  // namespace

std::pair<Tensor, ForwardTrace> forward(const Network& net, const Tensor& batch) {
    Tensor out;
    ForwardTrace trace;
    forward_impl(net, batch, out, &trace);
    return {std::move(out), std::move(trace)};
}

Tensor forward_outputs(const Network& net, const Tensor& batch) {
    Tensor out;
    forward_impl(net, batch, out, nullptr);
    return out;
}

Tensor conv2d_forward(const Conv2dLayer& layer, const Tensor& input) {
    if (input.rank() != 4)
        throw ConfigError("conv2d input must be [batch, channels, height, width]");
    if (input.dim(1) != layer.weight.dim(1))
        throw ConfigError("conv2d expects " + std::to_string(layer.weight.dim(1)) +
                          " input channels, got " + std::to_string(input.dim(1)));
    const std::size_t ph = input.dim(2) + 2 * layer.padding.first;
    const std::size_t pw = input.dim(3) + 2 * layer.padding.second;
    if (layer.weight.dim(2) > ph || layer.weight.dim(3) > pw)
        throw ConfigError("conv2d kernel larger than padded input");
    return conv_correlate(layer, input);
}

std::vector<int> onehot_to_labels(const Tensor& onehot) {
    if (onehot.rank() != 2) throw std::invalid_argument("one-hot labels must be 2-D");
    const std::size_t B = onehot.dim(0), C = onehot.dim(1);
    std::vector<int> labels(B);
    for (std::size_t b = 0; b < B; ++b) {
        int hit = -1;
        for (std::size_t c = 0; c < C; ++c) {
            const double v = onehot.at(b, c);
            if (v == 0.0) continue;
            if (v != 1.0 || hit >= 0)
                throw std::invalid_argument("row " + std::to_string(b) + " is not one-hot");
            hit = static_cast<int>(c);
        }
        if (hit < 0) throw std::invalid_argument("row " + std::to_string(b) + " is not one-hot");
        labels[b] = hit;
    }
    return labels;
}

double cross_entropy_loss(const Tensor& outputs, const std::vector<int>& labels) {
    if (outputs.rank() != 2) throw std::invalid_argument("outputs must be [batch, classes]");
    const std::size_t B = outputs.dim(0), C = outputs.dim(1);
    if (labels.size() != B)
        throw std::invalid_argument("label count does not match batch size");
    double total = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        double row_sum = 0.0;
        for (std::size_t c = 0; c < C; ++c) row_sum += outputs.at(b, c);
        if (std::abs(row_sum - 1.0) > 1e-9)
            throw std::invalid_argument("output row " + std::to_string(b) +
                                        " does not sum to 1 (got " + std::to_string(row_sum) +
                                        "); expected softmax probabilities");
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= C)
            throw std::invalid_argument("label " + std::to_string(y) + " out of range");
        const double p = std::max(outputs.at(b, static_cast<std::size_t>(y)), 1e-12);
        total -= std::log(p);
    }
    return total / static_cast<double>(B);
}

double cross_entropy_loss(const Tensor& outputs, const Tensor& onehot) {
    return cross_entropy_loss(outputs, onehot_to_labels(onehot));
}

ParamGradients backward(const Network& net, const ForwardTrace& trace,
                        const std::vector<int>& labels) {
    check_trace(net, trace);
    const std::size_t L = net.layers.size();
    const std::size_t B = trace.input.dim(0);
    if (labels.size() != B) throw std::logic_error("label count does not match traced batch");

    const auto* final_dense = L ? std::get_if<DenseLayer>(&net.layers[L - 1]) : nullptr;
    if (!final_dense || final_dense->activation != Activation::softmax)
        throw ConfigError(
            "cross-entropy backward requires a final dense layer with softmax activation");

    ParamGradients grads;
    grads.weight.assign(L, Tensor());
    grads.bias.assign(L, Tensor());

    // Fused softmax + cross-entropy: d(pre_L) = (probabilities - onehot) / B.
    const Tensor& probs = trace.post[L - 1];
    Tensor d = probs;
    for (std::size_t b = 0; b < B; ++b) {
        const int y = labels[b];
        if (y < 0 || static_cast<std::size_t>(y) >= probs.dim(1))
            throw std::invalid_argument("label " + std::to_string(y) + " out of range");
        d.at(b, static_cast<std::size_t>(y)) -= 1.0;
    }
    for (double& v : d.values()) v /= static_cast<double>(B);

    bool d_is_pre = true;  // d currently holds d(pre) for the layer being visited
    for (std::size_t step = 0; step < L; ++step) {
        const std::size_t idx = L - 1 - step;
        const Layer& layer = net.layers[idx];
        const Tensor& layer_input = idx ? trace.post[idx - 1] : trace.input;

        if (const auto* dl = std::get_if<DenseLayer>(&layer)) {
            if (!d_is_pre) apply_activation_grad(dl->activation, trace.pre[idx], trace.post[idx], d);
            grads.weight[idx] = Tensor(dl->weight.shape());
            grads.bias[idx] = Tensor(dl->bias.shape());
            dense_param_grads(d, layer_input, grads.weight[idx], grads.bias[idx]);
            if (idx > 0) {
                Tensor dx(layer_input.shape());
                dense_input_grads(d, dl->weight, dx);
                d = std::move(dx);
                d_is_pre = false;
            }
        } else if (const auto* cl = std::get_if<Conv2dLayer>(&layer)) {
            if (!d_is_pre) apply_activation_grad(cl->activation, trace.pre[idx], trace.post[idx], d);
            grads.weight[idx] = Tensor(cl->weight.shape());
            grads.bias[idx] = Tensor(cl->bias.shape());
            Tensor dx(layer_input.shape());
            conv_backward(*cl, layer_input, d, grads.weight[idx], grads.bias[idx],
                          idx > 0 ? &dx : nullptr);
            if (idx > 0) {
                d = std::move(dx);
                d_is_pre = false;
            }
        } else if (std::get_if<MaxPool2dLayer>(&layer)) {
            Tensor dx(layer_input.shape());
            const auto& argmax = trace.pool_argmax[idx];
            if (argmax.size() != d.size())
                throw std::logic_error("pool argmax trace does not match gradient size");
            for (std::size_t k = 0; k < d.size(); ++k) dx[argmax[k]] += d[k];
            d = std::move(dx);
            d_is_pre = false;
        } else {
            d = d.reshaped(layer_input.shape());
            d_is_pre = false;
        }
    }
    return grads;
}

ParamGradients backward(const Network& net, const ForwardTrace& trace, const Tensor& onehot) {
    return backward(net, trace, onehot_to_labels(onehot));
}

}  // namespace trimnet
