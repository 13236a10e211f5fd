#include <cmath>
#include <stdexcept>

#include "caudg/autodiff.hpp"
#include "node_factory.hpp"

namespace caudg {

using detail::make_op;

namespace {
void require_rank4(const Var& x, const char* op) {
    if (x->value.rank() != 4) {
        throw std::invalid_argument(std::string(op) + ": expected [B, C, 1, W], got " +
                                    x->value.shape_str());
    }
}
}  // namespace

Var conv1d(const Var& x, const Var& w, const Var& b, std::size_t stride) {
    require_rank4(x, "conv1d");
    require_rank4(w, "conv1d (kernel)");
    if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
    const std::size_t batch = x->value.dim(0), cin = x->value.dim(1), width = x->value.dim(3);
    const std::size_t filters = w->value.dim(0), kw = w->value.dim(3);
    if (w->value.dim(1) != cin) {
        throw std::invalid_argument("conv1d: input channels " + x->value.shape_str() +
                                    " do not match kernel " + w->value.shape_str());
    }
    if (b->value.numel() != filters) {
        throw std::invalid_argument("conv1d: bias size " + b->value.shape_str() +
                                    " does not match filters " + std::to_string(filters));
    }
    if (width < kw) {
        throw std::invalid_argument("conv1d: input width " + std::to_string(width) +
                                    " smaller than kernel " + std::to_string(kw));
    }
    const std::size_t wout = (width - kw) / stride + 1;

    Tensor out({batch, filters, 1, wout});
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t f = 0; f < filters; ++f) {
            const double bias = b->value.data[f];
            for (std::size_t o = 0; o < wout; ++o) {
                double s = bias;
                const std::size_t base = o * stride;
                for (std::size_t c = 0; c < cin; ++c) {
                    const double* xr = &x->value.data[((n * cin + c) * 1 + 0) * width + base];
                    const double* wr = &w->value.data[((f * cin + c) * 1 + 0) * kw];
                    for (std::size_t k = 0; k < kw; ++k) s += xr[k] * wr[k];
                }
                out.at4(n, f, 0, o) = s;
            }
        }
    }

    return make_op(std::move(out), {x, w, b}, [stride](Node& self) {
        const Tensor& xv = self.parents[0]->value;
        const Tensor& wv = self.parents[1]->value;
        const std::size_t batch = xv.dim(0), cin = xv.dim(1), width = xv.dim(3);
        const std::size_t filters = wv.dim(0), kw = wv.dim(3);
        const std::size_t wout = self.value.dim(3);
        const bool need_x = self.parents[0]->requires_grad;
        const bool need_w = self.parents[1]->requires_grad;
        const bool need_b = self.parents[2]->requires_grad;
        Tensor* gx = need_x ? &self.parents[0]->ensure_grad() : nullptr;
        Tensor* gw = need_w ? &self.parents[1]->ensure_grad() : nullptr;
        Tensor* gb = need_b ? &self.parents[2]->ensure_grad() : nullptr;
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t f = 0; f < filters; ++f) {
                for (std::size_t o = 0; o < wout; ++o) {
                    const double g = self.grad.at4(n, f, 0, o);
                    if (g == 0.0) continue;
                    if (gb) gb->data[f] += g;
                    const std::size_t base = o * stride;
                    for (std::size_t c = 0; c < cin; ++c) {
                        const double* xr = &xv.data[(n * cin + c) * width + base];
                        const double* wr = &wv.data[(f * cin + c) * kw];
                        double* gxr = gx ? &gx->data[(n * cin + c) * width + base] : nullptr;
                        double* gwr = gw ? &gw->data[(f * cin + c) * kw] : nullptr;
                        for (std::size_t k = 0; k < kw; ++k) {
                            if (gxr) gxr[k] += g * wr[k];
                            if (gwr) gwr[k] += g * xr[k];
                        }
                    }
                }
            }
        }
    });
}

Var maxpool1d(const Var& x, std::size_t width) {
    require_rank4(x, "maxpool1d");
    if (width < 1) throw std::invalid_argument("maxpool1d: pool width must be >= 1");
    const std::size_t batch = x->value.dim(0), ch = x->value.dim(1), win = x->value.dim(3);
    if (win < width) {
        throw std::invalid_argument("maxpool1d: input width " + std::to_string(win) +
                                    " smaller than pool width " + std::to_string(width));
    }
    const std::size_t wout = win / width;
    Tensor out({batch, ch, 1, wout});
    std::vector<std::size_t> argmax(batch * ch * wout);
    std::size_t idx = 0;
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t c = 0; c < ch; ++c) {
            const double* row = &x->value.data[(n * ch + c) * win];
            for (std::size_t o = 0; o < wout; ++o, ++idx) {
                const std::size_t base = o * width;
                double best = row[base];
                std::size_t best_k = base;
                for (std::size_t k = 1; k < width; ++k) {
                    if (row[base + k] > best) {  // ties keep the first index
                        best = row[base + k];
                        best_k = base + k;
                    }
                }
                out.at4(n, c, 0, o) = best;
                argmax[idx] = best_k;
            }
        }
    }
    return make_op(std::move(out), {x}, [argmax](Node& self) {
        const Tensor& xv = self.parents[0]->value;
        const std::size_t batch = xv.dim(0), ch = xv.dim(1), win = xv.dim(3);
        const std::size_t wout = self.value.dim(3);
        Tensor& gx = self.parents[0]->ensure_grad();
        std::size_t idx = 0;
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t c = 0; c < ch; ++c) {
                double* grow = &gx.data[(n * ch + c) * win];
                for (std::size_t o = 0; o < wout; ++o, ++idx) {
                    grow[argmax[idx]] += self.grad.at4(n, c, 0, o);
                }
            }
        }
    });
}

Var fully_connected(const Var& x, const Var& w, const Var& b) {
    if (x->value.rank() != 2 || w->value.rank() != 2) {
        throw std::invalid_argument("fully_connected: expected rank-2 input and weight, got " +
                                    x->value.shape_str() + " and " + w->value.shape_str());
    }
    const std::size_t batch = x->value.dim(0), din = x->value.dim(1);
    const std::size_t dout = w->value.dim(0);
    if (w->value.dim(1) != din) {
        throw std::invalid_argument("fully_connected: input dim " + x->value.shape_str() +
                                    " does not match weight " + w->value.shape_str());
    }
    if (b->value.numel() != dout) {
        throw std::invalid_argument("fully_connected: bias " + b->value.shape_str() +
                                    " does not match output dim " + std::to_string(dout));
    }
    Tensor out({batch, dout});
    for (std::size_t n = 0; n < batch; ++n) {
        const double* xr = &x->value.data[n * din];
        for (std::size_t o = 0; o < dout; ++o) {
            const double* wr = &w->value.data[o * din];
            double s = b->value.data[o];
            for (std::size_t i = 0; i < din; ++i) s += xr[i] * wr[i];
            out.at(n, o) = s;
        }
    }
    return make_op(std::move(out), {x, w, b}, [](Node& self) {
        const Tensor& xv = self.parents[0]->value;
        const Tensor& wv = self.parents[1]->value;
        const std::size_t batch = xv.dim(0), din = xv.dim(1), dout = wv.dim(0);
        const bool need_x = self.parents[0]->requires_grad;
        const bool need_w = self.parents[1]->requires_grad;
        const bool need_b = self.parents[2]->requires_grad;
        Tensor* gx = need_x ? &self.parents[0]->ensure_grad() : nullptr;
        Tensor* gw = need_w ? &self.parents[1]->ensure_grad() : nullptr;
        Tensor* gb = need_b ? &self.parents[2]->ensure_grad() : nullptr;
        for (std::size_t n = 0; n < batch; ++n) {
            const double* xr = &xv.data[n * din];
            double* gxr = gx ? &gx->data[n * din] : nullptr;
            for (std::size_t o = 0; o < dout; ++o) {
                const double g = self.grad.at(n, o);
                if (g == 0.0) continue;
                if (gb) gb->data[o] += g;
                const double* wr = &wv.data[o * din];
                double* gwr = gw ? &gw->data[o * din] : nullptr;
                for (std::size_t i = 0; i < din; ++i) {
                    if (gxr) gxr[i] += g * wr[i];
                    if (gwr) gwr[i] += g * xr[i];
                }
            }
        }
    });
}

Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
               Tensor& running_var, bool train) {
    if (x->value.rank() != 2) {
        throw std::invalid_argument("batch_norm: expected [B, D], got " + x->value.shape_str());
    }
    const std::size_t batch = x->value.dim(0), dim = x->value.dim(1);
    if (gamma->value.numel() != dim || beta->value.numel() != dim ||
        running_mean.numel() != dim || running_var.numel() != dim) {
        throw std::invalid_argument("batch_norm: parameter size does not match feature dim " +
                                    std::to_string(dim));
    }
    constexpr double kRidge = 1e-5;
    constexpr double kMomentum = 0.1;

    std::vector<double> mean(dim), inv_sd(dim);
    if (train) {
        if (batch < 2) {
            throw std::invalid_argument(
                "batch_norm: train mode needs batch size >= 2 (variance is degenerate)");
        }
        for (std::size_t d = 0; d < dim; ++d) {
            double m = 0.0;
            for (std::size_t n = 0; n < batch; ++n) m += x->value.at(n, d);
            m /= static_cast<double>(batch);
            double v = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                const double diff = x->value.at(n, d) - m;
                v += diff * diff;
            }
            v /= static_cast<double>(batch);
            mean[d] = m;
            inv_sd[d] = 1.0 / std::sqrt(v + kRidge);
            running_mean.data[d] = (1.0 - kMomentum) * running_mean.data[d] + kMomentum * m;
            running_var.data[d] = (1.0 - kMomentum) * running_var.data[d] + kMomentum * v;
        }
    } else {
        for (std::size_t d = 0; d < dim; ++d) {
            mean[d] = running_mean.data[d];
            inv_sd[d] = 1.0 / std::sqrt(running_var.data[d] + kRidge);
        }
    }

    Tensor xhat({batch, dim});
    Tensor out({batch, dim});
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t d = 0; d < dim; ++d) {
            const double h = (x->value.at(n, d) - mean[d]) * inv_sd[d];
            xhat.at(n, d) = h;
            out.at(n, d) = gamma->value.data[d] * h + beta->value.data[d];
        }
    }

    return make_op(std::move(out), {x, gamma, beta}, [xhat, inv_sd, train](Node& self) {
        const std::size_t batch = xhat.dim(0), dim = xhat.dim(1);
        const Tensor& gv = self.parents[1]->value;
        Tensor* gx = self.parents[0]->requires_grad ? &self.parents[0]->ensure_grad() : nullptr;
        Tensor* gg = self.parents[1]->requires_grad ? &self.parents[1]->ensure_grad() : nullptr;
        Tensor* gb = self.parents[2]->requires_grad ? &self.parents[2]->ensure_grad() : nullptr;
        for (std::size_t d = 0; d < dim; ++d) {
            double sum_g = 0.0, sum_gh = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                const double g = self.grad.at(n, d);
                sum_g += g;
                sum_gh += g * xhat.at(n, d);
            }
            if (gg) gg->data[d] += sum_gh;
            if (gb) gb->data[d] += sum_g;
            if (!gx) continue;
            const double scale = gv.data[d] * inv_sd[d];
            if (train) {
                const double inv_n = 1.0 / static_cast<double>(batch);
                for (std::size_t n = 0; n < batch; ++n) {
                    const double g = self.grad.at(n, d);
                    gx->at(n, d) +=
                        scale * (g - inv_n * sum_g - inv_n * xhat.at(n, d) * sum_gh);
                }
            } else {
                for (std::size_t n = 0; n < batch; ++n) {
                    gx->at(n, d) += scale * self.grad.at(n, d);
                }
            }
        }
    });
}

Var relu(const Var& x) {
    Tensor out = x->value;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return make_op(std::move(out), {x}, [](Node& self) {
        const Tensor& xv = self.parents[0]->value;
        Tensor& gx = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < gx.numel(); ++i) {
            if (xv.data[i] > 0.0) gx.data[i] += self.grad.data[i];
        }
    });
}

Var softmax_cross_entropy(const Var& logits, const std::vector<int>& labels) {
    if (logits->value.rank() != 2) {
        throw std::invalid_argument("softmax_cross_entropy: expected [B, K], got " +
                                    logits->value.shape_str());
    }
    const std::size_t batch = logits->value.dim(0), classes = logits->value.dim(1);
    if (labels.size() != batch) {
        throw std::invalid_argument("softmax_cross_entropy: label count " +
                                    std::to_string(labels.size()) + " != batch " +
                                    std::to_string(batch));
    }
    Tensor probs({batch, classes});
    double loss = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
        const int y = labels[n];
        if (y < 0 || static_cast<std::size_t>(y) >= classes) {
            throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(y) +
                                        " out of range [0, " + std::to_string(classes) + ")");
        }
        double mx = logits->value.at(n, 0);
        for (std::size_t k = 1; k < classes; ++k) mx = std::max(mx, logits->value.at(n, k));
        double z = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            const double e = std::exp(logits->value.at(n, k) - mx);
            probs.at(n, k) = e;
            z += e;
        }
        for (std::size_t k = 0; k < classes; ++k) probs.at(n, k) /= z;
        loss += std::log(z) - (logits->value.at(n, static_cast<std::size_t>(y)) - mx);
    }
    loss /= static_cast<double>(batch);

    return make_op(Tensor::scalar(loss), {logits}, [probs, labels](Node& self) {
        const std::size_t batch = probs.dim(0), classes = probs.dim(1);
        const double g = self.grad.data[0] / static_cast<double>(batch);
        Tensor& gx = self.parents[0]->ensure_grad();
        for (std::size_t n = 0; n < batch; ++n) {
            for (std::size_t k = 0; k < classes; ++k) {
                const double onehot = (static_cast<std::size_t>(labels[n]) == k) ? 1.0 : 0.0;
                gx.at(n, k) += g * (probs.at(n, k) - onehot);
            }
        }
    });
}

Var flatten(const Var& x) {
    require_rank4(x, "flatten");
    const std::size_t batch = x->value.dim(0);
    const std::size_t feat = x->value.dim(1) * x->value.dim(2) * x->value.dim(3);
    Tensor out({batch, feat}, x->value.data);
    return make_op(std::move(out), {x}, [](Node& self) {
        Tensor& gx = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += self.grad.data[i];
    });
}

}  // namespace caudg
