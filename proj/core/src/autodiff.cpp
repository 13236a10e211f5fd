#include "caudg/autodiff.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "node_factory.hpp"

namespace caudg {

namespace {
std::atomic<std::uint64_t> g_order_counter{1};
}  // namespace

namespace detail {
Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->order = g_order_counter.fetch_add(1);
    for (auto& p : parents) {
        if (p->requires_grad) n->requires_grad = true;
    }
    if (n->requires_grad) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}
}  // namespace detail

using detail::make_op;

Tensor& Node::ensure_grad() {
    if (!has_grad()) grad = Tensor::zeros(value.shape);
    return grad;
}

void Node::zero_grad() {
    if (has_grad()) grad.fill(0.0);
}

Var constant(Tensor value) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->order = g_order_counter.fetch_add(1);
    return n;
}

Var leaf(Tensor value, std::string name) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->name = std::move(name);
    n->order = g_order_counter.fetch_add(1);
    return n;
}

Var detach(const Var& v) { return constant(v->value); }

void backward(const Var& loss) {
    if (!loss) throw std::invalid_argument("backward: null loss node");
    if (!loss->value.is_scalar()) {
        throw std::invalid_argument("backward: loss must be scalar, got shape " + loss->value.shape_str());
    }
    if (!loss->requires_grad) {
        throw std::logic_error("backward: no differentiable forward pass recorded under the loss");
    }

    // Gather reachable grad-requiring nodes; creation order is topological.
    std::vector<Node*> nodes;
    std::unordered_set<Node*> seen;
    std::vector<Node*> stack{loss.get()};
    seen.insert(loss.get());
    while (!stack.empty()) {
        Node* n = stack.back();
        stack.pop_back();
        nodes.push_back(n);
        for (auto& p : n->parents) {
            if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
        }
    }
    std::sort(nodes.begin(), nodes.end(),
              [](const Node* a, const Node* b) { return a->order > b->order; });

    loss->ensure_grad().data[0] += 1.0;
    for (Node* n : nodes) {
        if (n->backward_fn && n->has_grad()) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// Elementwise / reduction ops
// ---------------------------------------------------------------------------

Var add(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument("add: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    }
    Tensor out = a->value;
    out.add_in_place(b->value);
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (int i = 0; i < 2; ++i) {
            Node& p = *self.parents[i];
            if (!p.requires_grad) continue;
            p.ensure_grad().add_in_place(self.grad);
        }
    });
}

Var sub(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument("sub: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    }
    Tensor out = a->value;
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] -= b->value.data[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        if (self.parents[0]->requires_grad) self.parents[0]->ensure_grad().add_in_place(self.grad);
        if (self.parents[1]->requires_grad) {
            Tensor& g = self.parents[1]->ensure_grad();
            for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] -= self.grad.data[i];
        }
    });
}

Var scale(const Var& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v *= s;
    return make_op(std::move(out), {a}, [s](Node& self) {
        Tensor& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] += s * self.grad.data[i];
    });
}

Var add_scalar(const Var& a, double s) {
    Tensor out = a->value;
    for (double& v : out.data) v += s;
    return make_op(std::move(out), {a}, [](Node& self) {
        self.parents[0]->ensure_grad().add_in_place(self.grad);
    });
}

Var square(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v *= v;
    return make_op(std::move(out), {a}, [](Node& self) {
        const Tensor& x = self.parents[0]->value;
        Tensor& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] += 2.0 * x.data[i] * self.grad.data[i];
    });
}

Var min_zero(const Var& a) {
    Tensor out = a->value;
    for (double& v : out.data) v = std::min(v, 0.0);
    return make_op(std::move(out), {a}, [](Node& self) {
        const Tensor& x = self.parents[0]->value;
        Tensor& g = self.parents[0]->ensure_grad();
        for (std::size_t i = 0; i < g.numel(); ++i) {
            if (x.data[i] < 0.0) g.data[i] += self.grad.data[i];
        }
    });
}

Var sum_all(const Var& a) {
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make_op(Tensor::scalar(s), {a}, [](Node& self) {
        const double g = self.grad.data[0];
        Tensor& pg = self.parents[0]->ensure_grad();
        for (double& v : pg.data) v += g;
    });
}

Var mean_all(const Var& a) {
    const std::size_t n = a->value.numel();
    double s = 0.0;
    for (double v : a->value.data) s += v;
    return make_op(Tensor::scalar(s / static_cast<double>(n)), {a}, [n](Node& self) {
        const double g = self.grad.data[0] / static_cast<double>(n);
        Tensor& pg = self.parents[0]->ensure_grad();
        for (double& v : pg.data) v += g;
    });
}

// ---------------------------------------------------------------------------
// Matrix ops
// ---------------------------------------------------------------------------

namespace {
void require_rank2(const Var& a, const char* op) {
    if (a->value.rank() != 2) {
        throw std::invalid_argument(std::string(op) + ": expected a rank-2 tensor, got " +
                                    a->value.shape_str());
    }
}
}  // namespace

Var row_normalize(const Var& a) {
    require_rank2(a, "row_normalize");
    const std::size_t rows = a->value.dim(0), cols = a->value.dim(1);
    Tensor out({rows, cols});
    std::vector<double> norms(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        double ss = 0.0;
        for (std::size_t c = 0; c < cols; ++c) ss += a->value.at(r, c) * a->value.at(r, c);
        const double n = std::max(std::sqrt(ss), 1e-12);
        norms[r] = n;
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = a->value.at(r, c) / n;
    }
    Tensor normalized = out;
    return make_op(std::move(out), {a}, [norms, normalized](Node& self) {
        const std::size_t rows = normalized.dim(0), cols = normalized.dim(1);
        Tensor& pg = self.parents[0]->ensure_grad();
        for (std::size_t r = 0; r < rows; ++r) {
            double gy = 0.0;
            for (std::size_t c = 0; c < cols; ++c) gy += self.grad.at(r, c) * normalized.at(r, c);
            // Rows caught by the norm guard are a plain division by the guard.
            const bool guarded = norms[r] <= 1e-12;
            for (std::size_t c = 0; c < cols; ++c) {
                const double g = self.grad.at(r, c);
                pg.at(r, c) += (guarded ? g : g - gy * normalized.at(r, c)) / norms[r];
            }
        }
    });
}

Var gram(const Var& a) {
    require_rank2(a, "gram");
    const std::size_t rows = a->value.dim(0), cols = a->value.dim(1);
    Tensor out({rows, rows});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = i; j < rows; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < cols; ++c) s += a->value.at(i, c) * a->value.at(j, c);
            out.at(i, j) = s;
            out.at(j, i) = s;
        }
    }
    return make_op(std::move(out), {a}, [](Node& self) {
        const Tensor& x = self.parents[0]->value;
        const std::size_t rows = x.dim(0), cols = x.dim(1);
        Tensor& pg = self.parents[0]->ensure_grad();
        // d/dx of x x^T with upstream G: (G + G^T) x
        for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < rows; ++j) {
                const double g = self.grad.at(i, j) + self.grad.at(j, i);
                if (g == 0.0) continue;
                for (std::size_t c = 0; c < cols; ++c) pg.at(i, c) += g * x.at(j, c);
            }
        }
    });
}

namespace {
Tensor center_tensor(const Tensor& k) {
    const std::size_t n = k.dim(0);
    std::vector<double> rmean(n, 0.0), cmean(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            rmean[i] += k.at(i, j);
            cmean[j] += k.at(i, j);
            total += k.at(i, j);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        rmean[i] /= static_cast<double>(n);
        cmean[i] /= static_cast<double>(n);
    }
    total /= static_cast<double>(n * n);
    Tensor out({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            out.at(i, j) = k.at(i, j) - rmean[i] - cmean[j] + total;
        }
    }
    return out;
}
}  // namespace

Var center_bilateral(const Var& k) {
    require_rank2(k, "center_bilateral");
    if (k->value.dim(0) != k->value.dim(1)) {
        throw std::invalid_argument("center_bilateral: expected a square matrix, got " +
                                    k->value.shape_str());
    }
    return make_op(center_tensor(k->value), {k}, [](Node& self) {
        self.parents[0]->ensure_grad().add_in_place(center_tensor(self.grad));
    });
}

Var dot_all(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value)) {
        throw std::invalid_argument("dot_all: shape mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a->value.numel(); ++i) s += a->value.data[i] * b->value.data[i];
    return make_op(Tensor::scalar(s), {a, b}, [](Node& self) {
        const double g = self.grad.data[0];
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        if (self.parents[0]->requires_grad) {
            Tensor& ga = self.parents[0]->ensure_grad();
            for (std::size_t i = 0; i < ga.numel(); ++i) ga.data[i] += g * bv.data[i];
        }
        if (self.parents[1]->requires_grad) {
            Tensor& gb = self.parents[1]->ensure_grad();
            for (std::size_t i = 0; i < gb.numel(); ++i) gb.data[i] += g * av.data[i];
        }
    });
}

Var matmul_tn(const Var& a, const Var& b) {
    require_rank2(a, "matmul_tn");
    require_rank2(b, "matmul_tn");
    if (a->value.dim(0) != b->value.dim(0)) {
        throw std::invalid_argument("matmul_tn: batch mismatch " + a->value.shape_str() + " vs " +
                                    b->value.shape_str());
    }
    const std::size_t rows = a->value.dim(0), d1 = a->value.dim(1), d2 = b->value.dim(1);
    Tensor out({d1, d2});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < d1; ++i) {
            const double av = a->value.at(r, i);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < d2; ++j) out.at(i, j) += av * b->value.at(r, j);
        }
    }
    return make_op(std::move(out), {a, b}, [](Node& self) {
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        const std::size_t rows = av.dim(0), d1 = av.dim(1), d2 = bv.dim(1);
        if (self.parents[0]->requires_grad) {
            Tensor& ga = self.parents[0]->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t i = 0; i < d1; ++i) {
                    double s = 0.0;
                    for (std::size_t j = 0; j < d2; ++j) s += bv.at(r, j) * self.grad.at(i, j);
                    ga.at(r, i) += s;
                }
            }
        }
        if (self.parents[1]->requires_grad) {
            Tensor& gb = self.parents[1]->ensure_grad();
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t j = 0; j < d2; ++j) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < d1; ++i) s += av.at(r, i) * self.grad.at(i, j);
                    gb.at(r, j) += s;
                }
            }
        }
    });
}

Var rowwise_dot(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value) || a->value.rank() != 2) {
        throw std::invalid_argument("rowwise_dot: need equal rank-2 shapes, got " +
                                    a->value.shape_str() + " vs " + b->value.shape_str());
    }
    const std::size_t rows = a->value.dim(0), cols = a->value.dim(1);
    Tensor out({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += a->value.at(r, c) * b->value.at(r, c);
        out.data[r] = s;
    }
    return make_op(std::move(out), {a, b}, [](Node& self) {
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        const std::size_t rows = av.dim(0), cols = av.dim(1);
        for (std::size_t r = 0; r < rows; ++r) {
            const double g = self.grad.data[r];
            if (self.parents[0]->requires_grad) {
                Tensor& ga = self.parents[0]->ensure_grad();
                for (std::size_t c = 0; c < cols; ++c) ga.at(r, c) += g * bv.at(r, c);
            }
            if (self.parents[1]->requires_grad) {
                Tensor& gb = self.parents[1]->ensure_grad();
                for (std::size_t c = 0; c < cols; ++c) gb.at(r, c) += g * av.at(r, c);
            }
        }
    });
}

Var rowwise_l1(const Var& a, const Var& b) {
    if (!a->value.same_shape(b->value) || a->value.rank() != 2) {
        throw std::invalid_argument("rowwise_l1: need equal rank-2 shapes, got " +
                                    a->value.shape_str() + " vs " + b->value.shape_str());
    }
    const std::size_t rows = a->value.dim(0), cols = a->value.dim(1);
    Tensor out({rows});
    for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += std::abs(a->value.at(r, c) - b->value.at(r, c));
        out.data[r] = s;
    }
    return make_op(std::move(out), {a, b}, [](Node& self) {
        const Tensor& av = self.parents[0]->value;
        const Tensor& bv = self.parents[1]->value;
        const std::size_t rows = av.dim(0), cols = av.dim(1);
        for (std::size_t r = 0; r < rows; ++r) {
            const double g = self.grad.data[r];
            for (std::size_t c = 0; c < cols; ++c) {
                const double diff = av.at(r, c) - bv.at(r, c);
                const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                if (self.parents[0]->requires_grad) self.parents[0]->ensure_grad().at(r, c) += g * s;
                if (self.parents[1]->requires_grad) self.parents[1]->ensure_grad().at(r, c) -= g * s;
            }
        }
    });
}

Var standardize_cols(const Var& a, double ridge) {
    require_rank2(a, "standardize_cols");
    const std::size_t rows = a->value.dim(0), cols = a->value.dim(1);
    if (rows < 2) {
        throw std::invalid_argument("standardize_cols: need at least 2 rows, got " +
                                    a->value.shape_str());
    }
    std::vector<double> mean(cols, 0.0), inv_sd(cols, 0.0);
    for (std::size_t c = 0; c < cols; ++c) {
        double m = 0.0;
        for (std::size_t r = 0; r < rows; ++r) m += a->value.at(r, c);
        m /= static_cast<double>(rows);
        double v = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = a->value.at(r, c) - m;
            v += d * d;
        }
        v /= static_cast<double>(rows);
        mean[c] = m;
        inv_sd[c] = 1.0 / std::sqrt(v + ridge);
    }
    Tensor out({rows, cols});
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = (a->value.at(r, c) - mean[c]) * inv_sd[c];
    }
    Tensor standardized = out;
    return make_op(std::move(out), {a}, [inv_sd, standardized](Node& self) {
        const std::size_t rows = standardized.dim(0), cols = standardized.dim(1);
        Tensor& pg = self.parents[0]->ensure_grad();
        const double inv_n = 1.0 / static_cast<double>(rows);
        for (std::size_t c = 0; c < cols; ++c) {
            double gsum = 0.0, gxsum = 0.0;
            for (std::size_t r = 0; r < rows; ++r) {
                gsum += self.grad.at(r, c);
                gxsum += self.grad.at(r, c) * standardized.at(r, c);
            }
            for (std::size_t r = 0; r < rows; ++r) {
                const double g = self.grad.at(r, c);
                pg.at(r, c) += inv_sd[c] * (g - inv_n * gsum - inv_n * standardized.at(r, c) * gxsum);
            }
        }
    });
}

}  // namespace caudg
