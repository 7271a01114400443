#include "deimlab/autodiff.hpp"

#include "deimlab/dense_linalg.hpp"
#include "deimlab/errors.hpp"

#include <cmath>
#include <memory>
#include <utility>

namespace deimlab::ad {

Var Tape::push(Op op, std::vector<int> parents, Tensor value, BackwardFn fn) {
    bool rg = false;
    for (int p : parents) rg = rg || nodes_[static_cast<std::size_t>(p)].requires_grad;
    nodes_.push_back(Node{op, std::move(parents), rg, std::move(value), std::move(fn)});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check(Var v, const char* op) const {
    if (!v.valid() || v.id >= static_cast<int>(nodes_.size())) {
        throw UsageError(std::string(op) + ": invalid tape handle");
    }
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    nodes_.push_back(Node{Op::Leaf, {}, requires_grad, std::move(value), nullptr});
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Tensor& Tape::value(Var v) const {
    check(v, "value");
    return nodes_[static_cast<std::size_t>(v.id)].value;
}

Tensor Tape::grad(Var v) const {
    check(v, "grad");
    const auto idx = static_cast<std::size_t>(v.id);
    if (idx < grads_.size() && grads_[idx].size() > 0) return grads_[idx];
    return Tensor::zeros(nodes_[idx].value.shape());
}

bool Tape::requires_grad(Var v) const {
    check(v, "requires_grad");
    return nodes_[static_cast<std::size_t>(v.id)].requires_grad;
}

void Tape::accumulate(int id, const Tensor& delta) {
    const auto idx = static_cast<std::size_t>(id);
    if (!nodes_[idx].requires_grad) return;
    if (grads_[idx].size() == 0) grads_[idx] = Tensor::zeros(nodes_[idx].value.shape());
    Tensor& g = grads_[idx];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
}

// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
    check(a, "add"); check(b, "add");
    const Tensor& av = val(a.id);
    const Tensor& bv = val(b.id);
    require_same_shape(av, bv, "add");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
    return push(Op::Add, {a.id, b.id}, std::move(out),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    t.accumulate(n.parents[0], g);
                    t.accumulate(n.parents[1], g);
                });
}

Var Tape::sub(Var a, Var b) {
    check(a, "sub"); check(b, "sub");
    const Tensor& av = val(a.id);
    const Tensor& bv = val(b.id);
    require_same_shape(av, bv, "sub");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
    return push(Op::Sub, {a.id, b.id}, std::move(out),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    t.accumulate(n.parents[0], g);
                    Tensor neg = g;
                    for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
                    t.accumulate(n.parents[1], neg);
                });
}

Var Tape::mul(Var a, Var b) {
    check(a, "mul"); check(b, "mul");
    const Tensor& av = val(a.id);
    const Tensor& bv = val(b.id);
    require_same_shape(av, bv, "mul");
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return push(Op::Mul, {a.id, b.id}, std::move(out),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    const Tensor& av = t.val(n.parents[0]);
                    const Tensor& bv = t.val(n.parents[1]);
                    Tensor ga = g, gb = g;
                    for (std::size_t i = 0; i < g.size(); ++i) {
                        ga[i] *= bv[i];
                        gb[i] *= av[i];
                    }
                    t.accumulate(n.parents[0], ga);
                    t.accumulate(n.parents[1], gb);
                });
}

Var Tape::relu(Var x) {
    check(x, "relu");
    Tensor out = val(x.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return push(Op::Relu, {x.id}, std::move(out),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    const Tensor& xv = t.val(n.parents[0]);
                    Tensor gx = g;
                    for (std::size_t i = 0; i < gx.size(); ++i) {
                        if (!(xv[i] > 0.0)) gx[i] = 0.0;
                    }
                    t.accumulate(n.parents[0], gx);
                });
}

Var Tape::scale(Var x, double s) {
    check(x, "scale");
    Tensor out = val(x.id);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
    return push(Op::Scale, {x.id}, std::move(out),
                [s](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    Tensor gx = g;
                    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] *= s;
                    t.accumulate(n.parents[0], gx);
                });
}

Var Tape::matmul(Var a, Var b, bool trans_a, bool trans_b) {
    check(a, "matmul"); check(b, "matmul");
    Tensor out = deimlab::matmul(val(a.id), val(b.id), trans_a, trans_b);
    return push(Op::Matmul, {a.id, b.id}, std::move(out),
                [trans_a, trans_b](Tape& t, int self, const Tensor& gout) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    const Tensor& av = t.val(n.parents[0]);
                    const Tensor& bv = t.val(n.parents[1]);
                    // Promote a vector result gradient back to a column.
                    Tensor g = gout;
                    if (g.ndim() == 1 && bv.ndim() == 1) g = g.reshaped({g.size(), 1});
                    Tensor b2 = bv.ndim() == 1 ? bv.reshaped({bv.size(), 1}) : bv;
                    if (t.nodes_[static_cast<std::size_t>(n.parents[0])].requires_grad) {
                        Tensor ga = trans_a
                            ? deimlab::matmul(b2, g, trans_b, true)
                            : deimlab::matmul(g, b2, false, !trans_b);
                        if (av.ndim() == 1) ga = ga.reshaped(av.shape());
                        t.accumulate(n.parents[0], ga);
                    }
                    if (t.nodes_[static_cast<std::size_t>(n.parents[1])].requires_grad) {
                        Tensor gb = trans_b
                            ? deimlab::matmul(g, av, true, !trans_a)
                            : deimlab::matmul(av, g, !trans_a, false);
                        if (bv.ndim() == 1) gb = gb.reshaped(bv.shape());
                        t.accumulate(n.parents[1], gb);
                    }
                });
}

Var Tape::softmax_temperature(Var z, double tau) {
    check(z, "softmax_temperature");
    if (!(tau > 0.0)) {
        throw ParameterError("softmax_temperature: tau must be positive, got " +
                             std::to_string(tau));
    }
    const Tensor& zv = val(z.id);
    if (zv.size() == 0) throw DimensionError("softmax_temperature: empty input");
    const std::size_t nrows = zv.rows();
    const std::size_t ncols = zv.ndim() == 2 ? zv.cols() : 1;
    Tensor out = zv;
    for (std::size_t c = 0; c < ncols; ++c) {
        double zmax = -1e300;
        for (std::size_t i = 0; i < nrows; ++i) zmax = std::max(zmax, zv[i * ncols + c]);
        double sum = 0.0;
        for (std::size_t i = 0; i < nrows; ++i) {
            const double e = std::exp((zv[i * ncols + c] - zmax) / tau);
            out[i * ncols + c] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::size_t i = 0; i < nrows; ++i) out[i * ncols + c] *= inv;
    }
    return push(Op::Softmax, {z.id}, std::move(out),
                [tau, nrows, ncols](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    const Tensor& s = n.value;
                    Tensor gz = g;
                    for (std::size_t c = 0; c < ncols; ++c) {
                        double gdots = 0.0;
                        for (std::size_t i = 0; i < nrows; ++i)
                            gdots += g[i * ncols + c] * s[i * ncols + c];
                        for (std::size_t i = 0; i < nrows; ++i) {
                            const std::size_t k = i * ncols + c;
                            gz[k] = s[k] * (g[k] - gdots) / tau;
                        }
                    }
                    t.accumulate(n.parents[0], gz);
                });
}

namespace {

// Unpack a C_in x H x W field into the (C_in*9) x (H*W) patch matrix for a
// 3x3 periodic window; conv2d forward/backward then reduce to plain GEMMs.
void im2col_periodic(const Tensor& in, Tensor& cols) {
    const std::size_t ci = in.extent(0), h = in.extent(1), w = in.extent(2);
    for (std::size_t c = 0; c < ci; ++c) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const std::size_t row =
                    c * 9 + static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
                double* dst = cols.data() + row * (h * w);
                for (std::size_t y = 0; y < h; ++y) {
                    const std::size_t ys = (y + static_cast<std::size_t>(dy + static_cast<int>(h))) % h;
                    const double* src = in.data() + (c * h + ys) * w;
                    for (std::size_t x = 0; x < w; ++x) {
                        const std::size_t xs = (x + static_cast<std::size_t>(dx + static_cast<int>(w))) % w;
                        dst[y * w + x] = src[xs];
                    }
                }
            }
        }
    }
}

// Transpose of im2col: scatter-add patch-matrix gradients back to the field.
void col2im_periodic(const Tensor& cols, Tensor& out) {
    const std::size_t ci = out.extent(0), h = out.extent(1), w = out.extent(2);
    for (std::size_t c = 0; c < ci; ++c) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const std::size_t row =
                    c * 9 + static_cast<std::size_t>((dy + 1) * 3 + (dx + 1));
                const double* src = cols.data() + row * (h * w);
                for (std::size_t y = 0; y < h; ++y) {
                    const std::size_t ys = (y + static_cast<std::size_t>(dy + static_cast<int>(h))) % h;
                    double* dst = out.data() + (c * h + ys) * w;
                    for (std::size_t x = 0; x < w; ++x) {
                        const std::size_t xs = (x + static_cast<std::size_t>(dx + static_cast<int>(w))) % w;
                        dst[xs] += src[y * w + x];
                    }
                }
            }
        }
    }
}

} // namespace

Var Tape::conv2d_periodic(Var input, Var kernel) {
    check(input, "conv2d"); check(kernel, "conv2d");
    const Tensor& in = val(input.id);
    const Tensor& k = val(kernel.id);
    if (in.ndim() != 3) throw DimensionError("conv2d: input must be C x H x W, got " + in.shape_str());
    if (k.ndim() != 4 || k.extent(2) != 3 || k.extent(3) != 3) {
        throw DimensionError("conv2d: kernel must be C_out x C_in x 3 x 3, got " + k.shape_str());
    }
    if (k.extent(1) != in.extent(0)) {
        throw DimensionError("conv2d: channel mismatch, input " + in.shape_str() +
                             " vs kernel " + k.shape_str());
    }
    const std::size_t h = in.extent(1), w = in.extent(2);
    if (h < 3 || w < 3) throw DimensionError("conv2d: spatial extent must be >= 3, got " + in.shape_str());
    const std::size_t cin = in.extent(0), cout = k.extent(0), hw = h * w;

    Tensor cols({cin * 9, hw});
    im2col_periodic(in, cols);
    Tensor out({cout, h, w});
    gemm_acc(cout, hw, cin * 9, k.data(), cin * 9, cols.data(), hw, out.data(), hw);

    return push(Op::Conv2d, {input.id, kernel.id}, std::move(out),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    const Tensor& in = t.val(n.parents[0]);
                    const Tensor& k = t.val(n.parents[1]);
                    const std::size_t cin = in.extent(0), h = in.extent(1), w = in.extent(2);
                    const std::size_t cout = k.extent(0), hw = h * w;
                    // Patch matrix is recomputed rather than saved; it is 9x
                    // the field size and cheap to rebuild.
                    if (t.nodes_[static_cast<std::size_t>(n.parents[1])].requires_grad) {
                        Tensor cols({cin * 9, hw});
                        im2col_periodic(in, cols);
                        Tensor gk({cout, cin, 3, 3});
                        // gk = g (cout x hw) * cols^T (hw x cin*9)
                        Tensor colsT = cols.reshaped({cin * 9, hw}).transposed();
                        gemm_acc(cout, cin * 9, hw, g.data(), hw, colsT.data(), cin * 9,
                                 gk.data(), cin * 9);
                        t.accumulate(n.parents[1], gk);
                    }
                    if (t.nodes_[static_cast<std::size_t>(n.parents[0])].requires_grad) {
                        // gcols = k^T (cin*9 x cout) * g (cout x hw)
                        Tensor kT = k.reshaped({cout, cin * 9}).transposed();
                        Tensor gcols({cin * 9, hw});
                        gemm_acc(cin * 9, hw, cout, kT.data(), cout, g.data(), hw,
                                 gcols.data(), hw);
                        Tensor gin({cin, h, w});
                        col2im_periodic(gcols, gin);
                        t.accumulate(n.parents[0], gin);
                    }
                });
}

Var Tape::channel_bias(Var x, Var bias) {
    check(x, "channel_bias"); check(bias, "channel_bias");
    const Tensor& xv = val(x.id);
    const Tensor& bv = val(bias.id);
    if (xv.ndim() != 3 || bv.ndim() != 1 || bv.size() != xv.extent(0)) {
        throw DimensionError("channel_bias: need C x H x W and C, got " + xv.shape_str() +
                             " and " + bv.shape_str());
    }
    const std::size_t c = xv.extent(0), hw = xv.extent(1) * xv.extent(2);
    Tensor out = xv;
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double b = bv[ch];
        double* p = out.data() + ch * hw;
        for (std::size_t i = 0; i < hw; ++i) p[i] += b;
    }
    return push(Op::ChannelBias, {x.id, bias.id}, std::move(out),
                [c, hw](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    t.accumulate(n.parents[0], g);
                    Tensor gb({c});
                    for (std::size_t ch = 0; ch < c; ++ch) {
                        const double* p = g.data() + ch * hw;
                        double s = 0.0;
                        for (std::size_t i = 0; i < hw; ++i) s += p[i];
                        gb[ch] = s;
                    }
                    t.accumulate(n.parents[1], gb);
                });
}

Var Tape::gather_rows(Var x, std::vector<std::size_t> rows) {
    check(x, "gather_rows");
    const Tensor& xv = val(x.id);
    if (xv.ndim() > 2) throw DimensionError("gather_rows: input must be 1-D or 2-D, got " + xv.shape_str());
    const std::size_t c = xv.ndim() == 2 ? xv.cols() : 1;
    const std::size_t n = xv.rows();
    for (std::size_t r : rows) {
        if (r >= n) throw DimensionError("gather_rows: row index " + std::to_string(r) +
                                         " out of range for " + xv.shape_str());
    }
    Tensor out = xv.ndim() == 2 ? Tensor({rows.size(), c}) : Tensor({rows.size()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < c; ++j)
            out[i * c + j] = xv[rows[i] * c + j];
    return push(Op::GatherRows, {x.id}, std::move(out),
                [rows = std::move(rows), c](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    Tensor gx = Tensor::zeros(t.val(n.parents[0]).shape());
                    for (std::size_t i = 0; i < rows.size(); ++i)
                        for (std::size_t j = 0; j < c; ++j)
                            gx[rows[i] * c + j] += g[i * c + j];
                    t.accumulate(n.parents[0], gx);
                });
}

Var Tape::concat(Var a, Var b) {
    check(a, "concat"); check(b, "concat");
    const Tensor& av = val(a.id);
    const Tensor& bv = val(b.id);
    if (av.ndim() != 1 || bv.ndim() != 1) {
        throw DimensionError("concat: both operands must be 1-D, got " + av.shape_str() +
                             " and " + bv.shape_str());
    }
    Tensor out({av.size() + bv.size()});
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i];
    for (std::size_t i = 0; i < bv.size(); ++i) out[av.size() + i] = bv[i];
    const std::size_t na = av.size();
    return push(Op::Concat, {a.id, b.id}, std::move(out),
                [na](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    Tensor ga({na});
                    Tensor gb({g.size() - na});
                    for (std::size_t i = 0; i < na; ++i) ga[i] = g[i];
                    for (std::size_t i = na; i < g.size(); ++i) gb[i - na] = g[i];
                    t.accumulate(n.parents[0], ga);
                    t.accumulate(n.parents[1], gb);
                });
}

Var Tape::mse(Var a, Var b) {
    check(a, "mse"); check(b, "mse");
    const Tensor& av = val(a.id);
    const Tensor& bv = val(b.id);
    require_same_shape(av, bv, "mse");
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        s += d * d;
    }
    const double inv_n = 1.0 / static_cast<double>(av.size());
    return push(Op::Mse, {a.id, b.id}, Tensor::scalar(s * inv_n),
                [inv_n](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    const Tensor& av = t.val(n.parents[0]);
                    const Tensor& bv = t.val(n.parents[1]);
                    const double f = 2.0 * inv_n * g[0];
                    Tensor ga = av;
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = f * (av[i] - bv[i]);
                    t.accumulate(n.parents[0], ga);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] = -ga[i];
                    t.accumulate(n.parents[1], ga);
                });
}

Var Tape::reshape(Var x, std::vector<std::size_t> shape) {
    check(x, "reshape");
    Tensor out = val(x.id).reshaped(shape);
    return push(Op::Reshape, {x.id}, std::move(out),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    t.accumulate(n.parents[0], g.reshaped(t.val(n.parents[0]).shape()));
                });
}

Var Tape::solve(Var m, Var b) {
    check(m, "solve"); check(b, "solve");
    const Tensor& mv = val(m.id);
    const Tensor& bv = val(b.id);
    auto lu = std::make_shared<LuFactor>(mv);
    Tensor x = lu->solve(bv);
    return push(Op::Solve, {m.id, b.id}, std::move(x),
                [lu](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    // x = M^{-1} b:   gb = M^{-T} g,   gM = -gb x^T.
                    Tensor gb = lu->solve_transposed(g);
                    t.accumulate(n.parents[1], gb);
                    if (t.nodes_[static_cast<std::size_t>(n.parents[0])].requires_grad) {
                        const Tensor& x = n.value;
                        Tensor y2 = gb.ndim() == 1 ? gb.reshaped({gb.size(), 1}) : gb;
                        Tensor x2 = x.ndim() == 1 ? x.reshaped({x.size(), 1}) : x;
                        Tensor gm = deimlab::matmul(y2, x2, false, true);
                        for (std::size_t i = 0; i < gm.size(); ++i) gm[i] = -gm[i];
                        t.accumulate(n.parents[0], gm);
                    }
                });
}

Var Tape::sum(Var x) {
    check(x, "sum");
    const Tensor& xv = val(x.id);
    double s = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
    return push(Op::SumReduce, {x.id}, Tensor::scalar(s),
                [](Tape& t, int self, const Tensor& g) {
                    const auto& n = t.nodes_[static_cast<std::size_t>(self)];
                    t.accumulate(n.parents[0], Tensor::full(t.val(n.parents[0]).shape(), g[0]));
                });
}

void Tape::backward(Var root) {
    check(root, "backward");
    const auto ridx = static_cast<std::size_t>(root.id);
    if (nodes_[ridx].value.size() != 1) {
        throw UsageError("backward: root must be scalar, got " +
                         nodes_[ridx].value.shape_str());
    }
    grads_.assign(nodes_.size(), Tensor());
    grads_[ridx] = Tensor::full(nodes_[ridx].value.shape(), 1.0);
    for (std::size_t i = ridx + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (!node.requires_grad || node.op == Op::Leaf) continue;
        if (grads_[i].size() == 0) continue; // not on any path from root
        node.backward(*this, static_cast<int>(i), grads_[i]);
    }
}

Tensor gumbel_noise(const std::vector<std::size_t>& shape, Rng& rng) {
    if (shape.empty()) throw ParameterError("gumbel_noise: shape must be nonempty");
    Tensor out(shape);
    for (std::size_t i = 0; i < out.size(); ++i) {
        double u = rng.uniform();
        if (u < 1e-12) u = 1e-12;
        if (u > 1.0 - 1e-12) u = 1.0 - 1e-12;
        out[i] = -std::log(-std::log(u));
    }
    return out;
}

} // namespace deimlab::ad
