#pragma once

#include "deimlab/rng.hpp"
#include "deimlab/tensor.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace deimlab::ad {

/// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class Op : std::uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,
    Relu,
    Scale,
    Matmul,
    Softmax,
    Conv2d,
    ChannelBias,
    GatherRows,
    Concat,
    Mse,
    Reshape,
    Solve,
    SumReduce,
};

/// Append-only reverse-mode tape over dense tensors.
///
/// Node order is topological by construction; backward walks the list once
/// in reverse. Tapes are single-threaded; independent tapes may run in
/// parallel. Published tensors are immutable.
class Tape {
public:
    Var leaf(Tensor value, bool requires_grad = true);
    Var constant(Tensor value) { return leaf(std::move(value), false); }

    const Tensor& value(Var v) const;
    /// Gradient accumulated by the last backward(); zeros if the node was
    /// never reached.
    Tensor grad(Var v) const;
    bool requires_grad(Var v) const;

    // ---- differentiable operations ------------------------------------
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);           // elementwise
    Var relu(Var x);                 // subgradient 0 at exactly 0
    Var scale(Var x, double s);
    Var matmul(Var a, Var b, bool trans_a = false, bool trans_b = false);
    /// Temperature softmax over axis 0, applied per column for 2-D input.
    /// Max-subtraction keeps the exponentials in range.
    Var softmax_temperature(Var z, double tau);
    /// 3x3 cross-correlation with periodic wrap.
    /// input: C_in x H x W, kernel: C_out x C_in x 3 x 3.
    Var conv2d_periodic(Var input, Var kernel);
    Var channel_bias(Var x, Var bias); // x: C x H x W, bias: C
    Var gather_rows(Var x, std::vector<std::size_t> rows);
    Var concat(Var a, Var b);        // 1-D
    Var mse(Var a, Var b);           // scalar mean((a-b)^2)
    Var reshape(Var x, std::vector<std::size_t> shape);
    /// x = M^{-1} b with M square; b may be a vector or matrix.
    Var solve(Var m, Var b);
    Var sum(Var x);                  // scalar sum of all entries

    /// Reverse accumulation from a scalar root. Each node is visited exactly
    /// once, in reverse append order.
    void backward(Var root);

    std::size_t size() const { return nodes_.size(); }
    void clear();

private:
    using BackwardFn = std::function<void(Tape&, int self, const Tensor& gout)>;

    struct Node {
        Op op;
        std::vector<int> parents;
        bool requires_grad;
        Tensor value;
        BackwardFn backward;
    };

    Var push(Op op, std::vector<int> parents, Tensor value, BackwardFn fn);
    void accumulate(int id, const Tensor& delta);
    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    void check(Var v, const char* op) const;

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
};

/// i.i.d. Gumbel(0,1) noise: g = -log(-log(u)), u uniform on (0,1) clamped
/// to [1e-12, 1 - 1e-12] so logits stay finite.
Tensor gumbel_noise(const std::vector<std::size_t>& shape, Rng& rng);

} // namespace deimlab::ad
