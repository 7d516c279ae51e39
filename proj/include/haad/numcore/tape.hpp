#pragma once

// Reverse-mode differentiation over a fixed set of matrix primitives.
//
// A Tape records nodes in evaluation order; backward() walks them once in
// reverse insertion order. Forward values are computed by the same dense
// helpers whether or not recording is enabled, so a non-recording tape
// evaluates a program to the same bits as a recording one.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "haad/numcore/mat.hpp"
#include "haad/numcore/sparse.hpp"

namespace haad::num {

/// Handle to a tape node. Only meaningful for the tape that produced it.
struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
};

enum class Op : std::uint8_t {
    Leaf,
    MatMul,
    Add,
    Sub,
    AddScaled,
    AddRowBias,
    Scale,
    AddConst,
    Hadamard,
    MulRowBroadcast,
    RowDot,
    Relu,
    Softplus,
    Sigmoid,
    Square,
    Abs,
    Log,
    Clamp,
    Sum,
    Mean,
    MeanRows,
    PopVariance,
    Dot,
    SpMul,
    RowNormalize,
    ConcatCols,
};

const char* op_name(Op op) noexcept;

class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const noexcept { return recording_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Constant input; no gradient is accumulated for it.
    Var constant(Mat value);
    /// Differentiable input; its gradient is available after backward().
    Var input(Mat value);

    const Mat& value(Var v) const { return nodes_.at(v.id).value; }
    /// Gradient of the last backward() output w.r.t. v. Zero-shaped if v was
    /// not reached.
    const Mat& grad(Var v) const { return nodes_.at(v.id).grad; }
    Op op(Var v) const { return nodes_.at(v.id).op; }

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    /// a + s * b
    Var add_scaled(Var a, Var b, double s);
    /// a (n x m) + bias (1 x m) on every row
    Var add_row_bias(Var a, Var bias);
    Var scale(Var a, double s);
    Var add_const(Var a, double c);
    Var hadamard(Var a, Var b);
    /// a (n x m), s (n x 1): row i of a times s_i
    Var mul_row_broadcast(Var a, Var s);
    /// a (n x m), v (1 x m) -> n x 1 of row-wise dot products
    Var row_dot(Var a, Var v);
    Var relu(Var a);
    Var softplus(Var a);
    Var sigmoid(Var a);
    Var square(Var a);
    Var abs(Var a);
    Var log(Var a);
    /// Elementwise clamp to [lo, hi]; gradient passes only strictly inside.
    Var clamp(Var a, double lo, double hi);
    Var sum(Var a);
    Var mean(Var a);
    /// Column means: n x m -> 1 x m
    Var mean_rows(Var a);
    /// Population variance over all entries (divides by the entry count).
    Var pop_variance(Var a);
    /// Frobenius inner product -> 1x1
    Var dot(Var a, Var b);
    /// L * a; `l` must outlive the tape.
    Var spmul(const SparseSym& l, Var a);
    /// Rows scaled to unit 2-norm. A row of norm zero becomes the last basis
    /// vector (0, ..., 0, 1), carries zero gradient, and is counted in
    /// `degenerate_rows` when given.
    Var row_normalize(Var a, std::size_t* degenerate_rows = nullptr);

    /// [a | b] for matrices with equal row counts.
    Var concat_cols(Var a, Var b);

    /// Reverse pass from a scalar node. Throws ContractViolation for a
    /// non-scalar output and NumericFault (with node index) on non-finite
    /// gradients. Clears gradients left by a previous call.
    void backward(Var out, double seed = 1.0);

private:
    struct Node {
        Op op = Op::Leaf;
        Mat value;
        Mat grad;
        std::size_t in0 = 0;
        std::size_t in1 = 0;
        double a = 0.0;
        double b = 0.0;
        const SparseSym* sparse = nullptr;
        Mat aux;
        bool needs_grad = false;
    };

    Var push(Op op, Mat value, std::size_t in0, std::size_t in1, bool binary);
    Node& node(Var v) { return nodes_.at(v.id); }
    const Mat& val(Var v) const { return nodes_.at(v.id).value; }
    void accumulate(std::size_t id, const Mat& g);
    void accumulate_scaled(std::size_t id, const Mat& g, double s);
    void propagate(std::size_t id);

    bool recording_;
    std::vector<Node> nodes_;
};

}  // namespace haad::num
