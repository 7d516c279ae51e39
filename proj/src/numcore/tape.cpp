#include "haad/numcore/tape.hpp"

#include <cmath>
#include <string>

#include "haad/error.hpp"
#include "haad/numcore/kernels.hpp"

namespace haad::num {
namespace {

double plain_sum(const Mat& a) {
    double acc = 0.0;
    for (double v : a.span()) acc += v;
    return acc;
}

Mat column_means(const Mat& a) {
    const auto& k = kernels::active();
    Mat out(1, a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) k.axpy(out.data(), 1.0, a.row(i).data(), a.cols());
    k.scale(out.data(), 1.0 / static_cast<double>(a.rows()), out.data(), a.cols());
    return out;
}

}  // namespace

const char* op_name(Op op) noexcept {
    switch (op) {
        case Op::Leaf: return "leaf";
        case Op::MatMul: return "matmul";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::AddScaled: return "add_scaled";
        case Op::AddRowBias: return "add_row_bias";
        case Op::Scale: return "scale";
        case Op::AddConst: return "add_const";
        case Op::Hadamard: return "hadamard";
        case Op::MulRowBroadcast: return "mul_row_broadcast";
        case Op::RowDot: return "row_dot";
        case Op::Relu: return "relu";
        case Op::Softplus: return "softplus";
        case Op::Sigmoid: return "sigmoid";
        case Op::Square: return "square";
        case Op::Abs: return "abs";
        case Op::Log: return "log";
        case Op::Clamp: return "clamp";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
        case Op::MeanRows: return "mean_rows";
        case Op::PopVariance: return "pop_variance";
        case Op::Dot: return "dot";
        case Op::SpMul: return "spmul";
        case Op::RowNormalize: return "row_normalize";
        case Op::ConcatCols: return "concat_cols";
    }
    return "?";
}

Var Tape::push(Op op, Mat value, std::size_t in0, std::size_t in1, bool binary) {
    const std::size_t id = nodes_.size();
    if (!value.all_finite()) {
        throw NumericFault(std::string("tape: non-finite value produced by ") + op_name(op) +
                               " at node " + std::to_string(id),
                           static_cast<std::ptrdiff_t>(id));
    }
    Node n;
    n.op = op;
    n.value = std::move(value);
    if (recording_ && op != Op::Leaf) {
        n.in0 = in0;
        n.in1 = in1;
        n.needs_grad = nodes_[in0].needs_grad || (binary && nodes_[in1].needs_grad);
    }
    nodes_.push_back(std::move(n));
    return Var{id};
}

Var Tape::constant(Mat value) { return push(Op::Leaf, std::move(value), 0, 0, false); }

Var Tape::input(Mat value) {
    Var v = push(Op::Leaf, std::move(value), 0, 0, false);
    nodes_[v.id].needs_grad = recording_;
    return v;
}

Var Tape::matmul(Var a, Var b) { return push(Op::MatMul, num::matmul(val(a), val(b)), a.id, b.id, true); }

Var Tape::add(Var a, Var b) { return push(Op::Add, num::add_scaled(val(a), val(b), 1.0), a.id, b.id, true); }

Var Tape::sub(Var a, Var b) { return push(Op::Sub, num::add_scaled(val(a), val(b), -1.0), a.id, b.id, true); }

Var Tape::add_scaled(Var a, Var b, double s) {
    Var v = push(Op::AddScaled, num::add_scaled(val(a), val(b), s), a.id, b.id, true);
    nodes_[v.id].a = s;
    return v;
}

Var Tape::add_row_bias(Var a, Var bias) {
    return push(Op::AddRowBias, num::add_row_bias(val(a), val(bias)), a.id, bias.id, true);
}

Var Tape::scale(Var a, double s) {
    Var v = push(Op::Scale, num::scaled(val(a), s), a.id, 0, false);
    nodes_[v.id].a = s;
    return v;
}

Var Tape::add_const(Var a, double c) {
    Mat out = val(a);
    for (double& x : out.span()) x += c;
    return push(Op::AddConst, std::move(out), a.id, 0, false);
}

Var Tape::hadamard(Var a, Var b) {
    return push(Op::Hadamard, num::hadamard(val(a), val(b)), a.id, b.id, true);
}

Var Tape::mul_row_broadcast(Var a, Var s) {
    return push(Op::MulRowBroadcast, num::mul_row_broadcast(val(a), val(s)), a.id, s.id, true);
}

Var Tape::row_dot(Var a, Var v) {
    const Mat& av = val(a);
    const Mat& vv = val(v);
    if (vv.rows() != 1 || vv.cols() != av.cols()) {
        throw DimensionMismatch("row_dot: " + av.shape_str() + " with " + vv.shape_str());
    }
    const auto& k = kernels::active();
    Mat out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) out(i, 0) = k.dot(av.row(i).data(), vv.data(), av.cols());
    return push(Op::RowDot, std::move(out), a.id, v.id, true);
}

Var Tape::relu(Var a) { return push(Op::Relu, num::relu(val(a)), a.id, 0, false); }

Var Tape::softplus(Var a) { return push(Op::Softplus, num::softplus(val(a)), a.id, 0, false); }

Var Tape::sigmoid(Var a) { return push(Op::Sigmoid, num::sigmoid(val(a)), a.id, 0, false); }

Var Tape::square(Var a) { return push(Op::Square, num::hadamard(val(a), val(a)), a.id, 0, false); }

Var Tape::abs(Var a) {
    Mat out = val(a);
    for (double& x : out.span()) x = std::abs(x);
    return push(Op::Abs, std::move(out), a.id, 0, false);
}

Var Tape::log(Var a) {
    Mat out = val(a);
    for (double& x : out.span()) x = std::log(x);
    return push(Op::Log, std::move(out), a.id, 0, false);
}

Var Tape::clamp(Var a, double lo, double hi) {
    Mat out = val(a);
    for (double& x : out.span()) x = x < lo ? lo : (x > hi ? hi : x);
    Var v = push(Op::Clamp, std::move(out), a.id, 0, false);
    nodes_[v.id].a = lo;
    nodes_[v.id].b = hi;
    return v;
}

Var Tape::sum(Var a) { return push(Op::Sum, Mat::scalar(plain_sum(val(a))), a.id, 0, false); }

Var Tape::mean(Var a) {
    const Mat& av = val(a);
    return push(Op::Mean, Mat::scalar(plain_sum(av) / static_cast<double>(av.size())), a.id, 0, false);
}

Var Tape::mean_rows(Var a) { return push(Op::MeanRows, column_means(val(a)), a.id, 0, false); }

Var Tape::pop_variance(Var a) {
    const Mat& av = val(a);
    const double n = static_cast<double>(av.size());
    const double mu = plain_sum(av) / n;
    double acc = 0.0;
    for (double x : av.span()) acc += (x - mu) * (x - mu);
    Var v = push(Op::PopVariance, Mat::scalar(acc / n), a.id, 0, false);
    nodes_[v.id].a = mu;
    return v;
}

Var Tape::dot(Var a, Var b) {
    return push(Op::Dot, Mat::scalar(num::frobenius_dot(val(a), val(b))), a.id, b.id, true);
}

Var Tape::spmul(const SparseSym& l, Var a) {
    Var v = push(Op::SpMul, num::spmul(l, val(a)), a.id, 0, false);
    nodes_[v.id].sparse = &l;
    return v;
}

Var Tape::row_normalize(Var a, std::size_t* degenerate_rows) {
    const Mat& av = val(a);
    const auto& k = kernels::active();
    Mat out(av.rows(), av.cols());
    Mat norms(av.rows(), 1);
    std::size_t degenerate = 0;
    for (std::size_t i = 0; i < av.rows(); ++i) {
        const double nrm = std::sqrt(k.dot(av.row(i).data(), av.row(i).data(), av.cols()));
        norms(i, 0) = nrm;
        if (nrm > 0.0) {
            k.scale(out.row(i).data(), 1.0 / nrm, av.row(i).data(), av.cols());
        } else if (av.cols() > 0) {
            out(i, av.cols() - 1) = 1.0;
            ++degenerate;
        }
    }
    if (degenerate_rows != nullptr) *degenerate_rows = degenerate;
    Var v = push(Op::RowNormalize, std::move(out), a.id, 0, false);
    nodes_[v.id].aux = std::move(norms);
    return v;
}

Var Tape::concat_cols(Var a, Var b) {
    const Mat& av = val(a);
    const Mat& bv = val(b);
    if (av.rows() != bv.rows()) {
        throw DimensionMismatch("concat_cols: " + av.shape_str() + " | " + bv.shape_str());
    }
    Mat out(av.rows(), av.cols() + bv.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t c = 0; c < av.cols(); ++c) out(i, c) = av(i, c);
        for (std::size_t c = 0; c < bv.cols(); ++c) out(i, av.cols() + c) = bv(i, c);
    }
    return push(Op::ConcatCols, std::move(out), a.id, b.id, true);
}

void Tape::accumulate(std::size_t id, const Mat& g) { accumulate_scaled(id, g, 1.0); }

void Tape::accumulate_scaled(std::size_t id, const Mat& g, double s) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.empty() && !n.value.empty()) n.grad = Mat(n.value.rows(), n.value.cols());
    require_same_shape(n.grad, g, "tape gradient");
    kernels::active().axpy(n.grad.data(), s, g.data(), g.size());
}

void Tape::backward(Var out, double seed) {
    if (!recording_) throw ContractViolation("backward on a non-recording tape");
    if (out.id >= nodes_.size()) throw ContractViolation("backward: unknown node");
    if (nodes_[out.id].value.rows() != 1 || nodes_[out.id].value.cols() != 1) {
        throw ContractViolation("backward: output node " + std::to_string(out.id) + " is " +
                                nodes_[out.id].value.shape_str() + ", expected a scalar");
    }
    for (Node& n : nodes_) n.grad = Mat();
    if (!nodes_[out.id].needs_grad) return;
    nodes_[out.id].grad = Mat::scalar(seed);
    for (std::size_t id = out.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        if (n.grad.empty() || n.op == Op::Leaf) continue;
        if (!n.grad.all_finite()) {
            throw NumericFault("tape: non-finite gradient at node " + std::to_string(id) + " (" +
                                   op_name(n.op) + ")",
                               static_cast<std::ptrdiff_t>(id));
        }
        propagate(id);
    }
    for (std::size_t id = 0; id <= out.id; ++id) {
        const Node& n = nodes_[id];
        if (n.op == Op::Leaf && !n.grad.empty() && !n.grad.all_finite()) {
            throw NumericFault("tape: non-finite gradient at input node " + std::to_string(id),
                               static_cast<std::ptrdiff_t>(id));
        }
    }
}

void Tape::propagate(std::size_t id) {
    const auto& k = kernels::active();
    const Node& n = nodes_[id];
    const Mat& g = n.grad;
    const std::size_t a = n.in0;
    const std::size_t b = n.in1;
    const Mat& av = nodes_[a].value;

    switch (n.op) {
        case Op::Leaf: break;
        case Op::MatMul: {
            const Mat& bv = nodes_[b].value;
            if (nodes_[a].needs_grad) accumulate(a, num::matmul_bt(g, bv));
            if (nodes_[b].needs_grad) accumulate(b, num::matmul_at(av, g));
            break;
        }
        case Op::Add:
            accumulate(a, g);
            accumulate(b, g);
            break;
        case Op::Sub:
            accumulate(a, g);
            accumulate_scaled(b, g, -1.0);
            break;
        case Op::AddScaled:
            accumulate(a, g);
            accumulate_scaled(b, g, n.a);
            break;
        case Op::AddRowBias: {
            accumulate(a, g);
            if (nodes_[b].needs_grad) {
                Mat gb(1, g.cols());
                for (std::size_t i = 0; i < g.rows(); ++i) k.axpy(gb.data(), 1.0, g.row(i).data(), g.cols());
                accumulate(b, gb);
            }
            break;
        }
        case Op::Scale: accumulate_scaled(a, g, n.a); break;
        case Op::AddConst: accumulate(a, g); break;
        case Op::Hadamard: {
            const Mat& bv = nodes_[b].value;
            if (nodes_[a].needs_grad) accumulate(a, num::hadamard(g, bv));
            if (nodes_[b].needs_grad) accumulate(b, num::hadamard(g, av));
            break;
        }
        case Op::MulRowBroadcast: {
            const Mat& sv = nodes_[b].value;
            if (nodes_[a].needs_grad) accumulate(a, num::mul_row_broadcast(g, sv));
            if (nodes_[b].needs_grad) {
                Mat gs(sv.rows(), 1);
                for (std::size_t i = 0; i < g.rows(); ++i) gs(i, 0) = k.dot(g.row(i).data(), av.row(i).data(), g.cols());
                accumulate(b, gs);
            }
            break;
        }
        case Op::RowDot: {
            const Mat& vv = nodes_[b].value;
            if (nodes_[a].needs_grad) {
                Mat ga(av.rows(), av.cols());
                for (std::size_t i = 0; i < av.rows(); ++i) k.scale(ga.row(i).data(), g(i, 0), vv.data(), vv.cols());
                accumulate(a, ga);
            }
            if (nodes_[b].needs_grad) {
                Mat gv(1, vv.cols());
                for (std::size_t i = 0; i < av.rows(); ++i) k.axpy(gv.data(), g(i, 0), av.row(i).data(), av.cols());
                accumulate(b, gv);
            }
            break;
        }
        case Op::Relu: {
            Mat ga(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] = av.data()[i] > 0.0 ? g.data()[i] : 0.0;
            accumulate(a, ga);
            break;
        }
        case Op::Softplus: {
            Mat ga(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] = g.data()[i] * num::sigmoid(av.data()[i]);
            accumulate(a, ga);
            break;
        }
        case Op::Sigmoid: {
            Mat ga(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double s = n.value.data()[i];
                ga.data()[i] = g.data()[i] * s * (1.0 - s);
            }
            accumulate(a, ga);
            break;
        }
        case Op::Square: {
            Mat ga = num::hadamard(g, av);
            accumulate_scaled(a, ga, 2.0);
            break;
        }
        case Op::Abs: {
            Mat ga(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = av.data()[i];
                ga.data()[i] = x > 0.0 ? g.data()[i] : (x < 0.0 ? -g.data()[i] : 0.0);
            }
            accumulate(a, ga);
            break;
        }
        case Op::Log: {
            Mat ga(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] = g.data()[i] / av.data()[i];
            accumulate(a, ga);
            break;
        }
        case Op::Clamp: {
            Mat ga(g.rows(), g.cols());
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double x = av.data()[i];
                ga.data()[i] = (x > n.a && x < n.b) ? g.data()[i] : 0.0;
            }
            accumulate(a, ga);
            break;
        }
        case Op::Sum: accumulate(a, Mat(av.rows(), av.cols(), g.value())); break;
        case Op::Mean:
            accumulate(a, Mat(av.rows(), av.cols(), g.value() / static_cast<double>(av.size())));
            break;
        case Op::MeanRows: {
            Mat ga(av.rows(), av.cols());
            const double inv = 1.0 / static_cast<double>(av.rows());
            for (std::size_t i = 0; i < av.rows(); ++i) k.scale(ga.row(i).data(), inv, g.data(), g.cols());
            accumulate(a, ga);
            break;
        }
        case Op::PopVariance: {
            const double coeff = 2.0 * g.value() / static_cast<double>(av.size());
            Mat ga(av.rows(), av.cols());
            for (std::size_t i = 0; i < av.size(); ++i) ga.data()[i] = coeff * (av.data()[i] - n.a);
            accumulate(a, ga);
            break;
        }
        case Op::Dot: {
            const Mat& bv = nodes_[b].value;
            accumulate_scaled(a, bv, g.value());
            accumulate_scaled(b, av, g.value());
            break;
        }
        case Op::SpMul: accumulate(a, num::spmul(*n.sparse, g)); break;
        case Op::RowNormalize: {
            Mat ga(av.rows(), av.cols());
            for (std::size_t i = 0; i < av.rows(); ++i) {
                const double nrm = n.aux(i, 0);
                if (!(nrm > 0.0)) continue;
                const double* u = n.value.row(i).data();
                const double* gi = g.row(i).data();
                const double proj = k.dot(gi, u, av.cols());
                double* out = ga.row(i).data();
                for (std::size_t c = 0; c < av.cols(); ++c) out[c] = (gi[c] - proj * u[c]) / nrm;
            }
            accumulate(a, ga);
            break;
        }
        case Op::ConcatCols: {
            const Mat& bv = nodes_[b].value;
            Mat ga(av.rows(), av.cols());
            Mat gb(bv.rows(), bv.cols());
            for (std::size_t i = 0; i < g.rows(); ++i) {
                for (std::size_t c = 0; c < av.cols(); ++c) ga(i, c) = g(i, c);
                for (std::size_t c = 0; c < bv.cols(); ++c) gb(i, c) = g(i, av.cols() + c);
            }
            accumulate(a, ga);
            accumulate(b, gb);
            break;
        }
    }
}

}  // namespace haad::num
