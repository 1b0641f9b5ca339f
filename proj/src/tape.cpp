#include "mlam/tape.hpp"

#include <cmath>

#include "mlam/kernels.hpp"

namespace mlam {

const char* op_name(OpKind op) {
    switch (op) {
        case OpKind::Leaf: return "leaf";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::Mul: return "mul";
        case OpKind::MatMul: return "matmul";
        case OpKind::Transpose: return "transpose";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Tanh: return "tanh";
        case OpKind::Exp: return "exp";
        case OpKind::Log: return "log";
        case OpKind::Square: return "square";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::MaskedSelect: return "masked-select";
        case OpKind::BroadcastRow: return "broadcast-row";
        case OpKind::Concat: return "concat";
        case OpKind::ScalarMul: return "scalar-mul";
        case OpKind::Reshape: return "reshape";
        case OpKind::Detach: return "detach";
    }
    return "?";
}

const Tensor& GradientMap::at(NodeId id) const {
    if (!contains(id))
        throw ValueError("no gradient recorded for node " + std::to_string(id));
    return grads_[static_cast<size_t>(id)];
}

Tensor& GradientMap::ensure(NodeId id, const Shape& shape) {
    if (!present_[static_cast<size_t>(id)]) {
        grads_[static_cast<size_t>(id)] = Tensor::zeros(shape);
        present_[static_cast<size_t>(id)] = 1;
    }
    return grads_[static_cast<size_t>(id)];
}

const TapeNode& Tape::node(NodeId id) const {
    if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
        throw ValueError("tape node id " + std::to_string(id) + " out of range");
    return nodes_[static_cast<size_t>(id)];
}

NodeId Tape::push(TapeNode n) {
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
}

void Tape::check_same_shape(const char* what, NodeId a, NodeId b) const {
    if (!node(a).value.same_shape(node(b).value))
        throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(node(a).value.shape()) +
                         " vs " + shape_str(node(b).value.shape()));
}

NodeId Tape::leaf(Tensor value) {
    if (!value.all_finite()) throw ValueError("leaf tensor contains non-finite values");
    TapeNode n;
    n.op = OpKind::Leaf;
    n.value = std::move(value);
    return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
    check_same_shape("add", a, b);
    TapeNode n;
    n.op = OpKind::Add;
    n.parents = {a, b};
    n.value = Tensor(node(a).value.shape());
    kernels::binary_add(node(a).value.data(), node(b).value.data(), n.value.data(),
                        n.value.numel());
    return push(std::move(n));
}

NodeId Tape::sub(NodeId a, NodeId b) {
    check_same_shape("sub", a, b);
    TapeNode n;
    n.op = OpKind::Sub;
    n.parents = {a, b};
    n.value = Tensor(node(a).value.shape());
    kernels::binary_sub(node(a).value.data(), node(b).value.data(), n.value.data(),
                        n.value.numel());
    return push(std::move(n));
}

NodeId Tape::mul(NodeId a, NodeId b) {
    check_same_shape("mul", a, b);
    TapeNode n;
    n.op = OpKind::Mul;
    n.parents = {a, b};
    n.value = Tensor(node(a).value.shape());
    kernels::binary_mul(node(a).value.data(), node(b).value.data(), n.value.data(),
                        n.value.numel());
    return push(std::move(n));
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    const Tensor& ta = node(a).value;
    const Tensor& tb = node(b).value;
    if (ta.rank() != 2 || tb.rank() != 2 || ta.shape()[1] != tb.shape()[0])
        throw ShapeError("matmul: incompatible shapes " + shape_str(ta.shape()) + " x " +
                         shape_str(tb.shape()));
    TapeNode n;
    n.op = OpKind::MatMul;
    n.parents = {a, b};
    n.value = Tensor({ta.shape()[0], tb.shape()[1]});
    kernels::matmul(ta.data(), tb.data(), n.value.data(), ta.shape()[0], ta.shape()[1],
                    tb.shape()[1]);
    return push(std::move(n));
}

NodeId Tape::transpose(NodeId a) {
    const Tensor& t = node(a).value;
    if (t.rank() != 2)
        throw ShapeError("transpose: expected rank-2 tensor, got " + shape_str(t.shape()));
    TapeNode n;
    n.op = OpKind::Transpose;
    n.parents = {a};
    n.value = Tensor({t.shape()[1], t.shape()[0]});
    for (int64_t i = 0; i < t.shape()[0]; ++i)
        for (int64_t j = 0; j < t.shape()[1]; ++j) n.value.at(j, i) = t.at(i, j);
    return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
    TapeNode n;
    n.op = OpKind::Sigmoid;
    n.parents = {a};
    n.value = Tensor(node(a).value.shape());
    kernels::unary_map(kernels::Unary::Sigmoid, node(a).value.data(), n.value.data(),
                       n.value.numel());
    return push(std::move(n));
}

NodeId Tape::tanh(NodeId a) {
    TapeNode n;
    n.op = OpKind::Tanh;
    n.parents = {a};
    n.value = Tensor(node(a).value.shape());
    kernels::unary_map(kernels::Unary::Tanh, node(a).value.data(), n.value.data(),
                       n.value.numel());
    return push(std::move(n));
}

NodeId Tape::exp(NodeId a) {
    TapeNode n;
    n.op = OpKind::Exp;
    n.parents = {a};
    n.value = Tensor(node(a).value.shape());
    kernels::unary_map(kernels::Unary::Exp, node(a).value.data(), n.value.data(),
                       n.value.numel());
    return push(std::move(n));
}

NodeId Tape::log(NodeId a) {
    const Tensor& t = node(a).value;
    for (int64_t i = 0; i < t.numel(); ++i)
        if (!(t[i] > 0.0))
            throw ValueError("non-positive log argument " + std::to_string(t[i]) +
                             " at flat index " + std::to_string(i));
    TapeNode n;
    n.op = OpKind::Log;
    n.parents = {a};
    n.value = Tensor(t.shape());
    kernels::unary_map(kernels::Unary::Log, t.data(), n.value.data(), n.value.numel());
    return push(std::move(n));
}

NodeId Tape::square(NodeId a) {
    TapeNode n;
    n.op = OpKind::Square;
    n.parents = {a};
    n.value = Tensor(node(a).value.shape());
    kernels::unary_map(kernels::Unary::Square, node(a).value.data(), n.value.data(),
                       n.value.numel());
    return push(std::move(n));
}

NodeId Tape::sum(NodeId a) {
    TapeNode n;
    n.op = OpKind::Sum;
    n.parents = {a};
    n.value = Tensor::scalar(node(a).value.sum());
    return push(std::move(n));
}

NodeId Tape::mean(NodeId a) {
    const Tensor& t = node(a).value;
    if (t.numel() == 0) throw ShapeError("mean of empty tensor");
    TapeNode n;
    n.op = OpKind::Mean;
    n.parents = {a};
    n.value = Tensor::scalar(t.sum() / static_cast<double>(t.numel()));
    return push(std::move(n));
}

NodeId Tape::masked_select(NodeId a, const Tensor& mask) {
    const Tensor& t = node(a).value;
    if (!t.same_shape(mask))
        throw ShapeError("masked-select: mask shape " + shape_str(mask.shape()) +
                         " does not match input " + shape_str(t.shape()));
    auto idx = std::make_shared<std::vector<int64_t>>();
    for (int64_t i = 0; i < mask.numel(); ++i)
        if (mask[i] != 0.0) idx->push_back(i);
    TapeNode n;
    n.op = OpKind::MaskedSelect;
    n.parents = {a};
    n.value = Tensor({static_cast<int64_t>(idx->size())});
    for (size_t i = 0; i < idx->size(); ++i) n.value[static_cast<int64_t>(i)] = t[(*idx)[i]];
    n.select = std::move(idx);
    return push(std::move(n));
}

NodeId Tape::broadcast_row(NodeId a, int64_t rows) {
    const Tensor& t = node(a).value;
    int64_t d;
    if (t.rank() == 1)
        d = t.shape()[0];
    else if (t.rank() == 2 && t.shape()[0] == 1)
        d = t.shape()[1];
    else
        throw ShapeError("broadcast-row: expected (D) or (1,D), got " + shape_str(t.shape()));
    if (rows < 1) throw ShapeError("broadcast-row: rows must be >= 1");
    TapeNode n;
    n.op = OpKind::BroadcastRow;
    n.parents = {a};
    n.value = Tensor({rows, d});
    for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < d; ++j) n.value.at(r, j) = t[j];
    return push(std::move(n));
}

NodeId Tape::concat(const std::vector<NodeId>& parts, int axis) {
    if (parts.empty()) throw ShapeError("concat: no inputs");
    if (axis != 0 && axis != 1) throw ShapeError("concat: axis must be 0 or 1");
    const Tensor& first = node(parts[0]).value;
    TapeNode n;
    n.op = OpKind::Concat;
    n.axis = axis;
    n.parents = parts;
    if (first.rank() == 1) {
        if (axis != 0) throw ShapeError("concat: rank-1 tensors concatenate on axis 0");
        int64_t total = 0;
        for (NodeId p : parts) {
            if (node(p).value.rank() != 1)
                throw ShapeError("concat: mixed ranks");
            total += node(p).value.numel();
        }
        n.value = Tensor({total});
        int64_t off = 0;
        for (NodeId p : parts) {
            const Tensor& t = node(p).value;
            for (int64_t i = 0; i < t.numel(); ++i) n.value[off + i] = t[i];
            off += t.numel();
        }
        return push(std::move(n));
    }
    if (first.rank() != 2) throw ShapeError("concat: rank must be 1 or 2");
    if (axis == 0) {
        int64_t cols = first.shape()[1], rows = 0;
        for (NodeId p : parts) {
            const Tensor& t = node(p).value;
            if (t.rank() != 2 || t.shape()[1] != cols)
                throw ShapeError("concat axis 0: column mismatch " + shape_str(t.shape()));
            rows += t.shape()[0];
        }
        n.value = Tensor({rows, cols});
        int64_t r0 = 0;
        for (NodeId p : parts) {
            const Tensor& t = node(p).value;
            for (int64_t r = 0; r < t.shape()[0]; ++r)
                for (int64_t j = 0; j < cols; ++j) n.value.at(r0 + r, j) = t.at(r, j);
            r0 += t.shape()[0];
        }
    } else {
        int64_t rows = first.shape()[0], cols = 0;
        for (NodeId p : parts) {
            const Tensor& t = node(p).value;
            if (t.rank() != 2 || t.shape()[0] != rows)
                throw ShapeError("concat axis 1: row mismatch " + shape_str(t.shape()));
            cols += t.shape()[1];
        }
        n.value = Tensor({rows, cols});
        int64_t c0 = 0;
        for (NodeId p : parts) {
            const Tensor& t = node(p).value;
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t j = 0; j < t.shape()[1]; ++j) n.value.at(r, c0 + j) = t.at(r, j);
            c0 += t.shape()[1];
        }
    }
    return push(std::move(n));
}

NodeId Tape::scalar_mul(NodeId a, double c) {
    TapeNode n;
    n.op = OpKind::ScalarMul;
    n.parents = {a};
    n.scalar = c;
    n.value = Tensor(node(a).value.shape());
    const Tensor& t = node(a).value;
    for (int64_t i = 0; i < t.numel(); ++i) n.value[i] = c * t[i];
    return push(std::move(n));
}

NodeId Tape::reshape(NodeId a, Shape shape) {
    TapeNode n;
    n.op = OpKind::Reshape;
    n.parents = {a};
    n.value = node(a).value.reshaped(std::move(shape));
    return push(std::move(n));
}

NodeId Tape::detach(NodeId a) {
    TapeNode n;
    n.op = OpKind::Detach;
    n.value = node(a).value;
    return push(std::move(n));
}

GradientMap Tape::backward(NodeId loss) const {
    const TapeNode& ln = node(loss);
    if (ln.value.numel() != 1)
        throw ShapeError("backward: loss node must be scalar, got shape " +
                         shape_str(ln.value.shape()));
    GradientMap gm(nodes_.size());
    gm.ensure(loss, ln.value.shape())[0] = 1.0;

    for (NodeId id = loss; id >= 0; --id) {
        if (!gm.contains(id)) continue;
        const TapeNode& n = nodes_[static_cast<size_t>(id)];
        // parents have strictly smaller ids, so this reference stays valid
        // while parent slots are written
        const Tensor& g = gm.slot(id);
        const int64_t ne = g.numel();
        switch (n.op) {
            case OpKind::Leaf:
            case OpKind::Detach:
                break;
            case OpKind::Add: {
                kernels::acc(gm.ensure(n.parents[0], g.shape()).data(), g.data(), ne);
                kernels::acc(gm.ensure(n.parents[1], g.shape()).data(), g.data(), ne);
                break;
            }
            case OpKind::Sub: {
                kernels::acc(gm.ensure(n.parents[0], g.shape()).data(), g.data(), ne);
                kernels::acc_scaled(gm.ensure(n.parents[1], g.shape()).data(), g.data(), -1.0, ne);
                break;
            }
            case OpKind::Mul: {
                const Tensor& a = node(n.parents[0]).value;
                const Tensor& b = node(n.parents[1]).value;
                Tensor& ga = gm.ensure(n.parents[0], a.shape());
                Tensor& gb = gm.ensure(n.parents[1], b.shape());
                for (int64_t i = 0; i < ne; ++i) {
                    ga[i] += g[i] * b[i];
                    gb[i] += g[i] * a[i];
                }
                break;
            }
            case OpKind::MatMul: {
                const Tensor& a = node(n.parents[0]).value;
                const Tensor& b = node(n.parents[1]).value;
                int64_t m = a.shape()[0], k = a.shape()[1], c = b.shape()[1];
                Tensor& ga = gm.ensure(n.parents[0], a.shape());
                Tensor& gb = gm.ensure(n.parents[1], b.shape());
                // dA += g * B^T ; dB += A^T * g
                kernels::matmul(g.data(), b.data(), ga.data(), m, c, k, false, true, true);
                kernels::matmul(a.data(), g.data(), gb.data(), k, m, c, true, false, true);
                break;
            }
            case OpKind::Transpose: {
                const Tensor& a = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], a.shape());
                for (int64_t i = 0; i < g.shape()[0]; ++i)
                    for (int64_t j = 0; j < g.shape()[1]; ++j) ga.at(j, i) += g.at(i, j);
                break;
            }
            case OpKind::Sigmoid: {
                Tensor& ga = gm.ensure(n.parents[0], g.shape());
                for (int64_t i = 0; i < ne; ++i) {
                    double y = n.value[i];
                    ga[i] += g[i] * y * (1.0 - y);
                }
                break;
            }
            case OpKind::Tanh: {
                Tensor& ga = gm.ensure(n.parents[0], g.shape());
                for (int64_t i = 0; i < ne; ++i) {
                    double y = n.value[i];
                    ga[i] += g[i] * (1.0 - y * y);
                }
                break;
            }
            case OpKind::Exp: {
                Tensor& ga = gm.ensure(n.parents[0], g.shape());
                for (int64_t i = 0; i < ne; ++i) ga[i] += g[i] * n.value[i];
                break;
            }
            case OpKind::Log: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], g.shape());
                for (int64_t i = 0; i < ne; ++i) ga[i] += g[i] / x[i];
                break;
            }
            case OpKind::Square: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], g.shape());
                for (int64_t i = 0; i < ne; ++i) ga[i] += 2.0 * x[i] * g[i];
                break;
            }
            case OpKind::Sum: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], x.shape());
                double gv = g[0];
                for (int64_t i = 0; i < x.numel(); ++i) ga[i] += gv;
                break;
            }
            case OpKind::Mean: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], x.shape());
                double gv = g[0] / static_cast<double>(x.numel());
                for (int64_t i = 0; i < x.numel(); ++i) ga[i] += gv;
                break;
            }
            case OpKind::MaskedSelect: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], x.shape());
                const auto& idx = *n.select;
                for (size_t i = 0; i < idx.size(); ++i)
                    ga[idx[i]] += g[static_cast<int64_t>(i)];
                break;
            }
            case OpKind::BroadcastRow: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], x.shape());
                int64_t rows = g.shape()[0], d = g.shape()[1];
                for (int64_t r = 0; r < rows; ++r)
                    for (int64_t j = 0; j < d; ++j) ga[j] += g.at(r, j);
                break;
            }
            case OpKind::Concat: {
                if (node(n.parents[0]).value.rank() == 1 || n.axis == 0) {
                    int64_t off = 0;
                    for (NodeId p : n.parents) {
                        const Tensor& x = node(p).value;
                        Tensor& gp = gm.ensure(p, x.shape());
                        for (int64_t i = 0; i < x.numel(); ++i) gp[i] += g[off + i];
                        off += x.numel();
                    }
                } else {
                    int64_t c0 = 0;
                    int64_t rows = g.shape()[0];
                    for (NodeId p : n.parents) {
                        const Tensor& x = node(p).value;
                        Tensor& gp = gm.ensure(p, x.shape());
                        int64_t pc = x.shape()[1];
                        for (int64_t r = 0; r < rows; ++r)
                            for (int64_t j = 0; j < pc; ++j) gp.at(r, j) += g.at(r, c0 + j);
                        c0 += pc;
                    }
                }
                break;
            }
            case OpKind::ScalarMul: {
                Tensor& ga = gm.ensure(n.parents[0], g.shape());
                kernels::acc_scaled(ga.data(), g.data(), n.scalar, ne);
                break;
            }
            case OpKind::Reshape: {
                const Tensor& x = node(n.parents[0]).value;
                Tensor& ga = gm.ensure(n.parents[0], x.shape());
                kernels::acc(ga.data(), g.data(), ne);
                break;
            }
        }
    }
    return gm;
}

}  // namespace mlam
