#pragma once

#include <deque>
#include <memory>
#include <vector>

#include "mlam/tensor.hpp"

namespace mlam {

using NodeId = int32_t;

enum class OpKind : uint8_t {
    Leaf,
    Add,
    Sub,
    Mul,  // elementwise
    MatMul,
    Transpose,
    Sigmoid,
    Tanh,
    Exp,
    Log,
    Square,
    Sum,
    Mean,
    MaskedSelect,
    BroadcastRow,
    Concat,
    ScalarMul,
    Reshape,
    Detach,
};

const char* op_name(OpKind op);

struct TapeNode {
    OpKind op = OpKind::Leaf;
    std::vector<NodeId> parents;
    Tensor value;
    double scalar = 0.0;  // ScalarMul factor
    int axis = 0;         // Concat axis
    std::shared_ptr<const std::vector<int64_t>> select;  // MaskedSelect flat indices
};

// Gradient of a scalar loss with respect to tape nodes. Entries exist for
// every node on a path from the loss to a leaf it depends on.
class GradientMap {
public:
    bool contains(NodeId id) const {
        return id >= 0 && static_cast<size_t>(id) < present_.size() && present_[id];
    }
    const Tensor& at(NodeId id) const;

private:
    friend class Tape;
    explicit GradientMap(size_t n) : grads_(n), present_(n, 0) {}
    Tensor& slot(NodeId id) { return grads_[static_cast<size_t>(id)]; }
    // ensure a zero gradient of the given shape exists
    Tensor& ensure(NodeId id, const Shape& shape);

    std::vector<Tensor> grads_;
    std::vector<uint8_t> present_;
};

// Append-only record of an eagerly evaluated computation. Parent ids are
// always smaller than the node id, so a single reverse sweep is a valid
// topological order for backpropagation. Single-threaded by contract;
// independent tapes may live on independent threads.
class Tape {
public:
    NodeId leaf(Tensor value);

    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId matmul(NodeId a, NodeId b);
    NodeId transpose(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId tanh(NodeId a);
    NodeId exp(NodeId a);
    NodeId log(NodeId a);
    NodeId square(NodeId a);
    NodeId sum(NodeId a);   // scalar (1)
    NodeId mean(NodeId a);  // scalar (1)
    // gather of elements where mask != 0, row-major order, result shape (count)
    NodeId masked_select(NodeId a, const Tensor& mask);
    // (D) or (1,D) -> (rows, D); gradient is the column sum
    NodeId broadcast_row(NodeId a, int64_t rows);
    NodeId concat(const std::vector<NodeId>& parts, int axis);
    NodeId scalar_mul(NodeId a, double c);
    NodeId reshape(NodeId a, Shape shape);
    // value-identical leaf; gradients do not flow past it
    NodeId detach(NodeId a);

    const Tensor& value(NodeId id) const { return node(id).value; }
    const TapeNode& node(NodeId id) const;
    int64_t size() const { return static_cast<int64_t>(nodes_.size()); }

    // Reverse-mode sweep from a scalar loss node. Gradients accumulate by
    // summation over multiple uses of a node.
    GradientMap backward(NodeId loss) const;

private:
    NodeId push(TapeNode n);
    void check_same_shape(const char* what, NodeId a, NodeId b) const;

    // deque keeps node (and value) references stable while recording
    std::deque<TapeNode> nodes_;
};

}  // namespace mlam
