#include "flearn/autodiff.hpp"

#include <stdexcept>
#include <unordered_set>

namespace flearn {

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

Tensor& Var::ensure_grad() {
    if (grad.size() != value.size()) grad = Tensor(value.shape());
    return grad;
}

void Var::free_graph_edges() {
    parents.clear();
    backprop = nullptr;
}

VarPtr constant(Tensor value) {
    auto v = std::make_shared<Var>();
    v->value = std::move(value);
    return v;
}

VarPtr parameter(std::string name, Tensor value) {
    if (name.empty()) throw std::invalid_argument("parameter name must be non-empty");
    auto v = std::make_shared<Var>();
    v->value = std::move(value);
    v->requires_grad = true;
    v->name = std::move(name);
    return v;
}

VarPtr make_node(Tensor value, std::vector<VarPtr> parents, std::function<void(Var&)> backprop) {
    auto v = std::make_shared<Var>();
    v->value = std::move(value);
    if (g_grad_enabled) {
        for (const VarPtr& p : parents) {
            if (p && p->requires_grad) {
                v->requires_grad = true;
                break;
            }
        }
    }
    if (v->requires_grad) {
        v->parents = std::move(parents);
        v->backprop = std::move(backprop);
    }
    return v;
}

namespace {

// Post-order over parents, iterative so graph depth never limits us.
void topo_sort(const VarPtr& root, std::vector<Var*>& order) {
    std::unordered_set<Var*> visited;
    std::vector<std::pair<Var*, std::size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Var* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
}

}  // namespace

void backward(const VarPtr& loss) {
    if (!loss) throw std::invalid_argument("backward: null loss");
    if (loss->value.size() != 1) {
        throw std::invalid_argument("backward requires a scalar loss, shape is " +
                                    shape_to_string(loss->value.shape()));
    }
    if (!loss->requires_grad) return;  // nothing reachable needs gradients

    std::vector<Var*> order;
    topo_sort(loss, order);

    loss->ensure_grad().fill(1.0);
    // Reverse topological order: every consumer has deposited its contribution
    // before a node propagates, so fan-out sums correctly.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Var* node = *it;
        if (node->backprop) {
            if (node->grad.size() != node->value.size()) node->ensure_grad();
            node->backprop(*node);
        }
        if (node->name.empty()) node->grad = Tensor();  // interior: release now
    }
}

void zero_grad(const std::vector<VarPtr>& params) {
    for (const VarPtr& p : params) {
        if (p) p->ensure_grad().fill(0.0);
    }
}

}  // namespace flearn
