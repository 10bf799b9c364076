#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "flearn/tensor.hpp"

namespace flearn {

struct Var;
using VarPtr = std::shared_ptr<Var>;

/// Node in the reverse-mode graph. `backprop` reads this node's grad and
/// accumulates into the parents' grads; it runs exactly once per backward().
struct Var {
    Tensor value;
    Tensor grad;  // empty until first needed; same shape as value afterwards
    bool requires_grad = false;
    std::string name;  // non-empty only for parameters
    std::vector<VarPtr> parents;
    std::function<void(Var&)> backprop;

    Tensor& ensure_grad();
    void free_graph_edges();  // drops parents + closure, keeps value/grad
};

VarPtr constant(Tensor value);
VarPtr parameter(std::string name, Tensor value);

/// Builds a graph node. If gradients are globally disabled or no parent needs
/// them, the parents and closure are dropped and the result is a constant.
VarPtr make_node(Tensor value, std::vector<VarPtr> parents, std::function<void(Var&)> backprop);

/// Reverse pass from a scalar loss. Seeds d(loss)/d(loss) = 1, walks the graph
/// in reverse topological order and accumulates into every requires_grad leaf.
/// Parameter grads are summed across calls; use zero_grad() between steps.
/// Interior grads are released as soon as their node has propagated.
void backward(const VarPtr& loss);

void zero_grad(const std::vector<VarPtr>& params);

bool grad_enabled();

/// Disables graph construction for its lifetime (evaluation passes).
class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool saved_;
};

}  // namespace flearn
