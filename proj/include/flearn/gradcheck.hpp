#pragma once

#include <functional>
#include <vector>

#include "flearn/autodiff.hpp"

namespace flearn {

/// A differentiable scalar-valued function of one tensor: the checker feeds
/// it a parameter leaf to get the analytic gradient and constants to get the
/// central-difference one.
using ScalarFn = std::function<VarPtr(const VarPtr&)>;

/// Central-difference gradient check over every coordinate of `point`.
/// Returns the max over coordinates of
///   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double finite_diff_check(const ScalarFn& fn, const Tensor& point, double step);

/// Same check restricted to a deterministic seeded subsample of at most
/// `max_coords` coordinates; makes whole-model checks affordable when a
/// parameter block has tens of thousands of entries.
double finite_diff_check_sampled(const ScalarFn& fn, const Tensor& point, double step,
                                 std::size_t max_coords, std::uint64_t seed);

struct GradCheckRow {
    std::string group;       // parameter name
    std::size_t checked;     // coordinates compared
    double max_rel_error;
};

struct Model;  // model_zoo

/// Checks d(bce_loss)/d(parameter) for every parameter group of a model
/// against central differences on a seeded random input/target pair.
/// `corrupt_group`, when non-empty, perturbs that group's analytic gradient
/// before comparing — a negative control used by the tests.
std::vector<GradCheckRow> gradcheck_model(Model& model, int size, std::uint64_t seed,
                                          double step = 1e-5, std::size_t max_coords = 24,
                                          const std::string& corrupt_group = "");

}  // namespace flearn
