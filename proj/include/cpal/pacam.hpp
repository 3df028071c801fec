// pacam.hpp: prototype-aware CAM generation, the self-supervised
// consistency loss, the unified objective, the analytic feature gradient
// of the consistency loss, and the simplex optimum used by its companion
// verification routine.
#pragma once

#include <vector>

#include "cpal/context.hpp"
#include "cpal/tensor.hpp"

namespace cpal {

enum class Aggregation { uniform, weighted };

Aggregation aggregation_from_string(const std::string& name);
std::string aggregation_name(Aggregation a);

// Prototype-aware activation maps, one per channel, mirroring an
// ActivationSet's class_order.
struct PacamSet {
    std::vector<Tensor> maps;
    std::vector<int> class_order;
    Aggregation mode = Aggregation::uniform;
};

// Per pixel j:
//   uniform:  ReLU( (1/K) sum_i cos(f(j), p_i) )
//   weighted: ReLU( sum_i w_i cos(f(j), p_i) / sum_i w_i )
// A zero-norm f(j) or p_i contributes 0 to the sum.
Tensor pacam_map(const Tensor& f, const SoftNeighborSet& neighbors, Aggregation mode);

// (1/C) * sum_n mean_j |a_n(j) - b_n(j)| over C matched channels.
// With pixel_sum the per-pixel mean becomes a plain sum.
double self_loss(const std::vector<Tensor>& a, const std::vector<Tensor>& b,
                 bool pixel_sum = false);

struct LossReport {
    double bce = 0.0;
    double self = 0.0;
    double total = 0.0;
    double lambda_bce = 1.0;
    double lambda_self = 1.0;
};

LossReport total_loss(double bce, double self, double lambda_bce, double lambda_self);

// Analytic d(self_loss)/df with the target maps, prototypes, and scores
// treated as constants. Subgradient conventions: sign(0) = 0, ReLU'(0) = 0.
// Throws DegenerateInputError on a zero-norm feature vector.
Tensor grad_self_wrt_features(const Tensor& f,
                              const std::vector<SoftNeighborSet>& neighbors_per_channel,
                              const std::vector<Tensor>& target, Aggregation mode,
                              bool pixel_sum = false);

// Closed-form maximizer of sum_i w_i log s_i over the probability simplex.
std::vector<double> claim1_optimum(const std::vector<double>& w);

// Companion verification route: projected gradient ascent on the same
// objective from the uniform start. Independent of claim1_optimum.
std::vector<double> claim1_pga(const std::vector<double>& w, int max_iters = 200000,
                               double step_tol = 1e-14);

// Euclidean projection onto { s >= 0, sum s = 1 }.
std::vector<double> project_simplex(const std::vector<double>& v);

}  // namespace cpal
