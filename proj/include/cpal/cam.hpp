// cam.hpp: classification head and class activation maps.
//
// Logits come from global average pooling of per-pixel classifier
// responses; activation maps are the ReLU'd responses normalized by their
// per-map maximum, with a zero map standing in when a class never fires.
#pragma once

#include <vector>

#include "cpal/tensor.hpp"

namespace cpal {

// Foreground class activation maps plus the derived background map.
// class_order lists present foreground class ids followed by the
// background sentinel (== total foreground class count N).
struct ActivationSet {
    std::vector<Tensor> foreground;  // one H×W map per present class
    Tensor background;               // H×W
    std::vector<int> class_order;
};

// y-hat[n] = mean over pixels of w_n . f(x, y).
// f is [H, W, D], weights is [N, D].
std::vector<double> compute_logits(const Tensor& f, const Tensor& weights);

// Mean over classes of the per-class binary cross entropy at the sigmoid
// of the logit. Logits are clamped to [-30, 30] first.
double bce_loss(const std::vector<double>& logits, const std::vector<int>& labels);

// Per present class (labels[n] == 1): ReLU(w_n . f) divided by its maximum.
// A map whose maximum is zero is returned as all zeros.
std::vector<Tensor> compute_cam(const Tensor& f, const Tensor& weights,
                                const std::vector<int>& labels,
                                std::vector<int>* present_out = nullptr);

// background(x, y) = 1 - max_n foreground_n(x, y)
Tensor background_map(const std::vector<Tensor>& foreground);

ActivationSet build_activation_set(const Tensor& f, const Tensor& weights,
                                   const std::vector<int>& labels);

}  // namespace cpal
