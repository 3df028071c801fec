#include "cpal/cam.hpp"

#include <algorithm>
#include <cmath>

namespace cpal {

namespace {

void check_feature_map(const Tensor& f) {
    if (f.rank() != 3) throw DimensionError("feature map must be [H,W,D], got " + shape_string(f.shape));
}

void check_weights(const Tensor& w, std::size_t depth) {
    if (w.rank() != 2) throw DimensionError("classifier weights must be [N,D]");
    if (w.shape[1] != depth)
        throw DimensionError("weight depth " + std::to_string(w.shape[1]) +
                             " does not match feature depth " + std::to_string(depth));
}

}  // namespace

std::vector<double> compute_logits(const Tensor& f, const Tensor& weights) {
    check_feature_map(f);
    check_weights(weights, f.shape[2]);
    const std::size_t h = f.shape[0], w = f.shape[1], d = f.shape[2];
    const std::size_t n_classes = weights.shape[0];
    const double inv_pixels = 1.0 / static_cast<double>(h * w);

    std::vector<double> logits(n_classes, 0.0);
    for (std::size_t n = 0; n < n_classes; ++n) {
        double acc = 0.0;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    dot += weights.at(n, c) * f.at(y, x, c);
                acc += dot;
            }
        logits[n] = acc * inv_pixels;
    }
    return logits;
}

double bce_loss(const std::vector<double>& logits, const std::vector<int>& labels) {
    if (logits.size() != labels.size())
        throw DimensionError("bce_loss: logits/labels length mismatch");
    if (logits.empty()) throw DimensionError("bce_loss: empty inputs");

    double acc = 0.0;
    for (std::size_t n = 0; n < logits.size(); ++n) {
        double x = std::clamp(logits[n], -30.0, 30.0);
        // -[y log s(x) + (1-y) log(1-s(x))] == softplus(x) - y*x, stable form
        double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
        acc += softplus - static_cast<double>(labels[n]) * x;
    }
    return acc / static_cast<double>(logits.size());
}

std::vector<Tensor> compute_cam(const Tensor& f, const Tensor& weights,
                                const std::vector<int>& labels,
                                std::vector<int>* present_out) {
    check_feature_map(f);
    check_weights(weights, f.shape[2]);
    if (labels.size() != weights.shape[0])
        throw DimensionError("compute_cam: labels length does not match class count");

    const std::size_t h = f.shape[0], w = f.shape[1], d = f.shape[2];
    std::vector<Tensor> maps;
    std::vector<int> present;
    for (std::size_t n = 0; n < labels.size(); ++n) {
        if (!labels[n]) continue;
        Tensor m = Tensor::zeros({h, w});
        double peak = 0.0;
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                double dot = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    dot += weights.at(n, c) * f.at(y, x, c);
                double v = dot > 0.0 ? dot : 0.0;
                m.at(y, x) = v;
                peak = std::max(peak, v);
            }
        // zero-max guard: a class that never fires keeps an all-zero map
        if (peak > 0.0)
            for (double& v : m.data) v /= peak;
        maps.push_back(std::move(m));
        present.push_back(static_cast<int>(n));
    }
    if (maps.empty()) throw DegenerateInputError("compute_cam: no class present in labels");
    if (present_out) *present_out = std::move(present);
    return maps;
}

Tensor background_map(const std::vector<Tensor>& foreground) {
    if (foreground.empty()) throw DegenerateInputError("background_map: no foreground maps");
    for (const Tensor& m : foreground)
        if (!m.same_shape(foreground.front()))
            throw DimensionError("background_map: inconsistent map shapes");

    Tensor bg = Tensor::zeros(foreground.front().shape);
    for (std::size_t i = 0; i < bg.size(); ++i) {
        double peak = 0.0;
        for (const Tensor& m : foreground) peak = std::max(peak, m.data[i]);
        bg.data[i] = 1.0 - peak;
    }
    return bg;
}

ActivationSet build_activation_set(const Tensor& f, const Tensor& weights,
                                   const std::vector<int>& labels) {
    ActivationSet set;
    std::vector<int> present;
    set.foreground = compute_cam(f, weights, labels, &present);
    set.background = background_map(set.foreground);
    set.class_order = std::move(present);
    set.class_order.push_back(static_cast<int>(labels.size()));  // background sentinel
    return set;
}

}  // namespace cpal
