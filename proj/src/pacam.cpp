#include "cpal/pacam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpal {

Aggregation aggregation_from_string(const std::string& name) {
    if (name == "uniform") return Aggregation::uniform;
    if (name == "weighted") return Aggregation::weighted;
    throw DomainError("unknown aggregation mode '" + name + "' (expected uniform, weighted)");
}

std::string aggregation_name(Aggregation a) {
    return a == Aggregation::uniform ? "uniform" : "weighted";
}

namespace {

// aggregation coefficients: 1/K uniform, w_i / sum(w) weighted
std::vector<double> aggregation_coeffs(const SoftNeighborSet& nbrs, Aggregation mode) {
    const std::size_t k = nbrs.size();
    std::vector<double> a(k);
    if (mode == Aggregation::uniform) {
        std::fill(a.begin(), a.end(), 1.0 / static_cast<double>(k));
    } else {
        double total = std::accumulate(nbrs.scores.begin(), nbrs.scores.end(), 0.0);
        if (total <= 0.0) throw DomainError("pacam: weighted mode needs positive scores");
        for (std::size_t i = 0; i < k; ++i) a[i] = nbrs.scores[i] / total;
    }
    return a;
}

double norm(const double* v, std::size_t d) {
    double acc = 0.0;
    for (std::size_t c = 0; c < d; ++c) acc += v[c] * v[c];
    return std::sqrt(acc);
}

}  // namespace

Tensor pacam_map(const Tensor& f, const SoftNeighborSet& neighbors, Aggregation mode) {
    if (f.rank() != 3) throw DimensionError("pacam_map: feature map must be [H,W,D]");
    if (neighbors.size() == 0)
        throw DegenerateInputError("pacam_map: neighbor set is empty");
    const std::size_t h = f.shape[0], w = f.shape[1], d = f.shape[2];
    for (const auto& p : neighbors.prototypes)
        if (p.size() != d) throw DimensionError("pacam_map: prototype depth mismatch");

    const std::vector<double> coeff = aggregation_coeffs(neighbors, mode);
    std::vector<double> pnorm(neighbors.size());
    for (std::size_t i = 0; i < neighbors.size(); ++i)
        pnorm[i] = norm(neighbors.prototypes[i].data(), d);

    Tensor out = Tensor::zeros({h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            const double* fj = &f.data[(y * w + x) * d];
            double fn = norm(fj, d);
            double acc = 0.0;
            if (fn > 0.0) {
                for (std::size_t i = 0; i < neighbors.size(); ++i) {
                    if (pnorm[i] == 0.0) continue;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c)
                        dot += fj[c] * neighbors.prototypes[i][c];
                    acc += coeff[i] * dot / (fn * pnorm[i]);
                }
            }
            out.at(y, x) = acc > 0.0 ? acc : 0.0;
        }
    return out;
}

double self_loss(const std::vector<Tensor>& a, const std::vector<Tensor>& b, bool pixel_sum) {
    if (a.size() != b.size() || a.empty())
        throw DimensionError("self_loss: channel count mismatch or empty sets");
    double acc = 0.0;
    for (std::size_t n = 0; n < a.size(); ++n) {
        if (!a[n].same_shape(b[n])) throw DimensionError("self_loss: map shape mismatch");
        double channel = 0.0;
        for (std::size_t i = 0; i < a[n].size(); ++i)
            channel += std::abs(a[n].data[i] - b[n].data[i]);
        if (!pixel_sum) channel /= static_cast<double>(a[n].size());
        acc += channel;
    }
    return acc / static_cast<double>(a.size());
}

LossReport total_loss(double bce, double self, double lambda_bce, double lambda_self) {
    if (lambda_bce < 0.0 || lambda_self < 0.0)
        throw DomainError("total_loss: loss coefficients must be non-negative");
    LossReport r;
    r.bce = bce;
    r.self = self;
    r.lambda_bce = lambda_bce;
    r.lambda_self = lambda_self;
    r.total = lambda_bce * bce + lambda_self * self;
    return r;
}

Tensor grad_self_wrt_features(const Tensor& f,
                              const std::vector<SoftNeighborSet>& neighbors_per_channel,
                              const std::vector<Tensor>& target, Aggregation mode,
                              bool pixel_sum) {
    if (f.rank() != 3) throw DimensionError("grad: feature map must be [H,W,D]");
    if (neighbors_per_channel.size() != target.size() || target.empty())
        throw DimensionError("grad: channel count mismatch");
    const std::size_t h = f.shape[0], w = f.shape[1], d = f.shape[2];
    for (const Tensor& t : target)
        if (t.rank() != 2 || t.shape[0] != h || t.shape[1] != w)
            throw DimensionError("grad: target map shape mismatch");

    const double channel_scale = 1.0 / static_cast<double>(target.size());
    const double pixel_scale = pixel_sum ? 1.0 : 1.0 / static_cast<double>(h * w);

    Tensor grad = Tensor::zeros(f.shape);
    for (std::size_t n = 0; n < target.size(); ++n) {
        const SoftNeighborSet& nbrs = neighbors_per_channel[n];
        if (nbrs.size() == 0) throw DegenerateInputError("grad: empty neighbor set");
        const std::vector<double> coeff = aggregation_coeffs(nbrs, mode);
        std::vector<double> pnorm(nbrs.size());
        for (std::size_t i = 0; i < nbrs.size(); ++i)
            pnorm[i] = norm(nbrs.prototypes[i].data(), d);

        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const double* fj = &f.data[(y * w + x) * d];
                double fn = norm(fj, d);
                if (fn == 0.0)
                    throw DegenerateInputError("grad: zero-norm feature vector at pixel");
                double pre = 0.0;  // pre-ReLU aggregated similarity
                for (std::size_t i = 0; i < nbrs.size(); ++i) {
                    if (pnorm[i] == 0.0) continue;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c)
                        dot += fj[c] * nbrs.prototypes[i][c];
                    pre += coeff[i] * dot / (fn * pnorm[i]);
                }
                if (pre <= 0.0) continue;  // ReLU'(<=0) = 0

                double diff = pre - target[n].at(y, x);  // M-tilde - M, post-ReLU
                double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
                if (s == 0.0) continue;
                double outer = channel_scale * pixel_scale * s;

                double* gj = &grad.data[(y * w + x) * d];
                for (std::size_t i = 0; i < nbrs.size(); ++i) {
                    if (pnorm[i] == 0.0) continue;
                    double dot = 0.0;
                    for (std::size_t c = 0; c < d; ++c)
                        dot += fj[c] * nbrs.prototypes[i][c];
                    double cosv = dot / (fn * pnorm[i]);
                    // d cos(f,p)/df = p/(|f||p|) - cos(f,p) f/|f|^2
                    double a = coeff[i] * outer;
                    for (std::size_t c = 0; c < d; ++c)
                        gj[c] += a * (nbrs.prototypes[i][c] / (fn * pnorm[i]) -
                                      cosv * fj[c] / (fn * fn));
                }
            }
    }
    return grad;
}

std::vector<double> claim1_optimum(const std::vector<double>& w) {
    if (w.empty()) throw DomainError("claim1_optimum: empty weight vector");
    double total = 0.0;
    for (double v : w) {
        if (!(v > 0.0)) throw DomainError("claim1_optimum: weights must be positive");
        total += v;
    }
    std::vector<double> s(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) s[i] = w[i] / total;
    return s;
}

std::vector<double> project_simplex(const std::vector<double>& v) {
    std::vector<double> u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, theta = 0.0;
    std::size_t rho = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        double t = (1.0 - cum) / static_cast<double>(j + 1);
        if (u[j] + t > 0.0) {
            rho = j + 1;
            theta = t;
        }
    }
    (void)rho;
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = std::max(v[i] + theta, 0.0);
    return out;
}

namespace {

double weighted_log(const std::vector<double>& w, const std::vector<double>& s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (s[i] <= 0.0) return -std::numeric_limits<double>::infinity();
        acc += w[i] * std::log(s[i]);
    }
    return acc;
}

}  // namespace

std::vector<double> claim1_pga(const std::vector<double>& w, int max_iters, double step_tol) {
    if (w.empty()) throw DomainError("claim1_pga: empty weight vector");
    for (double v : w)
        if (!(v > 0.0)) throw DomainError("claim1_pga: weights must be positive");

    const std::size_t k = w.size();
    std::vector<double> s(k, 1.0 / static_cast<double>(k));
    double value = weighted_log(w, s);

    std::vector<double> g(k), cand(k);
    for (int iter = 0; iter < max_iters; ++iter) {
        for (std::size_t i = 0; i < k; ++i) g[i] = w[i] / s[i];

        // backtracking: halve the step until ascent on the objective
        double eta = 1.0;
        bool moved = false;
        for (int bt = 0; bt < 60; ++bt) {
            for (std::size_t i = 0; i < k; ++i) cand[i] = s[i] + eta * g[i];
            cand = project_simplex(cand);
            double cval = weighted_log(w, cand);
            if (cval > value) {
                double delta = 0.0;
                for (std::size_t i = 0; i < k; ++i)
                    delta = std::max(delta, std::abs(cand[i] - s[i]));
                s = cand;
                value = cval;
                moved = delta > step_tol;
                break;
            }
            eta *= 0.5;
        }
        if (!moved) break;
    }
    return s;
}

}  // namespace cpal
