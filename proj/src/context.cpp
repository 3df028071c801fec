#include "cpal/context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cpal {

Metric metric_from_string(const std::string& name) {
    if (name == "l1") return Metric::l1;
    if (name == "l2") return Metric::l2;
    if (name == "cosine") return Metric::cosine;
    if (name == "dot") return Metric::dot;
    throw DomainError("unknown metric '" + name + "' (expected l1, l2, cosine, dot)");
}

std::string metric_name(Metric m) {
    switch (m) {
        case Metric::l1: return "l1";
        case Metric::l2: return "l2";
        case Metric::cosine: return "cosine";
        case Metric::dot: return "dot";
    }
    return "?";
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DimensionError("cosine: vector depth mismatch");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

double metric_logit(const std::vector<double>& a, const std::vector<double>& p, Metric m) {
    switch (m) {
        case Metric::dot: {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * p[i];
            return acc;
        }
        case Metric::cosine:
            return cosine_similarity(a, p);
        case Metric::l1: {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - p[i]);
            return -acc;  // smaller distance, larger positiveness
        }
        case Metric::l2: {
            double acc = 0.0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                double d = a[i] - p[i];
                acc += d * d;
            }
            return -std::sqrt(acc);
        }
    }
    return 0.0;
}

}  // namespace

PositivenessVector positiveness(const std::vector<double>& anchor,
                                const CandidateEntry& candidates, double gamma,
                                Metric metric) {
    if (candidates.prototypes.empty())
        throw EmptyCandidateError("positiveness: candidate set is empty");
    if (gamma <= 0.0) throw DomainError("positiveness: gamma must be positive");
    for (const auto& p : candidates.prototypes)
        if (p.size() != anchor.size())
            throw DimensionError("positiveness: candidate depth does not match anchor");

    std::vector<double> logits(candidates.prototypes.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        logits[i] = metric_logit(anchor, candidates.prototypes[i], metric);

    double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& v : logits) {
        v = std::exp(v - peak);
        total += v;
    }
    PositivenessVector out;
    out.gamma = gamma;
    out.scores.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        out.scores[i] = logits[i] / total / gamma;
    return out;
}

SoftNeighborSet top_k_soft_neighbors(const std::vector<double>& anchor,
                                     const CandidateEntry& candidates,
                                     const PositivenessVector& scores, std::size_t k) {
    if (k < 1) throw DomainError("top_k_soft_neighbors: K must be >= 1");
    if (candidates.prototypes.empty())
        throw EmptyCandidateError("top_k_soft_neighbors: candidate set is empty");
    if (scores.scores.size() != candidates.prototypes.size())
        throw DimensionError("top_k_soft_neighbors: score count does not match candidates");

    const std::size_t n = candidates.prototypes.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> sim(n);
    for (std::size_t i = 0; i < n; ++i)
        sim[i] = cosine_similarity(candidates.prototypes[i], anchor);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sim[a] != sim[b]) return sim[a] > sim[b];
        return a < b;
    });

    SoftNeighborSet out;
    const std::size_t keep = std::min(k, n);
    for (std::size_t r = 0; r < keep; ++r) {
        std::size_t i = order[r];
        out.indices.push_back(i);
        out.prototypes.push_back(candidates.prototypes[i]);
        out.scores.push_back(scores.scores[i]);
    }
    return out;
}

std::vector<double> compute_shift(const std::vector<std::vector<double>>& context,
                                  const std::vector<std::vector<double>>& instances) {
    if (context.empty() || instances.empty())
        throw DegenerateInputError("compute_shift: both prototype lists must be nonempty");
    const std::size_t d = context[0].size();
    for (const auto& v : context)
        if (v.size() != d) throw DimensionError("compute_shift: inconsistent context depth");
    for (const auto& v : instances)
        if (v.size() != d) throw DimensionError("compute_shift: instance depth mismatch");

    std::vector<double> delta(d, 0.0);
    for (const auto& p : context)
        for (const auto& q : instances)
            for (std::size_t c = 0; c < d; ++c) delta[c] += p[c] - q[c];
    const double inv = 1.0 / (static_cast<double>(context.size()) *
                              static_cast<double>(instances.size()));
    for (double& v : delta) v *= inv;
    return delta;
}

std::vector<std::vector<double>> apply_shift(const std::vector<std::vector<double>>& instances,
                                             const std::vector<double>& delta) {
    std::vector<std::vector<double>> out;
    out.reserve(instances.size());
    for (const auto& q : instances) {
        if (q.size() != delta.size())
            throw DimensionError("apply_shift: depth mismatch");
        std::vector<double> v(q);
        for (std::size_t c = 0; c < v.size(); ++c) v[c] += delta[c];
        out.push_back(std::move(v));
    }
    return out;
}

double ocsem(const std::vector<std::vector<double>>& context,
             const std::vector<std::pair<std::vector<double>, std::size_t>>& paired_instances) {
    if (context.size() < 2)
        throw DegenerateInputError("ocsem: needs at least two context prototypes");
    if (paired_instances.empty())
        throw DegenerateInputError("ocsem: no instances to score");

    std::size_t hits = 0;
    for (const auto& [vec, paired] : paired_instances) {
        if (paired >= context.size())
            throw DimensionError("ocsem: paired index out of range");
        double own = cosine_similarity(context[paired], vec);
        double rival = -std::numeric_limits<double>::infinity();
        for (std::size_t h = 0; h < context.size(); ++h) {
            if (h == paired) continue;
            rival = std::max(rival, cosine_similarity(context[h], vec));
        }
        if (own > rival) ++hits;  // strict: ties do not count
    }
    return static_cast<double>(hits) / static_cast<double>(paired_instances.size());
}

}  // namespace cpal
