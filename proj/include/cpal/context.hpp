// context.hpp: context prototype-aware selection: positiveness scoring,
// top-K soft neighbor identification, feature distribution alignment, and
// the OCSEM diagnostic.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cpal/prototypes.hpp"

namespace cpal {

enum class Metric { l1, l2, cosine, dot };

Metric metric_from_string(const std::string& name);
std::string metric_name(Metric m);

// Softmax-normalized relevance of each candidate to the anchor, scaled by
// 1/gamma. Distances (l1, l2) are negated before the softmax so that a
// closer candidate scores higher.
struct PositivenessVector {
    std::vector<double> scores;
    double gamma = 1.0;
};

PositivenessVector positiveness(const std::vector<double>& anchor,
                                const CandidateEntry& candidates, double gamma,
                                Metric metric);

// Top-K candidates ranked by cosine similarity to the anchor (descending,
// ties broken by lower index), carrying their positiveness scores. Since
// scores are positive, ranking the scaled prototypes w_i*p_i by cosine is
// identical to ranking the raw p_i.
struct SoftNeighborSet {
    std::vector<std::size_t> indices;
    std::vector<std::vector<double>> prototypes;
    std::vector<double> scores;

    std::size_t size() const { return indices.size(); }
};

SoftNeighborSet top_k_soft_neighbors(const std::vector<double>& anchor,
                                     const CandidateEntry& candidates,
                                     const PositivenessVector& scores, std::size_t k);

// delta = (1 / (Np * Q)) * sum_i sum_q (context_i - instance_q)
std::vector<double> compute_shift(const std::vector<std::vector<double>>& context,
                                  const std::vector<std::vector<double>>& instances);

std::vector<std::vector<double>> apply_shift(const std::vector<std::vector<double>>& instances,
                                             const std::vector<double>& delta);

// Fraction of (context i, instance q) pairs whose paired context prototype
// is the strict cosine-nearest among all candidates. Requires >= 2 context
// prototypes for the max over h != i to exist.
double ocsem(const std::vector<std::vector<double>>& context,
             const std::vector<std::pair<std::vector<double>, std::size_t>>& paired_instances);

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cpal
