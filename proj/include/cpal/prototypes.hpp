// prototypes.hpp: instance prototypes, per-class FIFO support banks, and
// k-means construction of context prototype candidate sets.
#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include "cpal/tensor.hpp"

namespace cpal {

struct Prototype {
    int class_id = 0;  // background uses the sentinel id N
    std::vector<double> vec;
};

// Applies the projection head pixel-wise. spec is either empty (identity)
// or a [D, D'] matrix; z(x,y) = f(x,y) * spec.
Tensor project_features(const Tensor& f, const Tensor& projection);
Tensor project_identity(const Tensor& f);

// mask(x, y) = 1 iff activation(x, y) > tau
Tensor binary_mask(const Tensor& activation, double tau);

// Masked average pooling of z over mask-selected pixels. An empty mask
// falls back to the single pixel with the highest activation; std::nullopt
// is returned only when the activation map is entirely zero.
std::optional<Prototype> instance_prototype(const Tensor& z, const Tensor& mask,
                                            int class_id, const Tensor& activation);

// Per-class ring buffer with strict first-in-first-out eviction.
class SupportBank {
public:
    explicit SupportBank(std::size_t capacity) : capacity_(capacity) {}

    void push(const Prototype& p);

    const std::deque<std::vector<double>>& entries(int class_id) const;
    bool has_class(int class_id) const { return per_class_.count(class_id) > 0; }
    std::vector<int> class_ids() const;
    std::size_t length(int class_id) const;
    std::size_t push_count(int class_id) const;
    std::size_t capacity() const { return capacity_; }
    std::size_t depth() const { return depth_; }

private:
    std::size_t capacity_;
    std::size_t depth_ = 0;  // fixed by the first push
    std::map<int, std::deque<std::vector<double>>> per_class_;
    std::map<int, std::size_t> counters_;
};

// One Lloyd run outcome: cluster means with bookkeeping for audits.
struct ClusterResult {
    std::vector<std::vector<double>> centroids;  // k_eff × D
    std::vector<std::size_t> counts;             // members per centroid
    std::vector<std::size_t> assignments;        // per input point
    double wcss = 0.0;
    std::vector<double> wcss_trajectory;  // per Lloyd iteration of the winning run
};

// Lloyd's algorithm with k-means++ seeding, best of `restarts` runs by
// within-cluster sum of squares. k is capped at the number of distinct
// points; empty clusters are dropped. Deterministic for a given seed.
ClusterResult cluster_bank(const std::vector<std::vector<double>>& points,
                           std::size_t n_p, int restarts, std::uint64_t seed);

struct CandidateEntry {
    std::vector<std::vector<double>> prototypes;  // cluster means, k_eff × D
    std::vector<std::size_t> counts;
};

struct CandidateSet {
    std::map<int, CandidateEntry> per_class;
};

// cluster_bank applied per class with class-offset seeds; classes whose
// banks are empty are simply omitted.
CandidateSet candidate_set(const SupportBank& bank, std::size_t n_p, int restarts,
                           std::uint64_t seed);

// One tensor file per class ([k_eff, D]) plus a JSON index with counts.
void save_candidate_set(const CandidateSet& cs, const std::filesystem::path& dir);
CandidateSet load_candidate_set(const std::filesystem::path& dir);

}  // namespace cpal
