#include "cpal/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "cpal/npy.hpp"
#include "cpal/rng.hpp"

namespace cpal {

Tensor project_features(const Tensor& f, const Tensor& projection) {
    if (f.rank() != 3) throw DimensionError("project_features: feature map must be [H,W,D]");
    if (projection.rank() != 2)
        throw DimensionError("project_features: projection must be [D,D']");
    if (projection.shape[0] != f.shape[2])
        throw DimensionError("project_features: projection rows must equal feature depth");

    const std::size_t h = f.shape[0], w = f.shape[1], d = f.shape[2];
    const std::size_t d_out = projection.shape[1];
    Tensor z = Tensor::zeros({h, w, d_out});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t j = 0; j < d_out; ++j) {
                double acc = 0.0;
                for (std::size_t c = 0; c < d; ++c)
                    acc += f.at(y, x, c) * projection.at(c, j);
                z.at(y, x, j) = acc;
            }
    return z;
}

Tensor project_identity(const Tensor& f) { return f; }

Tensor binary_mask(const Tensor& activation, double tau) {
    if (activation.rank() != 2) throw DimensionError("binary_mask: map must be [H,W]");
    Tensor mask = Tensor::zeros(activation.shape);
    for (std::size_t i = 0; i < activation.size(); ++i)
        mask.data[i] = activation.data[i] > tau ? 1.0 : 0.0;
    return mask;
}

std::optional<Prototype> instance_prototype(const Tensor& z, const Tensor& mask,
                                            int class_id, const Tensor& activation) {
    if (z.rank() != 3) throw DimensionError("instance_prototype: z must be [H,W,D]");
    if (mask.rank() != 2 || mask.shape[0] != z.shape[0] || mask.shape[1] != z.shape[1])
        throw DimensionError("instance_prototype: mask shape does not match z");
    if (!activation.same_shape(mask))
        throw DimensionError("instance_prototype: activation shape does not match mask");

    const std::size_t h = z.shape[0], w = z.shape[1], d = z.shape[2];
    std::vector<double> sum(d, 0.0);
    std::size_t selected = 0;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            if (mask.at(y, x) == 0.0) continue;
            ++selected;
            for (std::size_t c = 0; c < d; ++c) sum[c] += z.at(y, x, c);
        }

    if (selected > 0) {
        for (double& v : sum) v /= static_cast<double>(selected);
        return Prototype{class_id, std::move(sum)};
    }

    // empty mask: fall back to the argmax-activation pixel
    double best = 0.0;
    std::size_t by = 0, bx = 0;
    bool found = false;
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            if (activation.at(y, x) > best) {
                best = activation.at(y, x);
                by = y;
                bx = x;
                found = true;
            }
    if (!found) return std::nullopt;  // activation map entirely zero

    std::vector<double> vec(d);
    for (std::size_t c = 0; c < d; ++c) vec[c] = z.at(by, bx, c);
    return Prototype{class_id, std::move(vec)};
}

void SupportBank::push(const Prototype& p) {
    if (depth_ == 0) depth_ = p.vec.size();
    if (p.vec.size() != depth_)
        throw DimensionError("bank push: prototype depth " + std::to_string(p.vec.size()) +
                             " does not match bank depth " + std::to_string(depth_));
    auto& q = per_class_[p.class_id];
    q.push_back(p.vec);
    if (q.size() > capacity_) q.pop_front();
    ++counters_[p.class_id];
}

const std::deque<std::vector<double>>& SupportBank::entries(int class_id) const {
    auto it = per_class_.find(class_id);
    if (it == per_class_.end()) {
        static const std::deque<std::vector<double>> empty;
        return empty;
    }
    return it->second;
}

std::vector<int> SupportBank::class_ids() const {
    std::vector<int> ids;
    for (const auto& [id, q] : per_class_)
        if (!q.empty()) ids.push_back(id);
    return ids;
}

std::size_t SupportBank::length(int class_id) const { return entries(class_id).size(); }

std::size_t SupportBank::push_count(int class_id) const {
    auto it = counters_.find(class_id);
    return it == counters_.end() ? 0 : it->second;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

std::size_t count_distinct(const std::vector<std::vector<double>>& points) {
    std::set<std::vector<double>> uniq(points.begin(), points.end());
    return uniq.size();
}

// k-means++ seeding: first center uniform, then proportional to squared
// distance from the nearest chosen center.
std::vector<std::vector<double>> seed_centers(const std::vector<std::vector<double>>& pts,
                                              std::size_t k, Rng& rng) {
    std::vector<std::vector<double>> centers;
    centers.reserve(k);
    centers.push_back(pts[rng.index(pts.size())]);

    std::vector<double> d2(pts.size());
    while (centers.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            double best = sq_dist(pts[i], centers[0]);
            for (std::size_t c = 1; c < centers.size(); ++c)
                best = std::min(best, sq_dist(pts[i], centers[c]));
            d2[i] = best;
            total += best;
        }
        if (total <= 0.0) break;  // every distinct point is already a center
        double r = rng.uniform() * total;
        std::size_t chosen = pts.size() - 1;
        double acc = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            acc += d2[i];
            if (r < acc) {
                chosen = i;
                break;
            }
        }
        centers.push_back(pts[chosen]);
    }
    return centers;
}

struct LloydRun {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignments;
    double wcss;
    std::vector<double> trajectory;
};

LloydRun lloyd(const std::vector<std::vector<double>>& pts,
               std::vector<std::vector<double>> centers, int max_iters) {
    const std::size_t n = pts.size();
    std::vector<std::size_t> assign(n, 0), prev(n, std::numeric_limits<std::size_t>::max());
    std::vector<double> trajectory;

    for (int iter = 0; iter < max_iters; ++iter) {
        // assignment step, ties broken by lower centroid index
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = sq_dist(pts[i], centers[0]);
            std::size_t arg = 0;
            for (std::size_t c = 1; c < centers.size(); ++c) {
                double d = sq_dist(pts[i], centers[c]);
                if (d < best) {
                    best = d;
                    arg = c;
                }
            }
            assign[i] = arg;
            wcss += best;
        }
        trajectory.push_back(wcss);
        if (assign == prev) break;
        prev = assign;

        // mean step; empty clusters are dropped, not re-seeded
        const std::size_t dim = pts[0].size();
        std::vector<std::vector<double>> sums(centers.size(), std::vector<double>(dim, 0.0));
        std::vector<std::size_t> counts(centers.size(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t c = 0; c < dim; ++c) sums[assign[i]][c] += pts[i][c];
        }
        std::vector<std::vector<double>> next;
        next.reserve(centers.size());
        for (std::size_t c = 0; c < centers.size(); ++c) {
            if (counts[c] == 0) continue;
            for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
            next.push_back(std::move(sums[c]));
        }
        if (next.size() != centers.size())
            prev.assign(n, std::numeric_limits<std::size_t>::max());  // indices shifted
        centers = std::move(next);
    }

    // final bookkeeping against the converged centers
    double wcss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = sq_dist(pts[i], centers[0]);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < centers.size(); ++c) {
            double d = sq_dist(pts[i], centers[c]);
            if (d < best) {
                best = d;
                arg = c;
            }
        }
        assign[i] = arg;
        wcss += best;
    }
    return LloydRun{std::move(centers), std::move(assign), wcss, std::move(trajectory)};
}

}  // namespace

ClusterResult cluster_bank(const std::vector<std::vector<double>>& points,
                           std::size_t n_p, int restarts, std::uint64_t seed) {
    if (points.empty()) throw EmptyBankError("cluster_bank: no entries to cluster");
    if (n_p < 1) throw DomainError("cluster_bank: n_p must be >= 1");
    for (const auto& p : points)
        if (p.size() != points[0].size())
            throw DimensionError("cluster_bank: inconsistent point depths");

    const std::size_t k = std::min(n_p, count_distinct(points));
    constexpr int kMaxIters = 100;

    Rng rng(seed);
    LloydRun best;
    bool have_best = false;
    for (int r = 0; r < std::max(restarts, 1); ++r) {
        LloydRun run = lloyd(points, seed_centers(points, k, rng), kMaxIters);
        if (!have_best || run.wcss < best.wcss) {
            best = std::move(run);
            have_best = true;
        }
    }

    ClusterResult out;
    out.centroids = std::move(best.centroids);
    out.assignments = std::move(best.assignments);
    out.counts.assign(out.centroids.size(), 0);
    for (std::size_t a : out.assignments) ++out.counts[a];
    out.wcss = best.wcss;
    out.wcss_trajectory = std::move(best.trajectory);
    return out;
}

CandidateSet candidate_set(const SupportBank& bank, std::size_t n_p, int restarts,
                           std::uint64_t seed) {
    CandidateSet cs;
    for (int id : bank.class_ids()) {
        const auto& q = bank.entries(id);
        std::vector<std::vector<double>> pts(q.begin(), q.end());
        ClusterResult r = cluster_bank(pts, n_p, restarts,
                                       mix_seed(seed, static_cast<std::uint64_t>(id)));
        cs.per_class[id] = CandidateEntry{std::move(r.centroids), std::move(r.counts)};
    }
    return cs;
}

void save_candidate_set(const CandidateSet& cs, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nlohmann::json index;
    for (const auto& [id, entry] : cs.per_class) {
        const std::size_t k = entry.prototypes.size();
        const std::size_t d = k ? entry.prototypes[0].size() : 0;
        Tensor t = Tensor::zeros({k, d});
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t c = 0; c < d; ++c) t.at(i, c) = entry.prototypes[i][c];
        std::string file = "class_" + std::to_string(id) + ".npy";
        save_tensor(t, dir / file);
        index[std::to_string(id)] = {{"file", file}, {"counts", entry.counts}};
    }
    std::ofstream out(dir / "index.json");
    if (!out) throw IoError("cannot write candidate index in " + dir.string());
    out << index.dump(2) << "\n";
}

CandidateSet load_candidate_set(const std::filesystem::path& dir) {
    std::ifstream in(dir / "index.json");
    if (!in) throw IoError("cannot open candidate index in " + dir.string());
    nlohmann::json index;
    in >> index;

    CandidateSet cs;
    for (auto it = index.begin(); it != index.end(); ++it) {
        int id = std::stoi(it.key());
        Tensor t = load_tensor(dir / it.value().at("file").get<std::string>());
        if (t.rank() != 2) throw FormatError("candidate tensor must be [k,D]");
        CandidateEntry entry;
        entry.counts = it.value().at("counts").get<std::vector<std::size_t>>();
        for (std::size_t i = 0; i < t.shape[0]; ++i) {
            std::vector<double> v(t.shape[1]);
            for (std::size_t c = 0; c < t.shape[1]; ++c) v[c] = t.at(i, c);
            entry.prototypes.push_back(std::move(v));
        }
        cs.per_class[id] = std::move(entry);
    }
    return cs;
}

}  // namespace cpal
