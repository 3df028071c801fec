#include "cpal/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "cpal/errors.hpp"
#include "cpal/npy.hpp"
#include "cpal/rng.hpp"

namespace cpal {

namespace {

using nlohmann::json;

void validate_spec(const DatasetSpec& s) {
    if (s.images == 0) throw DomainError("dataset spec: images must be >= 1");
    if (s.height == 0 || s.width == 0 || s.depth == 0)
        throw DomainError("dataset spec: height, width, depth must be >= 1");
    if (s.classes < 1) throw DomainError("dataset spec: classes must be >= 1");
    if (s.attributes_per_class < 1)
        throw DomainError("dataset spec: attributes_per_class must be >= 1");
    if (s.instances_per_class < 1)
        throw DomainError("dataset spec: instances_per_class must be >= 1");
    if (s.background_archetypes < 1)
        throw DomainError("dataset spec: background_archetypes must be >= 1");
    const std::size_t directions =
        static_cast<std::size_t>(s.classes) * static_cast<std::size_t>(s.attributes_per_class) +
        static_cast<std::size_t>(s.background_archetypes);
    if (directions > s.depth)
        throw DomainError("dataset spec: depth too small for " + std::to_string(directions) +
                          " archetype directions");
    if (std::abs(s.confuser_cos) > 0.999 || std::abs(s.intra_class_cos) > 0.999)
        throw DomainError("dataset spec: archetype cosines must lie in (-1, 1)");
    if (s.noise_sigma < 0.0) throw DomainError("dataset spec: noise_sigma must be >= 0");
    if (s.blob_min == 0 || s.blob_min > s.blob_max)
        throw DomainError("dataset spec: need 1 <= blob_min <= blob_max");
    if (s.blob_max > s.height || s.blob_max > s.width)
        throw DomainError("dataset spec: blob_max exceeds image extent");
    if (s.presence_prob < 0.0 || s.presence_prob > 1.0)
        throw DomainError("dataset spec: presence_prob must lie in [0, 1]");
    for (const ConfuserPair& p : s.confuser_pairs) {
        if (p.first < 0 || p.first >= s.classes || p.second < 0 || p.second >= s.classes)
            throw DomainError("dataset spec: confuser pair class id out of range");
        if (p.first == p.second)
            throw DomainError("dataset spec: confuser pair must name two distinct classes");
        if (p.probability < 0.0 || p.probability > 1.0)
            throw DomainError("dataset spec: confuser probability must lie in [0, 1]");
    }
}

// Mutually orthonormal direction vectors via Gram-Schmidt over Gaussian draws.
std::vector<std::vector<double>> orthonormal_directions(std::size_t count, std::size_t depth,
                                                        Rng& rng) {
    std::vector<std::vector<double>> basis;
    basis.reserve(count);
    while (basis.size() < count) {
        std::vector<double> v(depth);
        for (double& x : v) x = rng.normal();
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t c = 0; c < depth; ++c) dot += v[c] * b[c];
            for (std::size_t c = 0; c < depth; ++c) v[c] -= dot * b[c];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm < 1e-8) continue;
        for (double& x : v) x /= norm;
        basis.push_back(std::move(v));
    }
    return basis;
}

struct Archetypes {
    // class_attr[n][k] is the feature direction of attribute k of class n
    std::vector<std::vector<std::vector<double>>> class_attr;
    std::vector<std::vector<double>> background;
};

Archetypes build_archetypes(const DatasetSpec& s, Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(s.classes);
    const std::size_t a = static_cast<std::size_t>(s.attributes_per_class);
    const std::size_t b = static_cast<std::size_t>(s.background_archetypes);
    const auto basis = orthonormal_directions(n * a + b, s.depth, rng);

    Archetypes arch;
    arch.class_attr.assign(n, std::vector<std::vector<double>>(a));
    for (std::size_t cls = 0; cls < n; ++cls) arch.class_attr[cls][0] = basis[cls];

    // Confuser partners share a controlled cosine with their first class.
    const double cc = s.confuser_cos;
    const double cs = std::sqrt(1.0 - cc * cc);
    for (const ConfuserPair& p : s.confuser_pairs) {
        const auto& ua = arch.class_attr[static_cast<std::size_t>(p.first)][0];
        auto& ub = arch.class_attr[static_cast<std::size_t>(p.second)][0];
        const auto& slot = basis[static_cast<std::size_t>(p.second)];
        for (std::size_t c = 0; c < s.depth; ++c) ub[c] = cc * ua[c] + cs * slot[c];
    }

    const double ic = s.intra_class_cos;
    const double is = std::sqrt(1.0 - ic * ic);
    for (std::size_t cls = 0; cls < n; ++cls)
        for (std::size_t k = 1; k < a; ++k) {
            const auto& base = arch.class_attr[cls][0];
            const auto& slot = basis[n + cls * (a - 1) + (k - 1)];
            auto& v = arch.class_attr[cls][k];
            v.resize(s.depth);
            for (std::size_t c = 0; c < s.depth; ++c) v[c] = ic * base[c] + is * slot[c];
        }

    arch.background.assign(basis.begin() + static_cast<std::ptrdiff_t>(n * a), basis.end());
    return arch;
}

std::string image_name(const char* prefix, std::size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.npy", prefix, i);
    return buf;
}

json spec_to_json(const DatasetSpec& s) {
    json pairs = json::array();
    for (const ConfuserPair& p : s.confuser_pairs)
        pairs.push_back({{"first", p.first}, {"second", p.second}, {"probability", p.probability}});
    return json{{"images", s.images},
                {"height", s.height},
                {"width", s.width},
                {"depth", s.depth},
                {"classes", s.classes},
                {"attributes_per_class", s.attributes_per_class},
                {"instances_per_class", s.instances_per_class},
                {"confuser_pairs", pairs},
                {"confuser_cos", s.confuser_cos},
                {"intra_class_cos", s.intra_class_cos},
                {"noise_sigma", s.noise_sigma},
                {"background_archetypes", s.background_archetypes},
                {"blob_min", s.blob_min},
                {"blob_max", s.blob_max},
                {"presence_prob", s.presence_prob},
                {"seed", s.seed}};
}

DatasetSpec spec_from_json(const json& j) {
    DatasetSpec s;
    s.images = j.value("images", s.images);
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.depth = j.value("depth", s.depth);
    s.classes = j.value("classes", s.classes);
    s.attributes_per_class = j.value("attributes_per_class", s.attributes_per_class);
    s.instances_per_class = j.value("instances_per_class", s.instances_per_class);
    if (j.contains("confuser_pairs")) {
        s.confuser_pairs.clear();
        for (const json& e : j.at("confuser_pairs")) {
            ConfuserPair p;
            p.first = e.value("first", p.first);
            p.second = e.value("second", p.second);
            p.probability = e.value("probability", p.probability);
            s.confuser_pairs.push_back(p);
        }
    }
    s.confuser_cos = j.value("confuser_cos", s.confuser_cos);
    s.intra_class_cos = j.value("intra_class_cos", s.intra_class_cos);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.background_archetypes = j.value("background_archetypes", s.background_archetypes);
    s.blob_min = j.value("blob_min", s.blob_min);
    s.blob_max = j.value("blob_max", s.blob_max);
    s.presence_prob = j.value("presence_prob", s.presence_prob);
    s.seed = j.value("seed", s.seed);
    return s;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return j;
}

} // namespace

std::string gen_synthetic(const DatasetSpec& spec, const std::string& out_dir) {
    validate_spec(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

    Rng arch_rng(mix_seed(spec.seed, 7));
    const Archetypes arch = build_archetypes(spec, arch_rng);

    const std::size_t n = static_cast<std::size_t>(spec.classes);
    const std::size_t a = static_cast<std::size_t>(spec.attributes_per_class);
    const std::size_t h = spec.height, w = spec.width, d = spec.depth;
    const double bg_id = static_cast<double>(spec.classes);

    Tensor weights({n, d}, std::vector<double>(n * d, 0.0));
    for (std::size_t cls = 0; cls < n; ++cls)
        for (std::size_t c = 0; c < d; ++c) weights.at(cls, c) = arch.class_attr[cls][0][c];
    save_tensor(weights, out_dir + "/weights.npy");

    json images = json::array();
    for (std::size_t i = 0; i < spec.images; ++i) {
        Rng rng(mix_seed(spec.seed, 100000 + i));

        std::vector<bool> present(n, false);
        bool any = false;
        for (std::size_t cls = 0; cls < n; ++cls) {
            present[cls] = rng.uniform() < spec.presence_prob;
            any = any || present[cls];
        }
        if (!any) present[rng.index(n)] = true;
        for (const ConfuserPair& p : spec.confuser_pairs) {
            const auto pa = static_cast<std::size_t>(p.first);
            const auto pb = static_cast<std::size_t>(p.second);
            if (present[pa] != present[pb] && rng.uniform() < p.probability)
                present[pa] = present[pb] = true;
        }

        Tensor f = Tensor::zeros({h, w, d});
        Tensor gt({h, w}, std::vector<double>(h * w, bg_id));
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const auto& bg = arch.background[rng.index(arch.background.size())];
                for (std::size_t c = 0; c < d; ++c) f.at(y, x, c) = bg[c];
            }

        std::vector<bool> occupied(h * w, false);
        for (std::size_t cls = 0; cls < n; ++cls) {
            if (!present[cls]) continue;
            // The first instance always shows attribute 0, so the attribute the
            // classifier is aligned to appears in every positive image; further
            // instances draw their attribute at random.
            for (int inst = 0; inst < spec.instances_per_class; ++inst) {
                const std::size_t k = inst == 0 ? 0 : rng.index(a);
                std::size_t bh = 0, bw = 0, y0 = 0, x0 = 0;
                bool placed = false;
                for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
                    bh = spec.blob_min + rng.index(spec.blob_max - spec.blob_min + 1);
                    bw = spec.blob_min + rng.index(spec.blob_max - spec.blob_min + 1);
                    y0 = rng.index(h - bh + 1);
                    x0 = rng.index(w - bw + 1);
                    placed = true;
                    for (std::size_t y = y0; y < y0 + bh && placed; ++y)
                        for (std::size_t x = x0; x < x0 + bw && placed; ++x)
                            placed = !occupied[y * w + x];
                }
                for (std::size_t y = y0; y < y0 + bh; ++y)
                    for (std::size_t x = x0; x < x0 + bw; ++x) {
                        occupied[y * w + x] = true;
                        gt.at(y, x) = static_cast<double>(cls);
                        for (std::size_t c = 0; c < d; ++c)
                            f.at(y, x, c) = arch.class_attr[cls][k][c];
                    }
            }
        }

        if (spec.noise_sigma > 0.0)
            for (double& v : f.data) v += spec.noise_sigma * rng.normal();

        std::vector<int> labels(n, 0);
        for (double v : gt.data)
            if (v < bg_id) labels[static_cast<std::size_t>(v)] = 1;

        const std::string fname = image_name("img", i);
        const std::string gname = image_name("gt", i);
        save_tensor(f, out_dir + "/" + fname);
        save_tensor(gt, out_dir + "/" + gname);
        images.push_back({{"features", fname}, {"gt", gname}, {"labels", labels}});
    }

    json manifest{{"classes", spec.classes},
                  {"height", spec.height},
                  {"width", spec.width},
                  {"depth", spec.depth},
                  {"background_id", spec.classes},
                  {"weights", "weights.npy"},
                  {"spec", spec_to_json(spec)},
                  {"images", images}};
    const std::string path = out_dir + "/manifest.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << manifest.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path);
    return path;
}

Dataset load_dataset(const std::string& manifest_path) {
    const json manifest = read_json_file(manifest_path);
    const std::string dir = std::filesystem::path(manifest_path).parent_path().string();
    const auto resolve = [&dir](const std::string& rel) {
        return dir.empty() ? rel : dir + "/" + rel;
    };

    Dataset ds;
    if (manifest.contains("spec")) ds.spec = spec_from_json(manifest.at("spec"));
    ds.spec.classes = manifest.value("classes", ds.spec.classes);
    if (ds.spec.classes < 1) throw FormatError(manifest_path + ": classes must be >= 1");
    ds.weights = load_tensor(resolve(manifest.at("weights").get<std::string>()));
    if (ds.weights.rank() != 2 ||
        ds.weights.shape[0] != static_cast<std::size_t>(ds.spec.classes))
        throw DimensionError("weights tensor must be [classes, depth]");

    for (const json& e : manifest.at("images")) {
        ImageRecord rec;
        rec.feature_path = e.at("features").get<std::string>();
        rec.gt_path = e.at("gt").get<std::string>();
        rec.features = load_tensor(resolve(rec.feature_path));
        rec.gt = load_tensor(resolve(rec.gt_path));
        rec.labels = e.at("labels").get<std::vector<int>>();
        if (rec.features.rank() != 3) throw DimensionError("image features must be [H,W,D]");
        if (rec.gt.rank() != 2 || rec.gt.shape[0] != rec.features.shape[0] ||
            rec.gt.shape[1] != rec.features.shape[1])
            throw DimensionError("ground truth must match feature map extent");
        if (rec.labels.size() != static_cast<std::size_t>(ds.spec.classes))
            throw DimensionError("label vector length must equal class count");
        ds.images.push_back(std::move(rec));
    }
    if (ds.images.empty()) throw FormatError(manifest_path + ": no images listed");
    return ds;
}

DatasetSpec load_dataset_spec(const std::string& json_path) {
    return spec_from_json(read_json_file(json_path));
}

} // namespace cpal
