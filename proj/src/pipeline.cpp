#include "cpal/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "cpal/errors.hpp"
#include "cpal/npy.hpp"
#include "cpal/rng.hpp"

namespace cpal {

namespace {

using nlohmann::json;

void validate_config(const RunConfig& c) {
    if (c.tau < 0.0 || c.tau >= 1.0) throw DomainError("config: tau must lie in [0, 1)");
    if (c.bank_capacity == 0) throw DomainError("config: bank_capacity must be >= 1");
    if (c.n_p < 1) throw DomainError("config: n_p must be >= 1");
    if (c.k < 1) throw DomainError("config: k must be >= 1");
    if (c.gamma <= 0.0) throw DomainError("config: gamma must be positive");
    if (c.lambda_bce < 0.0 || c.lambda_self < 0.0)
        throw DomainError("config: loss coefficients must be non-negative");
    if (c.epochs < 1) throw DomainError("config: epochs must be >= 1");
    if (c.batch_size == 0) throw DomainError("config: batch_size must be >= 1");
    if (c.restarts < 1) throw DomainError("config: restarts must be >= 1");
}

json config_to_json(const RunConfig& c) {
    return json{{"aggregation_mode", aggregation_name(c.mode)},
                {"bank_capacity", c.bank_capacity},
                {"batch_size", c.batch_size},
                {"epochs", c.epochs},
                {"gamma", c.gamma},
                {"include_background", c.include_background},
                {"k", c.k},
                {"l1_pixel_sum", c.l1_pixel_sum},
                {"lambda_bce", c.lambda_bce},
                {"lambda_self", c.lambda_self},
                {"metric", metric_name(c.metric)},
                {"n_p", c.n_p},
                {"restarts", c.restarts},
                {"seed", c.seed},
                {"tau", c.tau},
                {"use_alignment", c.use_alignment},
                {"use_positiveness", c.use_positiveness},
                {"use_top_k", c.use_top_k}};
}

json variant_to_json(const VariantResult& v) {
    json losses = json::array();
    for (const LossReport& l : v.loss_trajectory)
        losses.push_back({{"bce", l.bce}, {"self", l.self}, {"total", l.total}});
    return json{{"best_miou", v.seed.best_miou},
                {"best_threshold", v.seed.best_threshold},
                {"confuser_rate", v.confuser_rate},
                {"k", v.k > 0 ? json(v.k) : json(nullptr)},
                {"loss_trajectory", losses},
                {"miou_curve", v.seed.miou_curve},
                {"name", v.name},
                {"ocsem", v.ocsem < 0.0 ? json(nullptr) : json(v.ocsem)},
                {"thresholds", v.seed.thresholds}};
}

std::vector<Tensor> collect_gt(const Dataset& ds) {
    std::vector<Tensor> gts;
    gts.reserve(ds.images.size());
    for (const ImageRecord& r : ds.images) gts.push_back(r.gt);
    return gts;
}

std::size_t nearest_by_distance(const CandidateEntry& entry, const std::vector<double>& v) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entry.prototypes.size(); ++i) {
        double d = 0.0;
        for (std::size_t c = 0; c < v.size(); ++c) {
            double diff = entry.prototypes[i][c] - v[c];
            d += diff * diff;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

} // namespace

RunConfig load_run_config(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw IoError("cannot open " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(json_path + ": " + e.what());
    }
    RunConfig c;
    c.tau = j.value("tau", c.tau);
    c.bank_capacity = j.value("bank_capacity", c.bank_capacity);
    c.n_p = j.value("n_p", c.n_p);
    c.k = j.value("k", c.k);
    c.gamma = j.value("gamma", c.gamma);
    if (j.contains("metric")) c.metric = metric_from_string(j.at("metric").get<std::string>());
    c.lambda_bce = j.value("lambda_bce", c.lambda_bce);
    c.lambda_self = j.value("lambda_self", c.lambda_self);
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    if (j.contains("aggregation_mode"))
        c.mode = aggregation_from_string(j.at("aggregation_mode").get<std::string>());
    c.include_background = j.value("include_background", c.include_background);
    c.l1_pixel_sum = j.value("l1_pixel_sum", c.l1_pixel_sum);
    c.restarts = j.value("restarts", c.restarts);
    c.seed = j.value("seed", c.seed);
    c.use_top_k = j.value("use_top_k", c.use_top_k);
    c.use_positiveness = j.value("use_positiveness", c.use_positiveness);
    c.use_alignment = j.value("use_alignment", c.use_alignment);
    return c;
}

ImageMaps foreground_maps(const ActivationSet& act) {
    ImageMaps m;
    m.maps = act.foreground;
    m.class_ids.assign(act.class_order.begin(),
                       act.class_order.begin() +
                           static_cast<std::ptrdiff_t>(act.foreground.size()));
    return m;
}

ImageMaps foreground_maps(const PacamSet& pacams) {
    ImageMaps m;
    m.maps = pacams.maps;
    m.class_ids = pacams.class_order;
    return m;
}

std::vector<double> default_thresholds() {
    std::vector<double> t;
    for (int i = 1; i <= 19; ++i) t.push_back(static_cast<double>(i) * 0.05);
    return t;
}

SeedEval evaluate_seed_miou(const std::vector<ImageMaps>& preds, const std::vector<Tensor>& gts,
                            int classes, const std::vector<double>& thresholds) {
    if (preds.size() != gts.size())
        throw DimensionError("seed eval: prediction and ground-truth counts differ");
    if (classes < 1) throw DomainError("seed eval: classes must be >= 1");
    if (thresholds.empty()) throw DomainError("seed eval: threshold list is empty");
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i].maps.size() != preds[i].class_ids.size())
            throw DimensionError("seed eval: map/id count mismatch");
        for (const Tensor& m : preds[i].maps)
            if (!m.same_shape(gts[i]))
                throw DimensionError("seed eval: map extent differs from ground truth");
    }

    const int background = classes;
    SeedEval out;
    out.thresholds = thresholds;
    for (double t : thresholds) {
        std::vector<std::int64_t> inter(static_cast<std::size_t>(classes) + 1, 0);
        std::vector<std::int64_t> uni(static_cast<std::size_t>(classes) + 1, 0);
        for (std::size_t i = 0; i < preds.size(); ++i) {
            const ImageMaps& p = preds[i];
            const Tensor& gt = gts[i];
            for (std::size_t px = 0; px < gt.size(); ++px) {
                int pred = background;
                double best = t;
                for (std::size_t m = 0; m < p.maps.size(); ++m)
                    if (p.maps[m].data[px] > best) {
                        best = p.maps[m].data[px];
                        pred = p.class_ids[m];
                    }
                const double gv = gt.data[px];
                const int gtl = static_cast<int>(gv);
                if (gv != std::floor(gv) || gtl < 0 || gtl > background)
                    throw DomainError("seed eval: ground-truth label out of range");
                if (pred == gtl) {
                    ++inter[static_cast<std::size_t>(gtl)];
                    ++uni[static_cast<std::size_t>(gtl)];
                } else {
                    ++uni[static_cast<std::size_t>(pred)];
                    ++uni[static_cast<std::size_t>(gtl)];
                }
            }
        }
        double acc = 0.0;
        int seen = 0;
        for (std::size_t c = 0; c <= static_cast<std::size_t>(classes); ++c) {
            if (uni[c] == 0) continue;
            acc += static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
            ++seen;
        }
        const double miou = seen > 0 ? acc / static_cast<double>(seen) : 0.0;
        out.miou_curve.push_back(miou);
        if (miou > out.best_miou || out.miou_curve.size() == 1) {
            out.best_miou = miou;
            out.best_threshold = t;
        }
    }
    return out;
}

double confuser_false_activation(const std::vector<ImageMaps>& preds,
                                 const std::vector<Tensor>& gts,
                                 const std::vector<ConfuserPair>& pairs, double threshold) {
    if (preds.size() != gts.size())
        throw DimensionError("confuser rate: prediction and ground-truth counts differ");
    std::int64_t fired = 0, total = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const ImageMaps& p = preds[i];
        const Tensor& gt = gts[i];
        for (const ConfuserPair& pair : pairs)
            for (int dir = 0; dir < 2; ++dir) {
                const int activating = dir == 0 ? pair.first : pair.second;
                const int region = dir == 0 ? pair.second : pair.first;
                const auto it =
                    std::find(p.class_ids.begin(), p.class_ids.end(), activating);
                if (it == p.class_ids.end()) continue;
                const Tensor& m =
                    p.maps[static_cast<std::size_t>(it - p.class_ids.begin())];
                for (std::size_t px = 0; px < gt.size(); ++px) {
                    if (static_cast<int>(gt.data[px]) != region) continue;
                    ++total;
                    if (m.data[px] > threshold) ++fired;
                }
            }
    }
    return total > 0 ? static_cast<double>(fired) / static_cast<double>(total) : 0.0;
}

EpochResult run_epoch(const Dataset& ds, SupportBank& bank, const RunConfig& cfg,
                      int epoch_index) {
    validate_config(cfg);
    if (ds.images.empty()) throw DegenerateInputError("run_epoch: dataset is empty");

    EpochResult result;
    if (!bank.class_ids().empty())
        result.candidates = candidate_set(bank, static_cast<std::size_t>(cfg.n_p),
                                          cfg.restarts,
                                          mix_seed(cfg.seed, 1000 + static_cast<std::uint64_t>(
                                                                        epoch_index)));
    const Aggregation effective_mode = cfg.use_positiveness ? cfg.mode : Aggregation::uniform;

    struct ImageState {
        ActivationSet act;
        std::vector<int> present;                           // foreground ids, ascending
        std::vector<std::optional<Prototype>> prototypes;   // matching present
    };

    std::map<int, std::vector<std::pair<std::vector<double>, std::size_t>>> ocsem_pairs;

    for (std::size_t start = 0; start < ds.images.size(); start += cfg.batch_size) {
        const std::size_t stop = std::min(ds.images.size(), start + cfg.batch_size);

        std::vector<ImageState> batch;
        std::map<int, std::vector<std::vector<double>>> batch_instances;
        for (std::size_t i = start; i < stop; ++i) {
            const ImageRecord& rec = ds.images[i];
            ImageState st;
            st.act = build_activation_set(rec.features, ds.weights, rec.labels);
            st.present.assign(st.act.class_order.begin(),
                              st.act.class_order.begin() +
                                  static_cast<std::ptrdiff_t>(st.act.foreground.size()));
            const Tensor z = project_identity(rec.features);
            for (std::size_t c = 0; c < st.present.size(); ++c) {
                const Tensor mask = binary_mask(st.act.foreground[c], cfg.tau);
                auto proto = instance_prototype(z, mask, st.present[c], st.act.foreground[c]);
                if (proto) {
                    bank.push(*proto);
                    batch_instances[st.present[c]].push_back(proto->vec);
                }
                st.prototypes.push_back(std::move(proto));
            }
            batch.push_back(std::move(st));
        }

        std::map<int, std::vector<double>> shift;
        if (cfg.use_alignment)
            for (const auto& [cls, instances] : batch_instances) {
                const auto it = result.candidates.per_class.find(cls);
                if (it == result.candidates.per_class.end() || it->second.prototypes.empty())
                    continue;
                shift[cls] = compute_shift(it->second.prototypes, instances);
            }

        for (std::size_t i = start; i < stop; ++i) {
            const ImageRecord& rec = ds.images[i];
            ImageState& st = batch[i - start];

            PacamSet ps;
            ps.class_order = st.present;
            ps.mode = effective_mode;
            for (std::size_t c = 0; c < st.present.size(); ++c) {
                const int cls = st.present[c];
                const auto cand_it = result.candidates.per_class.find(cls);
                const bool have_candidates = cand_it != result.candidates.per_class.end() &&
                                             !cand_it->second.prototypes.empty();
                const auto& proto = st.prototypes[c];

                if (have_candidates && proto) {
                    std::vector<double> anchor = proto->vec;
                    const auto sh = shift.find(cls);
                    if (sh != shift.end())
                        for (std::size_t d = 0; d < anchor.size(); ++d)
                            anchor[d] += sh->second[d];

                    const CandidateEntry& entry = cand_it->second;
                    const PositivenessVector pv =
                        positiveness(anchor, entry, cfg.gamma, cfg.metric);
                    const std::size_t k = cfg.use_top_k
                                              ? std::min<std::size_t>(
                                                    static_cast<std::size_t>(cfg.k),
                                                    entry.prototypes.size())
                                              : entry.prototypes.size();
                    const SoftNeighborSet nbrs = top_k_soft_neighbors(anchor, entry, pv, k);
                    ps.maps.push_back(pacam_map(rec.features, nbrs, effective_mode));

                    if (entry.prototypes.size() >= 2)
                        ocsem_pairs[cls].push_back({anchor, nearest_by_distance(entry, anchor)});
                } else if (proto) {
                    SoftNeighborSet self;
                    self.indices = {0};
                    self.prototypes = {proto->vec};
                    self.scores = {1.0};
                    ps.maps.push_back(pacam_map(rec.features, self, Aggregation::uniform));
                } else if (have_candidates) {
                    SoftNeighborSet all;
                    const CandidateEntry& entry = cand_it->second;
                    for (std::size_t n = 0; n < entry.prototypes.size(); ++n) {
                        all.indices.push_back(n);
                        all.prototypes.push_back(entry.prototypes[n]);
                        all.scores.push_back(1.0);
                    }
                    ps.maps.push_back(pacam_map(rec.features, all, Aggregation::uniform));
                } else {
                    ps.maps.push_back(Tensor::zeros(st.act.foreground[c].shape));
                }
            }

            const double bce = bce_loss(compute_logits(rec.features, ds.weights), rec.labels);
            std::vector<Tensor> target = st.act.foreground;
            std::vector<Tensor> produced = ps.maps;
            if (cfg.include_background) {
                target.push_back(st.act.background);
                produced.push_back(ps.maps.empty() ? st.act.background
                                                   : background_map(ps.maps));
            }
            const double self =
                produced.empty() ? 0.0 : self_loss(target, produced, cfg.l1_pixel_sum);
            result.losses.push_back(total_loss(bce, self, cfg.lambda_bce, cfg.lambda_self));
            result.pacams.push_back(std::move(ps));
        }
    }

    for (const auto& [cls, pairs] : ocsem_pairs) {
        const CandidateEntry& entry = result.candidates.per_class.at(cls);
        const double frac = ocsem(entry.prototypes, pairs);
        result.ocsem_correct += static_cast<std::size_t>(
            std::llround(frac * static_cast<double>(pairs.size())));
        result.ocsem_total += pairs.size();
    }
    return result;
}

PipelineRun run_pipeline(const Dataset& ds, SupportBank& bank, const RunConfig& cfg) {
    validate_config(cfg);
    PipelineRun run;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        EpochResult er = run_epoch(ds, bank, cfg, epoch);
        LossReport mean;
        mean.lambda_bce = cfg.lambda_bce;
        mean.lambda_self = cfg.lambda_self;
        for (const LossReport& l : er.losses) {
            mean.bce += l.bce;
            mean.self += l.self;
            mean.total += l.total;
        }
        const double inv = 1.0 / static_cast<double>(er.losses.size());
        mean.bce *= inv;
        mean.self *= inv;
        mean.total *= inv;
        run.epoch_losses.push_back(mean);
        if (epoch == cfg.epochs - 1) {
            run.pacams = std::move(er.pacams);
            run.candidates = std::move(er.candidates);
            run.ocsem = er.ocsem_total > 0
                            ? static_cast<double>(er.ocsem_correct) /
                                  static_cast<double>(er.ocsem_total)
                            : -1.0;
        }
    }
    return run;
}

VariantResult evaluate_variant(const std::string& name, const Dataset& ds,
                               const RunConfig& cfg) {
    const std::vector<Tensor> gts = collect_gt(ds);
    const std::vector<double> thresholds = default_thresholds();

    VariantResult v;
    v.name = name;
    std::vector<ImageMaps> preds;
    if (name == "raw_cam") {
        for (const ImageRecord& rec : ds.images)
            preds.push_back(foreground_maps(build_activation_set(rec.features, ds.weights,
                                                                 rec.labels)));
    } else {
        SupportBank bank(cfg.bank_capacity);
        PipelineRun run = run_pipeline(ds, bank, cfg);
        for (const PacamSet& ps : run.pacams) preds.push_back(foreground_maps(ps));
        v.k = cfg.use_top_k ? cfg.k : 0;
        v.ocsem = run.ocsem;
        v.loss_trajectory = run.epoch_losses;
    }
    v.seed = evaluate_seed_miou(preds, gts, ds.spec.classes, thresholds);
    v.confuser_rate = confuser_false_activation(preds, gts, ds.spec.confuser_pairs,
                                                v.seed.best_threshold);
    return v;
}

EvalReport run_ablation(const Dataset& ds, const RunConfig& cfg) {
    validate_config(cfg);
    EvalReport report;
    report.config = cfg;

    const auto variant_config = [&cfg](bool top_k, bool pos, bool align) {
        RunConfig c = cfg;
        c.use_top_k = top_k;
        c.use_positiveness = pos;
        c.use_alignment = align;
        c.mode = pos ? Aggregation::weighted : Aggregation::uniform;
        return c;
    };

    report.variants.push_back(evaluate_variant("raw_cam", ds, cfg));
    report.variants.push_back(
        evaluate_variant("vanilla", ds, variant_config(false, false, false)));
    report.variants.push_back(
        evaluate_variant("top_k", ds, variant_config(true, false, false)));
    report.variants.push_back(
        evaluate_variant("positiveness", ds, variant_config(true, true, false)));
    report.variants.push_back(
        evaluate_variant("alignment", ds, variant_config(true, true, true)));

    for (int k : {10, 20, 50}) {
        RunConfig c = variant_config(true, true, true);
        c.k = k;
        char name[16];
        std::snprintf(name, sizeof(name), "k=%d", k);
        report.k_sweep.push_back(evaluate_variant(name, ds, c));
    }
    return report;
}

std::string report_json(const EvalReport& report) {
    json variants = json::array();
    for (const VariantResult& v : report.variants) variants.push_back(variant_to_json(v));
    json sweep = json::array();
    for (const VariantResult& v : report.k_sweep) sweep.push_back(variant_to_json(v));
    const json j{{"config", config_to_json(report.config)},
                 {"k_sweep", sweep},
                 {"tool", report.tool},
                 {"variants", variants}};
    return j.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << report_json(report);
    if (!out) throw IoError("failed writing " + path);
}

void write_run_outputs(const Dataset& ds, const PipelineRun& run, const EvalReport& report,
                       const std::string& out_dir) {
    if (run.pacams.size() != ds.images.size())
        throw DimensionError("run output: map count differs from dataset size");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create directory " + out_dir + ": " + ec.message());

    json maps = json::array();
    for (std::size_t i = 0; i < run.pacams.size(); ++i) {
        const PacamSet& ps = run.pacams[i];
        if (ps.maps.empty()) {
            maps.push_back({{"class_ids", json::array()}, {"file", nullptr}});
            continue;
        }
        const std::size_t h = ps.maps[0].shape[0], w = ps.maps[0].shape[1];
        Tensor stacked = Tensor::zeros({ps.maps.size(), h, w});
        for (std::size_t c = 0; c < ps.maps.size(); ++c)
            std::copy(ps.maps[c].data.begin(), ps.maps[c].data.end(),
                      stacked.data.begin() + static_cast<std::ptrdiff_t>(c * h * w));
        char name[32];
        std::snprintf(name, sizeof(name), "pacam_%03zu.npy", i);
        save_tensor(stacked, out_dir + "/" + name);
        maps.push_back({{"class_ids", ps.class_order}, {"file", name}});
    }

    json j = json::parse(report_json(report));
    j["maps"] = maps;
    const std::string path = out_dir + "/report.json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing " + path);
}

GradCheckResult grad_check(std::uint64_t seed, int trials, bool corrupt_gradient) {
    if (trials < 1) throw DomainError("grad_check: trials must be >= 1");
    const std::size_t h = 4, w = 4, d = 8;
    const double step = 1e-5;

    GradCheckResult result;
    result.trials = trials;
    for (int trial = 0; trial < trials; ++trial) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
        const Aggregation mode = trial % 2 == 0 ? Aggregation::weighted : Aggregation::uniform;
        const bool pixel_sum = trial % 5 == 0;

        Tensor f;
        std::vector<SoftNeighborSet> nbrs;
        std::vector<Tensor> target;
        bool accepted = false;
        for (int attempt = 0; attempt < 1000 && !accepted; ++attempt) {
            const std::size_t channels = 1 + rng.index(3);
            nbrs.assign(channels, {});
            target.assign(channels, Tensor());
            f = Tensor::zeros({h, w, d});
            for (double& x : f.data) x = rng.normal();
            for (std::size_t n = 0; n < channels; ++n) {
                const std::size_t k = 1 + rng.index(5);
                for (std::size_t i = 0; i < k; ++i) {
                    std::vector<double> p(d);
                    for (double& x : p) x = rng.normal();
                    nbrs[n].indices.push_back(i);
                    nbrs[n].prototypes.push_back(std::move(p));
                    nbrs[n].scores.push_back(rng.uniform(0.2, 1.0));
                }
                target[n] = Tensor::zeros({h, w});
                for (double& x : target[n].data) x = rng.uniform();
            }

            // reject instances near a ReLU or absolute-value kink
            accepted = true;
            for (std::size_t n = 0; n < channels && accepted; ++n) {
                std::vector<double> coeff(nbrs[n].size(), 1.0 / static_cast<double>(
                                                                    nbrs[n].size()));
                if (mode == Aggregation::weighted) {
                    double total = 0.0;
                    for (double s : nbrs[n].scores) total += s;
                    for (std::size_t i = 0; i < coeff.size(); ++i)
                        coeff[i] = nbrs[n].scores[i] / total;
                }
                for (std::size_t px = 0; px < h * w && accepted; ++px) {
                    std::vector<double> fj(f.data.begin() + static_cast<std::ptrdiff_t>(px * d),
                                           f.data.begin() +
                                               static_cast<std::ptrdiff_t>((px + 1) * d));
                    double pre = 0.0;
                    for (std::size_t i = 0; i < nbrs[n].size(); ++i)
                        pre += coeff[i] * cosine_similarity(fj, nbrs[n].prototypes[i]);
                    const double diff = std::max(pre, 0.0) - target[n].data[px];
                    if (std::abs(pre) < 1e-3 || std::abs(diff) < 1e-3) accepted = false;
                }
            }
        }
        if (!accepted) throw DomainError("grad_check: could not sample a kink-free instance");

        Tensor analytic = grad_self_wrt_features(f, nbrs, target, mode, pixel_sum);
        if (corrupt_gradient)
            for (double& g : analytic.data) g *= 1.001;

        const auto loss_at = [&](const Tensor& feat) {
            std::vector<Tensor> maps;
            for (std::size_t n = 0; n < nbrs.size(); ++n)
                maps.push_back(pacam_map(feat, nbrs[n], mode));
            return self_loss(target, maps, pixel_sum);
        };

        Tensor probe = f;
        for (std::size_t i = 0; i < probe.size(); ++i) {
            const double keep = probe.data[i];
            probe.data[i] = keep + step;
            const double hi = loss_at(probe);
            probe.data[i] = keep - step;
            const double lo = loss_at(probe);
            probe.data[i] = keep;
            const double fd = (hi - lo) / (2.0 * step);
            const double a = analytic.data[i];
            const double scale = std::max(std::abs(a), std::abs(fd));
            if (scale < 1e-7) continue;
            result.max_rel_err = std::max(result.max_rel_err, std::abs(a - fd) / scale);
        }
    }
    result.pass = result.max_rel_err <= 1e-4;
    return result;
}

} // namespace cpal
