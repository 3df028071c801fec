#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "cpal/errors.hpp"
#include "cpal/npy.hpp"
#include "cpal/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config;
    double tau = -1.0;
    int n_p = -1;
    int k = -1;
    long long bank_size = -1;
    double gamma = -1.0;
    std::string metric;
    std::string mode;
    int epochs = -1;
    long long batch_size = -1;
    long long seed = -1;
    std::string include_background;
    bool l1_pixel_sum = false;
};

void add_common(CLI::App* app, CommonOpts& o) {
    app->add_option("--config", o.config, "JSON file with configuration defaults");
    app->add_option("--tau", o.tau, "mask threshold on normalized activation");
    app->add_option("--np", o.n_p, "context prototypes per class");
    app->add_option("--k", o.k, "soft neighbors per anchor");
    app->add_option("--bank-size", o.bank_size, "support bank capacity per class");
    app->add_option("--gamma", o.gamma, "positiveness temperature divisor");
    app->add_option("--metric", o.metric, "relevance metric: l1, l2, cosine, dot")
        ->check(CLI::IsMember({"l1", "l2", "cosine", "dot"}));
    app->add_option("--mode", o.mode, "neighbor aggregation: uniform, weighted")
        ->check(CLI::IsMember({"uniform", "weighted"}));
    app->add_option("--epochs", o.epochs, "training epochs");
    app->add_option("--batch-size", o.batch_size, "images per bank-update batch");
    app->add_option("--seed", o.seed, "master random seed");
    app->add_option("--include-background", o.include_background,
                    "compare background channels in the consistency loss")
        ->check(CLI::IsMember({"true", "false"}));
    app->add_flag("--l1-pixel-sum", o.l1_pixel_sum,
                  "sum absolute map differences per channel instead of averaging");
}

cpal::RunConfig resolve_config(const CommonOpts& o) {
    cpal::RunConfig c;
    if (!o.config.empty()) c = cpal::load_run_config(o.config);
    if (o.tau >= 0.0) c.tau = o.tau;
    if (o.n_p >= 0) c.n_p = o.n_p;
    if (o.k >= 0) c.k = o.k;
    if (o.bank_size >= 0) c.bank_capacity = static_cast<std::size_t>(o.bank_size);
    if (o.gamma >= 0.0) c.gamma = o.gamma;
    if (!o.metric.empty()) c.metric = cpal::metric_from_string(o.metric);
    if (!o.mode.empty()) c.mode = cpal::aggregation_from_string(o.mode);
    if (o.epochs >= 0) c.epochs = o.epochs;
    if (o.batch_size >= 0) c.batch_size = static_cast<std::size_t>(o.batch_size);
    if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
    if (!o.include_background.empty()) c.include_background = o.include_background == "true";
    if (o.l1_pixel_sum) c.l1_pixel_sum = true;
    return c;
}

void print_variant(const cpal::VariantResult& v) {
    std::printf("%-14s best mIoU %.4f at t=%.2f  confuser rate %.4f", v.name.c_str(),
                v.seed.best_miou, v.seed.best_threshold, v.confuser_rate);
    if (v.ocsem >= 0.0) std::printf("  ocsem %.4f", v.ocsem);
    std::printf("\n");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"context prototype-aware localization map pipeline"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic benchmark dataset");
    std::string gen_out, gen_config;
    long long gen_seed = -1;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--config", gen_config, "JSON dataset description");
    gen->add_option("--seed", gen_seed, "dataset random seed");

    auto* run = app.add_subcommand("run", "run the pipeline and write maps plus a report");
    CommonOpts run_opts;
    std::string run_data, run_out;
    add_common(run, run_opts);
    run->add_option("--data", run_data, "dataset manifest path")->required();
    run->add_option("--out", run_out, "output directory")->required();

    auto* ablate = app.add_subcommand("ablate", "run the component ablation and K sweep");
    CommonOpts ablate_opts;
    std::string ablate_data, ablate_out;
    add_common(ablate, ablate_opts);
    ablate->add_option("--data", ablate_data, "dataset manifest path")->required();
    ablate->add_option("--out", ablate_out, "report output directory");

    auto* eval = app.add_subcommand("eval", "score stored maps (or the raw baseline) by seed mIoU");
    CommonOpts eval_opts;
    std::string eval_data, eval_maps;
    add_common(eval, eval_opts);
    eval->add_option("--data", eval_data, "dataset manifest path")->required();
    eval->add_option("--maps", eval_maps, "run output directory holding map tensors");

    auto* grad = app.add_subcommand("grad-check", "verify the analytic loss gradient");
    long long grad_seed = 7, grad_trials = 100;
    bool grad_corrupt = false;
    grad->add_option("--seed", grad_seed, "random seed");
    grad->add_option("--trials", grad_trials, "number of random instances");
    grad->add_flag("--corrupt-gradient", grad_corrupt, "perturb the gradient (harness sanity)")
        ->group(""); // hidden

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            cpal::DatasetSpec spec;
            if (!gen_config.empty()) spec = cpal::load_dataset_spec(gen_config);
            if (gen_seed >= 0) spec.seed = static_cast<std::uint64_t>(gen_seed);
            const std::string manifest = cpal::gen_synthetic(spec, gen_out);
            std::printf("wrote %s (%zu images)\n", manifest.c_str(), spec.images);
        } else if (run->parsed()) {
            const cpal::RunConfig cfg = resolve_config(run_opts);
            const cpal::Dataset ds = cpal::load_dataset(run_data);
            cpal::SupportBank bank(cfg.bank_capacity);
            const cpal::PipelineRun pr = cpal::run_pipeline(ds, bank, cfg);

            cpal::EvalReport report;
            report.config = cfg;
            std::vector<cpal::ImageMaps> preds;
            std::vector<cpal::Tensor> gts;
            for (std::size_t i = 0; i < ds.images.size(); ++i) {
                preds.push_back(cpal::foreground_maps(pr.pacams[i]));
                gts.push_back(ds.images[i].gt);
            }
            cpal::VariantResult v;
            v.name = "run";
            v.k = cfg.use_top_k ? cfg.k : 0;
            v.seed = cpal::evaluate_seed_miou(preds, gts, ds.spec.classes,
                                              cpal::default_thresholds());
            v.ocsem = pr.ocsem;
            v.confuser_rate = cpal::confuser_false_activation(
                preds, gts, ds.spec.confuser_pairs, v.seed.best_threshold);
            v.loss_trajectory = pr.epoch_losses;
            report.variants.push_back(v);

            cpal::write_run_outputs(ds, pr, report, run_out);
            print_variant(v);
            std::printf("report: %s/report.json\n", run_out.c_str());
        } else if (ablate->parsed()) {
            const cpal::RunConfig cfg = resolve_config(ablate_opts);
            const cpal::Dataset ds = cpal::load_dataset(ablate_data);
            const cpal::EvalReport report = cpal::run_ablation(ds, cfg);
            for (const cpal::VariantResult& v : report.variants) print_variant(v);
            for (const cpal::VariantResult& v : report.k_sweep) print_variant(v);
            if (!ablate_out.empty()) {
                std::error_code ec;
                std::filesystem::create_directories(ablate_out, ec);
                if (ec) throw cpal::IoError("cannot create directory " + ablate_out);
                cpal::write_report(report, ablate_out + "/report.json");
                std::printf("report: %s/report.json\n", ablate_out.c_str());
            }
        } else if (eval->parsed()) {
            const cpal::RunConfig cfg = resolve_config(eval_opts);
            const cpal::Dataset ds = cpal::load_dataset(eval_data);
            std::vector<cpal::ImageMaps> preds;
            std::vector<cpal::Tensor> gts;
            for (const cpal::ImageRecord& rec : ds.images) gts.push_back(rec.gt);

            if (eval_maps.empty()) {
                for (const cpal::ImageRecord& rec : ds.images)
                    preds.push_back(cpal::foreground_maps(
                        cpal::build_activation_set(rec.features, ds.weights, rec.labels)));
            } else {
                std::ifstream in(eval_maps + "/report.json");
                if (!in) throw cpal::IoError("cannot open " + eval_maps + "/report.json");
                nlohmann::json j;
                in >> j;
                for (const nlohmann::json& entry : j.at("maps")) {
                    cpal::ImageMaps m;
                    if (!entry.at("file").is_null()) {
                        const cpal::Tensor stacked =
                            cpal::load_tensor(eval_maps + "/" +
                                              entry.at("file").get<std::string>());
                        if (stacked.rank() != 3)
                            throw cpal::DimensionError("stored maps must be [C,H,W]");
                        const std::size_t c = stacked.shape[0], h = stacked.shape[1],
                                          w = stacked.shape[2];
                        for (std::size_t ch = 0; ch < c; ++ch) {
                            std::vector<double> plane(
                                stacked.data.begin() +
                                    static_cast<std::ptrdiff_t>(ch * h * w),
                                stacked.data.begin() +
                                    static_cast<std::ptrdiff_t>((ch + 1) * h * w));
                            m.maps.emplace_back(std::vector<std::size_t>{h, w},
                                                std::move(plane));
                        }
                        m.class_ids = entry.at("class_ids").get<std::vector<int>>();
                    }
                    preds.push_back(std::move(m));
                }
            }
            const cpal::SeedEval seed = cpal::evaluate_seed_miou(
                preds, gts, ds.spec.classes, cpal::default_thresholds());
            const double rate = cpal::confuser_false_activation(
                preds, gts, ds.spec.confuser_pairs, seed.best_threshold);
            std::printf("best mIoU %.4f at t=%.2f  confuser rate %.4f  (%s)\n",
                        seed.best_miou, seed.best_threshold, rate,
                        eval_maps.empty() ? "raw activation baseline" : "stored maps");
            (void)cfg;
        } else if (grad->parsed()) {
            if (grad_trials < 1) {
                std::fprintf(stderr, "error: --trials must be >= 1\n");
                return 1;
            }
            const cpal::GradCheckResult r =
                cpal::grad_check(static_cast<std::uint64_t>(grad_seed),
                                 static_cast<int>(grad_trials), grad_corrupt);
            std::printf("max relative error %.3e over %d trials: %s\n", r.max_rel_err,
                        r.trials, r.pass ? "pass" : "FAIL");
            return r.pass ? 0 : 1;
        }
    } catch (const cpal::IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const cpal::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
