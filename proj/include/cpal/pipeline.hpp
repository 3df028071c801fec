#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cpal/cam.hpp"
#include "cpal/context.hpp"
#include "cpal/pacam.hpp"
#include "cpal/prototypes.hpp"
#include "cpal/synthetic.hpp"
#include "cpal/tensor.hpp"

namespace cpal {

struct RunConfig {
    double tau = 0.1;
    std::size_t bank_capacity = 1000;
    int n_p = 50;
    int k = 20;
    double gamma = 1.0;
    Metric metric = Metric::dot;
    double lambda_bce = 1.0;
    double lambda_self = 1.0;
    int epochs = 3;
    std::size_t batch_size = 64;
    Aggregation mode = Aggregation::weighted;
    bool include_background = true;
    bool l1_pixel_sum = false;
    int restarts = 10;
    std::uint64_t seed = 2026;
    bool use_top_k = true;
    bool use_positiveness = true;
    bool use_alignment = true;
};

RunConfig load_run_config(const std::string& json_path);

// Per-image prediction maps handed to the evaluator: one map per present
// class, ids ascending; pixels below threshold fall to the background class.
struct ImageMaps {
    std::vector<Tensor> maps;
    std::vector<int> class_ids;
};

ImageMaps foreground_maps(const ActivationSet& act);
ImageMaps foreground_maps(const PacamSet& pacams);

struct SeedEval {
    std::vector<double> thresholds;
    std::vector<double> miou_curve;
    double best_miou = 0.0;
    double best_threshold = 0.0;
};

std::vector<double> default_thresholds();

SeedEval evaluate_seed_miou(const std::vector<ImageMaps>& preds, const std::vector<Tensor>& gts,
                            int classes, const std::vector<double>& thresholds);

// Fraction of ground-truth pixels of a confuser class where its partner's
// map fires above the threshold, aggregated over all pairs and directions.
double confuser_false_activation(const std::vector<ImageMaps>& preds,
                                 const std::vector<Tensor>& gts,
                                 const std::vector<ConfuserPair>& pairs, double threshold);

struct EpochResult {
    std::vector<PacamSet> pacams;       // one per image, in dataset order
    std::vector<LossReport> losses;     // one per image
    CandidateSet candidates;            // the set this epoch selected from
    std::size_t ocsem_correct = 0;      // nearest-by-distance also nearest-by-cosine
    std::size_t ocsem_total = 0;
};

EpochResult run_epoch(const Dataset& ds, SupportBank& bank, const RunConfig& cfg,
                      int epoch_index);

struct PipelineRun {
    std::vector<PacamSet> pacams;          // final epoch
    std::vector<LossReport> epoch_losses;  // per-epoch means
    CandidateSet candidates;               // final epoch's selection pool
    double ocsem = -1.0;                   // -1 when no class had >= 2 candidates
};

PipelineRun run_pipeline(const Dataset& ds, SupportBank& bank, const RunConfig& cfg);

struct VariantResult {
    std::string name;
    int k = 0; // 0 when the variant does not select neighbors
    SeedEval seed;
    double ocsem = -1.0;
    double confuser_rate = 0.0;
    std::vector<LossReport> loss_trajectory;
};

// Runs one configuration end to end and scores the resulting maps. The name
// "raw_cam" short-circuits to scoring the activation maps directly.
VariantResult evaluate_variant(const std::string& name, const Dataset& ds,
                               const RunConfig& cfg);

struct EvalReport {
    RunConfig config;
    std::vector<VariantResult> variants;
    std::vector<VariantResult> k_sweep;
    std::string tool = "cpal 0.1.0";
};

EvalReport run_ablation(const Dataset& ds, const RunConfig& cfg);

std::string report_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::string& path);

// `run` subcommand output: report.json plus one [C,H,W] map tensor per image.
void write_run_outputs(const Dataset& ds, const PipelineRun& run, const EvalReport& report,
                       const std::string& out_dir);

struct GradCheckResult {
    double max_rel_err = 0.0;
    int trials = 0;
    bool pass = false;
};

// Compares the analytic consistency-loss gradient against central finite
// differences on random kink-avoiding instances.
GradCheckResult grad_check(std::uint64_t seed, int trials, bool corrupt_gradient = false);

} // namespace cpal
