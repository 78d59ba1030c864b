#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "forge/eval/success.hpp"
#include "forge/synth/synth.hpp"
#include "forge/types.hpp"

namespace forge::harness {

struct ImageEntry {
    std::string path;
    std::string label;
    std::string id;
};

struct DefenseConfig {
    std::vector<int> jpeg_qualities = {50, 75, 95};
    int anomaly_repeats = 5;
};

struct ExperimentConfig {
    std::int64_t seed = 0;
    std::filesystem::path output_dir;
    std::vector<ImageEntry> images;
    std::vector<MetaObjective> objectives;
    std::vector<std::string> model_ids;
    std::string oracle_id = "stub";
    std::string evaluator_id = "stub";
    synth::SynthConfig synth;
    double train_fraction = 2.0 / 3.0;
    AttackConfig attack;
    int max_new_tokens = 48;
    std::vector<std::string> fixed_targets;  // jailbreak baseline strings; empty disables
    std::optional<DefenseConfig> defenses;
    std::vector<std::string> transfer_model_ids;
    bool norm_ablation = false;
    int workers = 1;
    std::string pixel_form = "float32";  // "float32" or "png8": which artifact form is evaluated

    void validate() const;
};

ExperimentConfig load_experiment_config(const std::filesystem::path& json_path);

// Everything run_experiment produces; tables are also persisted as CSVs in
// the output directory, and every number is recomputable from the per-cell
// JSON artifacts via render_tables().
struct ReportBundle {
    std::filesystem::path output_dir;
    std::map<std::string, std::string> tables;  // csv name -> contents
    std::vector<std::string> incomplete_cells;
    std::string manifest_json;
};

// Cross product of images x objectives x models: synth -> attack -> eval ->
// semantics (-> defenses). Cells are isolated (one failure doesn't stop the
// run), resumable via content-hash markers, and deterministic given the seed.
ReportBundle run_experiment(const ExperimentConfig& config);

// Re-render the table set from stored cell artifacts only.
ReportBundle render_tables(const std::filesystem::path& output_dir);

// Success of an existing artifact against a different model.
eval::SuccessReport evaluate_transfer(const AttackArtifact& artifact,
                                      const vlm::VlmAdapter& target_adapter,
                                      const std::vector<QAPair>& test_pairs,
                                      const eval::ObjectiveEvaluator& evaluator,
                                      int max_new_tokens = 48);

// Sentiment ablation over the fixed budget set (L2: 6, 12, 24; Linf: 16/255,
// 32/255): one attack per (budget, objective, image, model), pooled per
// budget row, plus the two instruction baselines. Writes norm_table.csv under
// config.output_dir and returns its contents. Requires at least one
// sentiment objective in the config.
std::string norm_ablation(const ExperimentConfig& config);

}  // namespace forge::harness
