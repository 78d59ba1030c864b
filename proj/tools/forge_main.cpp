// forge: craft and evaluate image perturbations that steer VLM outputs.

#include <CLI11.hpp>
#include <iostream>

#include <json.hpp>

#include "forge/attack/pgd.hpp"
#include "forge/defend/defend.hpp"
#include "forge/eval/success.hpp"
#include "forge/harness/experiment.hpp"
#include "forge/io.hpp"
#include "forge/semantics/report.hpp"
#include "forge/semantics/ssim.hpp"
#include "forge/synth/synth.hpp"

using nlohmann::json;

namespace {

// Accepts "0.125", "32/255", etc.
double parse_eps(const std::string& s) {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return std::stod(s);
    return std::stod(s.substr(0, slash)) / std::stod(s.substr(slash + 1));
}

int cmd_synth(const std::string& label, const std::string& objective_id_str, int n,
              const std::string& oracle_id, std::int64_t seed, const std::string& out,
              const std::string& image_ref, double train_fraction) {
    const auto objective = forge::parse_objective(objective_id_str);
    const forge::MetaInstruction instruction{objective};
    auto oracle = forge::synth::resolve_oracle(oracle_id);
    const auto evaluator = forge::eval::resolve_evaluator("stub", objective, oracle);

    forge::synth::SynthConfig cfg;
    cfg.questions_per_image = n;
    cfg.seed = seed;
    const auto judge = [&](const std::string& answer) {
        return forge::eval::evaluate_meta_objective(evaluator, answer);
    };
    const auto dataset = forge::synth::synth_dataset(*oracle, image_ref.empty() ? label : image_ref,
                                                     label, instruction, judge, cfg, train_fraction);
    forge::io::write_dataset(out, dataset);
    std::cout << "wrote " << out << " (" << dataset.train.size() << " train / " << dataset.test.size()
              << " test)\n";
    return 0;
}

int cmd_attack(const std::string& image_path, const std::string& label, const std::string& dataset_path,
               const std::string& model_id, const std::string& norm, const std::string& eps, int steps,
               const std::string& step_size, int batch, std::int64_t seed, int adaptive_jpeg,
               const std::string& fixed_target, const std::string& out) {
    forge::ImageRecord image;
    image.pixels = forge::io::read_png(image_path);
    image.label = label;
    image.source_id = std::filesystem::path(image_path).stem().string();

    forge::AttackConfig cfg;
    cfg.budget.norm = forge::parse_norm(norm);
    cfg.budget.epsilon = parse_eps(eps);
    cfg.iterations = steps;
    cfg.step_size = parse_eps(step_size);
    cfg.batch_size = batch;
    cfg.seed = seed;
    if (adaptive_jpeg > 0) cfg.adaptive_jpeg = adaptive_jpeg;

    const auto adapter = forge::vlm::resolve_adapter(model_id);
    forge::AttackArtifact artifact;
    if (!fixed_target.empty()) {
        artifact = forge::attack::fixed_target_attack(*adapter, image, {fixed_target}, cfg);
    } else {
        const auto dataset = forge::io::read_dataset(dataset_path);
        artifact = forge::attack::pgd_train(*adapter, image, dataset, cfg);
    }
    forge::io::write_artifact(out, artifact);
    std::cout << "wrote " << out << " (loss " << artifact.loss_trace.front() << " -> "
              << artifact.loss_trace.back() << ")\n";
    return 0;
}

int cmd_evaluate(const std::string& artifact_dir, const std::string& dataset_path,
                 const std::string& model_id, const std::string& evaluator_id,
                 const std::string& condition, const std::string& pixel_form, int max_new,
                 const std::string& out) {
    const auto artifact = forge::io::read_artifact(artifact_dir);
    const auto dataset = forge::io::read_dataset(dataset_path);
    const auto adapter = forge::vlm::resolve_adapter(model_id);
    auto oracle = forge::synth::resolve_oracle("stub");
    const auto evaluator = forge::eval::resolve_evaluator(evaluator_id, dataset.objective, oracle);

    forge::eval::SuccessOptions opts;
    opts.max_new_tokens = max_new;
    opts.pixel_form = pixel_form;
    const forge::Image adv = pixel_form == "png8"
                                 ? forge::io::read_png(std::filesystem::path(artifact_dir) / "perturbed.png")
                                 : artifact.perturbed_pixels;

    json report;
    report["objective"] = forge::objective_id(dataset.objective);
    report["model_id"] = adapter->model_id();
    report["pixel_form"] = pixel_form;
    report["decoding"] = "greedy";
    auto add = [&](forge::eval::Condition cond, const forge::Image& pixels) {
        const auto rep =
            forge::eval::attack_success_rate(*adapter, pixels, dataset.test, evaluator, cond, opts);
        report["conditions"][forge::eval::condition_name(cond)] = {
            {"rate", rep.rate}, {"n", rep.n}, {"per_prompt", rep.per_prompt}, {"outputs", rep.outputs}};
    };
    if (condition == "all" || condition == "no_attack")
        add(forge::eval::Condition::NoAttack, artifact.base_image.pixels);
    if (condition == "all" || condition == "explicit")
        add(forge::eval::Condition::ExplicitInstruction, artifact.base_image.pixels);
    if (condition == "all" || condition == "our_attack") add(forge::eval::Condition::OurAttack, adv);

    forge::io::write_text_file(out, report.dump(2) + "\n");
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_semantics(const std::string& pairs_path, const std::string& model_id, const std::string& out) {
    const json manifest = json::parse(forge::io::read_text_file(pairs_path));
    const auto adapter = forge::vlm::resolve_adapter(model_id);

    std::ostringstream csv;
    csv << "kind,embed_cos,ssim\n";
    csv.precision(17);
    for (const auto& entry : manifest.at("pairs")) {
        const std::string kind = entry.at("kind").get<std::string>();
        const forge::Image a = forge::io::read_png(entry.at("reference").get<std::string>());
        forge::Image b;
        if (entry.contains("artifact"))
            b = forge::io::read_f32(std::filesystem::path(entry.at("artifact").get<std::string>()) /
                                    "perturbed.f32");
        else
            b = forge::io::read_png(entry.at("other").get<std::string>());
        csv << kind << "," << forge::semantics::embedding_cosine(*adapter, a, b) << ","
            << forge::semantics::ssim(a, b) << "\n";
    }
    forge::io::write_text_file(out, csv.str());
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_defend(const std::string& image_path, const std::string& model_id, int jpeg_quality,
               bool anomaly, double threshold, int repeats, std::int64_t seed, const std::string& out) {
    const forge::Image image = forge::io::read_png(image_path);
    json verdict;
    if (jpeg_quality > 0) {
        const forge::Image defended = forge::defend::jpeg_defense(image, jpeg_quality);
        const auto defended_path = std::filesystem::path(out).parent_path() / "defended.png";
        forge::io::write_png(defended_path.empty() ? "defended.png" : defended_path, defended);
        verdict["jpeg"] = {{"quality", jpeg_quality},
                           {"ssim_vs_input", forge::semantics::ssim(image, defended)},
                           {"defended_png", defended_path.string()}};
    }
    if (anomaly) {
        const auto adapter = forge::vlm::resolve_adapter(model_id);
        const auto specs = forge::defend::default_augmentation_suite(seed);
        const auto v = forge::defend::detect(*adapter, image, specs, repeats, threshold);
        verdict["anomaly"]["mean_similarity"] = v.mean_similarity;
        verdict["anomaly"]["threshold"] = v.threshold;
        verdict["anomaly"]["flagged"] = v.flagged;
        for (const auto& [method, stat] : v.per_augmentation)
            verdict["anomaly"]["per_augmentation"][method] = {{"mean", stat.mean},
                                                              {"stddev", stat.stddev}};
    }
    forge::io::write_text_file(out, verdict.dump(2) + "\n");
    std::cout << "wrote " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"image soft-prompt attack toolkit"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize a spun QA dataset");
    std::string sy_label, sy_objective, sy_oracle = "stub", sy_out, sy_ref;
    int sy_n = 60;
    std::int64_t sy_seed = 0;
    double sy_train_fraction = 2.0 / 3.0;
    synth->add_option("--label", sy_label, "image label")->required();
    synth->add_option("--objective", sy_objective, "objective id, e.g. sentiment:positive")->required();
    synth->add_option("--n", sy_n, "questions per image");
    synth->add_option("--oracle", sy_oracle, "text oracle id");
    synth->add_option("--seed", sy_seed, "seed");
    synth->add_option("--image-ref", sy_ref, "image reference id stored in the sidecar");
    synth->add_option("--train-fraction", sy_train_fraction, "train split fraction");
    synth->add_option("--out", sy_out, "output dataset.jsonl")->required();

    // attack
    auto* attack = app.add_subcommand("attack", "train an image soft prompt with PGD");
    std::string at_image, at_label = "image", at_dataset, at_model = "toy", at_norm = "linf";
    std::string at_eps = "32/255", at_step = "1/255", at_fixed, at_out;
    int at_steps = 2000, at_batch = 8, at_adaptive = 0;
    std::int64_t at_seed = 0;
    attack->add_option("--image", at_image, "base image PNG")->required();
    attack->add_option("--label", at_label, "image label (artifact metadata)");
    attack->add_option("--dataset", at_dataset, "dataset.jsonl from `synth`");
    attack->add_option("--model", at_model, "model id");
    attack->add_option("--norm", at_norm, "linf|l2");
    attack->add_option("--eps", at_eps, "budget, accepts fractions like 32/255");
    attack->add_option("--steps", at_steps, "PGD iterations");
    attack->add_option("--step-size", at_step, "PGD step size");
    attack->add_option("--batch", at_batch, "batch size");
    attack->add_option("--seed", at_seed, "seed");
    attack->add_option("--adaptive-jpeg", at_adaptive, "train through differentiable JPEG at quality Q");
    attack->add_option("--fixed-target", at_fixed, "fixed-target baseline string instead of a dataset");
    attack->add_option("--out", at_out, "artifact output directory")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "meta-objective success rates for an artifact");
    std::string ev_artifact, ev_dataset, ev_model = "toy", ev_evaluator = "stub", ev_condition = "all";
    std::string ev_pixel_form = "float32", ev_out;
    int ev_max_new = 48;
    evaluate->add_option("--artifact", ev_artifact, "artifact directory")->required();
    evaluate->add_option("--dataset", ev_dataset, "dataset.jsonl")->required();
    evaluate->add_option("--model", ev_model, "model id");
    evaluate->add_option("--evaluator", ev_evaluator, "evaluator id");
    evaluate->add_option("--condition", ev_condition, "all|no_attack|explicit|our_attack");
    evaluate->add_option("--pixel-form", ev_pixel_form, "float32|png8");
    evaluate->add_option("--max-new-tokens", ev_max_new, "generation budget");
    evaluate->add_option("--out", ev_out, "report.json")->required();

    // semantics
    auto* semantics = app.add_subcommand("semantics", "similarity metrics for image pairs");
    std::string se_pairs, se_model = "toy", se_out;
    semantics->add_option("--pairs", se_pairs, "pairs manifest.json")->required();
    semantics->add_option("--model", se_model, "model id");
    semantics->add_option("--out", se_out, "output CSV")->required();

    // defend
    auto* defend = app.add_subcommand("defend", "inference-time defenses");
    std::string de_image, de_model = "toy", de_out;
    int de_jpeg = 0, de_repeats = 5;
    bool de_anomaly = false;
    double de_threshold = 0.0;
    std::int64_t de_seed = 0;
    defend->add_option("--image", de_image, "input PNG")->required();
    defend->add_option("--model", de_model, "model id (anomaly detection)");
    defend->add_option("--jpeg", de_jpeg, "apply JPEG defense at quality Q");
    defend->add_flag("--anomaly", de_anomaly, "augmentation-embedding anomaly detection");
    defend->add_option("--threshold", de_threshold, "anomaly decision threshold");
    defend->add_option("--repeats", de_repeats, "augmentation repeats per method");
    defend->add_option("--seed", de_seed, "seed");
    defend->add_option("--out", de_out, "verdict.json")->required();

    // run
    auto* run = app.add_subcommand("run", "run a config-driven experiment grid");
    std::string run_config;
    run->add_option("--config", run_config, "experiment.json")->required();

    // report
    auto* report = app.add_subcommand("report", "re-render tables from stored artifacts");
    std::string report_dir;
    report->add_option("--dir", report_dir, "experiment output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_synth(sy_label, sy_objective, sy_n, sy_oracle, sy_seed, sy_out, sy_ref,
                             sy_train_fraction);
        if (attack->parsed())
            return cmd_attack(at_image, at_label, at_dataset, at_model, at_norm, at_eps, at_steps,
                              at_step, at_batch, at_seed, at_adaptive, at_fixed, at_out);
        if (evaluate->parsed())
            return cmd_evaluate(ev_artifact, ev_dataset, ev_model, ev_evaluator, ev_condition,
                                ev_pixel_form, ev_max_new, ev_out);
        if (semantics->parsed()) return cmd_semantics(se_pairs, se_model, se_out);
        if (defend->parsed())
            return cmd_defend(de_image, de_model, de_jpeg, de_anomaly, de_threshold, de_repeats,
                              de_seed, de_out);
        if (run->parsed()) {
            const auto cfg = forge::harness::load_experiment_config(run_config);
            const auto bundle = forge::harness::run_experiment(cfg);
            std::cout << "wrote " << bundle.tables.size() << " tables to " << bundle.output_dir << "\n";
            for (const auto& cell : bundle.incomplete_cells)
                std::cerr << "incomplete cell: " << cell << "\n";
            return bundle.incomplete_cells.empty() ? 0 : 2;
        }
        if (report->parsed()) {
            const auto bundle = forge::harness::render_tables(report_dir);
            std::cout << "re-rendered " << bundle.tables.size() << " tables in " << report_dir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
