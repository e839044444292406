// cae: command line front end for the clustering pipeline.
//
// Exit codes: 0 success, 2 usage or configuration error, 3 data-format error,
// 4 numerical-stability error.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "cae/error.hpp"
#include "cae/pipeline.hpp"
#include "cae/synth.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;
constexpr int kNumeric = 4;

int run_command(const cae::PipelineConfig& cfg, const cae::ExportOptions& exports) {
    const auto result = cae::run_pipeline(cfg);
    cae::write_outputs(result, cfg.out, exports);
    if (result.metrics) cae::print_report(std::cout, *result.metrics);
    std::cout << "wrote " << (cfg.out / "report.json").string() << '\n';
    return 0;
}

int synth_command(const cae::SynthSpec& spec, const fs::path& out) {
    const auto data = cae::generate_synthetic(spec);
    fs::create_directories(out);
    cae::save_embeddings(data.images, out / "images.emb");
    cae::save_embeddings(data.nouns, out / "nouns.emb");
    cae::save_embeddings(data.captions, out / "captions.emb");
    cae::save_labels(data.labels, out / "labels.lbl");
    std::cout << "wrote " << data.images.rows() << " images, " << data.nouns.rows() << " nouns, "
              << data.captions.rows() << " captions to " << out.string() << '\n';
    return 0;
}

int ablate_command(const fs::path& config, const fs::path& sweep, const fs::path& out) {
    const auto base = cae::load_config(config);
    const auto grid = cae::load_sweep(sweep);
    const auto table = cae::run_ablation_suite(base, grid);
    fs::create_directories(out);
    cae::write_ablation_csv(table, out / "ablation.csv");
    std::size_t failed = 0;
    for (const auto& row : table.rows) failed += !row.error.empty();
    std::cout << table.rows.size() << " runs, " << failed << " failed; wrote " << (out / "ablation.csv").string()
              << '\n';
    return 0;
}

int eval_command(const fs::path& pred, const fs::path& truth, const std::string& norm, bool as_json) {
    const auto y_pred = cae::load_labels(pred);
    const auto y_true = cae::load_labels(truth);
    const auto report = cae::evaluate(y_true, y_pred, cae::nmi_normalization_from_string(norm));
    if (as_json)
        std::cout << nlohmann::ordered_json{{"nmi", report.nmi}, {"acc", report.acc}, {"ari", report.ari}}.dump(2)
                  << '\n';
    else
        cae::print_report(std::cout, report);
    return 0;
}

int csv_command(const fs::path& csv, const std::string& modality, const fs::path& out) {
    std::ifstream in(csv);
    if (!in) throw cae::IoError("cannot open " + csv.string());
    const auto m = cae::read_csv_embeddings(in, cae::modality_from_string(modality));
    cae::save_embeddings(m, out);
    std::cout << "wrote " << m.rows() << "x" << m.dim() << " to " << out.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free image clustering with transported text semantics"};
    app.require_subcommand(1);

    // run
    cae::PipelineConfig cfg;
    cae::ExportOptions exports;
    fs::path base_config;
    std::size_t clusters = 0;
    std::string mode = "cae", nmi_norm = "arithmetic";
    bool no_norm_counterparts = false, no_renorm_fused = false;
    auto* run = app.add_subcommand("run", "Cluster one embedding set");
    run->add_option("--config", base_config, "Key-value file with defaults (flags override)");
    run->add_option("--images", cfg.images, "Image EMB1 file");
    run->add_option("--nouns", cfg.nouns, "Noun bank EMB1 file");
    run->add_option("--captions", cfg.captions, "Caption bank EMB1 file");
    run->add_option("--labels", cfg.labels, "Ground-truth LBL1 file");
    run->add_option("--clusters", clusters, "Final cluster count (default: distinct labels)");
    run->add_option("--topk", cfg.topk, "Texts retrieved per semantic center");
    run->add_option("--centers-divisor", cfg.centers_divisor, "Images per semantic center");
    run->add_option("--epsilon", cfg.epsilon, "Entropic regularization");
    run->add_option("--gamma", cfg.gamma, "Fusion temperature");
    run->add_option("--softmax-temperature", cfg.softmax_temperature, "Temperature for softmax_cae");
    run->add_option("--seed", cfg.seed, "RNG seed");
    run->add_option("--mode", mode, "cae|image_only|noun_only|caption_only|concat|sum|softmax_cae");
    run->add_option("--threads", cfg.threads, "Worker threads (1 = reference mode)");
    run->add_option("--nmi-normalization", nmi_norm, "arithmetic|geometric|min|max");
    run->add_flag("--no-normalize-counterparts", no_norm_counterparts, "Keep raw counterparts");
    run->add_flag("--no-renormalize-fused", no_renorm_fused, "Skip fused row normalization");
    run->add_flag("--timings", cfg.record_timings, "Record per-stage wall-clock time in the report");
    run->add_flag("--export-fused", exports.fused, "Write fused.emb");
    run->add_flag("--export-beta", exports.beta, "Write beta.csv");
    run->add_flag("--export-plans", exports.plans, "Write transport plans");
    run->add_flag("--export-space", exports.space, "Write semantic centers and selected texts");
    run->add_option("--out", cfg.out, "Output directory")->required();

    // synth
    cae::SynthSpec spec;
    fs::path synth_out;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic benchmark");
    synth->add_option("--classes", spec.n_classes)->required();
    synth->add_option("--per-class", spec.per_class)->required();
    synth->add_option("--dim", spec.dim)->required();
    synth->add_option("--seed", spec.seed)->required();
    synth->add_option("--separation", spec.class_separation);
    synth->add_option("--noise", spec.noise_sigma);
    synth->add_option("--alignment", spec.text_alignment);
    synth->add_option("--nouns", spec.noun_bank, "Noun bank size");
    synth->add_option("--captions", spec.caption_bank, "Caption bank size");
    synth->add_option("--nuisance-rank", spec.nuisance_rank);
    synth->add_option("--nuisance-scale", spec.nuisance_scale);
    synth->add_option("--nuisance-spread", spec.nuisance_spread);
    synth->add_option("--ambiguity", spec.noun_ambiguity);
    synth->add_option("--out", synth_out)->required();

    // ablate
    fs::path ablate_config, sweep_file, ablate_out;
    auto* ablate = app.add_subcommand("ablate", "Run a mode x parameter sweep");
    ablate->add_option("--config", ablate_config)->required();
    ablate->add_option("--sweep", sweep_file)->required();
    ablate->add_option("--out", ablate_out)->required();

    // eval
    fs::path pred, truth;
    std::string eval_norm = "arithmetic";
    bool eval_json = false;
    auto* eval = app.add_subcommand("eval", "Score predicted labels against ground truth");
    eval->add_option("--pred", pred)->required();
    eval->add_option("--truth", truth)->required();
    eval->add_option("--nmi-normalization", eval_norm);
    eval->add_flag("--json", eval_json);

    // csv2emb
    fs::path csv_in, csv_out;
    std::string csv_modality = "image";
    auto* csv = app.add_subcommand("csv2emb", "Convert a debug CSV matrix to EMB1");
    csv->add_option("--csv", csv_in)->required();
    csv->add_option("--modality", csv_modality);
    csv->add_option("--out", csv_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*run) {
            if (!base_config.empty()) {
                // Flags given on the command line take precedence over the file.
                cae::PipelineConfig merged = cae::load_config(base_config);
                for (const auto* opt : run->get_options()) {
                    if (opt->count() == 0) continue;
                    const std::string name = opt->get_name(false, true);
                    if (name == "--config" || name == "--help") continue;
                    std::string key = name.substr(2);
                    if (key == "no-normalize-counterparts") cae::apply_setting(merged, "normalize_counterparts", "false");
                    else if (key == "no-renormalize-fused") cae::apply_setting(merged, "renormalize_fused", "false");
                    else if (key == "timings") cae::apply_setting(merged, "record_timings", "true");
                    else if (key.rfind("export-", 0) != 0) cae::apply_setting(merged, key, opt->as<std::string>());
                }
                cfg = merged;
            } else {
                if (run->count("--clusters")) cfg.clusters = clusters;
                cfg.mode = cae::mode_from_string(mode);
                cfg.nmi_normalization = cae::nmi_normalization_from_string(nmi_norm);
                cfg.normalize_counterparts = !no_norm_counterparts;
                cfg.renormalize_fused = !no_renorm_fused;
            }
            return run_command(cfg, exports);
        }
        if (*synth) return synth_command(spec, synth_out);
        if (*ablate) return ablate_command(ablate_config, sweep_file, ablate_out);
        if (*eval) return eval_command(pred, truth, eval_norm, eval_json);
        if (*csv) return csv_command(csv_in, csv_modality, csv_out);
    } catch (const cae::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const cae::NumericError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kNumeric;
    } catch (const cae::Error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
