#include "cae/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cae/error.hpp"

namespace cae {
namespace {

using Clock = std::chrono::steady_clock;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string canonical_key(std::string_view key) {
    std::string k = trim(key);
    for (char& c : k)
        if (c == '-') c = '_';
    return k;
}

template <class T>
T parse_number(std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    T out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
        throw ConfigError("bad value '" + v + "' for " + std::string(key));
    return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
    const std::string v = trim(value);
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("bad boolean '" + v + "' for " + std::string(key));
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto end = comma == std::string_view::npos ? s.size() : comma;
        std::string item = trim(s.substr(start, end - start));
        if (!item.empty()) out.push_back(std::move(item));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

// Reads "key = value" lines, skipping blanks and '#' comments.
std::vector<std::pair<std::string, std::string>> read_key_values(std::istream& in, const std::string& source) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
        out.emplace_back(canonical_key(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

bool is_path_key(std::string_view k) {
    return k == "images" || k == "nouns" || k == "captions" || k == "labels" || k == "out";
}

template <class F>
auto staged(const char* stage, F&& f) {
    const std::string tag = std::string("[") + stage + "] ";
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(tag + e.what());
    } catch (const FormatError& e) {
        throw FormatError(tag + e.what());
    } catch (const ShapeError& e) {
        throw ShapeError(tag + e.what());
    } catch (const IoError& e) {
        throw IoError(tag + e.what());
    } catch (const NumericError& e) {
        throw NumericError(tag + e.what());
    }
}

class StageTimer {
public:
    explicit StageTimer(std::vector<std::pair<std::string, double>>& sink) : sink_(sink) {}
    void lap(const char* stage) {
        const auto now = Clock::now();
        sink_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }

private:
    std::vector<std::pair<std::string, double>>& sink_;
    Clock::time_point last_ = Clock::now();
};

std::size_t distinct_count(const LabelVector& labels) {
    return std::set<std::uint32_t>(labels.begin(), labels.end()).size();
}

struct ModalityOutput {
    EmbeddingMatrix vectors;
    TextDiagnostics diag;
    TextSelection selection;
    std::optional<TransportPlan> plan;
};

ModalityOutput text_counterpart(const EmbeddingMatrix& images, const EmbeddingMatrix& bank,
                                const EmbeddingMatrix& centers, const PipelineConfig& cfg) {
    TextSelection sel = staged("semantic_space", [&] { return select_texts(bank, centers, cfg.topk); });
    return staged("transport", [&]() -> ModalityOutput {
        if (cfg.mode == Mode::softmax_cae) {
            auto soft = softmax_counterpart(images, sel.embeddings, cfg.softmax_temperature);
            auto vectors = cfg.normalize_counterparts ? l2_normalize(soft.vectors) : soft.vectors;
            Matrix as_plan = soft.weights;
            for (double& v : as_plan.data()) v /= static_cast<double>(as_plan.rows());
            const TextDiagnostics diag{sel.indices.size(), marginal_error(as_plan).max(), 0};
            return {std::move(vectors), diag, std::move(sel), std::nullopt};
        }
        const SimilarityMatrix sims = cosine_similarity(images, sel.embeddings);
        const SinkhornConfig sk{cfg.epsilon, cfg.sinkhorn_max_iter, cfg.marginal_tol, true};
        TransportPlan plan = sinkhorn(cost_matrix(sims), sk);
        auto vectors = counterpart(images, sel.embeddings, plan, sims, cfg.normalize_counterparts);
        const TextDiagnostics diag{sel.indices.size(), plan.marginal_error, plan.iterations_used};
        return {std::move(vectors), diag, std::move(sel), std::move(plan)};
    });
}

}  // namespace

std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::cae: return "cae";
        case Mode::image_only: return "image_only";
        case Mode::noun_only: return "noun_only";
        case Mode::caption_only: return "caption_only";
        case Mode::concat: return "concat";
        case Mode::sum: return "sum";
        case Mode::softmax_cae: return "softmax_cae";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view s) {
    for (Mode m : {Mode::cae, Mode::image_only, Mode::noun_only, Mode::caption_only, Mode::concat, Mode::sum,
                   Mode::softmax_cae})
        if (to_string(m) == s) return m;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

bool mode_needs_nouns(Mode m) { return m != Mode::image_only && m != Mode::caption_only; }
bool mode_needs_captions(Mode m) { return m != Mode::image_only && m != Mode::noun_only; }

void PipelineConfig::validate() const {
    if (clusters && *clusters < 1) throw ConfigError("clusters must be >= 1");
    if (topk < 1) throw ConfigError("topk must be >= 1");
    if (centers_divisor < 1) throw ConfigError("centers_divisor must be >= 1");
    for (auto [name, v] : {std::pair{"epsilon", epsilon}, {"gamma", gamma}, {"softmax_temperature", softmax_temperature},
                           {"kmeans_tol", kmeans_tol}, {"marginal_tol", marginal_tol}})
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be a positive number");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (kmeans_restarts < 1 || kmeans_max_iter < 1 || sinkhorn_max_iter < 1)
        throw ConfigError("iteration counts must be >= 1");
}

void apply_setting(PipelineConfig& cfg, std::string_view raw_key, std::string_view value) {
    const std::string key = canonical_key(raw_key);
    const std::string v = trim(value);
    if (key == "images") cfg.images = v;
    else if (key == "nouns") cfg.nouns = v;
    else if (key == "captions") cfg.captions = v;
    else if (key == "labels") cfg.labels = v;
    else if (key == "out") cfg.out = v;
    else if (key == "clusters") cfg.clusters = parse_number<std::size_t>(key, v);
    else if (key == "topk") cfg.topk = parse_number<std::size_t>(key, v);
    else if (key == "centers_divisor") cfg.centers_divisor = parse_number<std::size_t>(key, v);
    else if (key == "epsilon") cfg.epsilon = parse_number<double>(key, v);
    else if (key == "gamma") cfg.gamma = parse_number<double>(key, v);
    else if (key == "softmax_temperature") cfg.softmax_temperature = parse_number<double>(key, v);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, v);
    else if (key == "mode") cfg.mode = mode_from_string(v);
    else if (key == "normalize_counterparts") cfg.normalize_counterparts = parse_bool(key, v);
    else if (key == "renormalize_fused") cfg.renormalize_fused = parse_bool(key, v);
    else if (key == "threads") cfg.threads = parse_number<std::size_t>(key, v);
    else if (key == "kmeans_restarts") cfg.kmeans_restarts = parse_number<std::size_t>(key, v);
    else if (key == "kmeans_max_iter") cfg.kmeans_max_iter = parse_number<std::size_t>(key, v);
    else if (key == "kmeans_tol") cfg.kmeans_tol = parse_number<double>(key, v);
    else if (key == "sinkhorn_max_iter") cfg.sinkhorn_max_iter = parse_number<std::size_t>(key, v);
    else if (key == "marginal_tol") cfg.marginal_tol = parse_number<double>(key, v);
    else if (key == "nmi_normalization") cfg.nmi_normalization = nmi_normalization_from_string(v);
    else if (key == "record_timings") cfg.record_timings = parse_bool(key, v);
    else throw ConfigError("unknown setting '" + key + "'");
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    PipelineConfig cfg;
    const auto base = path.parent_path();
    for (auto& [key, value] : read_key_values(in, path.string())) {
        std::string v = value;
        if (is_path_key(key) && !v.empty() && std::filesystem::path(v).is_relative()) v = (base / v).string();
        apply_setting(cfg, key, v);
    }
    return cfg;
}

nlohmann::ordered_json config_to_json(const PipelineConfig& cfg) {
    nlohmann::ordered_json j;
    auto path_or_null = [](const std::filesystem::path& p) {
        return p.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(p.string());
    };
    j["images"] = path_or_null(cfg.images);
    j["nouns"] = path_or_null(cfg.nouns);
    j["captions"] = path_or_null(cfg.captions);
    j["labels"] = path_or_null(cfg.labels);
    j["clusters"] = cfg.clusters ? nlohmann::ordered_json(*cfg.clusters) : nlohmann::ordered_json(nullptr);
    j["topk"] = cfg.topk;
    j["centers_divisor"] = cfg.centers_divisor;
    j["epsilon"] = cfg.epsilon;
    j["gamma"] = cfg.gamma;
    j["softmax_temperature"] = cfg.softmax_temperature;
    j["seed"] = cfg.seed;
    j["mode"] = std::string(to_string(cfg.mode));
    j["normalize_counterparts"] = cfg.normalize_counterparts;
    j["renormalize_fused"] = cfg.renormalize_fused;
    j["threads"] = cfg.threads;
    j["kmeans_restarts"] = cfg.kmeans_restarts;
    j["kmeans_max_iter"] = cfg.kmeans_max_iter;
    j["kmeans_tol"] = cfg.kmeans_tol;
    j["sinkhorn_max_iter"] = cfg.sinkhorn_max_iter;
    j["marginal_tol"] = cfg.marginal_tol;
    static constexpr const char* kNorms[] = {"arithmetic", "geometric", "min", "max"};
    j["nmi_normalization"] = kNorms[static_cast<int>(cfg.nmi_normalization)];
    j["record_timings"] = cfg.record_timings;
    j["out"] = path_or_null(cfg.out);
    return j;
}

PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    try {
        auto path = [&](const char* key) {
            return j.at(key).is_null() ? std::filesystem::path() : std::filesystem::path(j.at(key).get<std::string>());
        };
        cfg.images = path("images");
        cfg.nouns = path("nouns");
        cfg.captions = path("captions");
        cfg.labels = path("labels");
        if (!j.at("clusters").is_null()) cfg.clusters = j.at("clusters").get<std::size_t>();
        cfg.topk = j.at("topk");
        cfg.centers_divisor = j.at("centers_divisor");
        cfg.epsilon = j.at("epsilon");
        cfg.gamma = j.at("gamma");
        cfg.softmax_temperature = j.at("softmax_temperature");
        cfg.seed = j.at("seed");
        cfg.mode = mode_from_string(j.at("mode").get<std::string>());
        cfg.normalize_counterparts = j.at("normalize_counterparts");
        cfg.renormalize_fused = j.at("renormalize_fused");
        cfg.threads = j.at("threads");
        cfg.kmeans_restarts = j.at("kmeans_restarts");
        cfg.kmeans_max_iter = j.at("kmeans_max_iter");
        cfg.kmeans_tol = j.at("kmeans_tol");
        cfg.sinkhorn_max_iter = j.at("sinkhorn_max_iter");
        cfg.marginal_tol = j.at("marginal_tol");
        cfg.nmi_normalization = nmi_normalization_from_string(j.at("nmi_normalization").get<std::string>());
        cfg.record_timings = j.at("record_timings");
        cfg.out = path("out");
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("config json: ") + e.what());
    }
    return cfg;
}

PipelineInputs load_inputs(const PipelineConfig& cfg) {
    return staged("load", [&] {
        if (cfg.images.empty()) throw ConfigError("images path is required");
        PipelineInputs in{load_embeddings(cfg.images), std::nullopt, std::nullopt, std::nullopt};
        if (!cfg.nouns.empty()) in.nouns = load_embeddings(cfg.nouns);
        if (!cfg.captions.empty()) in.captions = load_embeddings(cfg.captions);
        if (!cfg.labels.empty()) in.labels = load_labels(cfg.labels);
        return in;
    });
}

ClusteringResult run_pipeline(const PipelineConfig& cfg) {
    staged("config", [&] {
        cfg.validate();
        if (mode_needs_nouns(cfg.mode) && cfg.nouns.empty())
            throw ConfigError("mode " + std::string(to_string(cfg.mode)) + " needs a noun bank");
        if (mode_needs_captions(cfg.mode) && cfg.captions.empty())
            throw ConfigError("mode " + std::string(to_string(cfg.mode)) + " needs a caption bank");
        return 0;
    });
    const auto start = Clock::now();
    const PipelineInputs inputs = load_inputs(cfg);
    const double load_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    ClusteringResult result = run_on_data(inputs, cfg);
    if (cfg.record_timings) result.timings.insert(result.timings.begin(), {"load", load_seconds});
    return result;
}

ClusteringResult run_on_data(const PipelineInputs& inputs, const PipelineConfig& cfg) {
    ClusteringResult res;
    res.config = cfg;
    StageTimer timer(res.timings);

    const std::size_t k = staged("config", [&] {
        cfg.validate();
        if (mode_needs_nouns(cfg.mode) && !inputs.nouns)
            throw ConfigError("mode " + std::string(to_string(cfg.mode)) + " needs a noun bank");
        if (mode_needs_captions(cfg.mode) && !inputs.captions)
            throw ConfigError("mode " + std::string(to_string(cfg.mode)) + " needs a caption bank");
        for (const auto* bank : {&inputs.nouns, &inputs.captions})
            if (*bank && (*bank)->dim() != inputs.images.dim())
                throw ShapeError("text bank dim " + std::to_string((*bank)->dim()) + " differs from image dim " +
                                 std::to_string(inputs.images.dim()));
        if (inputs.labels && inputs.labels->size() != inputs.images.rows())
            throw ShapeError("labels have " + std::to_string(inputs.labels->size()) + " entries for " +
                             std::to_string(inputs.images.rows()) + " images");
        std::size_t clusters = 0;
        if (cfg.clusters) clusters = *cfg.clusters;
        else if (inputs.labels) clusters = distinct_count(*inputs.labels);
        else throw ConfigError("cluster count required when no labels are supplied");
        if (inputs.labels && clusters < 2) throw ConfigError("metric-bearing runs need at least 2 clusters");
        if (clusters > inputs.images.rows()) throw ConfigError("more clusters than images");
        return clusters;
    });
    res.diagnostics.clusters = k;

    const EmbeddingMatrix images = staged("normalize", [&] { return l2_normalize(inputs.images); });
    timer.lap("normalize");

    std::optional<ModalityOutput> noun, caption;
    if (mode_needs_nouns(cfg.mode) || mode_needs_captions(cfg.mode)) {
        SpaceConfig space;
        space.centers_divisor = cfg.centers_divisor;
        space.topk = cfg.topk;
        space.kmeans = {1, cfg.seed, cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.kmeans_tol,
                        EmptyClusterPolicy::reseed_farthest, cfg.threads};
        res.centers = staged("semantic_space", [&] { return semantic_centers(images, space); });
        res.diagnostics.semantic_centers = res.centers->rows();
        timer.lap("semantic_centers");
        if (mode_needs_nouns(cfg.mode)) {
            const auto bank = staged("normalize", [&] { return l2_normalize(*inputs.nouns); });
            noun = text_counterpart(images, bank, *res.centers, cfg);
            res.diagnostics.noun = noun->diag;
        }
        if (mode_needs_captions(cfg.mode)) {
            const auto bank = staged("normalize", [&] { return l2_normalize(*inputs.captions); });
            caption = text_counterpart(images, bank, *res.centers, cfg);
            res.diagnostics.caption = caption->diag;
        }
        timer.lap("transport");
    }

    EmbeddingMatrix features = staged("fusion", [&]() -> EmbeddingMatrix {
        switch (cfg.mode) {
            case Mode::image_only: return images;
            case Mode::noun_only: return noun->vectors;
            case Mode::caption_only: return caption->vectors;
            default: break;
        }
        const ModalityBundle bundle(images, noun->vectors, caption->vectors, cfg.normalize_counterparts);
        if (cfg.mode == Mode::concat) return baseline_concat(bundle);
        if (cfg.mode == Mode::sum) return baseline_sum(bundle);
        FusedRepresentation fused = fuse(bundle, fusion_weights(bundle, cfg.gamma), cfg.renormalize_fused);
        std::array<double, kNumModalities> mean{};
        for (std::size_t i = 0; i < fused.weights.beta.rows(); ++i)
            for (std::size_t m = 0; m < kNumModalities; ++m) mean[m] += fused.weights.beta(i, m);
        for (double& v : mean) v /= static_cast<double>(fused.weights.beta.rows());
        res.diagnostics.mean_beta = mean;
        res.weights = std::move(fused.weights);
        return std::move(fused.vectors);
    });
    timer.lap("fusion");

    const KMeansResult km = staged("kmeans", [&] {
        return kmeans_fit(features, {k, cfg.seed, cfg.kmeans_restarts, cfg.kmeans_max_iter, cfg.kmeans_tol,
                                     EmptyClusterPolicy::reseed_farthest, cfg.threads});
    });
    res.assignments = km.assignments;
    res.diagnostics.inertia = km.inertia;
    res.features = std::move(features);
    timer.lap("kmeans");

    if (inputs.labels) {
        res.metrics = staged("metrics", [&] { return evaluate(*inputs.labels, res.assignments, cfg.nmi_normalization); });
        timer.lap("metrics");
    }

    if (noun) {
        res.noun_selection = std::move(noun->selection);
        res.noun_plan = std::move(noun->plan);
    }
    if (caption) {
        res.caption_selection = std::move(caption->selection);
        res.caption_plan = std::move(caption->plan);
    }
    if (!cfg.record_timings) res.timings.clear();
    return res;
}

nlohmann::ordered_json report_to_json(const ClusteringResult& result, const std::string& assignments_path) {
    using json = nlohmann::ordered_json;
    json j;
    j["config"] = config_to_json(result.config);
    if (result.metrics) j["metrics"] = json{{"nmi", result.metrics->nmi}, {"acc", result.metrics->acc}, {"ari", result.metrics->ari}};
    else j["metrics"] = nullptr;

    const Diagnostics& d = result.diagnostics;
    json diag;
    diag["clusters"] = d.clusters;
    diag["semantic_centers"] = d.semantic_centers;
    auto text = [](const std::optional<TextDiagnostics>& t) {
        if (!t) return json(nullptr);
        return json{{"selected", t->selected}, {"marginal_error", t->marginal_error}, {"iterations", t->iterations}};
    };
    diag["noun"] = text(d.noun);
    diag["caption"] = text(d.caption);
    if (d.mean_beta)
        diag["mean_beta"] = json{{"image", (*d.mean_beta)[0]}, {"noun", (*d.mean_beta)[1]}, {"caption", (*d.mean_beta)[2]}};
    else
        diag["mean_beta"] = nullptr;
    diag["inertia"] = d.inertia;
    j["diagnostics"] = std::move(diag);

    if (result.config.record_timings) {
        json t = json::object();
        for (const auto& [stage, seconds] : result.timings) t[stage] = seconds;
        j["timings"] = std::move(t);
    } else {
        j["timings"] = nullptr;
    }
    j["assignments_path"] = assignments_path;
    return j;
}

void write_report(const ClusteringResult& result, const std::filesystem::path& path) {
    const std::string assignments = path.stem().string() + ".assignments.lbl";
    save_labels(result.assignments, path.parent_path() / assignments);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << report_to_json(result, assignments).dump(2) << '\n';
    if (!out) throw IoError("write failure on " + path.string());
}

void write_outputs(const ClusteringResult& result, const std::filesystem::path& dir, const ExportOptions& exports) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    write_report(result, dir / "report.json");
    if (exports.fused && result.features) save_embeddings(result.features->with_modality(Modality::fused), dir / "fused.emb");
    if (exports.beta && result.weights) write_beta_csv(*result.weights, dir / "beta.csv");
    if (exports.plans) {
        if (result.noun_plan) save_plan(*result.noun_plan, dir / "noun_plan.emb");
        if (result.caption_plan) save_plan(*result.caption_plan, dir / "caption_plan.emb");
    }
    if (exports.space) {
        if (result.centers) save_embeddings(*result.centers, dir / "centers.emb");
        if (result.noun_selection) {
            save_embeddings(result.noun_selection->embeddings, dir / "nouns_selected.emb");
            save_index_list(result.noun_selection->indices, dir / "nouns_selected.idx");
        }
        if (result.caption_selection) {
            save_embeddings(result.caption_selection->embeddings, dir / "captions_selected.emb");
            save_index_list(result.caption_selection->indices, dir / "captions_selected.idx");
        }
    }
}

SweepGrid parse_sweep(std::string_view text) {
    std::istringstream in{std::string(text)};
    SweepGrid grid;
    for (auto& [key, value] : read_key_values(in, "sweep")) {
        auto values = split_list(value);
        if (values.empty()) throw ConfigError("sweep axis '" + key + "' has no values");
        if (key == "mode") {
            for (const auto& v : values) grid.modes.push_back(mode_from_string(v));
            continue;
        }
        PipelineConfig probe;
        for (const auto& v : values) apply_setting(probe, key, v);
        grid.axes.emplace_back(key, std::move(values));
    }
    if (grid.modes.empty() && grid.axes.empty()) throw ConfigError("sweep grid is empty");
    return grid;
}

SweepGrid load_sweep(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open sweep " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_sweep(ss.str());
}

namespace {

template <class Runner>
AblationTable sweep(const PipelineConfig& base, const SweepGrid& grid, Runner&& run) {
    if (grid.modes.empty() && grid.axes.empty()) throw ConfigError("sweep grid is empty");
    AblationTable table;
    for (const auto& [key, values] : grid.axes) table.axes.push_back(key);
    const std::vector<Mode> modes = grid.modes.empty() ? std::vector<Mode>{base.mode} : grid.modes;

    std::size_t points = 1;
    for (const auto& [key, values] : grid.axes) points *= values.size();

    for (Mode mode : modes)
        for (std::size_t p = 0; p < points; ++p) {
            AblationRow row;
            row.mode = mode;
            PipelineConfig cfg = base;
            cfg.mode = mode;
            std::size_t rest = p;
            std::vector<std::string> values(grid.axes.size());
            for (std::size_t a = grid.axes.size(); a-- > 0;) {
                const auto& vals = grid.axes[a].second;
                values[a] = vals[rest % vals.size()];
                rest /= vals.size();
            }
            row.values = values;
            const auto start = Clock::now();
            try {
                for (std::size_t a = 0; a < grid.axes.size(); ++a) apply_setting(cfg, grid.axes[a].first, values[a]);
                row.metrics = run(cfg).metrics;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
            table.rows.push_back(std::move(row));
        }
    return table;
}

}  // namespace

AblationTable run_ablation_suite(const PipelineConfig& base, const SweepGrid& grid) {
    std::map<std::filesystem::path, EmbeddingMatrix> embeddings;
    std::map<std::filesystem::path, LabelVector> labels;
    auto cached = [&](const std::filesystem::path& p) -> const EmbeddingMatrix& {
        auto it = embeddings.find(p);
        if (it == embeddings.end()) it = embeddings.emplace(p, load_embeddings(p)).first;
        return it->second;
    };
    return sweep(base, grid, [&](const PipelineConfig& cfg) {
        cfg.validate();
        if (mode_needs_nouns(cfg.mode) && cfg.nouns.empty()) throw ConfigError("[config] mode needs a noun bank");
        if (mode_needs_captions(cfg.mode) && cfg.captions.empty()) throw ConfigError("[config] mode needs a caption bank");
        PipelineInputs in = staged("load", [&] {
            if (cfg.images.empty()) throw ConfigError("images path is required");
            PipelineInputs loaded{cached(cfg.images), std::nullopt, std::nullopt, std::nullopt};
            if (!cfg.nouns.empty()) loaded.nouns = cached(cfg.nouns);
            if (!cfg.captions.empty()) loaded.captions = cached(cfg.captions);
            if (!cfg.labels.empty()) {
                auto it = labels.find(cfg.labels);
                if (it == labels.end()) it = labels.emplace(cfg.labels, load_labels(cfg.labels)).first;
                loaded.labels = it->second;
            }
            return loaded;
        });
        return run_on_data(in, cfg);
    });
}

AblationTable run_ablation_suite(const PipelineInputs& inputs, const PipelineConfig& base, const SweepGrid& grid) {
    for (const auto& [key, values] : grid.axes)
        if (is_path_key(key)) throw ConfigError("path axis '" + key + "' needs the file-based ablation suite");
    return sweep(base, grid, [&](const PipelineConfig& cfg) { return run_on_data(inputs, cfg); });
}

void write_ablation_csv(const AblationTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c == '\n' ? ' ' : c;
        }
        return q + "\"";
    };
    out << "mode";
    for (const auto& a : table.axes) out << ',' << a;
    out << ",nmi,acc,ari,seconds,error\n";
    out.setf(std::ios::fixed);
    out.precision(6);
    for (const auto& row : table.rows) {
        out << to_string(row.mode);
        for (const auto& v : row.values) out << ',' << quote(v);
        if (row.metrics) out << ',' << row.metrics->nmi << ',' << row.metrics->acc << ',' << row.metrics->ari;
        else out << ",,,";
        out << ',' << row.seconds << ',' << quote(row.error) << '\n';
    }
    if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace cae
