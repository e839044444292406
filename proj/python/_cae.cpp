#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cae/error.hpp"
#include "cae/fusion.hpp"
#include "cae/kmeans.hpp"
#include "cae/metrics.hpp"
#include "cae/pipeline.hpp"
#include "cae/semantic_space.hpp"
#include "cae/synth.hpp"
#include "cae/transport.hpp"

namespace py = pybind11;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using LabelArray = py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast>;

cae::Matrix to_matrix(const Array& a) {
    if (a.ndim() != 2) throw cae::ShapeError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
    const auto r = static_cast<std::size_t>(a.shape(0)), c = static_cast<std::size_t>(a.shape(1));
    return {r, c, std::vector<double>(a.data(), a.data() + r * c)};
}

cae::EmbeddingMatrix to_embeddings(const Array& a, cae::Modality m = cae::Modality::image) {
    return {to_matrix(a), m};
}

Array to_array(const cae::Matrix& m) {
    Array out({m.rows(), m.cols()});
    std::ranges::copy(m.data(), out.mutable_data());
    return out;
}

Array to_array(const cae::EmbeddingMatrix& m) { return to_array(m.values()); }

cae::LabelVector to_labels(const LabelArray& a) {
    if (a.ndim() != 1) throw cae::ShapeError("expected a 1-D label array");
    return {a.data(), a.data() + a.shape(0)};
}

LabelArray to_label_array(const cae::LabelVector& v) {
    LabelArray out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::dict metrics_dict(const cae::MetricReport& r) {
    py::dict d;
    d["nmi"] = r.nmi;
    d["acc"] = r.acc;
    d["ari"] = r.ari;
    return d;
}

cae::PipelineConfig config_from_kwargs(const py::kwargs& kwargs) {
    cae::PipelineConfig cfg;
    for (const auto& [k, v] : kwargs) {
        std::string value;
        if (py::isinstance<py::bool_>(v)) value = v.cast<bool>() ? "true" : "false";
        else value = py::str(v).cast<std::string>();
        cae::apply_setting(cfg, k.cast<std::string>(), value);
    }
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_cae, m) {
    m.doc() = "Image clustering with transported text semantics";

    auto base = py::register_exception<cae::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<cae::FormatError>(m, "FormatError", base.ptr());
    py::register_exception<cae::ShapeError>(m, "ShapeError", base.ptr());
    py::register_exception<cae::IoError>(m, "IoError", base.ptr());
    py::register_exception<cae::ConfigError>(m, "ConfigError", base.ptr());
    py::register_exception<cae::NumericError>(m, "NumericError", base.ptr());

    // Files
    m.def("load_embeddings", [](const std::filesystem::path& p) {
        const auto e = cae::load_embeddings(p);
        return py::make_tuple(to_array(e), std::string(cae::to_string(e.modality())));
    }, py::arg("path"), "Read an EMB1 file. Returns (array, modality).");
    m.def("save_embeddings", [](const Array& a, const std::filesystem::path& p, const std::string& modality) {
        cae::save_embeddings(to_embeddings(a, cae::modality_from_string(modality)), p);
    }, py::arg("array"), py::arg("path"), py::arg("modality") = "image");
    m.def("load_labels", [](const std::filesystem::path& p) { return to_label_array(cae::load_labels(p)); },
          py::arg("path"));
    m.def("save_labels", [](const LabelArray& a, const std::filesystem::path& p) {
        cae::save_labels(to_labels(a), p);
    }, py::arg("labels"), py::arg("path"));

    m.def("l2_normalize", [](const Array& a) { return to_array(cae::l2_normalize(to_embeddings(a))); });
    m.def("cosine_similarity", [](const Array& a, const Array& b) {
        return to_array(cae::cosine_similarity(to_embeddings(a), to_embeddings(b)).values);
    });

    // Transport
    m.def("sinkhorn", [](const Array& cost, double epsilon, std::size_t max_iter, double marginal_tol,
                         bool log_domain) {
        const auto plan = cae::sinkhorn({to_matrix(cost)}, {epsilon, max_iter, marginal_tol, log_domain});
        py::dict d;
        d["plan"] = to_array(plan.values);
        d["iterations"] = plan.iterations_used;
        d["marginal_error"] = plan.marginal_error;
        return d;
    }, py::arg("cost"), py::arg("epsilon") = 0.05, py::arg("max_iter") = 1000, py::arg("marginal_tol") = 1e-6,
       py::arg("log_domain") = true);
    m.def("transport_cost", [](const Array& plan, const Array& cost) {
        return cae::transport_cost(to_matrix(plan), {to_matrix(cost)});
    });
    m.def("counterpart", [](const Array& images, const Array& texts, double epsilon, bool normalize) {
        const auto img = to_embeddings(images);
        const auto txt = to_embeddings(texts, cae::Modality::noun);
        const auto sims = cae::cosine_similarity(img, txt);
        const auto plan = cae::sinkhorn(cae::cost_matrix(sims), {epsilon});
        return py::make_tuple(to_array(cae::counterpart(img, txt, plan, sims, normalize)), to_array(plan.values));
    }, py::arg("images"), py::arg("texts"), py::arg("epsilon") = 0.05, py::arg("normalize") = true,
       "Transported text counterparts. Returns (counterparts, plan).");
    m.def("softmax_counterpart", [](const Array& images, const Array& texts, double temperature) {
        const auto r = cae::softmax_counterpart(to_embeddings(images), to_embeddings(texts, cae::Modality::noun),
                                                temperature);
        return py::make_tuple(to_array(r.vectors), to_array(r.weights));
    }, py::arg("images"), py::arg("texts"), py::arg("temperature") = 1.0);

    // Semantic space
    m.def("select_texts", [](const Array& bank, const Array& centers, std::size_t topk) {
        const auto sel = cae::select_texts(to_embeddings(bank, cae::Modality::noun), to_embeddings(centers), topk);
        return py::make_tuple(to_label_array(sel.indices), to_array(sel.embeddings));
    }, py::arg("bank"), py::arg("centers"), py::arg("topk") = 10);

    // Fusion
    m.def("fusion_weights", [](const Array& image, const Array& noun, const Array& caption, double gamma) {
        const cae::ModalityBundle bundle(to_embeddings(image), to_embeddings(noun, cae::Modality::noun),
                                         to_embeddings(caption, cae::Modality::caption));
        const auto w = cae::fusion_weights(bundle, gamma);
        return py::make_tuple(to_array(w.alpha), to_array(w.beta));
    }, py::arg("image"), py::arg("noun"), py::arg("caption"), py::arg("gamma") = cae::kDefaultGamma,
       "Returns (alpha, beta), each N x 3.");
    m.def("fuse", [](const Array& image, const Array& noun, const Array& caption, double gamma) {
        const cae::ModalityBundle bundle(to_embeddings(image), to_embeddings(noun, cae::Modality::noun),
                                         to_embeddings(caption, cae::Modality::caption));
        return to_array(cae::fuse(bundle, cae::fusion_weights(bundle, gamma)).vectors);
    }, py::arg("image"), py::arg("noun"), py::arg("caption"), py::arg("gamma") = cae::kDefaultGamma);

    // Clustering and metrics
    m.def("kmeans", [](const Array& x, std::size_t k, std::uint64_t seed, std::size_t restarts, std::size_t threads) {
        cae::KMeansConfig cfg;
        cfg.k = k;
        cfg.seed = seed;
        cfg.restarts = restarts;
        cfg.threads = threads;
        const auto r = cae::kmeans_fit(to_embeddings(x), cfg);
        return py::make_tuple(to_label_array(r.assignments), to_array(r.centers), r.inertia);
    }, py::arg("x"), py::arg("k"), py::arg("seed") = 42, py::arg("restarts") = 10, py::arg("threads") = 1,
       "Returns (assignments, centers, inertia).");
    m.def("evaluate", [](const LabelArray& y_true, const LabelArray& y_pred, const std::string& norm) {
        return metrics_dict(cae::evaluate(to_labels(y_true), to_labels(y_pred),
                                          cae::nmi_normalization_from_string(norm)));
    }, py::arg("y_true"), py::arg("y_pred"), py::arg("nmi_normalization") = "arithmetic");

    // Data and pipeline
    m.def("synth", [](std::size_t n_classes, std::size_t per_class, std::size_t dim, std::uint64_t seed) {
        cae::SynthSpec spec;
        spec.n_classes = n_classes;
        spec.per_class = per_class;
        spec.dim = dim;
        spec.seed = seed;
        const auto d = cae::generate_synthetic(spec);
        py::dict out;
        out["images"] = to_array(d.images);
        out["nouns"] = to_array(d.nouns);
        out["captions"] = to_array(d.captions);
        out["labels"] = to_label_array(d.labels);
        return out;
    }, py::arg("n_classes") = 5, py::arg("per_class") = 300, py::arg("dim") = 64, py::arg("seed") = 7);

    m.def("run", [](const Array& images, std::optional<Array> nouns, std::optional<Array> captions,
                    std::optional<LabelArray> labels, const py::kwargs& kwargs) {
        const auto cfg = config_from_kwargs(kwargs);
        cae::PipelineInputs in{to_embeddings(images), {}, {}, {}};
        if (nouns) in.nouns = to_embeddings(*nouns, cae::Modality::noun);
        if (captions) in.captions = to_embeddings(*captions, cae::Modality::caption);
        if (labels) in.labels = to_labels(*labels);
        const auto r = cae::run_on_data(in, cfg);
        py::dict out;
        out["assignments"] = to_label_array(r.assignments);
        out["metrics"] = r.metrics ? py::object(metrics_dict(*r.metrics)) : py::object(py::none());
        if (r.weights) out["beta"] = to_array(r.weights->beta);
        return out;
    }, py::arg("images"), py::arg("nouns") = py::none(), py::arg("captions") = py::none(),
       py::arg("labels") = py::none(),
       "Run the pipeline on arrays. Keyword arguments are pipeline settings (mode, topk, epsilon, ...).");
}
