#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "normscale/error.hpp"
#include "normscale/pipeline.hpp"

namespace py = pybind11;
namespace ns = normscale;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;

ns::LogitSet records_from_array(const Matrix& logits, const std::vector<long>& labels,
                                ns::Origin origin) {
    if (logits.ndim() != 2) throw py::value_error("logits must be a 2-D array");
    const auto rows = static_cast<std::size_t>(logits.shape(0));
    const auto cols = static_cast<std::size_t>(logits.shape(1));
    if (!labels.empty() && labels.size() != rows) {
        throw py::value_error("labels must have one entry per row");
    }
    auto view = logits.unchecked<2>();
    ns::LogitSet out(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        out[i].origin = origin;
        out[i].logits.resize(cols);
        for (std::size_t j = 0; j < cols; ++j) out[i].logits[j] = view(i, j);
        if (!labels.empty() && labels[i] >= 0) out[i].label = static_cast<ns::ClassIndex>(labels[i]);
    }
    return out;
}

py::tuple records_to_arrays(const ns::LogitSet& records) {
    const std::size_t cols = records.empty() ? 0 : records.front().width();
    py::array_t<double> logits({records.size(), cols});
    py::array_t<long> labels(records.size());
    auto lv = logits.mutable_unchecked<2>();
    auto bv = labels.mutable_unchecked<1>();
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < cols; ++j) lv(i, j) = records[i].logits[j];
        bv(i) = records[i].label ? static_cast<long>(*records[i].label) : -1;
    }
    return py::make_tuple(logits, labels);
}

ns::BinaryScoreSet score_set(std::vector<double> in, std::vector<double> out) {
    return {std::move(in), std::move(out)};
}

std::vector<std::pair<double, double>> as_pairs(const std::vector<ns::CurvePoint>& pts) {
    std::vector<std::pair<double, double>> out;
    out.reserve(pts.size());
    for (const auto& p : pts) out.emplace_back(p.x, p.y);
    return out;
}

}  // namespace

PYBIND11_MODULE(_normscale, m) {
    m.doc() = "Per-class logit norm-scaling and OoD detection metrics";

    static py::exception<ns::Error> error(m, "NormscaleError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ns::Error& e) {
            py::set_error(error, (std::string(ns::to_string(e.kind())) + ": " + e.what()).c_str());
        }
    });

    py::enum_<ns::Origin>(m, "Origin")
        .value("train", ns::Origin::train)
        .value("in_test", ns::Origin::in_test)
        .value("ood_test", ns::Origin::ood_test);
    py::enum_<ns::StreamMode>(m, "StreamMode")
        .value("literal", ns::StreamMode::literal)
        .value("standard", ns::StreamMode::standard);

    py::class_<ns::ClassStats>(m, "ClassStats")
        .def(py::init<>())
        .def_readwrite("num_classes", &ns::ClassStats::num_classes)
        .def_readwrite("mu", &ns::ClassStats::mu)
        .def_readwrite("sigma", &ns::ClassStats::sigma)
        .def_readwrite("sample_count", &ns::ClassStats::sample_count)
        .def("to_json", [](const ns::ClassStats& s, double eps) { return ns::stats_to_json(s, eps); },
             py::arg("epsilon") = ns::kDefaultEpsilon);

    py::class_<ns::StreamState>(m, "StreamState")
        .def_readonly("t", &ns::StreamState::t)
        .def_readonly("mu_t", &ns::StreamState::mu_t)
        .def_readonly("var_t", &ns::StreamState::var_t)
        .def_readonly("mode", &ns::StreamState::mode);

    m.def("fit_class_stats",
          [](const Matrix& logits) {
              return ns::fit_class_stats(records_from_array(logits, {}, ns::Origin::train));
          },
          py::arg("logits"));
    m.def("norm_scale",
          [](std::vector<double> z, const ns::ClassStats& s, double eps) { return ns::norm_scale(z, s, eps); },
          py::arg("logits"), py::arg("stats"), py::arg("epsilon") = ns::kDefaultEpsilon);
    m.def("tau_norm_scale",
          [](std::vector<double> z, const ns::ClassStats& s, double tau, double eps) {
              return ns::tau_norm_scale(z, s, tau, eps);
          },
          py::arg("logits"), py::arg("stats"), py::arg("tau"), py::arg("epsilon") = ns::kDefaultEpsilon);
    m.def("temperature_scale",
          [](std::vector<double> z, double tau) { return ns::temperature_scale(z, tau); },
          py::arg("logits"), py::arg("tau"));
    m.def("stream_init", &ns::stream_init, py::arg("stats"), py::arg("mode") = ns::StreamMode::literal);
    m.def("stream_update",
          [](ns::StreamState s, std::vector<double> z) { return ns::stream_update(std::move(s), z); },
          py::arg("state"), py::arg("logits"));

    m.def("softmax", [](std::vector<double> z) { return ns::softmax(z); }, py::arg("logits"));
    m.def("msp_score",
          [](std::vector<double> z) {
              const auto r = ns::msp_score(z);
              return py::make_tuple(r.predicted_class, r.score);
          },
          py::arg("logits"), "Returns (predicted_class, score).");
    m.def("energy_score", [](std::vector<double> z, double tau) { return ns::energy_score(z, tau); },
          py::arg("logits"), py::arg("tau") = 1.0);

    m.def("score_stream",
          [](const Matrix& logits, const std::vector<std::string>& origins, const ns::ClassStats& stats,
             const std::string& detector, const std::string& scaling, double tau,
             const std::string& stats_mode, const std::string& prediction_source, double epsilon) {
              auto records = records_from_array(logits, {}, ns::Origin::in_test);
              if (origins.size() != records.size()) throw py::value_error("one origin per row required");
              for (std::size_t i = 0; i < records.size(); ++i) {
                  records[i].origin = ns::origin_from_string(origins[i]);
              }
              ns::DetectorConfig cfg;
              cfg.score_kind = ns::score_kind_from_string(detector);
              cfg.scaling = ns::scaling_from_string(scaling);
              cfg.tau = tau;
              cfg.stats_mode = ns::stats_mode_from_string(stats_mode);
              cfg.prediction_source = ns::prediction_source_from_string(prediction_source);
              cfg.epsilon = epsilon;
              const auto scored = ns::score_stream(records, stats, cfg);
              py::array_t<long> cls(scored.size());
              py::array_t<double> score(scored.size());
              auto cv = cls.mutable_unchecked<1>();
              auto sv = score.mutable_unchecked<1>();
              for (std::size_t i = 0; i < scored.size(); ++i) {
                  cv(i) = static_cast<long>(scored[i].predicted_class);
                  sv(i) = scored[i].score;
              }
              return py::make_tuple(cls, score);
          },
          py::arg("logits"), py::arg("origins"), py::arg("stats"), py::arg("detector") = "msp",
          py::arg("scaling") = "none", py::arg("tau") = 1.0, py::arg("stats_mode") = "frozen",
          py::arg("prediction_source") = "unscaled", py::arg("epsilon") = ns::kDefaultEpsilon,
          "Returns (predicted_class, score) arrays.");

    m.def("roc_points", [](std::vector<double> in, std::vector<double> out) {
        return as_pairs(ns::roc_points(score_set(std::move(in), std::move(out))));
    }, py::arg("in_scores"), py::arg("out_scores"));
    m.def("auroc", [](std::vector<double> in, std::vector<double> out) {
        return ns::auroc(score_set(std::move(in), std::move(out)));
    }, py::arg("in_scores"), py::arg("out_scores"));
    m.def("aupr", [](std::vector<double> in, std::vector<double> out) {
        return ns::aupr(score_set(std::move(in), std::move(out)));
    }, py::arg("in_scores"), py::arg("out_scores"));
    m.def("fpr_at_tpr", [](std::vector<double> in, std::vector<double> out, double target) {
        return ns::fpr_at_tpr(score_set(std::move(in), std::move(out)), target);
    }, py::arg("in_scores"), py::arg("out_scores"), py::arg("target") = 0.95);
    m.def("expected_calibration_error",
          [](std::vector<double> conf, std::vector<bool> correct, std::size_t bins) {
              const auto rel = ns::reliability(conf, correct, bins);
              return ns::ece(rel, rel.total());
          },
          py::arg("confidences"), py::arg("correct"), py::arg("bins") = ns::kDefaultBins);

    m.def("generate_fig1_like",
          [](std::uint64_t seed) {
              const auto d = ns::generate(ns::fig1_like(seed));
              return py::make_tuple(records_to_arrays(d.train), records_to_arrays(d.in_test),
                                    records_to_arrays(d.ood_test));
          },
          py::arg("seed") = 0, "Returns ((train, labels), (in_test, labels), (ood, labels)).");
    m.def("read_logits",
          [](const std::filesystem::path& path, const std::string& format) {
              const auto fmt = format.empty() ? ns::logit_format_from_path(path)
                                              : ns::logit_format_from_string(format);
              return records_to_arrays(ns::read_logits(path, fmt));
          },
          py::arg("path"), py::arg("format") = "");
    m.def("write_logits",
          [](const std::filesystem::path& path, const Matrix& logits, std::vector<long> labels,
             const std::string& format) {
              const auto fmt = format.empty() ? ns::logit_format_from_path(path)
                                              : ns::logit_format_from_string(format);
              ns::write_logits(path, fmt, records_from_array(logits, labels, ns::Origin::in_test));
          },
          py::arg("path"), py::arg("logits"), py::arg("labels") = std::vector<long>{},
          py::arg("format") = "");
}
