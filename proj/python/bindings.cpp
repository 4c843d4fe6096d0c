#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ebst/config.hpp"
#include "ebst/data.hpp"
#include "ebst/energy.hpp"
#include "ebst/eval.hpp"
#include "ebst/experiment.hpp"
#include "ebst/gradcheck.hpp"
#include "ebst/numerics.hpp"
#include "ebst/selftrain.hpp"

namespace py = pybind11;

namespace {

ebst::Matrix matrix_from_rows(const std::vector<std::vector<double>>& rows) {
  return ebst::Matrix::from_rows(rows);
}

py::dict summary_dict(const ebst::RunSummary& s) {
  py::dict d;
  d["seed"] = s.seed;
  d["alpha"] = s.alpha;
  d["rounds"] = s.rounds;
  d["baseline_mean_acc"] = s.baseline_mean_acc;
  d["final_mean_acc"] = s.final_mean_acc;
  d["improvement"] = s.improvement;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Energy-constrained self-training for unsupervised domain adaptation";

  m.def("log_sum_exp",
        [](const std::vector<double>& z) { return ebst::log_sum_exp(z); },
        py::arg("z"));
  m.def("softmax",
        [](const std::vector<double>& z) { return ebst::softmax(z); },
        py::arg("z"));

  py::class_<ebst::Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", [](ebst::Rng& r) { return r.uniform(); })
      .def("gaussian", &ebst::Rng::gaussian)
      .def("gaussian_vec", &ebst::Rng::gaussian_vec, py::arg("n"))
      .def("fork", &ebst::Rng::fork, py::arg("stream"));

  py::class_<ebst::MlpParams>(m, "MlpParams")
      .def_static("zeros", &ebst::MlpParams::zeros, py::arg("layer_dims"))
      .def_static(
          "glorot",
          [](std::vector<std::size_t> dims, std::uint64_t seed) {
            ebst::Rng rng(seed);
            return ebst::MlpParams::glorot(std::move(dims), rng);
          },
          py::arg("layer_dims"), py::arg("seed"))
      .def_readonly("layer_dims", &ebst::MlpParams::layer_dims)
      .def("forward",
           [](const ebst::MlpParams& p, const std::vector<double>& x) {
             return ebst::forward(p, x);
           },
           py::arg("x"))
      .def("predict_proba",
           [](const ebst::MlpParams& p, const std::vector<double>& x) {
             return ebst::predict_proba(p, x);
           },
           py::arg("x"))
      .def("save", &ebst::save_checkpoint, py::arg("path"));
  m.def("load_checkpoint", &ebst::load_checkpoint, py::arg("path"));

  m.def("energy",
        [](const ebst::MlpParams& p, const std::vector<double>& x) {
          return ebst::energy(p, x);
        },
        py::arg("params"), py::arg("x"));
  m.def("joint_energy",
        [](const ebst::MlpParams& p, const std::vector<double>& x, std::size_t k) {
          return ebst::joint_energy(p, x, k);
        },
        py::arg("params"), py::arg("x"), py::arg("k"));
  m.def("energy_grad_input",
        [](const ebst::MlpParams& p, const std::vector<double>& x) {
          return ebst::energy_grad_input(p, x);
        },
        py::arg("params"), py::arg("x"));

  py::class_<ebst::Thresholds>(m, "Thresholds")
      .def(py::init([](std::vector<double> lambda, double portion) {
             ebst::Thresholds t;
             t.lambda = std::move(lambda);
             t.portion = portion;
             return t;
           }),
           py::arg("lam"), py::arg("portion") = 1.0)
      .def_readonly("lam", &ebst::Thresholds::lambda)
      .def_readonly("portion", &ebst::Thresholds::portion);

  py::class_<ebst::PseudoLabel>(m, "PseudoLabel")
      .def_readonly("selected", &ebst::PseudoLabel::selected)
      .def_readonly("cls", &ebst::PseudoLabel::cls)
      .def_readonly("target", &ebst::PseudoLabel::target);

  m.def("thresholds_from_predictions", &ebst::thresholds_from_predictions,
        py::arg("pred_class"), py::arg("confidence"), py::arg("n_classes"),
        py::arg("p"));
  m.def("solve_pseudo_label",
        [](const std::vector<double>& probs, const ebst::Thresholds& th) {
          return ebst::solve_pseudo_label(probs, th);
        },
        py::arg("probs"), py::arg("thresholds"));
  m.def("smooth_labels", &ebst::smooth_labels, py::arg("assignment"),
        py::arg("epsilon"));

  py::class_<ebst::LabeledSet>(m, "LabeledSet")
      .def(py::init([](const std::vector<std::vector<double>>& rows,
                       std::vector<std::size_t> labels, std::size_t n_classes) {
             ebst::LabeledSet s;
             s.features = matrix_from_rows(rows);
             s.labels = std::move(labels);
             s.n_classes = n_classes;
             s.validate();
             return s;
           }),
           py::arg("features"), py::arg("labels"), py::arg("n_classes"))
      .def_property_readonly(
          "features",
          [](const ebst::LabeledSet& s) { return s.features.to_rows(); })
      .def_readonly("labels", &ebst::LabeledSet::labels)
      .def_readonly("n_classes", &ebst::LabeledSet::n_classes);

  py::class_<ebst::UnlabeledSet>(m, "UnlabeledSet")
      .def(py::init([](const std::vector<std::vector<double>>& rows) {
             ebst::UnlabeledSet s;
             s.features = matrix_from_rows(rows);
             s.validate();
             return s;
           }),
           py::arg("features"))
      .def_property_readonly(
          "features",
          [](const ebst::UnlabeledSet& s) { return s.features.to_rows(); });

  py::class_<ebst::DomainTriple>(m, "DomainTriple")
      .def_readonly("source", &ebst::DomainTriple::source)
      .def_readonly("target", &ebst::DomainTriple::target)
      .def_readonly("target_eval", &ebst::DomainTriple::target_eval);

  m.def("gen_two_moons", &ebst::gen_two_moons, py::arg("n_per_domain"),
        py::arg("rotation_degrees"), py::arg("noise_std"), py::arg("seed"));
  m.def("gen_gaussian_blobs", &ebst::gen_gaussian_blobs, py::arg("n_per_domain"),
        py::arg("k"), py::arg("d"), py::arg("shift"), py::arg("seed"));

  py::class_<ebst::EvalResult>(m, "EvalResult")
      .def_property_readonly(
          "confusion",
          [](const ebst::EvalResult& r) { return r.confusion.to_rows(); })
      .def_readonly("per_class_acc", &ebst::EvalResult::per_class_acc)
      .def_readonly("mean_class_acc", &ebst::EvalResult::mean_class_acc);
  m.def("evaluate", &ebst::evaluate, py::arg("params"), py::arg("eval_set"));

  m.def("default_config",
        [] { return ebst::ExperimentConfig{}.serialize(); });
  m.def("run_experiment",
        [](const std::string& config_text, const std::string& out_dir) {
          ebst::ExperimentConfig cfg = ebst::ExperimentConfig::parse(config_text);
          return summary_dict(ebst::run_experiment(cfg, out_dir).summary);
        },
        py::arg("config_text"), py::arg("out_dir"));
  m.def("gradcheck",
        [](std::size_t configs, std::uint64_t seed) {
          ebst::GradcheckReport r = ebst::run_gradcheck_suite(configs, seed);
          py::dict d;
          d["configs"] = r.configs;
          d["checks"] = r.checks;
          d["worst_rel_err"] = r.worst;
          d["ok"] = r.ok();
          return d;
        },
        py::arg("configs") = 50, py::arg("seed") = 1234);
}
