#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "longric/generator.hpp"
#include "longric/inverse_opt.hpp"
#include "longric/io.hpp"
#include "longric/nadaraya.hpp"
#include "longric/platt.hpp"
#include "longric/svm.hpp"

namespace py = pybind11;
using namespace longric;

PYBIND11_MODULE(_longric, m) {
  m.doc() = "longitudinal inverse classification core";

  py::class_<GaussianKernel>(m, "GaussianKernel")
      .def(py::init<double>(), py::arg("sigma"))
      .def_readonly("sigma", &GaussianKernel::sigma)
      .def("eval", &GaussianKernel::eval)
      .def("grad_wrt_second", &GaussianKernel::grad_wrt_second);

  py::class_<SvmDualModel>(m, "SvmDualModel")
      .def_readonly("support_vectors", &SvmDualModel::support_vectors)
      .def_readonly("dual_coef", &SvmDualModel::dual_coef)
      .def_readonly("bias", &SvmDualModel::bias)
      .def_readonly("iterations", &SvmDualModel::iterations)
      .def_readonly("converged", &SvmDualModel::converged);

  m.def("train_svm", &train_svm, py::arg("X"), py::arg("y"), py::arg("C"),
        py::arg("sigma"), py::arg("tol") = 1e-3);
  m.def("decision_value", &decision_value);
  m.def("decision_grad", &decision_grad);
  m.def("kkt_max_violation", &kkt_max_violation);

  py::class_<CalibratedClassifier>(m, "CalibratedClassifier")
      .def_readonly("svm", &CalibratedClassifier::svm)
      .def_readonly("platt_a", &CalibratedClassifier::platt_a)
      .def_readonly("platt_b", &CalibratedClassifier::platt_b);

  m.def("train_calibrated", &train_calibrated, py::arg("X"), py::arg("y"),
        py::arg("C"), py::arg("sigma"), py::arg("tol") = 1e-3,
        py::arg("cv_folds") = 3, py::arg("seed") = 0);
  m.def("predict_proba", &predict_proba);
  m.def("grad_proba", &grad_proba);

  py::class_<IndirectModel>(m, "IndirectModel");
  m.def("fit_indirect", &fit_indirect);
  m.def("estimate_indirect", &estimate_indirect);
  m.def("grad_indirect_wrt_direct", &grad_indirect_wrt_direct);

  m.def(
      "project",
      [](const Eigen::VectorXd& origin, const Eigen::VectorXd& costs,
         const Eigen::VectorXi& signs, const Eigen::VectorXd& lower,
         const Eigen::VectorXd& upper, double budget, const Eigen::VectorXd& z) {
        FeasibleRegion r{origin, costs, signs, lower, upper, budget};
        return project(r, z);
      },
      py::arg("origin"), py::arg("costs"), py::arg("signs"), py::arg("lower"),
      py::arg("upper"), py::arg("budget"), py::arg("z"),
      "Euclidean projection onto box intersect budget halfspace");

  m.def(
      "generate_cohort_files",
      [](int n_patients, int visits, unsigned long long seed,
         const std::string& out_dir) {
        GeneratorSpec spec;
        spec.n_patients = n_patients;
        spec.visits = visits;
        LongitudinalCohort cohort = generate_cohort(spec, seed);
        std::filesystem::path dir(out_dir);
        save_cohort(cohort, dir, dir / "schema.json");
        return static_cast<int>(cohort.visits().size());
      },
      py::arg("n_patients"), py::arg("visits"), py::arg("seed"),
      py::arg("out_dir"), "Generate a synthetic cohort and write it to disk");
}
