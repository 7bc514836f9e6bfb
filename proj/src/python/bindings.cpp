#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qksvm/errors.hpp"
#include "qksvm/kernel.hpp"
#include "qksvm/matrix.hpp"
#include "qksvm/metrics.hpp"
#include "qksvm/pipeline.hpp"
#include "qksvm/rng.hpp"
#include "qksvm/runner.hpp"
#include "qksvm/spectra.hpp"
#include "qksvm/statevector.hpp"
#include "qksvm/svc.hpp"

namespace py = pybind11;
using namespace qksvm;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
  Matrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
  std::copy(arr.data(), arr.data() + arr.size(), m.data().begin());
  return m;
}

py::array_t<double> numpy_from_matrix(const Matrix& m) {
  py::array_t<double> out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

std::vector<double> vector_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
  if (arr.ndim() != 1) throw std::invalid_argument("expected a 1-d array");
  return {arr.data(), arr.data() + arr.size()};
}

CircuitConfig make_circuit(std::size_t num_qubits, std::size_t reps, int dof) {
  CircuitConfig cfg{num_qubits, reps, dof};
  cfg.validate();
  return cfg;
}

py::dict metrics_dict(const MetricsReport& r) {
  py::dict d;
  d["tp"] = r.tp;
  d["fp"] = r.fp;
  d["fn"] = r.fn;
  d["tn"] = r.tn;
  d["accuracy"] = r.accuracy;
  d["f1_minority"] = r.f1_minority;
  d["auc"] = r.auc;
  d["auc_single_class"] = r.auc_single_class;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "quantum-kernel SVM pipeline: statevector kernels, SMO SVC, "
            "spectrum diagnostics";

  py::register_exception<ConfigError>(m, "QksvmConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "QksvmDataError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "QksvmNumericalError", PyExc_ArithmeticError);

  m.def(
      "bsp_statevector",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
         std::size_t reps, int dof) {
        const auto f = vector_from_numpy(features);
        const auto s = bsp_state(f, make_circuit(f.size(), reps, dof));
        return py::array_t<std::complex<double>>(
            static_cast<py::ssize_t>(s.dim()), s.amplitudes().data());
      },
      py::arg("features"), py::arg("reps") = 1, py::arg("dof") = 1,
      "Statevector of the ring-encoded features (qubit 0 = least significant bit).");

  m.def(
      "fidelity",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& b,
         std::size_t reps, int dof) {
        const auto fa = vector_from_numpy(a);
        const auto fb = vector_from_numpy(b);
        const auto cfg = make_circuit(fa.size(), reps, dof);
        return fidelity(bsp_state(fa, cfg), bsp_state(fb, cfg));
      },
      py::arg("a"), py::arg("b"), py::arg("reps") = 1, py::arg("dof") = 1,
      "Squared overlap of two encoded feature vectors.");

  m.def(
      "pauli_z_features",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         std::size_t reps, int dof, unsigned threads) {
        const Matrix xm = matrix_from_numpy(x);
        return numpy_from_matrix(
            pauli_z_features(xm, make_circuit(xm.cols(), reps, dof), threads));
      },
      py::arg("x"), py::arg("reps") = 1, py::arg("dof") = 1, py::arg("threads") = 1,
      "Per-sample Pauli-Z expectation vectors of the encoded states.");

  m.def(
      "quantum_kernel",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& left,
         const py::object& right, std::size_t reps, int dof, unsigned threads,
         std::uint64_t memory_cap_bytes) {
        const Matrix l = matrix_from_numpy(left);
        const Matrix r = right.is_none()
                             ? l
                             : matrix_from_numpy(py::cast<py::array_t<double>>(right));
        KernelOptions opts;
        opts.threads = threads;
        opts.memory_cap_bytes = memory_cap_bytes;
        return numpy_from_matrix(
            quantum_kernel(l, r, make_circuit(l.cols(), reps, dof), opts).values);
      },
      py::arg("left"), py::arg("right") = py::none(), py::arg("reps") = 1,
      py::arg("dof") = 1, py::arg("threads") = 1,
      py::arg("memory_cap_bytes") = std::uint64_t{4} << 30,
      "Fidelity kernel |<psi_i|psi_j>|^2; right=None computes the symmetric "
      "train kernel.");

  m.def(
      "linear_kernel",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& left,
         const py::object& right) {
        const Matrix l = matrix_from_numpy(left);
        const Matrix r = right.is_none()
                             ? l
                             : matrix_from_numpy(py::cast<py::array_t<double>>(right));
        return numpy_from_matrix(linear_kernel(l, r).values);
      },
      py::arg("left"), py::arg("right") = py::none());

  m.def(
      "rbf_kernel",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& left,
         const py::object& right, double gamma) {
        const Matrix l = matrix_from_numpy(left);
        const Matrix r = right.is_none()
                             ? l
                             : matrix_from_numpy(py::cast<py::array_t<double>>(right));
        return numpy_from_matrix(rbf_kernel(l, r, gamma).values);
      },
      py::arg("left"), py::arg("right") = py::none(), py::arg("gamma"));

  m.def(
      "projected_kernel",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& left_z,
         const py::object& right_z, double gamma) {
        const Matrix l = matrix_from_numpy(left_z);
        const Matrix r = right_z.is_none()
                             ? l
                             : matrix_from_numpy(py::cast<py::array_t<double>>(right_z));
        return numpy_from_matrix(projected_kernel(l, r, gamma).values);
      },
      py::arg("left_z"), py::arg("right_z") = py::none(), py::arg("gamma"));

  m.def(
      "scale_gamma",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x) {
        return scale_gamma(matrix_from_numpy(x));
      },
      py::arg("x"), "1 / (n_features * population variance of all entries).");

  m.def(
      "normalize_kernel",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& k,
         const std::string& mode, const std::string& kind) {
        KernelMatrix km;
        km.kind = kernel_kind_from_string(kind);
        km.values = matrix_from_numpy(k);
        TrainKernelStats stats;
        const auto out = normalize_train(km, normalization_from_string(mode), &stats);
        py::dict st;
        st["mode"] = mode;
        st["trace"] = stats.trace;
        st["frobenius"] = stats.frobenius;
        st["diagonal"] = stats.diagonal;
        return py::make_tuple(numpy_from_matrix(out.values), st);
      },
      py::arg("k"), py::arg("mode") = "trace", py::arg("kind") = "quantum_fidelity",
      "Normalize a square training kernel; returns (matrix, train_stats).");

  m.def(
      "normalize_test_kernel",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& k,
         const py::dict& train_stats, const py::object& test_self) {
        KernelMatrix km;
        km.kind = KernelKind::quantum_fidelity;
        km.values = matrix_from_numpy(k);
        TrainKernelStats stats;
        stats.mode = normalization_from_string(py::cast<std::string>(train_stats["mode"]));
        stats.trace = py::cast<double>(train_stats["trace"]);
        stats.frobenius = py::cast<double>(train_stats["frobenius"]);
        stats.diagonal = py::cast<std::vector<double>>(train_stats["diagonal"]);
        std::vector<double> self;
        if (!test_self.is_none())
          self = vector_from_numpy(py::cast<py::array_t<double>>(test_self));
        return numpy_from_matrix(normalize_test(km, stats, self).values);
      },
      py::arg("k"), py::arg("train_stats"), py::arg("test_self") = py::none());

  m.def(
      "sym_eigen",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& m) {
        const auto eig = sym_eigen(matrix_from_numpy(m));
        return py::make_tuple(
            py::array_t<double>(static_cast<py::ssize_t>(eig.eigenvalues.size()),
                                eig.eigenvalues.data()),
            numpy_from_matrix(eig.eigenvectors));
      },
      py::arg("m"),
      "Jacobi eigendecomposition of a symmetric matrix -> (eigenvalues "
      "descending, eigenvector columns).");

  m.def(
      "spectrum",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& k) {
        KernelMatrix km;
        km.values = matrix_from_numpy(k);
        const auto rep = spectrum(km);
        py::dict d;
        d["eigenvalues"] = py::array_t<double>(
            static_cast<py::ssize_t>(rep.eigenvalues.size()), rep.eigenvalues.data());
        d["n_positive"] = rep.n_positive;
        d["eff_rank"] = rep.eff_rank;
        d["lambda_max"] = rep.lambda_max;
        d["threshold"] = rep.threshold;
        return d;
      },
      py::arg("k"), "Eigenspectrum report with the Shannon effective rank.");

  m.def(
      "rank_match_gamma",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
         double target_rank, double tol_rel) {
        return rank_match_gamma(matrix_from_numpy(x), target_rank, tol_rel);
      },
      py::arg("x"), py::arg("target_rank"), py::arg("tol_rel") = 0.01);

  py::class_<SvcModel>(m, "SvcModel")
      .def_readonly("dual_coef", &SvcModel::dual_coef)
      .def_readonly("bias", &SvcModel::bias)
      .def_readonly("support", &SvcModel::support)
      .def_readonly("c", &SvcModel::c)
      .def_readonly("degenerate", &SvcModel::degenerate)
      .def_readonly("dual_objective", &SvcModel::dual_objective);

  m.def(
      "svc_train",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& k,
         const std::vector<int>& labels, double c, double tol) {
        KernelMatrix km;
        km.values = matrix_from_numpy(k);
        SvcTrainOptions opts;
        opts.tol = tol;
        return svc_train(km, labels, c, opts);
      },
      py::arg("k_train"), py::arg("labels"), py::arg("c") = 1.0, py::arg("tol") = 1e-3,
      "SMO C-SVC on a precomputed kernel; labels in {0,1}.");

  m.def(
      "decision_scores",
      [](const SvcModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& k) {
        KernelMatrix km;
        km.values = matrix_from_numpy(k);
        const auto s = decision_scores(model, km);
        return py::array_t<double>(static_cast<py::ssize_t>(s.size()), s.data());
      },
      py::arg("model"), py::arg("k_cross"));

  m.def(
      "predict",
      [](const SvcModel& model,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& k) {
        KernelMatrix km;
        km.values = matrix_from_numpy(k);
        return predict(model, km);
      },
      py::arg("model"), py::arg("k_cross"));

  m.def(
      "evaluate",
      [](const std::vector<int>& y_true, const std::vector<int>& y_pred,
         const py::array_t<double, py::array::c_style | py::array::forcecast>& scores) {
        return metrics_dict(evaluate(y_true, y_pred, vector_from_numpy(scores)));
      },
      py::arg("y_true"), py::arg("y_pred"), py::arg("scores"));

  m.def(
      "paired_bootstrap",
      [](const std::vector<int>& y_true, const std::vector<int>& pred_a,
         const std::vector<int>& pred_b, std::size_t resamples, std::uint64_t seed,
         unsigned threads) {
        const auto r = paired_bootstrap(y_true, pred_a, pred_b, resamples, seed, threads);
        py::dict d;
        d["delta_observed"] = r.delta_observed;
        d["delta_mean"] = r.delta_mean;
        d["ci_lo"] = r.ci_lo;
        d["ci_hi"] = r.ci_hi;
        d["p_value"] = r.p_value;
        d["p_value_two_sided"] = r.p_value_two_sided;
        d["resamples"] = r.resamples;
        d["seed"] = r.seed;
        return d;
      },
      py::arg("y_true"), py::arg("pred_a"), py::arg("pred_b"),
      py::arg("resamples") = 10000, py::arg("seed") = 42, py::arg("threads") = 1,
      "Paired bootstrap of the minority-F1 difference (A minus B).");

  m.def(
      "split_indices",
      [](const std::vector<int>& labels, std::uint64_t seed) {
        Dataset ds;
        ds.labels = labels;
        ds.ids.resize(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) ds.ids[i] = std::to_string(i);
        ds.features = Matrix(labels.size(), 1);
        const auto split = split_dataset(ds, seed);
        return py::make_tuple(split.train, split.val, split.test);
      },
      py::arg("labels"), py::arg("seed") = 0,
      "Stratified 80/10/10 split -> (train, val, test) index lists.");

  py::class_<FittedPipeline>(m, "FittedPipeline")
      .def_static(
          "fit",
          [](const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
             const std::vector<std::size_t>& train_idx, std::size_t q) {
            return FittedPipeline::fit(matrix_from_numpy(features), train_idx, q);
          },
          py::arg("features"), py::arg("train_idx"), py::arg("q"))
      .def(
          "transform",
          [](const FittedPipeline& p,
             const py::array_t<double, py::array::c_style | py::array::forcecast>& rows) {
            return numpy_from_matrix(p.transform(matrix_from_numpy(rows)));
          },
          py::arg("rows"))
      .def_property_readonly("explained_fraction", &FittedPipeline::explained_fraction)
      .def_property_readonly("means", &FittedPipeline::means)
      .def_property_readonly("stds", &FittedPipeline::stds)
      .def_property_readonly("components",
                             [](const FittedPipeline& p) {
                               return numpy_from_matrix(p.components());
                             })
      .def_property_readonly("minmax_lo", &FittedPipeline::minmax_lo)
      .def_property_readonly("minmax_hi", &FittedPipeline::minmax_hi);
}
