// Python bindings for the core decoding, synthesis and session-io operations.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "umm/core.hpp"
#include "umm/covariance.hpp"
#include "umm/decoder.hpp"
#include "umm/session_io.hpp"
#include "umm/synth.hpp"

namespace py = pybind11;
using namespace umm;

namespace {

TrialRecord make_trial(py::array_t<double, py::array::c_style | py::array::forcecast> epochs,
                       const std::vector<std::vector<int>>& events,
                       std::optional<int> true_symbol, int n_symbols) {
  if (epochs.ndim() != 3)
    throw ShapeMismatch("epochs array must have shape (n_epochs, channels, samples)");
  const auto n = epochs.shape(0);
  const auto c = epochs.shape(1);
  const auto t = epochs.shape(2);
  auto view = epochs.unchecked<3>();
  TrialRecord trial;
  trial.n_symbols = n_symbols;
  trial.true_symbol = true_symbol;
  trial.epochs.reserve(static_cast<std::size_t>(n));
  for (py::ssize_t k = 0; k < n; ++k) {
    Matrix m(c, t);
    for (py::ssize_t ci = 0; ci < c; ++ci)
      for (py::ssize_t ti = 0; ti < t; ++ti) m(ci, ti) = view(k, ci, ti);
    trial.epochs.emplace_back(std::move(m));
  }
  trial.events.reserve(events.size());
  for (const auto& ev : events) trial.events.push_back(StimulusEvent{ev});
  trial.validate();
  return trial;
}

py::array_t<double> trial_epochs_array(const TrialRecord& trial) {
  const auto n = static_cast<py::ssize_t>(trial.epochs.size());
  const py::ssize_t c = trial.epochs.empty() ? 0 : trial.epochs.front().channels();
  const py::ssize_t t = trial.epochs.empty() ? 0 : trial.epochs.front().samples();
  py::array_t<double> out({n, c, t});
  auto view = out.mutable_unchecked<3>();
  for (py::ssize_t k = 0; k < n; ++k)
    for (py::ssize_t ci = 0; ci < c; ++ci)
      for (py::ssize_t ti = 0; ti < t; ++ti)
        view(k, ci, ti) = trial.epochs[static_cast<std::size_t>(k)].data(ci, ti);
  return out;
}

std::vector<std::vector<int>> trial_events(const TrialRecord& trial) {
  std::vector<std::vector<int>> out;
  out.reserve(trial.events.size());
  for (const auto& ev : trial.events) out.push_back(ev.highlighted);
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Calibration-free ERP decoding via unsupervised mean-difference maximization";

  py::register_exception<Error>(m, "UmmError");

  py::enum_<MeanStrategy>(m, "MeanStrategy")
      .value("instant", MeanStrategy::instant)
      .value("optimistic", MeanStrategy::optimistic)
      .value("confidence_weighted", MeanStrategy::confidence_weighted);

  py::enum_<CovKind>(m, "CovKind")
      .value("shrinkage", CovKind::shrinkage)
      .value("block_toeplitz", CovKind::block_toeplitz);

  py::enum_<CovScope>(m, "CovScope")
      .value("current_trial", CovScope::current_trial)
      .value("pooled_all", CovScope::pooled_all);

  py::enum_<CodeKind>(m, "CodeKind")
      .value("pseudo_random", CodeKind::pseudo_random)
      .value("row_column", CodeKind::row_column)
      .value("sequential", CodeKind::sequential);

  py::class_<DecoderConfig>(m, "DecoderConfig")
      .def(py::init<>())
      .def_readwrite("mean_strategy", &DecoderConfig::mean_strategy)
      .def_readwrite("covariance_kind", &DecoderConfig::covariance_kind)
      .def_readwrite("covariance_scope", &DecoderConfig::covariance_scope)
      .def_readwrite("degeneracy_warmup", &DecoderConfig::degeneracy_warmup)
      .def_readwrite("degeneracy_ratio", &DecoderConfig::degeneracy_ratio)
      .def_readwrite("reset_on_degenerate", &DecoderConfig::reset_on_degenerate)
      .def_readwrite("sigma_floor", &DecoderConfig::sigma_floor)
      .def_readwrite("taper_bandwidth", &DecoderConfig::taper_bandwidth)
      .def_readwrite("center_per_trial", &DecoderConfig::center_per_trial);

  py::class_<Decision>(m, "Decision")
      .def_readonly("chosen", &Decision::chosen)
      .def_readonly("runner_up", &Decision::runner_up)
      .def_readonly("distances", &Decision::distances)
      .def_readonly("confidence", &Decision::confidence)
      .def_readonly("instant_confidence", &Decision::instant_confidence)
      .def_readonly("degenerate", &Decision::degenerate)
      .def("__repr__", [](const Decision& d) {
        return "Decision(chosen=" + std::to_string(d.chosen) +
               ", confidence=" + std::to_string(d.confidence) + ")";
      });

  py::class_<DecoderState>(m, "DecoderState")
      .def_readonly("trial_count", &DecoderState::trial_count)
      .def_readonly("cum_confidence", &DecoderState::cum_confidence)
      .def_readonly("cum_instant_confidence", &DecoderState::cum_instant_confidence)
      .def_readonly("confidence_log", &DecoderState::confidence_log);

  py::class_<TrialRecord>(m, "TrialRecord")
      .def(py::init(&make_trial), py::arg("epochs"), py::arg("events"),
           py::arg("true_symbol") = std::nullopt, py::arg("n_symbols") = 0)
      .def_property_readonly("n_epochs", &TrialRecord::n_epochs)
      .def_readonly("n_symbols", &TrialRecord::n_symbols)
      .def_readonly("true_symbol", &TrialRecord::true_symbol)
      .def_property_readonly("epochs", &trial_epochs_array)
      .def_property_readonly("events", &trial_events)
      .def("target_counts", &TrialRecord::target_counts)
      .def("balanced_code", &TrialRecord::balanced_code);

  py::class_<Decoder>(m, "Decoder")
      .def(py::init<int, int, int, DecoderConfig>(), py::arg("n_symbols"),
           py::arg("channels"), py::arg("samples"), py::arg("config") = DecoderConfig())
      .def("classify_trial", &Decoder::classify_trial, py::arg("trial"))
      .def("lda_weights", &Decoder::lda_weights)
      .def("preload_pool",
           [](Decoder& d, const TrialRecord& trial) { d.preload_pool(trial.epochs); })
      .def_property_readonly("state", &Decoder::state,
                             py::return_value_policy::reference_internal)
      .def_property_readonly("n_symbols", &Decoder::n_symbols);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_symbols", &SynthConfig::n_symbols)
      .def_readwrite("code", &SynthConfig::code)
      .def_readwrite("epochs_per_trial", &SynthConfig::epochs_per_trial)
      .def_readwrite("targets_per_symbol", &SynthConfig::targets_per_symbol)
      .def_readwrite("rows", &SynthConfig::rows)
      .def_readwrite("cols", &SynthConfig::cols)
      .def_readwrite("repetitions", &SynthConfig::repetitions)
      .def_readwrite("channels", &SynthConfig::channels)
      .def_readwrite("samples", &SynthConfig::samples)
      .def_readwrite("ar_coeff", &SynthConfig::ar_coeff)
      .def_readwrite("noise_amplitude", &SynthConfig::noise_amplitude)
      .def_readwrite("identity_spatial_mixing", &SynthConfig::identity_spatial_mixing)
      .def_readwrite("snr", &SynthConfig::snr)
      .def_readwrite("latency_jitter_std", &SynthConfig::latency_jitter_std)
      .def_readwrite("n_trials", &SynthConfig::n_trials)
      .def_readwrite("seed", &SynthConfig::seed)
      .def_static("visual_random_preset", &SynthConfig::visual_random_preset)
      .def_static("row_column_preset", &SynthConfig::row_column_preset)
      .def_static("sequential_preset", &SynthConfig::sequential_preset);

  m.def("generate_session", &generate_session, py::arg("config"));
  m.def("generator_noise_covariance", &generator_noise_covariance, py::arg("config"));

  py::class_<SessionManifest>(m, "SessionManifest")
      .def_readonly("format_version", &SessionManifest::format_version)
      .def_readonly("channel_names", &SessionManifest::channel_names)
      .def_readonly("sampling_rate", &SessionManifest::sampling_rate)
      .def_readonly("samples_per_epoch", &SessionManifest::samples_per_epoch)
      .def_readonly("symbols", &SessionManifest::symbols)
      .def_readonly("epoch_count", &SessionManifest::epoch_count)
      .def_readonly("provenance", &SessionManifest::provenance);

  py::class_<Session>(m, "Session")
      .def_readonly("manifest", &Session::manifest)
      .def("to_trials", &Session::to_trials)
      .def("n_trials",
           [](const Session& s) { return static_cast<int>(s.manifest.trials.size()); });

  m.def("build_session", &build_session, py::arg("config"), py::arg("trials"),
        py::arg("provenance") = "python");
  m.def(
      "write_session",
      [](const std::filesystem::path& dir, const Session& session) {
        write_session(dir, session.manifest, session.epochs);
      },
      py::arg("dir"), py::arg("session"));
  m.def("read_session", &read_session, py::arg("dir"));

  m.def(
      "mahalanobis_sq",
      [](const Vector& delta, const Matrix& sigma) {
        const auto cov = CovarianceModel::from_matrix(sigma, CovKind::shrinkage,
                                                      CovScope::current_trial);
        return mahalanobis_sq(delta, cov);
      },
      py::arg("delta_mu"), py::arg("sigma"));

  m.def(
      "compute_confidence",
      [](const std::vector<double>& distances, double sigma_floor) {
        const auto pick = compute_confidence(distances, sigma_floor);
        return py::make_tuple(pick.confidence, pick.winner, pick.runner_up);
      },
      py::arg("distances"), py::arg("sigma_floor") = 1e-12);

  m.def(
      "count_unconstrained_assignments",
      [](int n_e, int n_e_plus) {
        const std::string digits = count_to_string(count_unconstrained_assignments(n_e, n_e_plus));
        return py::module_::import("builtins").attr("int")(digits);
      },
      py::arg("n_e"), py::arg("n_e_plus"),
      "Exact binomial(n_e, n_e_plus) as a python int");

  py::class_<ToyConfig>(m, "ToyConfig")
      .def(py::init<>())
      .def_readwrite("draws_per_letter", &ToyConfig::draws_per_letter)
      .def_readwrite("separation", &ToyConfig::separation)
      .def_readwrite("noise_scale", &ToyConfig::noise_scale)
      .def_readwrite("seed", &ToyConfig::seed);

  py::class_<ToyData>(m, "ToyData")
      .def_property_readonly("points",
                             [](const ToyData& t) {
                               py::array_t<double> out(
                                   {static_cast<py::ssize_t>(t.points.size()),
                                    static_cast<py::ssize_t>(2)});
                               auto view = out.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < t.points.size(); ++i) {
                                 view(static_cast<py::ssize_t>(i), 0) = t.points[i](0);
                                 view(static_cast<py::ssize_t>(i), 1) = t.points[i](1);
                               }
                               return out;
                             })
      .def_readonly("letters", &ToyData::letters)
      .def("as_trial", &ToyData::as_trial)
      .def("csv", &ToyData::csv);

  m.def("generate_toy_2d", &generate_toy_2d, py::arg("config") = ToyConfig());

  m.def("default_symbols",
        [](int n) { return SymbolSet::with_default_names(n).names(); });
}
