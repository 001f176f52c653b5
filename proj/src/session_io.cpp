#include "umm/session_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "payload format assumes a little-endian host");

namespace umm {

using nlohmann::json;

std::vector<int> TrialSpec::epoch_indices() const {
  if (!explicit_indices.empty()) return explicit_indices;
  std::vector<int> idx;
  idx.reserve(static_cast<std::size_t>(epoch_end - epoch_begin));
  for (int k = epoch_begin; k < epoch_end; ++k) idx.push_back(k);
  return idx;
}

int TrialSpec::n_epochs() const {
  if (!explicit_indices.empty()) return static_cast<int>(explicit_indices.size());
  return epoch_end - epoch_begin;
}

void SessionManifest::validate() const {
  if (channel_names.empty()) throw ShapeMismatch("manifest has no channels");
  if (samples_per_epoch < 1) throw ShapeMismatch("samples_per_epoch must be >= 1");
  if (symbols.size() < 2) throw InvalidConfig("manifest needs at least two symbols");
  if (epoch_count < 0) throw ShapeMismatch("negative epoch_count");
  const int n_sym = static_cast<int>(symbols.size());
  for (const auto& t : trials) {
    const auto idx = t.epoch_indices();
    if (idx.empty()) throw ShapeMismatch("trial without epochs");
    for (int k : idx)
      if (k < 0 || k >= epoch_count)
        throw ShapeMismatch("trial references epoch " + std::to_string(k) +
                            " outside [0," + std::to_string(epoch_count) + ")");
    if (t.events.size() != idx.size())
      throw ShapeMismatch("trial has " + std::to_string(idx.size()) + " epochs but " +
                          std::to_string(t.events.size()) + " event lists");
    for (const auto& ev : t.events) {
      if (ev.empty()) throw ShapeMismatch("event with empty highlight set");
      for (int s : ev)
        if (s < 0 || s >= n_sym)
          throw ShapeMismatch("event references symbol " + std::to_string(s) +
                              " outside [0," + std::to_string(n_sym) + ")");
    }
    if (t.true_symbol && (*t.true_symbol < 0 || *t.true_symbol >= n_sym))
      throw ShapeMismatch("true_symbol outside symbol range");
  }
}

SymbolSet Session::symbol_set() const { return SymbolSet(manifest.symbols); }

std::vector<TrialRecord> Session::to_trials() const {
  std::vector<TrialRecord> out;
  out.reserve(manifest.trials.size());
  for (const auto& spec : manifest.trials) {
    TrialRecord trial;
    trial.n_symbols = static_cast<int>(manifest.symbols.size());
    trial.true_symbol = spec.true_symbol;
    const auto idx = spec.epoch_indices();
    trial.epochs.reserve(idx.size());
    for (int k : idx) trial.epochs.emplace_back(epochs[static_cast<std::size_t>(k)]);
    trial.events.reserve(spec.events.size());
    for (const auto& ev : spec.events) trial.events.push_back(StimulusEvent{ev});
    out.push_back(std::move(trial));
  }
  return out;
}

namespace {

json manifest_to_json(const SessionManifest& m) {
  json j;
  j["format_version"] = m.format_version;
  j["channel_names"] = m.channel_names;
  j["sampling_rate"] = m.sampling_rate;
  j["samples_per_epoch"] = m.samples_per_epoch;
  j["symbols"] = m.symbols;
  j["epoch_count"] = m.epoch_count;
  j["provenance"] = m.provenance;
  j["trials"] = json::array();
  for (const auto& t : m.trials) {
    json jt;
    if (!t.explicit_indices.empty())
      jt["epoch_indices"] = t.explicit_indices;
    else
      jt["epoch_range"] = {t.epoch_begin, t.epoch_end};
    jt["events"] = t.events;
    if (t.true_symbol)
      jt["true_symbol"] = *t.true_symbol;
    else
      jt["true_symbol"] = nullptr;
    j["trials"].push_back(std::move(jt));
  }
  return j;
}

SessionManifest manifest_from_json(const json& j) {
  SessionManifest m;
  try {
    m.format_version = j.at("format_version").get<int>();
    if (m.format_version != 1)
      throw FormatVersionUnsupported("unsupported format_version " +
                                     std::to_string(m.format_version));
    m.channel_names = j.at("channel_names").get<std::vector<std::string>>();
    m.sampling_rate = j.at("sampling_rate").get<double>();
    m.samples_per_epoch = j.at("samples_per_epoch").get<int>();
    m.symbols = j.at("symbols").get<std::vector<std::string>>();
    m.epoch_count = j.at("epoch_count").get<int>();
    m.provenance = j.value("provenance", std::string());
    for (const auto& jt : j.at("trials")) {
      TrialSpec t;
      if (jt.contains("epoch_indices")) {
        t.explicit_indices = jt.at("epoch_indices").get<std::vector<int>>();
      } else {
        const auto range = jt.at("epoch_range").get<std::vector<int>>();
        if (range.size() != 2) throw ShapeMismatch("epoch_range must be [begin, end)");
        t.epoch_begin = range[0];
        t.epoch_end = range[1];
      }
      t.events = jt.at("events").get<std::vector<std::vector<int>>>();
      if (jt.contains("true_symbol") && !jt.at("true_symbol").is_null())
        t.true_symbol = jt.at("true_symbol").get<int>();
      m.trials.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw CorruptPayload(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

}  // namespace

void atomic_write_file(const std::filesystem::path& path, const std::string& bytes) {
  const auto tmp = path.parent_path() / (path.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_session(const std::filesystem::path& dir, const SessionManifest& manifest,
                   const std::vector<Matrix>& epochs) {
  manifest.validate();
  if (static_cast<int>(epochs.size()) != manifest.epoch_count)
    throw ShapeMismatch("manifest epoch_count does not match payload epoch count");
  const int c = manifest.channels();
  const int t = manifest.samples_per_epoch;
  for (const auto& e : epochs)
    if (e.rows() != c || e.cols() != t)
      throw ShapeMismatch("epoch shape does not match manifest");

  std::filesystem::create_directories(dir);

  // payload: epoch-major, each epoch channel-row-major with time fastest
  std::string payload;
  payload.reserve(epochs.size() * static_cast<std::size_t>(c) * static_cast<std::size_t>(t) * 4);
  for (const auto& e : epochs) {
    for (int ci = 0; ci < c; ++ci) {
      for (int ti = 0; ti < t; ++ti) {
        const auto v = static_cast<float>(e(ci, ti));
        char buf[4];
        std::memcpy(buf, &v, 4);
        payload.append(buf, 4);
      }
    }
  }
  atomic_write_file(dir / "epochs.f32le", payload);
  atomic_write_file(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");
}

Session read_session(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw Error("cannot read " + manifest_path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw CorruptPayload(std::string("manifest is not valid JSON: ") + e.what());
  }

  Session session;
  session.manifest = manifest_from_json(j);
  session.manifest.validate();

  const int c = session.manifest.channels();
  const int t = session.manifest.samples_per_epoch;
  const auto payload_path = dir / "epochs.f32le";
  std::ifstream pf(payload_path, std::ios::binary | std::ios::ate);
  if (!pf) throw Error("cannot read " + payload_path.string());
  const auto size = static_cast<std::size_t>(pf.tellg());
  const std::size_t expected = static_cast<std::size_t>(session.manifest.epoch_count) *
                               static_cast<std::size_t>(c) * static_cast<std::size_t>(t) * 4;
  if (size != expected)
    throw CorruptPayload("payload is " + std::to_string(size) + " bytes, expected " +
                         std::to_string(expected));
  pf.seekg(0);
  std::vector<float> raw(expected / 4);
  pf.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(expected));
  if (!pf) throw CorruptPayload("short read from " + payload_path.string());

  session.epochs.reserve(static_cast<std::size_t>(session.manifest.epoch_count));
  std::size_t offset = 0;
  for (int k = 0; k < session.manifest.epoch_count; ++k) {
    Matrix e(c, t);
    for (int ci = 0; ci < c; ++ci)
      for (int ti = 0; ti < t; ++ti) e(ci, ti) = static_cast<double>(raw[offset++]);
    session.epochs.push_back(std::move(e));
  }
  return session;
}

Session build_session(const SynthConfig& config, const std::vector<TrialRecord>& trials,
                      const std::string& provenance) {
  Session session;
  auto& m = session.manifest;
  m.format_version = 1;
  for (int c = 0; c < config.channels; ++c) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ch%02d", c);
    m.channel_names.emplace_back(buf);
  }
  m.sampling_rate = 100.0;
  m.samples_per_epoch = config.samples;
  m.symbols = SymbolSet::with_default_names(config.n_symbols).names();
  m.provenance = provenance;

  int offset = 0;
  for (const auto& trial : trials) {
    TrialSpec spec;
    spec.epoch_begin = offset;
    spec.epoch_end = offset + trial.n_epochs();
    for (const auto& ev : trial.events) spec.events.push_back(ev.highlighted);
    spec.true_symbol = trial.true_symbol;
    m.trials.push_back(std::move(spec));
    for (const auto& e : trial.epochs) session.epochs.push_back(e.data);
    offset += trial.n_epochs();
  }
  m.epoch_count = offset;
  return session;
}

// ---------------------------------------------------------------------------

const char* const kDecisionLogHeader =
    "session,trial,predicted,true_symbol,correct,d_star,d_runner_up,confidence,"
    "confidence_instant,cum_confidence,cum_confidence_instant,degenerate,"
    "mean_strategy,covariance_kind,covariance_scope";

void DecisionLog::append(const std::string& session_id, int trial,
                         const Decision& decision, const DecoderState& state,
                         const DecoderConfig& config, std::optional<int> true_symbol,
                         const SymbolSet& symbols) {
  (void)symbols;  // names resolved at CSV time
  DecisionRow row;
  row.session_id = session_id;
  row.trial = trial;
  row.predicted = decision.chosen;
  row.true_symbol = true_symbol;
  if (true_symbol) row.correct = decision.chosen == *true_symbol;
  row.d_star = decision.distances[static_cast<std::size_t>(decision.chosen)];
  row.d_runner_up = decision.distances[static_cast<std::size_t>(decision.runner_up)];
  row.confidence = decision.confidence;
  row.confidence_instant = decision.instant_confidence;
  row.cum_confidence = state.cum_confidence;
  row.cum_confidence_instant = state.cum_instant_confidence;
  row.degenerate = decision.degenerate;
  row.mean_strategy = config.mean_strategy;
  row.covariance_kind = config.covariance_kind;
  row.covariance_scope = config.covariance_scope;
  rows.push_back(std::move(row));
}

std::string decision_log_csv(const DecisionLog& log, const SymbolSet& symbols) {
  std::ostringstream out;
  out.precision(17);
  out << kDecisionLogHeader << "\n";
  for (const auto& r : log.rows) {
    out << r.session_id << "," << r.trial << "," << symbols.name(r.predicted) << ",";
    if (r.true_symbol) out << symbols.name(*r.true_symbol);
    out << ",";
    if (r.correct) out << (*r.correct ? 1 : 0);
    out << "," << r.d_star << "," << r.d_runner_up << "," << r.confidence << ","
        << r.confidence_instant << "," << r.cum_confidence << ","
        << r.cum_confidence_instant << "," << (r.degenerate ? 1 : 0) << ","
        << to_string(r.mean_strategy) << "," << to_string(r.covariance_kind) << ","
        << to_string(r.covariance_scope) << "\n";
  }
  return out.str();
}

MetricsReport compute_metrics(const std::vector<DecisionLog>& logs, int histogram_bins) {
  MetricsReport report;
  if (histogram_bins < 1) throw ArgumentOutOfRange("histogram_bins must be >= 1");

  int pooled_correct = 0;
  int pooled_total = 0;
  std::vector<int> curve_correct;
  std::vector<int> curve_total;
  double max_conf = 0.0;

  for (const auto& log : logs) {
    int correct = 0;
    for (const auto& r : log.rows) {
      if (!r.true_symbol || !r.correct)
        throw MissingLabels("decision log row without a true symbol");
      max_conf = std::max(max_conf, r.confidence);
      if (*r.correct) ++correct;
    }
    const int total = static_cast<int>(log.rows.size());
    if (total == 0) continue;
    const std::string id = log.rows.front().session_id;
    report.per_session_accuracy.emplace_back(id, static_cast<double>(correct) / total);
    pooled_correct += correct;
    pooled_total += total;
    for (std::size_t t = 0; t < log.rows.size(); ++t) {
      if (curve_total.size() <= t) {
        curve_total.push_back(0);
        curve_correct.push_back(0);
      }
      ++curve_total[t];
      if (*log.rows[t].correct) ++curve_correct[t];
    }
  }

  if (pooled_total == 0) throw MissingLabels("no labeled decisions to score");
  report.pooled_accuracy = static_cast<double>(pooled_correct) / pooled_total;
  report.pooled_trials = pooled_total;
  report.learning_curve.reserve(curve_total.size());
  for (std::size_t t = 0; t < curve_total.size(); ++t)
    report.learning_curve.push_back(static_cast<double>(curve_correct[t]) / curve_total[t]);

  const double hi = max_conf > 0.0 ? max_conf : 1.0;
  const double width = hi / histogram_bins;
  report.confidence_histogram.resize(static_cast<std::size_t>(histogram_bins));
  for (int b = 0; b < histogram_bins; ++b) {
    report.confidence_histogram[static_cast<std::size_t>(b)].lo = b * width;
    report.confidence_histogram[static_cast<std::size_t>(b)].hi = (b + 1) * width;
  }
  for (const auto& log : logs) {
    for (const auto& r : log.rows) {
      int b = width > 0.0 ? static_cast<int>(r.confidence / width) : 0;
      b = std::clamp(b, 0, histogram_bins - 1);
      auto& row = report.confidence_histogram[static_cast<std::size_t>(b)];
      if (*r.correct)
        ++row.correct;
      else
        ++row.incorrect;
    }
  }
  return report;
}

std::string MetricsReport::text() const {
  std::ostringstream out;
  out.precision(6);
  out << "sessions: " << per_session_accuracy.size() << "\n";
  out << "pooled accuracy: " << pooled_accuracy << " over " << pooled_trials
      << " trials\n";
  for (const auto& [id, acc] : per_session_accuracy)
    out << "  " << id << ": " << acc << "\n";
  return out.str();
}

std::string MetricsReport::learning_curve_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "trial,fraction_correct\n";
  for (std::size_t t = 0; t < learning_curve.size(); ++t)
    out << t << "," << learning_curve[t] << "\n";
  return out.str();
}

std::string MetricsReport::confidence_histogram_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "bin_lo,bin_hi,correct,incorrect\n";
  for (const auto& row : confidence_histogram)
    out << row.lo << "," << row.hi << "," << row.correct << "," << row.incorrect << "\n";
  return out.str();
}

}  // namespace umm
