#include "umm/synth.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace umm {

std::string to_string(CodeKind k) {
  switch (k) {
    case CodeKind::pseudo_random: return "pseudo_random";
    case CodeKind::row_column: return "row_column";
    case CodeKind::sequential: return "sequential";
  }
  return "?";
}

int SynthConfig::events_per_trial() const {
  switch (code) {
    case CodeKind::pseudo_random: return epochs_per_trial;
    case CodeKind::row_column: return repetitions * (rows + cols);
    case CodeKind::sequential: return repetitions * n_symbols;
  }
  return 0;
}

int SynthConfig::expected_targets_per_symbol() const {
  switch (code) {
    case CodeKind::pseudo_random: return targets_per_symbol;
    case CodeKind::row_column: return 2 * repetitions;
    case CodeKind::sequential: return repetitions;
  }
  return 0;
}

void SynthConfig::validate() const {
  if (n_symbols < 2) throw InvalidConfig("n_symbols must be >= 2");
  if (channels < 1 || samples < 1) throw InvalidConfig("channels and samples must be >= 1");
  if (!(ar_coeff >= 0.0 && ar_coeff < 1.0)) throw InvalidConfig("ar_coeff must be in [0,1)");
  if (snr < 0.0) throw InvalidConfig("snr must be >= 0");
  if (noise_amplitude < 0.0) throw InvalidConfig("noise_amplitude must be >= 0");
  if (latency_jitter_std < 0.0) throw InvalidConfig("latency_jitter_std must be >= 0");
  if (n_trials < 1) throw InvalidConfig("n_trials must be >= 1");
  switch (code) {
    case CodeKind::pseudo_random:
      // 1 < N_e+ < N_e - N_e+ keeps both classes non-trivial
      if (!(targets_per_symbol > 1 &&
            targets_per_symbol < epochs_per_trial - targets_per_symbol))
        throw InvalidConfig("pseudo_random needs 1 < targets_per_symbol < epochs - targets");
      // otherwise some event necessarily stays empty
      if (static_cast<long>(n_symbols) * targets_per_symbol < epochs_per_trial)
        throw InvalidConfig("pseudo_random needs n_symbols * targets_per_symbol >= epochs");
      break;
    case CodeKind::row_column:
      if (rows < 2 || cols < 2) throw InvalidConfig("row_column needs rows, cols >= 2");
      if (rows * cols != n_symbols)
        throw InvalidConfig("row_column needs n_symbols == rows * cols");
      if (repetitions < 1) throw InvalidConfig("repetitions must be >= 1");
      break;
    case CodeKind::sequential:
      if (repetitions < 1) throw InvalidConfig("repetitions must be >= 1");
      break;
  }
  if (target_template.size() > 0 &&
      (target_template.rows() != channels || target_template.cols() != samples))
    throw InvalidConfig("target_template shape must be channels x samples");
  if (nontarget_template.size() > 0 &&
      (nontarget_template.rows() != channels || nontarget_template.cols() != samples))
    throw InvalidConfig("nontarget_template shape must be channels x samples");
}

SynthConfig SynthConfig::visual_random_preset() {
  SynthConfig c;
  c.n_symbols = 36;
  c.code = CodeKind::pseudo_random;
  c.epochs_per_trial = 68;
  c.targets_per_symbol = 16;
  c.channels = 8;
  c.samples = 12;
  c.n_trials = 100;
  return c;
}

SynthConfig SynthConfig::row_column_preset() {
  SynthConfig c;
  c.n_symbols = 36;
  c.code = CodeKind::row_column;
  c.rows = 6;
  c.cols = 6;
  c.repetitions = 10;
  c.channels = 8;
  c.samples = 12;
  c.n_trials = 35;
  return c;
}

SynthConfig SynthConfig::sequential_preset() {
  SynthConfig c;
  c.n_symbols = 6;
  c.code = CodeKind::sequential;
  c.repetitions = 15;
  c.channels = 8;
  c.samples = 12;
  c.n_trials = 100;
  return c;
}

namespace {

std::vector<StimulusEvent> pseudo_random_code(const SynthConfig& cfg, Rng& rng) {
  const int n_e = cfg.epochs_per_trial;
  std::vector<StimulusEvent> events(static_cast<std::size_t>(n_e));
  for (int s = 0; s < cfg.n_symbols; ++s) {
    for (int k : rng.sample_indices(n_e, cfg.targets_per_symbol))
      events[static_cast<std::size_t>(k)].highlighted.push_back(s);
  }
  // Independent per-symbol membership draws can leave an event empty, which
  // no paradigm produces. Repair by moving one symbol out of the fullest
  // event; per-symbol target counts stay exact.
  for (auto& ev : events) {
    while (ev.highlighted.empty()) {
      std::size_t donor = 0;
      for (std::size_t d = 1; d < events.size(); ++d)
        if (events[d].highlighted.size() > events[donor].highlighted.size()) donor = d;
      auto& from = events[donor].highlighted;
      const auto pick = static_cast<std::size_t>(rng.uniform_int(from.size()));
      ev.highlighted.push_back(from[pick]);
      from.erase(from.begin() + static_cast<std::ptrdiff_t>(pick));
    }
  }
  for (auto& ev : events) std::sort(ev.highlighted.begin(), ev.highlighted.end());
  return events;
}

std::vector<StimulusEvent> row_column_code(const SynthConfig& cfg, Rng& rng) {
  std::vector<StimulusEvent> events;
  events.reserve(static_cast<std::size_t>(cfg.events_per_trial()));
  // flash ids: 0..rows-1 are rows, rows..rows+cols-1 are columns
  std::vector<int> flashes(static_cast<std::size_t>(cfg.rows + cfg.cols));
  for (std::size_t i = 0; i < flashes.size(); ++i) flashes[i] = static_cast<int>(i);
  for (int pass = 0; pass < cfg.repetitions; ++pass) {
    rng.shuffle(flashes);
    for (int f : flashes) {
      StimulusEvent ev;
      if (f < cfg.rows) {
        for (int c = 0; c < cfg.cols; ++c) ev.highlighted.push_back(f * cfg.cols + c);
      } else {
        const int col = f - cfg.rows;
        for (int r = 0; r < cfg.rows; ++r) ev.highlighted.push_back(r * cfg.cols + col);
      }
      events.push_back(std::move(ev));
    }
  }
  return events;
}

std::vector<StimulusEvent> sequential_code(const SynthConfig& cfg, Rng& rng) {
  std::vector<StimulusEvent> events;
  events.reserve(static_cast<std::size_t>(cfg.events_per_trial()));
  std::vector<int> symbols(static_cast<std::size_t>(cfg.n_symbols));
  for (std::size_t i = 0; i < symbols.size(); ++i) symbols[i] = static_cast<int>(i);
  for (int pass = 0; pass < cfg.repetitions; ++pass) {
    rng.shuffle(symbols);
    for (int s : symbols) events.push_back(StimulusEvent{{s}});
  }
  return events;
}

Matrix default_target_template(const SynthConfig& cfg, Rng& rng) {
  // raised cosine bump peaking near 60 % of the window, on a random half of
  // the channels
  Matrix tpl = Matrix::Zero(cfg.channels, cfg.samples);
  const double t_peak = 0.6 * (cfg.samples - 1);
  const double width = std::max(2.0, cfg.samples / 2.0);
  const int n_active = std::max(1, (cfg.channels + 1) / 2);
  const std::vector<int> active = rng.sample_indices(cfg.channels, n_active);
  for (int t = 0; t < cfg.samples; ++t) {
    const double u = (t - t_peak) / (width / 2.0);
    const double bump = std::abs(u) <= 1.0 ? 0.5 * (1.0 + std::cos(M_PI * u)) : 0.0;
    for (int c : active) tpl(c, t) = bump;
  }
  return tpl;
}

Matrix random_spd_sqrt(int dim, Rng& rng) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector eigs(dim);
  for (int i = 0; i < dim; ++i) eigs(i) = 0.5 + rng.uniform();  // in [0.5, 1.5)
  return q * eigs.cwiseSqrt().asDiagonal() * q.transpose();
}

// Session-level draws happen in a fixed order so that per-component getters
// (mixing, templates) agree with generate_session for the same config.
struct SessionSetup {
  Matrix mixing;
  Matrix target_tpl;
  Matrix nontarget_tpl;
};

SessionSetup session_setup(const SynthConfig& cfg, Rng& rng) {
  SessionSetup s;
  s.mixing = cfg.identity_spatial_mixing ? Matrix::Identity(cfg.channels, cfg.channels)
                                         : random_spd_sqrt(cfg.channels, rng);
  s.target_tpl =
      cfg.target_template.size() > 0 ? cfg.target_template : default_target_template(cfg, rng);
  s.nontarget_tpl = cfg.nontarget_template.size() > 0
                        ? cfg.nontarget_template
                        : Matrix::Zero(cfg.channels, cfg.samples);
  return s;
}

// Stationary AR(1) rows (unit marginal variance) mixed across channels.
Matrix noise_epoch(const SynthConfig& cfg, const Matrix& mixing, Rng& rng) {
  Matrix y(cfg.channels, cfg.samples);
  const double rho = cfg.ar_coeff;
  const double innov = std::sqrt(1.0 - rho * rho);
  for (int c = 0; c < cfg.channels; ++c) {
    y(c, 0) = rng.normal();
    for (int t = 1; t < cfg.samples; ++t) y(c, t) = rho * y(c, t - 1) + innov * rng.normal();
  }
  if (cfg.identity_spatial_mixing) return y;
  return mixing * y;
}

Matrix shifted_template(const Matrix& tpl, int shift) {
  if (shift == 0) return tpl;
  Matrix out = Matrix::Zero(tpl.rows(), tpl.cols());
  const int t_max = static_cast<int>(tpl.cols());
  for (int t = 0; t < t_max; ++t) {
    const int src = t - shift;
    if (src >= 0 && src < t_max) out.col(t) = tpl.col(src);
  }
  return out;
}

}  // namespace

std::vector<StimulusEvent> generate_stimulation_code(const SynthConfig& config, Rng& rng) {
  config.validate();
  switch (config.code) {
    case CodeKind::pseudo_random: return pseudo_random_code(config, rng);
    case CodeKind::row_column: return row_column_code(config, rng);
    case CodeKind::sequential: return sequential_code(config, rng);
  }
  throw InvalidConfig("unknown code kind");
}

std::vector<StimulusEvent> generate_stimulation_code(const SynthConfig& config) {
  Rng rng(config.seed);
  return generate_stimulation_code(config, rng);
}

Matrix noise_spatial_mixing(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  return session_setup(config, rng).mixing;
}

std::pair<Matrix, Matrix> session_templates(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  auto setup = session_setup(config, rng);
  return {std::move(setup.target_tpl), std::move(setup.nontarget_tpl)};
}

Matrix generator_noise_covariance(const SynthConfig& config) {
  config.validate();
  const Matrix m = noise_spatial_mixing(config);
  const Matrix spatial = m * m.transpose();
  const int c = config.channels;
  const int t = config.samples;
  const double amp2 = config.noise_amplitude * config.noise_amplitude;
  Matrix cov(c * t, c * t);
  for (int i = 0; i < t; ++i)
    for (int j = 0; j < t; ++j)
      cov.block(i * c, j * c, c, c) = amp2 * std::pow(config.ar_coeff, std::abs(i - j)) * spatial;
  return cov;
}

std::vector<TrialRecord> generate_session(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const SessionSetup setup = session_setup(config, rng);

  std::vector<TrialRecord> trials;
  trials.reserve(static_cast<std::size_t>(config.n_trials));
  for (int i = 0; i < config.n_trials; ++i) {
    TrialRecord trial;
    trial.n_symbols = config.n_symbols;
    trial.true_symbol = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(config.n_symbols)));
    trial.events = generate_stimulation_code(config, rng);
    trial.epochs.reserve(trial.events.size());
    for (const auto& ev : trial.events) {
      const bool is_target = ev.contains(*trial.true_symbol);
      const Matrix& tpl = is_target ? setup.target_tpl : setup.nontarget_tpl;
      int shift = 0;
      if (config.latency_jitter_std > 0.0)
        shift = static_cast<int>(std::lround(rng.normal() * config.latency_jitter_std));
      Matrix epoch = config.snr * shifted_template(tpl, shift);
      if (config.noise_amplitude > 0.0)
        epoch += config.noise_amplitude * noise_epoch(config, setup.mixing, rng);
      trial.epochs.emplace_back(std::move(epoch));
    }
    trials.push_back(std::move(trial));
  }
  return trials;
}

// ---------------------------------------------------------------------------

const std::array<std::string, 4>& ToyData::letter_names() {
  static const std::array<std::string, 4> names{"A", "B", "C", "D"};
  return names;
}

ToyData generate_toy_2d(const ToyConfig& config) {
  if (config.draws_per_letter < 2) throw InvalidConfig("draws_per_letter must be >= 2");
  if (config.noise_scale < 0.0) throw InvalidConfig("noise_scale must be >= 0");
  Rng rng(config.seed);

  // shared anisotropic noise, true target 'B' mean-shifted
  const Eigen::Matrix2d chol = (Eigen::Matrix2d() << 1.0, 0.0, 0.45, 0.65).finished();
  const Eigen::Vector2d shift = config.separation * Eigen::Vector2d(0.8, 0.6);

  ToyData toy;
  const int n = config.draws_per_letter;
  toy.points.reserve(static_cast<std::size_t>(4 * n));
  toy.letters.reserve(static_cast<std::size_t>(4 * n));
  for (int letter = 0; letter < 4; ++letter) {
    const Eigen::Vector2d mean = letter == 1 ? shift : Eigen::Vector2d::Zero();
    for (int k = 0; k < n; ++k) {
      const Eigen::Vector2d z(rng.normal(), rng.normal());
      toy.points.push_back(mean + config.noise_scale * (chol * z));
      toy.letters.push_back(letter);
    }
  }

  for (int h = 0; h < 4; ++h) {
    Eigen::Vector2d pos = Eigen::Vector2d::Zero();
    Eigen::Vector2d neg = Eigen::Vector2d::Zero();
    int n_pos = 0, n_neg = 0;
    for (std::size_t k = 0; k < toy.points.size(); ++k) {
      if (toy.letters[k] == h) {
        pos += toy.points[k];
        ++n_pos;
      } else {
        neg += toy.points[k];
        ++n_neg;
      }
    }
    toy.hypotheses[static_cast<std::size_t>(h)] = {pos / n_pos, neg / n_neg};
  }
  return toy;
}

TrialRecord ToyData::as_trial() const {
  TrialRecord trial;
  trial.n_symbols = 4;
  trial.true_symbol = 1;
  trial.epochs.reserve(points.size());
  trial.events.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    Matrix m(2, 1);
    m(0, 0) = points[k](0);
    m(1, 0) = points[k](1);
    trial.epochs.emplace_back(std::move(m));
    trial.events.push_back(StimulusEvent{{letters[k]}});
  }
  return trial;
}

std::string ToyData::csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "panel,letter,x,y,kind\n";
  for (std::size_t k = 0; k < points.size(); ++k) {
    out << "input," << letter_names()[static_cast<std::size_t>(letters[k])] << ","
        << points[k](0) << "," << points[k](1) << ",point\n";
  }
  for (int h = 0; h < 4; ++h) {
    const auto& hyp = hypotheses[static_cast<std::size_t>(h)];
    const auto& name = letter_names()[static_cast<std::size_t>(h)];
    out << "hyp_" << name << "," << name << "," << hyp.target_mean(0) << ","
        << hyp.target_mean(1) << ",hyp_target_mean\n";
    out << "hyp_" << name << "," << name << "," << hyp.nontarget_mean(0) << ","
        << hyp.nontarget_mean(1) << ",hyp_nontarget_mean\n";
  }
  return out.str();
}

}  // namespace umm
