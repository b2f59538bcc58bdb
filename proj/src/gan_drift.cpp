#include "driftbench/gan_drift.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <limits>
#include <numeric>
#include <sstream>

namespace driftbench {

void DetectorConfig::validate() const {
  if (seq_len == 0) throw UsageError("seq_len must be at least 1");
  if (rho < seq_len + 1) {
    throw UsageError("rho must be at least seq_len + 1 (rho=" + std::to_string(rho) +
                     ", seq_len=" + std::to_string(seq_len) + ")");
  }
  if (batch_size == 0) throw UsageError("batch_size must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  if (per_dist_cap == 0) throw UsageError("per_dist_cap must be at least 1");
  if (minibatch == 0) throw UsageError("minibatch must be at least 1");
  if (max_epochs == 0) throw UsageError("max_epochs must be at least 1");
  if (discriminator_steps == 0) throw UsageError("discriminator_steps must be at least 1");
  if (!(fake_fraction >= 0.0 && fake_fraction <= 1.0)) throw UsageError("fake_fraction must lie in [0, 1]");
  if (!(background_ratio >= 0.0)) throw UsageError("background_ratio must be non-negative");
  if (!(adversarial_weight >= 0.0)) throw UsageError("adversarial_weight must be non-negative");
  if (!(loss_threshold > 0.0)) throw UsageError("loss_threshold must be positive");
  if (!(plateau_tolerance >= 0.0 && plateau_tolerance < 1.0)) throw UsageError("plateau_tolerance must lie in [0, 1)");
  if (generator_hidden.empty() || discriminator_hidden.empty()) throw UsageError("networks need a hidden layer");
  for (std::size_t width : generator_hidden) {
    if (width == 0) throw UsageError("generator hidden widths must be positive");
  }
  for (std::size_t width : discriminator_hidden) {
    if (width == 0) throw UsageError("discriminator hidden widths must be positive");
  }
}

FeatureVector standardize(std::span<const double> x) {
  if (x.empty()) throw UsageError("cannot standardize an empty vector");
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sigma = std::sqrt(var / n);
  FeatureVector out(x.size(), 0.0);
  if (!(sigma > 1e-12 * std::max(1.0, std::abs(mean)))) return out;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) / sigma;
  return out;
}

DistributionId DistributionRegistry::add(std::vector<FeatureVector> window) {
  DistributionRecord record;
  record.id = static_cast<DistributionId>(records_.size() + 1);
  record.window = std::move(window);
  records_.push_back(std::move(record));
  if (current_ == kUnseen) current_ = records_.back().id;
  return records_.back().id;
}

const DistributionRecord& DistributionRegistry::record(DistributionId id) const {
  if (!contains(id)) throw UsageError("unknown distribution id " + std::to_string(id));
  return records_[static_cast<std::size_t>(id - 1)];
}

DistributionRecord& DistributionRegistry::record(DistributionId id) {
  if (!contains(id)) throw UsageError("unknown distribution id " + std::to_string(id));
  return records_[static_cast<std::size_t>(id - 1)];
}

void DistributionRegistry::set_current(DistributionId id) {
  if (!contains(id)) throw UsageError("unknown distribution id " + std::to_string(id));
  current_ = id;
}

void DistributionRegistry::add_exemplar(DistributionId id, LabeledInstance instance, std::size_t cap) {
  auto& exemplars = record(id).exemplars;
  exemplars.push_back(std::move(instance));
  while (exemplars.size() > cap) exemplars.pop_front();
}

GanPair make_gan(std::size_t feature_count, std::size_t distributions, const DetectorConfig& config, nn::Rng& rng) {
  std::vector<std::size_t> gen_sizes{feature_count * config.seq_len};
  gen_sizes.insert(gen_sizes.end(), config.generator_hidden.begin(), config.generator_hidden.end());
  gen_sizes.push_back(feature_count);
  std::vector<nn::Activation> gen_act(config.generator_hidden.size(), nn::Activation::relu);
  gen_act.push_back(nn::Activation::linear);

  std::vector<std::size_t> disc_sizes{feature_count};
  disc_sizes.insert(disc_sizes.end(), config.discriminator_hidden.begin(), config.discriminator_hidden.end());
  disc_sizes.push_back(distributions + 1);
  std::vector<nn::Activation> disc_act(config.discriminator_hidden.size(), nn::Activation::relu);
  disc_act.push_back(nn::Activation::sigmoid);

  return GanPair{nn::Network(gen_sizes, gen_act, rng), nn::Network(disc_sizes, disc_act, rng)};
}

namespace {

struct SequenceSet {
  nn::Matrix sequences;  // one flattened length-k sequence per row
  nn::Matrix next;       // the vector that follows each sequence
  std::vector<int> ids;
};

SequenceSet build_sequences(const DistributionRegistry& registry, std::size_t seq_len) {
  std::size_t rows = 0;
  std::size_t width = 0;
  for (const auto& record : registry.records()) {
    if (record.window.size() < seq_len + 1) {
      throw UsageError("distribution " + std::to_string(record.id) + " window holds " +
                       std::to_string(record.window.size()) + " vectors; need at least seq_len + 1");
    }
    rows += record.window.size() - seq_len;
    width = record.window.front().size();
  }
  SequenceSet set;
  set.sequences.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width * seq_len));
  set.next.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  set.ids.reserve(rows);
  Eigen::Index row = 0;
  for (const auto& record : registry.records()) {
    for (std::size_t t = seq_len; t < record.window.size(); ++t, ++row) {
      for (std::size_t s = 0; s < seq_len; ++s) {
        const FeatureVector& v = record.window[t - seq_len + s];
        if (v.size() != width) throw UsageError("window vectors differ in width");
        for (std::size_t f = 0; f < width; ++f) {
          set.sequences(row, static_cast<Eigen::Index>(s * width + f)) = v[f];
        }
      }
      for (std::size_t f = 0; f < width; ++f) set.next(row, static_cast<Eigen::Index>(f)) = record.window[t][f];
      set.ids.push_back(record.id);
    }
  }
  return set;
}

// Rounded share of a minibatch, at least one row when the share is positive.
Eigen::Index share(double fraction, std::size_t rows) {
  if (fraction <= 0.0) return 0;
  return std::max<Eigen::Index>(1, std::lround(fraction * static_cast<double>(rows)));
}

// Standardized isotropic Gaussian vectors, one per row.
nn::Matrix background(Eigen::Index count, Eigen::Index width, nn::Rng& rng) {
  std::normal_distribution<double> normal;
  nn::Matrix out(count, width);
  FeatureVector v(static_cast<std::size_t>(width));
  for (Eigen::Index r = 0; r < count; ++r) {
    for (double& e : v) e = normal(rng);
    const FeatureVector z = standardize(v);
    for (Eigen::Index c = 0; c < width; ++c) out(r, c) = z[static_cast<std::size_t>(c)];
  }
  return out;
}

nn::Matrix gather_rows(const nn::Matrix& source, std::span<const std::size_t> rows) {
  nn::Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

}  // namespace

TrainingSummary fit_gan(GanPair& gan, const DistributionRegistry& registry, const DetectorConfig& config, nn::Rng& rng) {
  if (registry.empty()) throw UsageError("cannot train the GAN on an empty registry");
  if (gan.discriminator.output_size() != registry.size() + 1) {
    throw UsageError("discriminator has " + std::to_string(gan.discriminator.output_size()) + " outputs for " +
                     std::to_string(registry.size()) + " distributions");
  }
  const SequenceSet data = build_sequences(registry, config.seq_len);
  const auto total = static_cast<std::size_t>(data.sequences.rows());

  nn::Adadelta gen_opt(gan.generator);
  nn::Adadelta disc_opt(gan.discriminator);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainingSummary summary;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale_epochs = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double disc_loss = 0.0;
    double gen_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < total; start += config.minibatch) {
      const std::size_t stop = std::min(total, start + config.minibatch);
      const std::span<const std::size_t> rows(order.data() + start, stop - start);
      const nn::Matrix seqs = gather_rows(data.sequences, rows);
      const nn::Matrix real = gather_rows(data.next, rows);
      std::vector<int> ids;
      ids.reserve(rows.size());
      for (std::size_t r : rows) ids.push_back(data.ids[r]);

      // Discriminator: real vectors carry their distribution id; generated
      // vectors and background noise carry the unseen class.
      const nn::Matrix fake = gan.generator.forward(seqs).topRows(share(config.fake_fraction, rows.size()));
      const nn::Matrix noise = background(share(config.background_ratio, rows.size()), real.cols(), rng);
      nn::Matrix disc_in(real.rows() + fake.rows() + noise.rows(), real.cols());
      disc_in << real, fake, noise;
      std::vector<int> disc_classes = ids;
      disc_classes.resize(static_cast<std::size_t>(disc_in.rows()), kUnseen);
      double step_loss = 0.0;
      for (std::size_t k = 0; k < config.discriminator_steps; ++k) {
        step_loss = nn::train_step(gan.discriminator, disc_in, disc_classes, disc_opt);
      }
      disc_loss += step_loss;

      // Generator: predict the next vector and make the discriminator take
      // it for the distribution it came from.
      const nn::ForwardCache gen_cache = gan.generator.forward_cached(seqs);
      const nn::ForwardCache disc_cache = gan.discriminator.forward_cached(gen_cache.output);
      const nn::LossValue fool = nn::cross_entropy_loss(disc_cache.pre_activation.back(), ids);
      const nn::Layer& gen_top = gan.generator.layers().back();
      const nn::LossValue fit = nn::mse_loss(gen_cache.output, gen_cache.pre_activation.back(), gen_top.activation, real);
      const nn::Matrix through_disc = gan.discriminator.input_gradient(disc_cache, fool.grad)
                                          .cwiseProduct(nn::activation_slope(gen_cache.pre_activation.back(), gen_top.activation));
      const double loss = fit.value + config.adversarial_weight * fool.value;
      if (!std::isfinite(loss)) throw nn::TrainingDivergence("non-finite generator loss");
      nn::Gradients gen_grads = gan.generator.backward(gen_cache, fit.grad + config.adversarial_weight * through_disc);
      gen_opt.step(gan.generator, gen_grads);
      gen_loss += loss;
      ++batches;
    }
    if (!gan.generator.all_finite()) throw nn::TrainingDivergence("non-finite generator parameters");
    summary.epochs = epoch + 1;
    summary.discriminator_loss = disc_loss / static_cast<double>(batches);
    summary.generator_loss = gen_loss / static_cast<double>(batches);
    if (summary.discriminator_loss < config.loss_threshold) break;
    if (summary.discriminator_loss < best_loss * (1.0 - config.plateau_tolerance)) {
      best_loss = summary.discriminator_loss;
      stale_epochs = 0;
    } else if (config.plateau_patience > 0 && ++stale_epochs >= config.plateau_patience) {
      break;
    }
  }
  return summary;
}

GanPair train_gan(const DistributionRegistry& registry, const DetectorConfig& config, nn::Rng& rng,
                  TrainingSummary* summary) {
  config.validate();
  if (registry.empty()) throw UsageError("cannot train the GAN on an empty registry");
  const std::size_t width = registry.records().front().window.empty() ? 0 : registry.records().front().window.front().size();
  std::string first_failure;
  for (std::size_t attempt = 1; attempt <= 2; ++attempt) {
    GanPair gan = make_gan(width, registry.size(), config, rng);
    try {
      TrainingSummary result = fit_gan(gan, registry, config, rng);
      result.attempts = attempt;
      if (summary) *summary = result;
      return gan;
    } catch (const nn::TrainingDivergence& err) {
      first_failure = err.what();
    }
  }
  std::ostringstream msg;
  msg << "GAN training diverged twice (" << first_failure << "); distributions=" << registry.size()
      << ", features=" << width << ", seq_len=" << config.seq_len << ", minibatch=" << config.minibatch;
  throw nn::TrainingDivergence(msg.str());
}

nn::Matrix generate(const nn::Network& generator, std::span<const FeatureVector> window, std::size_t seq_len) {
  if (window.size() <= seq_len) return nn::Matrix(0, generator.output_size());
  const std::size_t width = window.front().size();
  nn::Matrix seqs(static_cast<Eigen::Index>(window.size() - seq_len), static_cast<Eigen::Index>(width * seq_len));
  for (std::size_t t = seq_len; t < window.size(); ++t) {
    for (std::size_t s = 0; s < seq_len; ++s) {
      for (std::size_t f = 0; f < width; ++f) {
        seqs(static_cast<Eigen::Index>(t - seq_len), static_cast<Eigen::Index>(s * width + f)) = window[t - seq_len + s][f];
      }
    }
  }
  return generator.forward(seqs);
}

std::vector<DistributionId> classify_batch(const nn::Network& discriminator, const nn::Matrix& batch) {
  // Argmax on logits: the sigmoid is monotone, and logits do not saturate
  // into artificial ties.
  const nn::Matrix logits = discriminator.logits(batch);
  std::vector<DistributionId> ids(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    ids[static_cast<std::size_t>(r)] = static_cast<DistributionId>(best);
  }
  return ids;
}

std::vector<DistributionId> classify_batch(const nn::Network& discriminator, std::span<const FeatureVector> batch) {
  if (batch.empty()) return {};
  nn::Matrix rows(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(batch.front().size()));
  for (std::size_t r = 0; r < batch.size(); ++r) {
    if (batch[r].size() != batch.front().size()) throw UsageError("batch vectors differ in width");
    for (std::size_t c = 0; c < batch[r].size(); ++c) rows(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = batch[r][c];
  }
  return classify_batch(discriminator, rows);
}

std::optional<DistributionId> consensus(std::span<const DistributionId> ids, DistributionId current) {
  if (ids.empty()) return std::nullopt;
  const DistributionId first = ids.front();
  if (first == current) return std::nullopt;
  if (!std::all_of(ids.begin(), ids.end(), [first](DistributionId id) { return id == first; })) return std::nullopt;
  return first;
}

std::vector<LabeledInstance> historical_sample(const DistributionRegistry& registry, DistributionId id, double lambda,
                                               nn::Rng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  const auto& exemplars = registry.record(id).exemplars;
  const auto wanted = static_cast<std::size_t>(std::ceil(lambda * static_cast<double>(exemplars.size()) - 1e-9));
  std::vector<LabeledInstance> sample;
  sample.reserve(wanted);
  std::sample(exemplars.begin(), exemplars.end(), std::back_inserter(sample), wanted, rng);
  return sample;
}

DriftGanDetector::DriftGanDetector(DetectorConfig config) : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
}

void DriftGanDetector::initialize(std::span<const LabeledInstance> initial) {
  if (initial.size() < config_.rho) {
    throw UsageError("initialization needs rho=" + std::to_string(config_.rho) + " instances, got " +
                     std::to_string(initial.size()));
  }
  feature_count_ = initial.front().features.size();
  if (feature_count_ == 0) throw UsageError("instances need at least one feature");
  std::vector<FeatureVector> window;
  window.reserve(config_.rho);
  for (std::size_t i = 0; i < config_.rho; ++i) {
    if (initial[i].features.size() != feature_count_) throw UsageError("feature count changes within the stream");
    window.push_back(standardize(initial[i].features));
  }
  registry_ = DistributionRegistry{};
  const DistributionId id = registry_.add(std::move(window));
  for (std::size_t i = 0; i < config_.rho; ++i) store_exemplar(id, initial[i]);
  gan_ = train_gan(registry_, config_, rng_, &last_training_);
  batch_.clear();
  batch_instances_.clear();
  pending_.reset();
  initialized_ = true;
}

void DriftGanDetector::store_exemplar(DistributionId id, const LabeledInstance& instance) {
  if (instance.label >= 0) registry_.add_exemplar(id, instance, config_.per_dist_cap);
}

void DriftGanDetector::retrain() {
  if (config_.reset_generator && registry_.size() > 1) {
    gan_.generator = make_gan(feature_count_, registry_.size(), config_, rng_).generator;
  }
  try {
    last_training_ = fit_gan(gan_, registry_, config_, rng_);
    last_training_.attempts = 1;
  } catch (const nn::TrainingDivergence&) {
    gan_ = train_gan(registry_, config_, rng_, &last_training_);
    ++last_training_.attempts;
  }
}

std::optional<DriftDecision> DriftGanDetector::observe(const LabeledInstance& instance) {
  if (!initialized_) throw UsageError("detector used before initialize()");
  if (instance.features.size() != feature_count_) {
    throw UsageError("expected " + std::to_string(feature_count_) + " features, got " +
                     std::to_string(instance.features.size()));
  }
  if (pending_) {
    registry_.record(*pending_).window.push_back(standardize(instance.features));
    store_exemplar(*pending_, instance);
    if (registry_.record(*pending_).window.size() >= config_.rho) {
      pending_.reset();
      retrain();
    }
    return std::nullopt;
  }
  batch_.push_back(standardize(instance.features));
  batch_instances_.push_back(instance);
  if (batch_.size() < config_.batch_size) return std::nullopt;

  const DriftDecision decision = detect(batch_, instance.index);
  const DistributionId owner = decision.kind == DriftKind::none ? registry_.current() : decision.distribution;
  for (const auto& labeled : batch_instances_) store_exemplar(owner, labeled);
  last_batch_ = std::move(batch_instances_);
  batch_instances_.clear();
  batch_.clear();
  return decision;
}

DriftDecision DriftGanDetector::detect(std::span<const FeatureVector> batch, std::size_t instance_index) {
  if (!initialized_) throw UsageError("detector used before initialize()");
  DriftDecision decision;
  decision.instance_index = instance_index;
  const std::vector<DistributionId> ids = classify_batch(gan_.discriminator, batch);
  const std::optional<DistributionId> agreed = consensus(ids, registry_.current());
  if (!agreed) return decision;

  if (*agreed != kUnseen) {
    registry_.set_current(*agreed);
    decision.kind = DriftKind::recurring;
    decision.distribution = *agreed;
    return decision;
  }

  std::vector<FeatureVector> window(batch.begin(), batch.end());
  decision.kind = DriftKind::new_distribution;
  if (window.size() >= config_.rho) {
    decision.distribution = register_distribution(std::move(window));
    return decision;
  }
  // Short trigger batch: register now, retrain once the window is full.
  decision.distribution = registry_.add(std::move(window));
  registry_.set_current(decision.distribution);
  gan_.discriminator = nn::extend_output_layer(gan_.discriminator, rng_);
  pending_ = decision.distribution;
  return decision;
}

DistributionId DriftGanDetector::register_distribution(std::vector<FeatureVector> window) {
  if (!initialized_) throw UsageError("detector used before initialize()");
  if (window.size() < config_.rho) {
    throw UsageError("a new distribution needs rho=" + std::to_string(config_.rho) + " vectors, got " +
                     std::to_string(window.size()));
  }
  const DistributionId id = registry_.add(std::move(window));
  registry_.set_current(id);
  gan_.discriminator = nn::extend_output_layer(gan_.discriminator, rng_);
  retrain();
  return id;
}

std::string to_string(DriftKind kind) {
  switch (kind) {
    case DriftKind::recurring:
      return "recurring";
    case DriftKind::new_distribution:
      return "new";
    case DriftKind::none:
      break;
  }
  return "none";
}

DriftKind drift_kind_from_string(const std::string& name) {
  if (name == "none") return DriftKind::none;
  if (name == "recurring") return DriftKind::recurring;
  if (name == "new") return DriftKind::new_distribution;
  throw UsageError("unknown drift kind: " + name);
}

}  // namespace driftbench
