#ifndef DRIFTBENCH_GAN_DRIFT_HPP
#define DRIFTBENCH_GAN_DRIFT_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "driftbench/nn.hpp"
#include "driftbench/types.hpp"

namespace driftbench {

struct DetectorConfig {
  std::size_t rho = 100;         // training window per distribution
  std::size_t batch_size = 100;  // instances that must agree before a drift is signalled
  std::size_t seq_len = 4;       // generator input length, in feature vectors
  double lambda = 1.0;           // fraction of stored exemplars replayed on recurrence
  std::size_t per_dist_cap = 10000;
  std::uint64_t seed = 0;

  // GAN training schedule.
  std::size_t minibatch = 16;
  std::size_t max_epochs = 200;
  double loss_threshold = 0.01;     // stop once the discriminator's epoch loss drops below this
  std::size_t plateau_patience = 20;  // ... or once it has not improved by plateau_tolerance for this many epochs (0 = off)
  double plateau_tolerance = 0.01;    // relative improvement that resets the plateau count
  std::size_t discriminator_steps = 10;  // discriminator updates per generator update
  double fake_fraction = 0.5;       // generated vectors per minibatch, relative to its real rows
  double background_ratio = 0.25;   // standardized noise vectors labelled unseen, relative to real rows
  double adversarial_weight = 0.0;  // scale of the generator's fool-the-discriminator term
  bool reset_generator = true;      // fresh generator whenever a distribution is registered
  std::vector<std::size_t> generator_hidden{128, 4096};
  std::vector<std::size_t> discriminator_hidden{1024, 1024};

  /// Throws UsageError when a field is out of range.
  void validate() const;
};

/// Standardizes a vector by its own mean and population standard deviation.
/// A constant vector maps to zeros.
FeatureVector standardize(std::span<const double> x);

struct DistributionRecord {
  DistributionId id = kUnseen;
  std::vector<FeatureVector> window;       // standardized vectors used for GAN training
  std::deque<LabeledInstance> exemplars;   // raw labeled instances, FIFO-capped
};

/// The set of seen distributions. Ids are dense and start at 1, matching
/// discriminator outputs 1..n.
class DistributionRegistry {
 public:
  DistributionId add(std::vector<FeatureVector> window);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  bool contains(DistributionId id) const { return id >= 1 && static_cast<std::size_t>(id) <= records_.size(); }

  const DistributionRecord& record(DistributionId id) const;
  DistributionRecord& record(DistributionId id);
  const std::vector<DistributionRecord>& records() const { return records_; }

  DistributionId current() const { return current_; }
  void set_current(DistributionId id);

  /// Appends to the record's exemplars, evicting the oldest past `cap`.
  void add_exemplar(DistributionId id, LabeledInstance instance, std::size_t cap);

 private:
  std::vector<DistributionRecord> records_;
  DistributionId current_ = kUnseen;
};

struct GanPair {
  nn::Network generator;
  nn::Network discriminator;
};

struct TrainingSummary {
  std::size_t epochs = 0;
  std::size_t attempts = 0;
  double discriminator_loss = 0.0;
  double generator_loss = 0.0;
};

/// Fresh generator/discriminator for `feature_count`-wide vectors and
/// `distributions` registered distributions.
GanPair make_gan(std::size_t feature_count, std::size_t distributions, const DetectorConfig& config, nn::Rng& rng);

/// Trains `gan` in place on every record window. Sequences never cross
/// record boundaries. Throws nn::TrainingDivergence on NaN/inf.
TrainingSummary fit_gan(GanPair& gan, const DistributionRegistry& registry, const DetectorConfig& config, nn::Rng& rng);

/// Fresh init + fit_gan; a divergent run is retried once from a new init.
GanPair train_gan(const DistributionRegistry& registry, const DetectorConfig& config, nn::Rng& rng,
                  TrainingSummary* summary = nullptr);

/// Generator predictions for every length-`seq_len` sequence of `window`.
nn::Matrix generate(const nn::Network& generator, std::span<const FeatureVector> window, std::size_t seq_len);

/// Per-row argmax of the discriminator output, ties to the lowest id.
std::vector<DistributionId> classify_batch(const nn::Network& discriminator, std::span<const FeatureVector> batch);
std::vector<DistributionId> classify_batch(const nn::Network& discriminator, const nn::Matrix& batch);

/// The batch-consensus rule: the shared id when every entry agrees and it
/// differs from `current`, otherwise nothing.
std::optional<DistributionId> consensus(std::span<const DistributionId> ids, DistributionId current);

/// Uniform sample without replacement of ceil(lambda * |exemplars|).
std::vector<LabeledInstance> historical_sample(const DistributionRegistry& registry, DistributionId id, double lambda,
                                               nn::Rng& rng);

struct DriftDecision {
  DriftKind kind = DriftKind::none;
  DistributionId distribution = kUnseen;
  std::size_t instance_index = 0;
};

/// GAN-based drift detector with a growing discriminator.
///
/// Instances are standardized and collected into batches of `batch_size`.
/// A batch that the discriminator maps unanimously to a registered id other
/// than the current one is a recurring drift; unanimous mapping to the
/// unseen class registers a new distribution. The triggering batch seeds the
/// new window; when it is shorter than `rho` the detector keeps buffering
/// (and pauses detection) until the window is full, then retrains.
class DriftGanDetector {
 public:
  explicit DriftGanDetector(DetectorConfig config);

  /// Trains on the first `rho` instances and registers distribution 1.
  void initialize(std::span<const LabeledInstance> initial);

  /// Feeds one instance whose label (if any) has already been revealed.
  /// Returns a decision whenever a batch completes.
  std::optional<DriftDecision> observe(const LabeledInstance& instance);

  /// Applies the consensus rule to a standardized batch, updating state.
  DriftDecision detect(std::span<const FeatureVector> batch, std::size_t instance_index);

  /// Registers `window` as a new distribution: extends the discriminator,
  /// retrains the GAN over every stored window and makes it current.
  DistributionId register_distribution(std::vector<FeatureVector> window);

  bool initialized() const { return initialized_; }
  bool awaiting_window() const { return pending_.has_value(); }
  DistributionId current() const { return registry_.current(); }
  const DetectorConfig& config() const { return config_; }
  const DistributionRegistry& registry() const { return registry_; }
  const GanPair& networks() const { return gan_; }
  const TrainingSummary& last_training() const { return last_training_; }
  std::size_t feature_count() const { return feature_count_; }
  nn::Rng& rng() { return rng_; }

  /// The labeled instances of the most recently completed batch.
  const std::vector<LabeledInstance>& last_batch() const { return last_batch_; }

 private:
  void store_exemplar(DistributionId id, const LabeledInstance& instance);
  void retrain();

  DetectorConfig config_;
  nn::Rng rng_;
  DistributionRegistry registry_;
  GanPair gan_;
  TrainingSummary last_training_;
  std::size_t feature_count_ = 0;
  bool initialized_ = false;

  std::vector<FeatureVector> batch_;
  std::vector<LabeledInstance> batch_instances_;
  std::vector<LabeledInstance> last_batch_;
  std::optional<DistributionId> pending_;  // registered id still filling its window
};

}  // namespace driftbench

#endif  // DRIFTBENCH_GAN_DRIFT_HPP
