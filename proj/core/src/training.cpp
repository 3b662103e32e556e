#include <algorithm>
#include <numeric>

#include "fetalscreen/classifier.hpp"
#include "fetalscreen/error.hpp"
#include "fetalscreen/random.hpp"

namespace fetalscreen {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || batch_size <= 0 || epochs <= 0)
    throw Error(ErrorCode::InvalidArgument, "learning rate, batch size and epochs must be positive");
  if (l2 < 0.0 || momentum < 0.0 || momentum >= 1.0)
    throw Error(ErrorCode::InvalidArgument, "l2 must be non-negative and momentum in [0, 1)");
  if (hidden <= 0) throw Error(ErrorCode::InvalidArgument, "hidden width must be positive");
  if (augmentation) augmentation->validate();
}

TrainResult train(const TrainingSet& data, Architecture arch, const TrainConfig& config) {
  config.validate();
  if (data.images.size() != data.labels.size())
    throw Error(ErrorCode::InvalidArgument, "images and labels differ in length");
  if (data.images.empty()) throw Error(ErrorCode::SingleClassData, "training set is empty");
  const int w = data.images.front().width(), h = data.images.front().height();
  for (const auto& img : data.images)
    if (img.width() != w || img.height() != h) throw Error(ErrorCode::DimensionMismatch, "training images differ in size");

  const int k = static_cast<int>(data.classes.size());
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    if (data.labels[i] < 0 || data.labels[i] >= k) throw Error(ErrorCode::InvalidArgument, "label out of range");
    members[static_cast<std::size_t>(data.labels[i])].push_back(i);
  }
  std::vector<int> present;
  for (int c = 0; c < k; ++c)
    if (!members[static_cast<std::size_t>(c)].empty()) present.push_back(c);
  if (present.size() < 2) throw Error(ErrorCode::SingleClassData, "training data holds fewer than two classes");

  TrainResult result;
  result.model = ModelParams::random(arch, w, h, arch == Architecture::Hidden ? config.hidden : 0, data.classes,
                                     derive_seed(config.seed, {0x1417}));
  auto& model = result.model;
  std::vector<double> velocity(model.params.size(), 0.0), grad;
  Rng sampler(derive_seed(config.seed, {0x5A4D}));

  const std::size_t n = data.images.size();
  std::vector<std::size_t> order(n);
  std::vector<std::vector<float>> buffers(static_cast<std::size_t>(config.batch_size));
  std::vector<Example> batch;
  std::uint64_t draw = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (!config.class_balanced) {
      std::iota(order.begin(), order.end(), 0);
      sampler.shuffle(std::span<std::size_t>(order));
    } else {
      for (auto& o : order) {
        const auto& pool = members[static_cast<std::size_t>(present[sampler.below(present.size())])];
        o = pool[sampler.below(pool.size())];
      }
    }
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(n, start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t j = start; j < end; ++j) {
        const auto i = order[j];
        auto& buf = buffers[j - start];
        if (config.augmentation) {
          const auto img = augment(data.images[i], *config.augmentation, draw++);
          buf.assign(img.values().begin(), img.values().end());
        } else {
          buf.assign(data.images[i].values().begin(), data.images[i].values().end());
        }
        batch.push_back({buf, data.labels[i]});
      }
      loss_sum += loss_and_gradient(model, batch, config.l2, &grad);
      ++batches;
      for (std::size_t p = 0; p < model.params.size(); ++p) {
        velocity[p] = config.momentum * velocity[p] - config.learning_rate * grad[p];
        model.params[p] += velocity[p];
      }
    }
    result.loss_history.push_back(loss_sum / batches);
  }
  model.validate();
  return result;
}

}  // namespace fetalscreen
