#include "csi4/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "csi4/common/diagnostics.hpp"
#include "csi4/common/errors.hpp"
#include "csi4/common/rng.hpp"
#include "csi4/training/losses.hpp"

namespace csi4::train {

namespace {

using models::BoundParams;
using models::ForwardContext;
using models::ModelParams;

// Shuffled passes over [0, m), handing out fixed-size batches. A pass ends
// when fewer than `batch` indices remain; the remainder is dropped.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t m, std::size_t batch, Rng rng)
      : order_(m), batch_(std::min(batch, m)), rng_(rng) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    pos_ = m;  // forces a shuffle on first use
  }

  std::span<const std::size_t> next() {
    if (pos_ + batch_ > order_.size()) {
      rng_.shuffle(std::span<std::size_t>(order_));
      pos_ = 0;
    }
    std::span<const std::size_t> out(order_.data() + pos_, batch_);
    pos_ += batch_;
    return out;
  }

  std::size_t batch() const { return batch_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t batch_;
  std::size_t pos_ = 0;
  Rng rng_;
};

ad::Tensor gather_rows(const data::CsiBatch& b, std::span<const std::size_t> idx,
                       std::vector<int>& labels) {
  const std::size_t f = b.features();
  ad::Tensor out(ad::Shape{idx.size(), f});
  labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy_n(b.row(idx[i]).begin(), f, out.data().begin() + static_cast<std::ptrdiff_t>(i * f));
    labels[i] = b.labels[idx[i]];
  }
  return out;
}

ad::Tensor normal_tensor(ad::Shape shape, Rng& rng) {
  ad::Tensor t(std::move(shape));
  for (float& v : t.data()) v = rng.normal();
  return t;
}

std::uint64_t derive_seed(std::uint64_t seed, const std::string& purpose) {
  return Rng(seed, purpose).next_u64();
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

// Runs one training iteration, tagging numeric failures with its index.
template <typename Step>
void run_iteration(std::size_t iter, Step&& step) {
  try {
    step();
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " at iteration " + std::to_string(iter));
  }
}

void check_gan_inputs(const data::CsiBatch& data, const models::GeneratorSpec& gen,
                      std::size_t adv_in, std::size_t adv_classes, const TrainConfig& cfg) {
  cfg.validate();
  gen.validate();
  if (data.empty()) throw DataError("training data is empty");
  data.validate();
  if (!data.normalized) throw ContractError("GAN training data must be normalized to [-1, 1]");
  if (gen.out_features() != data.features() || gen.antennas != data.antennas() ||
      gen.time != data.time()) {
    throw DimensionError("generator output " + std::to_string(gen.antennas) + "x" +
                         std::to_string(gen.time) + " does not match data " +
                         std::to_string(data.antennas()) + "x" + std::to_string(data.time()));
  }
  if (adv_in != data.features()) throw DimensionError("adversary input width does not match data");
  if (gen.num_classes != data.num_classes || adv_classes != data.num_classes) {
    throw ContractError("model class count does not match data");
  }
  if (gen.latent_dim != cfg.latent_dim) {
    throw ContractError("generator latent_dim differs from the training config");
  }
}

models::GeneratorSpec with_range(models::GeneratorSpec spec, const data::CsiBatch& data) {
  spec.amplitude_min = data.norm->min;
  spec.amplitude_max = data.norm->max;
  return spec;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void maybe_save(std::size_t iter, const TrainConfig& cfg, GanResult& result,
                const SnapshotHook& on_save) {
  if (iter % cfg.save_every != 0) return;
  SampleSet set{iter, generate_synthetic(result.generator_spec, result.generator,
                                         cfg.samples_per_class,
                                         derive_seed(cfg.seed, "train/samples/" + std::to_string(iter)))};
  result.samples.push_back(std::move(set));
  if (on_save) {
    on_save(Snapshot{iter, &result.generator_spec, &result.generator, &result.adversary,
                     &result.samples.back().samples});
  }
}

}  // namespace

const char* to_string(LossKind kind) { return kind == LossKind::bce ? "bce" : "wgp"; }

LossKind parse_loss_kind(const std::string& text) {
  if (text == "bce") return LossKind::bce;
  if (text == "wgp" || text == "wasserstein_gp") return LossKind::wasserstein_gp;
  throw ContractError("unknown loss kind '" + text + "' (expected bce or wgp)");
}

void TrainConfig::validate() const {
  if (latent_dim == 0 || batch_size == 0) throw ContractError("latent_dim and batch_size must be positive");
  if (n_critic < 1) throw ContractError("n_critic must be at least 1");
  if (!(lambda_gp >= 0.0) || !std::isfinite(lambda_gp)) throw ContractError("lambda_gp must be >= 0");
  if (save_every < 1) throw ContractError("save_every must be at least 1");
  adam().validate();
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out.precision(9);
  out << "iter,gen_loss,critic_loss,grad_penalty,disc_acc,wall_ms\n";
  auto opt = [&](const std::optional<double>& v) {
    if (v) out << *v;
  };
  for (const auto& r : rows) {
    out << r.iter << ',' << r.gen_loss << ',' << r.critic_loss << ',';
    opt(r.grad_penalty);
    out << ',';
    opt(r.disc_acc);
    out << ',';
    opt(r.wall_ms);
    out << '\n';
  }
  return out.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << to_csv();
  if (!out) throw IoError("failed writing " + path.string());
}

double critic_loss_window_ratio(const TrainLog& log, std::size_t window) {
  if (window == 0 || log.rows.size() < window) {
    throw ContractError("log shorter than the requested window");
  }
  double first = 0.0, last = 0.0;
  const std::size_t n = log.rows.size();
  for (std::size_t i = 0; i < window; ++i) {
    first += std::abs(log.rows[i].critic_loss);
    last += std::abs(log.rows[n - window + i].critic_loss);
  }
  return last / first;
}

bool bce_failure_signature(const TrainLog& log) {
  const std::size_t n = log.rows.size();
  const std::size_t q = n / 4;
  if (q == 0) return false;
  std::size_t saturated = 0;
  double g_first = 0.0, g_last = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    const auto& late = log.rows[n - q + i];
    if (late.disc_acc && *late.disc_acc > 0.99) ++saturated;
    g_first += log.rows[i].gen_loss;
    g_last += late.gen_loss;
  }
  return double(saturated) >= 0.8 * double(q) || g_last > g_first;
}

GanResult train_cwgan(const data::CsiBatch& data, const models::GeneratorSpec& gen,
                      const models::CriticSpec& critic, const TrainConfig& cfg,
                      const SnapshotHook& on_save) {
  if (cfg.loss_kind != LossKind::wasserstein_gp) {
    throw ContractError("train_cwgan needs loss_kind = wasserstein_gp");
  }
  critic.validate();
  check_gan_inputs(data, gen, critic.in_features, critic.num_classes, cfg);

  GanResult result;
  result.generator_spec = with_range(gen, data);
  result.generator = models::build_generator(gen, derive_seed(cfg.seed, "init/generator"));
  result.adversary = models::build_critic(critic, derive_seed(cfg.seed, "init/critic"));
  ModelParams& g_params = result.generator;
  ModelParams& c_params = result.adversary;

  MinibatchSampler sampler(data.size(), cfg.batch_size, Rng(cfg.seed, "train/batches"));
  Rng noise(cfg.seed, "train/noise");
  Rng eps_rng(cfg.seed, "train/epsilon");
  Rng mask_rng(cfg.seed, "train/dropout");
  Rng label_rng(cfg.seed, "train/labels");
  AdamState g_state, c_state;
  const AdamConfig adam = cfg.adam();
  const auto lambda = static_cast<float>(cfg.lambda_gp);
  const std::size_t b = sampler.batch();
  std::vector<int> labels;

  for (std::size_t iter = 1; iter <= cfg.epochs; ++iter) run_iteration(iter, [&] {
    const auto t0 = Clock::now();
    double critic_loss_sum = 0.0, gp_sum = 0.0;
    for (std::size_t k = 0; k < cfg.n_critic; ++k) {
      const ad::Tensor x_real = gather_rows(data, sampler.next(), labels);
      const ad::Tensor z = normal_tensor({b, cfg.latent_dim}, noise);
      const ad::Tensor x_fake = models::generate(gen, g_params, z, labels);
      ad::Tensor eps(ad::Shape{b, 1});
      for (float& e : eps.data()) e = eps_rng.uniform();

      ad::Graph g(ad::Order::second);
      BoundParams cb(g, c_params, true);
      const ForwardContext ctx{ad::Mode::train, &mask_rng, nullptr};
      auto score = [&](const ad::Var& x) { return models::critic_forward(critic, cb, x, labels, ctx); };
      const WLosses w = wloss(score(g.constant(x_real)), score(g.constant(x_fake)));
      const ad::Var x_hat = g.leaf(interpolate(x_real, x_fake, eps));
      const Penalty gp = gradient_penalty(score, x_hat, lambda);
      const ad::Var loss = ad::add(w.critic_loss, gp.value);
      check_finite(loss.value().item(), "critic loss");
      adam_step(c_state, c_params, cb.backward(loss), adam);
      ++result.adversary_updates;
      critic_loss_sum += w.critic_loss.value().item();
      gp_sum += gp.value.value().item();
    }

    for (auto& y : labels) y = data.labels[label_rng.below(data.size())];
    const ad::Tensor z = normal_tensor({b, cfg.latent_dim}, noise);
    ad::Graph g;
    BoundParams gb(g, g_params, true);
    BoundParams cb(g, c_params, false);
    const ad::Var x_fake = models::generator_forward(gen, gb, g.constant(z), labels,
                                                     {ad::Mode::train, nullptr, nullptr});
    const ad::Var c_fake = models::critic_forward(critic, cb, x_fake, labels,
                                                  {ad::Mode::train, &mask_rng, nullptr});
    const ad::Var g_loss = ad::neg(ad::mean(c_fake));
    check_finite(g_loss.value().item(), "generator loss");
    adam_step(g_state, g_params, gb.backward(g_loss), adam);
    ++result.generator_updates;

    LogRow row;
    row.iter = iter;
    row.gen_loss = g_loss.value().item();
    row.critic_loss = critic_loss_sum / double(cfg.n_critic);
    row.grad_penalty = gp_sum / double(cfg.n_critic);
    if (cfg.record_wall_time) row.wall_ms = elapsed_ms(t0);
    result.log.rows.push_back(row);
    maybe_save(iter, cfg, result, on_save);
  });
  return result;
}

GanResult train_cgan_bce(const data::CsiBatch& data, const models::GeneratorSpec& gen,
                         const models::DiscriminatorSpec& disc, const TrainConfig& cfg,
                         const SnapshotHook& on_save) {
  if (cfg.loss_kind != LossKind::bce) throw ContractError("train_cgan_bce needs loss_kind = bce");
  disc.validate();
  check_gan_inputs(data, gen, disc.in_features, disc.num_classes, cfg);

  GanResult result;
  result.generator_spec = with_range(gen, data);
  result.generator = models::build_generator(gen, derive_seed(cfg.seed, "init/generator"));
  result.adversary = models::build_discriminator_bce(disc, derive_seed(cfg.seed, "init/discriminator"));
  ModelParams& g_params = result.generator;
  ModelParams& d_params = result.adversary;

  MinibatchSampler sampler(data.size(), cfg.batch_size, Rng(cfg.seed, "train/batches"));
  Rng noise(cfg.seed, "train/noise");
  AdamState g_state, d_state;
  const AdamConfig adam = cfg.adam();
  const std::size_t b = sampler.batch();
  std::vector<int> labels;

  // One pass of D over `x` in train mode; returns d(loss)/d(params), the
  // outputs, and folds the batchnorm statistics into d_params.
  auto d_pass = [&](const ad::Tensor& x, bool real, double& loss_out,
                    ad::Tensor& probs) {
    ad::Graph g;
    BoundParams db(g, d_params, true);
    models::BufferUpdates updates;
    const ad::Var p = models::discriminator_forward(disc, db, g.constant(x), labels,
                                                    {ad::Mode::train, nullptr, &updates});
    probs = p.value();
    for (float v : probs.data()) {
      if (std::isnan(v)) throw NumericError("NaN discriminator output");
    }
    const ad::Var clamped = ad::clamp(p, kProbClamp, 1.0f - kProbClamp);
    const ad::Var loss = real ? ad::neg(ad::mean(ad::log(clamped)))
                              : ad::neg(ad::mean(ad::log(ad::add_scalar(ad::neg(clamped), 1.0f))));
    loss_out = loss.value().item();
    auto grads = db.backward(loss);
    models::apply_buffer_updates(d_params, updates);
    return grads;
  };

  for (std::size_t iter = 1; iter <= cfg.epochs; ++iter) run_iteration(iter, [&] {
    const auto t0 = Clock::now();
    const ad::Tensor x_real = gather_rows(data, sampler.next(), labels);
    const ad::Tensor z = normal_tensor({b, cfg.latent_dim}, noise);

    ad::Graph g;
    BoundParams gb(g, g_params, true);
    models::BufferUpdates g_updates;
    const ad::Var x_fake = models::generator_forward(gen, gb, g.constant(z), labels,
                                                     {ad::Mode::train, nullptr, &g_updates});

    // Discriminator step. The loss separates into a real and a fake term,
    // so each batch gets its own pass and its own batchnorm statistics.
    double loss_real = 0.0, loss_fake = 0.0;
    ad::Tensor p_real, p_fake;
    auto grads = d_pass(x_real, true, loss_real, p_real);
    const auto grads_fake = d_pass(x_fake.value(), false, loss_fake, p_fake);
    for (auto& [name, t] : grads) {
      const ad::Tensor& other = grads_fake.find(name)->second;
      for (std::size_t i = 0; i < t.size(); ++i) t[i] += other[i];
    }
    const double d_loss = loss_real + loss_fake;
    check_finite(d_loss, "discriminator loss");
    adam_step(d_state, d_params, grads, adam);
    ++result.adversary_updates;
    std::size_t correct = 0;
    for (float v : p_real.data()) correct += v >= 0.5f;
    for (float v : p_fake.data()) correct += v < 0.5f;

    // Generator step through the updated discriminator.
    BoundParams db(g, d_params, false);
    models::BufferUpdates d_updates;
    const ad::Var d_fake = models::discriminator_forward(disc, db, x_fake, labels,
                                                         {ad::Mode::train, nullptr, &d_updates});
    const BceLosses losses = bce_gan_losses(d_fake, d_fake, cfg.saturating_g_loss);
    check_finite(losses.g_loss.value().item(), "generator loss");
    adam_step(g_state, g_params, gb.backward(losses.g_loss), adam);
    models::apply_buffer_updates(g_params, g_updates);
    models::apply_buffer_updates(d_params, d_updates);
    ++result.generator_updates;

    LogRow row;
    row.iter = iter;
    row.gen_loss = losses.g_loss.value().item();
    row.critic_loss = d_loss;
    row.disc_acc = double(correct) / double(2 * b);
    if (cfg.record_wall_time) row.wall_ms = elapsed_ms(t0);
    result.log.rows.push_back(row);
    maybe_save(iter, cfg, result, on_save);
  });
  return result;
}

data::CsiBatch generate_synthetic(const models::GeneratorSpec& spec, const ModelParams& params,
                                  std::size_t count_per_class, std::uint64_t seed) {
  spec.validate();
  if (!(spec.amplitude_max >= spec.amplitude_min)) throw ContractError("invalid amplitude range");
  const std::size_t k = spec.num_classes, f = spec.out_features();
  const std::size_t m = k * count_per_class;
  data::CsiBatch out = data::empty_batch(spec.antennas, spec.time, k);
  out.amplitudes = ad::Tensor(ad::Shape{m, spec.antennas, spec.time});
  out.labels.resize(m);
  out.sources.assign(m, data::Source::synthetic);
  for (std::size_t i = 0; i < m; ++i) out.labels[i] = static_cast<int>(i % k);

  Rng noise(seed, "synthetic/z");
  const double lo = spec.amplitude_min;
  const double half_span = (double(spec.amplitude_max) - lo) / 2.0;
  constexpr std::size_t kChunk = 1024;
  auto dst = out.amplitudes.data();
  for (std::size_t start = 0; start < m; start += kChunk) {
    const std::size_t n = std::min(kChunk, m - start);
    const ad::Tensor z = normal_tensor({n, spec.latent_dim}, noise);
    const std::span<const int> chunk_labels(out.labels.data() + start, n);
    const ad::Tensor y = models::generate(spec, params, z, chunk_labels);
    for (std::size_t i = 0; i < n * f; ++i) {
      dst[start * f + i] = static_cast<float>(lo + (double(y[i]) + 1.0) * half_span);
    }
  }
  return out;
}

void ClassifierTrainConfig::validate() const {
  if (batch_size == 0) throw ContractError("classifier batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ContractError("classifier learning rate must be positive");
}

ModelParams train_classifier(const data::CsiBatch& train, const models::ClassifierSpec& spec,
                             const ClassifierTrainConfig& cfg) {
  cfg.validate();
  spec.validate();
  if (train.empty()) throw DataError("classifier training set is empty");
  train.validate();
  if (train.antennas() != spec.antennas || train.time() != spec.time) {
    throw DimensionError("classifier input geometry does not match the training data");
  }
  if (train.num_classes != spec.num_classes) {
    throw ContractError("classifier class count does not match the training data");
  }
  const std::set<int> present(train.labels.begin(), train.labels.end());
  if (present.size() == 1) {
    warn("classifier training set contains a single class (" + std::to_string(*present.begin()) + ")");
  }

  ModelParams params = models::build_classifier(spec, derive_seed(cfg.seed, "classifier/init"));
  Rng shuffle(cfg.seed, "classifier/shuffle");
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
  AdamState state;
  const std::size_t m = train.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> labels;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < m; start += cfg.batch_size) {
      const std::size_t n = std::min(cfg.batch_size, m - start);
      // Batch statistics of a single sample are degenerate.
      if (n == 1 && m > 1) continue;
      const ad::Tensor x = gather_rows(train, std::span(order).subspan(start, n), labels);
      ad::Graph g;
      BoundParams bp(g, params, true);
      models::BufferUpdates updates;
      const ad::Var logits = models::classifier_forward(spec, bp, g.constant(x),
                                                        {ad::Mode::train, nullptr, &updates});
      const ad::Var loss = ad::softmax_cross_entropy(logits, labels);
      if (!std::isfinite(loss.value().item())) {
        throw NumericError("non-finite classifier loss in epoch " + std::to_string(epoch + 1));
      }
      adam_step(state, params, bp.backward(loss), adam);
      models::apply_buffer_updates(params, updates);
    }
  }
  return params;
}

double classifier_accuracy(const models::ClassifierSpec& spec, const ModelParams& params,
                           const data::CsiBatch& batch) {
  if (batch.empty()) throw DataError("accuracy of an empty batch");
  const auto pred = models::classifier_predict(spec, params, batch.amplitudes);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == batch.labels[i];
  return double(correct) / double(pred.size());
}

}  // namespace csi4::train
