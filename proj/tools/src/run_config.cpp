#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <functional>
#include <sstream>

namespace csi4::cli {

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw UsageError("invalid value '" + text + "' for " + key);
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw UsageError("invalid boolean '" + text + "' for " + key);
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    const auto e = item.find_last_not_of(' ');
    if (b == std::string::npos) throw UsageError("empty list item in " + key);
    out.push_back(parse_number<std::size_t>(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw UsageError("empty list for " + key);
  return out;
}

template <typename T>
std::string fmt(T v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt_bool(bool v) { return v ? "true" : "false"; }

std::string fmt_list(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CSI4_SIZE(KEY, EXPR)                                                                  \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<std::size_t>(KEY, v); }, \
        [](const RunConfig& c) { return fmt(c.EXPR); }}
#define CSI4_U64(KEY, EXPR)                                                                       \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<std::uint64_t>(KEY, v); }, \
        [](const RunConfig& c) { return fmt(c.EXPR); }}
#define CSI4_DOUBLE(KEY, EXPR)                                                                 \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<double>(KEY, v); }, \
        [](const RunConfig& c) { return fmt(c.EXPR); }}
#define CSI4_FLOAT(KEY, EXPR)                                                                 \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = parse_number<float>(KEY, v); }, \
        [](const RunConfig& c) { return fmt(c.EXPR); }}
#define CSI4_BOOL(KEY, EXPR)                                                        \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = parse_bool(KEY, v); }, \
        [](const RunConfig& c) { return fmt_bool(c.EXPR); }}
#define CSI4_LIST(KEY, EXPR)                                                        \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = parse_list(KEY, v); }, \
        [](const RunConfig& c) { return fmt_list(c.EXPR); }}
#define CSI4_TEXT(KEY, EXPR) \
  Field{KEY, [](RunConfig& c, const std::string& v) { c.EXPR = v; }, [](const RunConfig& c) { return c.EXPR; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      CSI4_TEXT("data.path", data.path),
      CSI4_DOUBLE("data.split_ratio", data.split_ratio),
      CSI4_U64("data.split_seed", data.split_seed),
      CSI4_BOOL("data.stratified", data.stratified),

      CSI4_SIZE("synth.classes", synth.num_classes),
      CSI4_SIZE("synth.antennas", synth.antennas),
      CSI4_SIZE("synth.time", synth.time),
      CSI4_SIZE("synth.per_class", synth.per_class),
      CSI4_DOUBLE("synth.separation", synth.class_separation),
      CSI4_DOUBLE("synth.noise", synth.noise_sigma),
      CSI4_U64("synth.seed", synth.seed),

      Field{"train.loss",
            [](RunConfig& c, const std::string& v) {
              try {
                c.train.loss_kind = train::parse_loss_kind(v);
              } catch (const ContractError& e) {
                throw UsageError(e.what());
              }
            },
            [](const RunConfig& c) { return std::string(train::to_string(c.train.loss_kind)); }},
      CSI4_SIZE("train.latent_dim", train.latent_dim),
      CSI4_SIZE("train.batch_size", train.batch_size),
      CSI4_DOUBLE("train.lr", train.learning_rate),
      CSI4_DOUBLE("train.beta1", train.beta1),
      CSI4_DOUBLE("train.beta2", train.beta2),
      CSI4_DOUBLE("train.adam_eps", train.adam_eps),
      CSI4_DOUBLE("train.lambda_gp", train.lambda_gp),
      CSI4_SIZE("train.n_critic", train.n_critic),
      CSI4_SIZE("train.iters", train.epochs),
      CSI4_SIZE("train.save_every", train.save_every),
      CSI4_U64("train.seed", train.seed),
      CSI4_SIZE("train.samples_per_class", train.samples_per_class),
      CSI4_BOOL("train.saturating_g_loss", train.saturating_g_loss),
      CSI4_BOOL("train.record_wall_time", train.record_wall_time),

      CSI4_SIZE("generator.embed_dim", generator.embed_dim),
      CSI4_LIST("generator.hidden", generator.hidden),
      CSI4_FLOAT("generator.slope", generator.slope),

      CSI4_SIZE("critic.embed_dim", critic.embed_dim),
      CSI4_LIST("critic.hidden", critic.hidden),
      CSI4_FLOAT("critic.dropout", critic.dropout_rate),
      CSI4_FLOAT("critic.slope", critic.slope),

      CSI4_SIZE("discriminator.embed_dim", discriminator.embed_dim),
      CSI4_LIST("discriminator.hidden", discriminator.hidden),
      CSI4_FLOAT("discriminator.slope", discriminator.slope),

      CSI4_LIST("classifier.conv_channels", classifier.conv_channels),
      CSI4_SIZE("classifier.kernel", classifier.kernel),
      CSI4_SIZE("classifier.padding", classifier.padding),
      CSI4_SIZE("classifier.pool", classifier.pool),
      CSI4_SIZE("classifier.epochs", classifier_train.epochs),
      CSI4_DOUBLE("classifier.lr", classifier_train.learning_rate),
      CSI4_SIZE("classifier.batch_size", classifier_train.batch_size),
      CSI4_U64("classifier.seed", classifier_train.seed),

      CSI4_TEXT("eval.synthetic", eval.synthetic),
      CSI4_SIZE("eval.gan_test_cap_factor", eval.gan_test_cap_factor),
      CSI4_TEXT("eval.gan_train_target", eval.gan_train_target),
      CSI4_SIZE("eval.diversity_samples", eval.diversity_samples),
      CSI4_U64("eval.subsample_seed", eval.subsample_seed),
      CSI4_TEXT("eval.user", eval.user),

      CSI4_TEXT("generate.ckpt", generate.ckpt),
      CSI4_SIZE("generate.per_class", generate.per_class),
      CSI4_U64("generate.seed", generate.seed),
  };
  return table;
}

}  // namespace

std::string version_string() { return "0.1.0"; }

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw UsageError("unknown setting '" + key + "'");
}

void RunConfig::load_ini(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw UsageError("cannot read config " + path.string() + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (!body.data().empty()) throw UsageError("config key '" + section + "' is outside a section");
    if (section == "meta") continue;
    for (const auto& [key, value] : body) set(section + "." + key, value.data());
  }
}

std::string RunConfig::to_ini(const std::string& command) const {
  std::ostringstream out;
  out << "[meta]\nversion = " << version_string() << "\ncommand = " << command << '\n';
  std::string section;
  for (const auto& f : fields()) {
    const std::string key = f.key;
    const auto dot = key.find('.');
    if (key.substr(0, dot) != section) {
      section = key.substr(0, dot);
      out << "\n[" << section << "]\n";
    }
    out << key.substr(dot + 1) << " = " << f.get(*this) << '\n';
  }
  return out.str();
}

models::GeneratorSpec RunConfig::generator_for(const data::CsiBatch& d) const {
  models::GeneratorSpec s = generator;
  s.latent_dim = train.latent_dim;
  s.num_classes = d.num_classes;
  s.antennas = d.antennas();
  s.time = d.time();
  if (train.loss_kind == train::LossKind::bce) s = models::GeneratorSpec::bce_variant(s);
  return s;
}

models::CriticSpec RunConfig::critic_for(const data::CsiBatch& d) const {
  models::CriticSpec s = critic;
  s.in_features = d.features();
  s.num_classes = d.num_classes;
  return s;
}

models::DiscriminatorSpec RunConfig::discriminator_for(const data::CsiBatch& d) const {
  models::DiscriminatorSpec s = discriminator;
  s.in_features = d.features();
  s.num_classes = d.num_classes;
  return s;
}

models::ClassifierSpec RunConfig::classifier_for(const data::CsiBatch& d) const {
  models::ClassifierSpec s = classifier;
  s.antennas = d.antennas();
  s.time = d.time();
  s.num_classes = d.num_classes;
  return s;
}

eval::MetricConfig RunConfig::metric_config() const {
  eval::MetricConfig m;
  m.classifier = classifier_train;
  m.gan_test_cap_factor = eval.gan_test_cap_factor;
  m.subsample_seed = eval.subsample_seed;
  return m;
}

}  // namespace csi4::cli
