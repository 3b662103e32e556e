#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fetalscreen/classifier.hpp"
#include "fetalscreen/error.hpp"
#include "fetalscreen/random.hpp"

namespace fetalscreen {

namespace {

struct Offsets {
  std::size_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
};

Offsets offsets(const ModelParams& m) {
  const std::size_t D = m.input_size(), K = m.class_count();
  Offsets o;
  if (m.arch == Architecture::Linear) {
    o.w1 = 0;
    o.b1 = K * D;
    o.total = K * D + K;
  } else {
    const auto H = static_cast<std::size_t>(m.hidden);
    o.w1 = 0;
    o.b1 = H * D;
    o.w2 = o.b1 + H;
    o.b2 = o.w2 + K * H;
    o.total = o.b2 + K;
  }
  return o;
}

void softmax_inplace(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
}

// Forward pass; `hidden` receives tanh activations for the hidden model.
std::vector<double> forward(const ModelParams& m, const Offsets& o, std::span<const float> x,
                            std::vector<double>& hidden) {
  const std::size_t D = m.input_size(), K = m.class_count();
  const double* p = m.params.data();
  std::vector<double> logits(K);
  if (m.arch == Architecture::Linear) {
    for (std::size_t k = 0; k < K; ++k) {
      const double* w = p + o.w1 + k * D;
      double s = p[o.b1 + k];
      for (std::size_t d = 0; d < D; ++d) s += w[d] * x[d];
      logits[k] = s;
    }
  } else {
    const auto H = static_cast<std::size_t>(m.hidden);
    hidden.assign(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      const double* w = p + o.w1 + h * D;
      double s = p[o.b1 + h];
      for (std::size_t d = 0; d < D; ++d) s += w[d] * x[d];
      hidden[h] = std::tanh(s);
    }
    for (std::size_t k = 0; k < K; ++k) {
      const double* w = p + o.w2 + k * H;
      double s = p[o.b2 + k];
      for (std::size_t h = 0; h < H; ++h) s += w[h] * hidden[h];
      logits[k] = s;
    }
  }
  softmax_inplace(logits);
  return logits;
}

bool is_weight(const ModelParams& m, const Offsets& o, std::size_t i) {
  if (m.arch == Architecture::Linear) return i < o.b1;
  return i < o.b1 || (i >= o.w2 && i < o.b2);
}

}  // namespace

std::string_view architecture_name(Architecture a) { return a == Architecture::Linear ? "linear" : "hidden"; }

Architecture parse_architecture(std::string_view name) {
  if (name == "linear") return Architecture::Linear;
  if (name == "hidden") return Architecture::Hidden;
  throw Error(ErrorCode::InvalidArgument, "unknown architecture '" + std::string(name) + "'");
}

std::size_t ModelParams::expected_param_count() const { return offsets(*this).total; }

void ModelParams::validate() const {
  if (input_width <= 0 || input_height <= 0) throw Error(ErrorCode::InvalidArgument, "input size must be positive");
  if (classes.size() < 2) throw Error(ErrorCode::InvalidArgument, "a model needs at least two classes");
  if (arch == Architecture::Hidden && hidden <= 0) throw Error(ErrorCode::InvalidArgument, "hidden width must be positive");
  if (arch == Architecture::Linear && hidden != 0) throw Error(ErrorCode::InvalidArgument, "linear model has no hidden layer");
  if (params.size() != expected_param_count()) throw Error(ErrorCode::InvalidArgument, "parameter count mismatch");
  for (double v : params)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "non-finite parameter");
}

ModelParams ModelParams::zeros(Architecture arch, int width, int height, int hidden, std::vector<std::string> classes) {
  ModelParams m{arch, width, height, arch == Architecture::Linear ? 0 : hidden, std::move(classes), {}};
  m.params.assign(m.expected_param_count(), 0.0);
  m.validate();
  return m;
}

ModelParams ModelParams::random(Architecture arch, int width, int height, int hidden, std::vector<std::string> classes,
                                std::uint64_t seed) {
  ModelParams m = zeros(arch, width, height, hidden, std::move(classes));
  const auto o = offsets(m);
  Rng rng(seed);
  const double in_scale = 1.0 / std::sqrt(static_cast<double>(m.input_size()));
  if (arch == Architecture::Linear) {
    for (std::size_t i = o.w1; i < o.b1; ++i) m.params[i] = in_scale * rng.normal();
  } else {
    for (std::size_t i = o.w1; i < o.b1; ++i) m.params[i] = in_scale * rng.normal();
    const double hid_scale = 1.0 / std::sqrt(static_cast<double>(m.hidden));
    for (std::size_t i = o.w2; i < o.b2; ++i) m.params[i] = hid_scale * rng.normal();
  }
  return m;
}

std::vector<double> predict(const ModelParams& model, std::span<const float> features) {
  if (features.size() != model.input_size())
    throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.input_size()) + " inputs, got " +
                                                  std::to_string(features.size()));
  std::vector<double> hidden;
  return forward(model, offsets(model), features, hidden);
}

std::vector<double> predict(const ModelParams& model, const GreyImage& image) {
  if (image.width() != model.input_width || image.height() != model.input_height)
    throw Error(ErrorCode::DimensionMismatch, "image is " + std::to_string(image.width()) + "x" +
                                                  std::to_string(image.height()) + ", model expects " +
                                                  std::to_string(model.input_width) + "x" +
                                                  std::to_string(model.input_height));
  return predict(model, image.values());
}

double loss_and_gradient(const ModelParams& m, std::span<const Example> batch, double l2, std::vector<double>* gradient) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "empty batch");
  const auto o = offsets(m);
  const std::size_t D = m.input_size(), K = m.class_count();
  const auto H = static_cast<std::size_t>(m.hidden);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  if (gradient) gradient->assign(m.params.size(), 0.0);

  double loss = 0.0;
  std::vector<double> hidden, dlogit(K), dz(H);
  for (const auto& ex : batch) {
    if (ex.features.size() != D) throw Error(ErrorCode::DimensionMismatch, "example size mismatch");
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= K) throw Error(ErrorCode::InvalidArgument, "label out of range");
    const auto prob = forward(m, o, ex.features, hidden);
    loss -= std::log(std::max(prob[ex.label], 1e-300)) * inv_b;
    if (!gradient) continue;
    auto& g = *gradient;
    for (std::size_t k = 0; k < K; ++k) dlogit[k] = (prob[k] - (static_cast<int>(k) == ex.label ? 1.0 : 0.0)) * inv_b;
    if (m.arch == Architecture::Linear) {
      for (std::size_t k = 0; k < K; ++k) {
        double* gw = g.data() + o.w1 + k * D;
        const double dk = dlogit[k];
        for (std::size_t d = 0; d < D; ++d) gw[d] += dk * ex.features[d];
        g[o.b1 + k] += dk;
      }
    } else {
      const double* p = m.params.data();
      for (std::size_t h = 0; h < H; ++h) dz[h] = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        const double dk = dlogit[k];
        for (std::size_t h = 0; h < H; ++h) {
          g[o.w2 + k * H + h] += dk * hidden[h];
          dz[h] += p[o.w2 + k * H + h] * dk;
        }
        g[o.b2 + k] += dk;
      }
      for (std::size_t h = 0; h < H; ++h) {
        const double dh = dz[h] * (1.0 - hidden[h] * hidden[h]);
        double* gw = g.data() + o.w1 + h * D;
        for (std::size_t d = 0; d < D; ++d) gw[d] += dh * ex.features[d];
        g[o.b1 + h] += dh;
      }
    }
  }
  if (l2 > 0.0) {
    for (std::size_t i = 0; i < m.params.size(); ++i) {
      if (!is_weight(m, o, i)) continue;
      loss += 0.5 * l2 * m.params[i] * m.params[i];
      if (gradient) (*gradient)[i] += l2 * m.params[i];
    }
  }
  return loss;
}

GradientCheckResult gradient_check(const ModelParams& model, std::span<const Example> batch, double l2,
                                   std::size_t n_params, std::uint64_t seed, double step, const GradientFn& analytic) {
  std::vector<double> grad;
  if (analytic) analytic(model, batch, l2, &grad);
  else loss_and_gradient(model, batch, l2, &grad);

  std::vector<std::size_t> idx(model.params.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  idx.resize(std::min(n_params, idx.size()));

  ModelParams probe = model;
  GradientCheckResult r;
  for (auto i : idx) {
    const double orig = probe.params[i];
    probe.params[i] = orig + step;
    const double up = loss_and_gradient(probe, batch, l2, nullptr);
    probe.params[i] = orig - step;
    const double down = loss_and_gradient(probe, batch, l2, nullptr);
    probe.params[i] = orig;
    const double numeric = (up - down) / (2.0 * step);
    const double a = grad[i];
    const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    r.max_relative_error = std::max(r.max_relative_error, rel);
    ++r.parameters_checked;
  }
  return r;
}

namespace {

constexpr char kMagic[8] = {'F', 'S', 'M', 'O', 'D', 'E', 'L', '1'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t uint(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::MalformedFile, "model file truncated");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const ModelParams& model) {
  model.validate();
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, model.arch == Architecture::Linear ? 0u : 1u);
  put_u32(out, static_cast<std::uint32_t>(model.input_width));
  put_u32(out, static_cast<std::uint32_t>(model.input_height));
  put_u32(out, static_cast<std::uint32_t>(model.hidden));
  put_u32(out, static_cast<std::uint32_t>(model.classes.size()));
  for (const auto& c : model.classes) {
    put_u32(out, static_cast<std::uint32_t>(c.size()));
    out.insert(out.end(), c.begin(), c.end());
  }
  put_u64(out, model.params.size());
  for (double v : model.params) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

ModelParams deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  if (r.str(8) != std::string(kMagic, 8)) throw Error(ErrorCode::MalformedFile, "not an FSMODEL1 file");
  ModelParams m;
  const auto arch = r.uint(4);
  if (arch > 1) throw Error(ErrorCode::MalformedFile, "unknown architecture code");
  m.arch = arch == 0 ? Architecture::Linear : Architecture::Hidden;
  m.input_width = static_cast<int>(r.uint(4));
  m.input_height = static_cast<int>(r.uint(4));
  m.hidden = static_cast<int>(r.uint(4));
  const auto k = r.uint(4);
  if (k > 1024) throw Error(ErrorCode::MalformedFile, "implausible class count");
  for (std::uint64_t i = 0; i < k; ++i) m.classes.push_back(r.str(r.uint(4)));
  const auto n = r.uint(8);
  if (n > bytes.size()) throw Error(ErrorCode::MalformedFile, "parameter count exceeds file size");
  m.params.resize(n);
  for (auto& v : m.params) v = std::bit_cast<double>(r.uint(8));
  if (!r.done()) throw Error(ErrorCode::MalformedFile, "trailing bytes after parameters");
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedFile, e.detail());
  }
  return m;
}

void save_model(const ModelParams& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace fetalscreen
