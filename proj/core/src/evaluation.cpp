#include "fetalscreen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "fetalscreen/error.hpp"
#include "json.hpp"

namespace fetalscreen {

using ordered_json = nlohmann::ordered_json;

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : counts) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::size_t ConfusionMatrix::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == name) return i;
  throw Error(ErrorCode::UnknownClass, "class '" + std::string(name) + "' not in matrix");
}

ConfusionMatrix confusion_matrix(std::span<const std::string> labels, std::span<const std::string> predictions,
                                 std::span<const std::string> classes) {
  if (labels.size() != predictions.size())
    throw Error(ErrorCode::LengthMismatch, "labels and predictions differ in length");
  ConfusionMatrix cm{{classes.begin(), classes.end()}, {}};
  cm.counts.assign(classes.size(), std::vector<std::size_t>(classes.size(), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) ++cm.counts[cm.index_of(labels[i])][cm.index_of(predictions[i])];
  return cm;
}

ConfusionMatrix confusion_matrix(std::span<const int> labels, std::span<const int> predictions,
                                 std::vector<std::string> classes) {
  if (labels.size() != predictions.size())
    throw Error(ErrorCode::LengthMismatch, "labels and predictions differ in length");
  const int k = static_cast<int>(classes.size());
  ConfusionMatrix cm{std::move(classes), {}};
  cm.counts.assign(cm.classes.size(), std::vector<std::size_t>(cm.classes.size(), 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k || predictions[i] < 0 || predictions[i] >= k)
      throw Error(ErrorCode::UnknownClass, "class index out of range");
    ++cm.counts[labels[i]][predictions[i]];
  }
  return cm;
}

FScore f_score(const ConfusionMatrix& cm, Averaging averaging) {
  if (cm.size() == 0 || cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  FScore out;
  out.averaging = averaging;
  const std::size_t k = cm.size();
  double macro = 0.0, weighted = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t predicted = 0, support = 0;
    for (std::size_t r = 0; r < k; ++r) {
      predicted += cm.counts[r][c];
      support += cm.counts[c][r];
    }
    const double tp = static_cast<double>(cm.counts[c][c]);
    ClassScore s{cm.classes[c], predicted ? tp / predicted : 0.0, support ? tp / support : 0.0, 0.0, support};
    if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    macro += s.f1;
    weighted += s.f1 * static_cast<double>(support);
    out.per_class.push_back(s);
  }
  out.value = averaging == Averaging::Macro ? macro / static_cast<double>(k)
                                            : weighted / static_cast<double>(cm.total());
  return out;
}

Accuracies accuracies(const ConfusionMatrix& cm) {
  if (cm.size() == 0 || cm.total() == 0) throw Error(ErrorCode::EmptyMatrix, "confusion matrix is empty");
  Accuracies a;
  std::size_t trace = 0, supported = 0;
  double sum = 0.0;
  for (std::size_t c = 0; c < cm.size(); ++c) {
    trace += cm.counts[c][c];
    const auto support = std::accumulate(cm.counts[c].begin(), cm.counts[c].end(), std::size_t{0});
    const double recall = support ? static_cast<double>(cm.counts[c][c]) / support : 0.0;
    a.per_class.push_back(recall);
    if (support) {
      sum += recall;
      ++supported;
    }
  }
  a.overall = static_cast<double>(trace) / static_cast<double>(cm.total());
  a.average = sum / static_cast<double>(supported);
  return a;
}

namespace {

void check_binary(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "scores and labels differ in length");
  std::size_t pos = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::InvalidArgument, "binary labels must be 0 or 1");
    pos += l == 1;
  }
  for (double s : scores)
    if (std::isnan(s)) throw Error(ErrorCode::InvalidArgument, "scores must not be NaN");
  if (pos == 0 || pos == labels.size()) throw Error(ErrorCode::SingleClass, "both classes must be present");
}

// Midranks (1-based) of `values`.
std::vector<double> midranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  std::vector<double> rank(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return scores[i] > scores[j]; });
  const double P = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
  const double N = static_cast<double>(labels.size()) - P;

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / N, static_cast<double>(tp) / P, threshold});
  }
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    curve.auc += (b.fpr - a.fpr) * 0.5 * (a.tpr + b.tpr);
  }
  return curve;
}

double c_statistic(std::span<const double> scores, std::span<const int> labels) {
  check_binary(scores, labels);
  const auto rank = midranks(scores);
  double rank_sum = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == 1) {
      rank_sum += rank[i];
      pos += 1.0;
    }
  const double neg = static_cast<double>(labels.size()) - pos;
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

std::string roc_to_csv(const RocCurve& curve) {
  std::string out = "fpr,tpr,threshold\n";
  char buf[128];
  for (const auto& p : curve.points) {
    if (std::isinf(p.threshold))
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,inf\n", p.fpr, p.tpr);
    else
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.fpr, p.tpr, p.threshold);
    out += buf;
  }
  return out;
}

std::map<std::uint8_t, std::optional<double>> jaccard_index(const LabelMask& predicted, const LabelMask& truth) {
  if (predicted.width() != truth.width() || predicted.height() != truth.height())
    throw Error(ErrorCode::ShapeMismatch, "masks differ in size");
  if (predicted.schema() != truth.schema()) throw Error(ErrorCode::SchemaMismatch, "masks differ in schema");
  const int k = schema_max_label(truth.schema()) + 1;
  std::vector<std::size_t> inter(k, 0), in_p(k, 0), in_t(k, 0);
  const auto p = predicted.labels();
  const auto t = truth.labels();
  for (std::size_t i = 0; i < p.size(); ++i) {
    ++in_p[p[i]];
    ++in_t[t[i]];
    if (p[i] == t[i]) ++inter[p[i]];
  }
  std::map<std::uint8_t, std::optional<double>> out;
  for (int c = 0; c < k; ++c) {
    const std::size_t uni = in_p[c] + in_t[c] - inter[c];
    out[static_cast<std::uint8_t>(c)] =
        uni == 0 ? std::nullopt : std::optional<double>(static_cast<double>(inter[c]) / static_cast<double>(uni));
  }
  return out;
}

std::vector<std::string> BinaryDiagnosticRates::undefined_fields() const {
  std::vector<std::string> out;
  if (!sensitivity) out.emplace_back("sensitivity");
  if (!specificity) out.emplace_back("specificity");
  if (!accuracy) out.emplace_back("accuracy");
  if (!ppv) out.emplace_back("ppv");
  if (!npv) out.emplace_back("npv");
  return out;
}

BinaryDiagnosticRates diagnostic_rates(const BinaryCounts& c) {
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? std::nullopt : std::optional<double>(static_cast<double>(num) / static_cast<double>(den));
  };
  BinaryDiagnosticRates r;
  r.counts = c;
  r.sensitivity = ratio(c.tp, c.tp + c.fn);
  r.specificity = ratio(c.tn, c.tn + c.fp);
  r.accuracy = ratio(c.tp + c.tn, c.tp + c.tn + c.fp + c.fn);
  r.ppv = ratio(c.tp, c.tp + c.fp);
  r.npv = ratio(c.tn, c.tn + c.fn);
  return r;
}

BinaryDiagnosticRates diagnostic_rates(const ConfusionMatrix& cm, std::string_view positive_class) {
  if (cm.size() != 2) throw Error(ErrorCode::InvalidArgument, "diagnostic rates need a 2x2 matrix");
  const std::size_t p = cm.index_of(positive_class);
  const std::size_t n = 1 - p;
  return diagnostic_rates(BinaryCounts{cm.at(p, p), cm.at(p, n), cm.at(n, n), cm.at(n, p)});
}

std::string_view mwu_method_name(MwuMethod m) {
  return m == MwuMethod::Exact ? "exact" : "normal-approximation";
}

namespace {

struct MwuCore {
  double u = 0.0;
  double variance = 0.0;
  bool ties = false;
};

MwuCore mwu_core(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptySample, "both samples must be non-empty");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  for (double v : all)
    if (std::isnan(v)) throw Error(ErrorCode::InvalidArgument, "samples must not contain NaN");
  const auto rank = midranks(all);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  const double n = na + nb;
  double ra = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) ra += rank[i];

  MwuCore core;
  core.u = ra - na * (na + 1.0) / 2.0;
  std::vector<double> sorted = all;
  std::sort(sorted.begin(), sorted.end());
  double tie_term = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    if (t > 1) core.ties = true;
    tie_term += t * t * t - t;
    i = j;
  }
  core.variance = na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (n < 2.0) core.variance = 0.0;
  return core;
}

double normal_p(double u, double na, double nb, double variance) {
  if (variance <= 0.0) return 1.0;
  const double dev = std::max(0.0, std::abs(u - na * nb / 2.0) - 0.5);
  return std::min(1.0, 2.0 * normal_sf(dev / std::sqrt(variance)));
}

// Number of arrangements giving each U value, f(n_a, n_b, k).
std::vector<double> exact_u_counts(std::size_t na, std::size_t nb) {
  const std::size_t umax = na * nb;
  // table[i][j] is the distribution for sizes (i, j).
  std::vector<std::vector<std::vector<double>>> table(na + 1, std::vector<std::vector<double>>(nb + 1));
  for (std::size_t i = 0; i <= na; ++i)
    for (std::size_t j = 0; j <= nb; ++j) {
      auto& f = table[i][j];
      f.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        f[0] = 1.0;
        continue;
      }
      // Largest element from sample a beats all j of b; otherwise it is from b.
      const auto& from_a = table[i - 1][j];
      const auto& from_b = table[i][j - 1];
      for (std::size_t k = 0; k < from_a.size(); ++k) f[k + j] += from_a[k];
      for (std::size_t k = 0; k < from_b.size(); ++k) f[k] += from_b[k];
    }
  auto out = table[na][nb];
  out.resize(umax + 1, 0.0);
  return out;
}

}  // namespace

MwuResult mann_whitney_u_normal(std::span<const double> a, std::span<const double> b) {
  const auto core = mwu_core(a, b);
  MwuResult r{core.u, 1.0, MwuMethod::NormalApproximation, core.variance, a.size(), b.size()};
  r.p_two_sided = normal_p(core.u, static_cast<double>(a.size()), static_cast<double>(b.size()), core.variance);
  return r;
}

MwuResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  const auto core = mwu_core(a, b);
  if (a.size() + b.size() > kExactMwuMaxTotal || core.ties) return mann_whitney_u_normal(a, b);

  const auto counts = exact_u_counts(a.size(), b.size());
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  const auto u = static_cast<std::size_t>(std::llround(core.u));
  double le = 0.0, ge = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (k <= u) le += counts[k];
    if (k >= u) ge += counts[k];
  }
  MwuResult r{core.u, 1.0, MwuMethod::Exact, core.variance, a.size(), b.size()};
  r.p_two_sided = std::min(1.0, 2.0 * std::min(le, ge) / total);
  return r;
}

namespace {

ordered_json opt(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

std::string to_json(const ConfusionMatrix& cm) {
  ordered_json j;
  j["classes"] = cm.classes;
  j["counts"] = cm.counts;
  j["total"] = cm.total();
  return j.dump(2);
}

std::string to_json(const FScore& f) {
  ordered_json j;
  j["averaging"] = f.averaging == Averaging::Macro ? "macro" : "weighted";
  j["value"] = f.value;
  auto per = ordered_json::array();
  for (const auto& c : f.per_class)
    per.push_back(
        {{"class", c.name}, {"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1}, {"support", c.support}});
  j["per_class"] = per;
  return j.dump(2);
}

std::string to_json(const BinaryDiagnosticRates& r) {
  ordered_json j;
  j["tp"] = r.counts.tp;
  j["fn"] = r.counts.fn;
  j["tn"] = r.counts.tn;
  j["fp"] = r.counts.fp;
  j["sensitivity"] = opt(r.sensitivity);
  j["specificity"] = opt(r.specificity);
  j["accuracy"] = opt(r.accuracy);
  j["ppv"] = opt(r.ppv);
  j["npv"] = opt(r.npv);
  j["undefined"] = r.undefined_fields();
  return j.dump(2);
}

std::string to_json(const MwuResult& r) {
  ordered_json j;
  j["u_statistic"] = r.u_statistic;
  j["p_two_sided"] = r.p_two_sided;
  j["method"] = mwu_method_name(r.method);
  j["variance"] = r.variance;
  j["n_a"] = r.n_a;
  j["n_b"] = r.n_b;
  return j.dump(2);
}

std::string to_json(const RocCurve& c) {
  ordered_json j;
  j["auc"] = c.auc;
  auto pts = ordered_json::array();
  for (const auto& p : c.points)
    pts.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", std::isinf(p.threshold) ? ordered_json(nullptr)
                                                                                          : ordered_json(p.threshold)}});
  j["points"] = pts;
  return j.dump(2);
}

}  // namespace fetalscreen
