/*
 * Copyright 2026 The noisygbdt Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "noisygbdt/detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace noisygbdt::detect {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

InstanceId id_at(std::span<const InstanceId> ids, std::size_t i) {
  return ids.empty() ? static_cast<InstanceId>(i) : ids[i];
}

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double log_normal(double x, const Gaussian& g) {
  const double d = x - g.mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * g.variance) + d * d / g.variance);
}

bool has_two_distinct(std::span<const double> values) {
  if (values.empty()) return false;
  return std::any_of(values.begin(), values.end(), [&](double v) { return v != values[0]; });
}

// Spread below rounding level counts as a single value.
bool has_spread(std::span<const double> values) {
  if (values.empty()) return false;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double scale = std::max({1.0, std::abs(*lo), std::abs(*hi)});
  return *hi - *lo > 1e-9 * scale;
}

std::vector<NoiseScore> make_scores(Method method, std::span<const double> values,
                                    std::span<const InstanceId> ids) {
  std::vector<NoiseScore> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i].index = i;
    out[i].instance_id = id_at(ids, i);
    out[i].method = method;
    out[i].score = values[i];
    out[i].polarity = polarity_of(method);
  }
  return out;
}

void apply_threshold(std::vector<NoiseScore>& scores, const ThresholdPolicy& policy,
                     std::span<const InstanceId> ids, std::string* warning) {
  std::vector<double> values(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) values[i] = scores[i].score;
  const Polarity polarity = scores.empty() ? Polarity::kLowIsNoisy : scores.front().polarity;
  auto result = threshold(values, polarity, policy, ids);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i].flagged_noisy = result.flags[i] != 0;
    scores[i].threshold_used = result.threshold_used;
  }
  if (warning) *warning = result.warning;
}

}  // namespace

std::string to_string(Method method) {
  switch (method) {
    case Method::kLrt: return "LRT";
    case Method::kAum: return "AUM";
    case Method::kConfCorr: return "ConfCorr";
    case Method::kGradients: return "Gradients";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : kAllMethods) {
    std::string canonical = to_string(m);
    std::string a = name;
    std::transform(a.begin(), a.end(), a.begin(), ::tolower);
    std::transform(canonical.begin(), canonical.end(), canonical.begin(), ::tolower);
    if (a == canonical) return m;
  }
  throw Error("unknown detection method '" + name + "'");
}

Polarity polarity_of(Method method) {
  return method == Method::kGradients ? Polarity::kHighIsNoisy : Polarity::kLowIsNoisy;
}

// ---------------------------------------------------------------- GMM

double Gmm1D::posterior(double x, std::size_t k) const {
  const double a = std::log(components[0].weight) + log_normal(x, components[0]);
  const double b = std::log(components[1].weight) + log_normal(x, components[1]);
  const double m = std::max(a, b);
  const double denom = m + std::log(std::exp(a - m) + std::exp(b - m));
  return std::exp((k == 0 ? a : b) - denom);
}

std::optional<double> Gmm1D::decision_boundary() const {
  double lo = components[0].mean;
  double hi = components[1].mean;
  auto f = [&](double x) { return posterior(x, 1) - 0.5; };
  double flo = f(lo);
  double fhi = f(hi);
  if (!(flo < 0.0 && fhi > 0.0)) return std::nullopt;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return 0.5 * (lo + hi);
}

Gmm1D fit_gmm_1d(std::span<const double> values, int max_iter, double tol) {
  if (!has_two_distinct(values)) throw Error("GMM fit needs at least two distinct values");
  const std::size_t n = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double range = sorted.back() - sorted.front();
  const double floor = 1e-9 * range * range;

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var = std::max(var / static_cast<double>(n), floor);

  Gmm1D gmm;
  double lo = percentile(sorted, 0.25);
  double hi = percentile(sorted, 0.75);
  if (!(lo < hi)) {
    lo = sorted.front();
    hi = sorted.back();
  }
  gmm.components[0] = {lo, var, 0.5};
  gmm.components[1] = {hi, var, 0.5};

  std::vector<double> resp(n);  // responsibility of component 1
  auto e_step = [&] {
    double ll = 0.0;
    const double lw0 = std::log(gmm.components[0].weight);
    const double lw1 = std::log(gmm.components[1].weight);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = lw0 + log_normal(values[i], gmm.components[0]);
      const double b = lw1 + log_normal(values[i], gmm.components[1]);
      const double m = std::max(a, b);
      const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
      resp[i] = std::exp(b - lse);
      ll += lse;
    }
    return ll / static_cast<double>(n);
  };

  double ll = e_step();
  gmm.log_likelihood_trace.push_back(ll);
  for (int it = 0; it < max_iter; ++it) {
    // M-step
    double n1 = 0.0;
    double s1 = 0.0;
    double s0 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      n1 += resp[i];
      s1 += resp[i] * values[i];
      s0 += (1.0 - resp[i]) * values[i];
    }
    const double n0 = static_cast<double>(n) - n1;
    const double tiny = 1e-12 * static_cast<double>(n);
    if (n0 > tiny) gmm.components[0].mean = s0 / n0;
    if (n1 > tiny) gmm.components[1].mean = s1 / n1;
    double v0 = 0.0;
    double v1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d0 = values[i] - gmm.components[0].mean;
      const double d1 = values[i] - gmm.components[1].mean;
      v0 += (1.0 - resp[i]) * d0 * d0;
      v1 += resp[i] * d1 * d1;
    }
    if (n0 > tiny) gmm.components[0].variance = std::max(v0 / n0, floor);
    if (n1 > tiny) gmm.components[1].variance = std::max(v1 / n1, floor);
    const double w1 = std::clamp(n1 / static_cast<double>(n), 1e-12, 1.0 - 1e-12);
    gmm.components[0].weight = 1.0 - w1;
    gmm.components[1].weight = w1;

    const double next = e_step();
    gmm.log_likelihood_trace.push_back(next);
    ++gmm.iterations;
    const bool done = std::abs(next - ll) < tol;
    ll = next;
    if (done) break;
  }
  if (gmm.components[0].mean > gmm.components[1].mean) {
    std::swap(gmm.components[0], gmm.components[1]);
  }
  return gmm;
}

// ---------------------------------------------------------------- thresholds

std::string to_string(const ThresholdPolicy& policy) {
  switch (policy.kind) {
    case ThresholdPolicy::Kind::kFixed: return "fixed:" + std::to_string(policy.value);
    case ThresholdPolicy::Kind::kGmm: return "gmm";
    case ThresholdPolicy::Kind::kQuantile: return "quantile:" + std::to_string(policy.value);
  }
  return "?";
}

ThresholdPolicy parse_policy(const std::string& text) {
  if (text == "gmm") return ThresholdPolicy::gmm();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string kind = text.substr(0, colon);
    const double v = std::stod(text.substr(colon + 1));
    if (kind == "fixed") return ThresholdPolicy::fixed(v);
    if (kind == "quantile") return ThresholdPolicy::quantile(v);
  }
  throw Error("unknown threshold policy '" + text + "' (expected gmm, fixed:v or quantile:q)");
}

ThresholdResult threshold(std::span<const double> scores, Polarity polarity,
                          const ThresholdPolicy& policy, std::span<const InstanceId> ids) {
  if (scores.empty()) throw Error("threshold over an empty score list");
  const bool low_noisy = polarity == Polarity::kLowIsNoisy;
  ThresholdResult out;
  out.flags.assign(scores.size(), 0);
  switch (policy.kind) {
    case ThresholdPolicy::Kind::kFixed: {
      out.threshold_used = policy.value;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        out.flags[i] = low_noisy ? scores[i] < policy.value : scores[i] > policy.value;
      }
      break;
    }
    case ThresholdPolicy::Kind::kQuantile: {
      if (!(policy.value >= 0.0 && policy.value <= 1.0)) throw Error("quantile must lie in [0, 1]");
      std::vector<std::size_t> order(scores.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return low_noisy ? scores[a] < scores[b] : scores[a] > scores[b];
        return id_at(ids, a) < id_at(ids, b);
      });
      const auto count = static_cast<std::size_t>(
          std::llround((1.0 - policy.value) * static_cast<double>(scores.size())));
      for (std::size_t r = 0; r < count; ++r) out.flags[order[r]] = 1;
      out.threshold_used = count > 0 ? scores[order[count - 1]] : (low_noisy ? -kInf : kInf);
      break;
    }
    case ThresholdPolicy::Kind::kGmm: {
      if (!has_spread(scores)) {
        out.warning = "scores have fewer than two distinct values; GMM degenerate, nothing flagged";
        out.threshold_used = low_noisy ? -kInf : kInf;
        break;
      }
      // A single cut where the posteriors cross between the means; the
      // wider component's far tail on the clean side stays clean.
      const Gmm1D gmm = fit_gmm_1d(scores);
      const double cut = gmm.decision_boundary().value_or(
          0.5 * (gmm.components[0].mean + gmm.components[1].mean));
      for (std::size_t i = 0; i < scores.size(); ++i) {
        out.flags[i] = low_noisy ? scores[i] < cut : scores[i] > cut;
      }
      out.threshold_used = cut;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------- scorers

std::vector<NoiseScore> lrt_scores(const Matrix& probabilities, std::span<const ClassId> labels,
                                   double epsilon, std::span<const InstanceId> ids) {
  if (!(epsilon > 0.0)) throw Error("LRT epsilon must be positive");
  if (labels.size() != probabilities.rows()) throw Error("label count mismatch");
  std::vector<double> ratio(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto row = probabilities.row(i);
    const double best = row[argmax(row)];
    ratio[i] = row[static_cast<std::size_t>(labels[i])] / best;
  }
  auto scores = make_scores(Method::kLrt, ratio, ids);
  apply_threshold(scores, ThresholdPolicy::fixed(epsilon), ids, nullptr);
  return scores;
}

namespace {
std::vector<double> aum_values(const std::deque<dynamics::EpochRecord>& window,
                               std::span<const ClassId> labels) {
  if (window.empty()) throw Error("AUM needs a non-empty window");
  const std::size_t c = window.front().logits.cols();
  if (c < 2) throw Error("AUM needs at least 2 classes");
  std::vector<double> sum(labels.size(), 0.0);
  for (const auto& rec : window) {
    if (rec.logits.rows() != labels.size()) throw Error("label count mismatch");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto y = static_cast<std::size_t>(labels[i]);
      double other = -kInf;
      for (std::size_t k = 0; k < c; ++k) {
        if (k != y) other = std::max(other, rec.logits(i, k));
      }
      sum[i] += rec.logits(i, y) - other;
    }
  }
  for (double& s : sum) s /= static_cast<double>(window.size());
  return sum;
}

std::vector<double> gradient_values(const std::deque<dynamics::EpochRecord>& window) {
  if (window.empty()) throw Error("Gradients needs a non-empty window");
  std::vector<double> best(window.front().size(), 0.0);
  for (const auto& rec : window) {
    for (std::size_t i = 0; i < best.size(); ++i) best[i] = std::max(best[i], rec.max_abs_gradient[i]);
  }
  return best;
}

std::vector<double> confcorr_values(const dynamics::DynamicsLog& log) {
  const auto stats = confcorr_stats(log);
  std::vector<double> s(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) s[i] = 0.5 * (stats[i].confidence + stats[i].correctness);
  return s;
}
}  // namespace

std::vector<NoiseScore> aum_scores(const std::deque<dynamics::EpochRecord>& window,
                                   std::span<const ClassId> labels,
                                   std::span<const InstanceId> ids) {
  auto scores = make_scores(Method::kAum, aum_values(window, labels), ids);
  apply_threshold(scores, ThresholdPolicy::fixed(0.0), ids, nullptr);
  return scores;
}

std::vector<ConfCorrStats> confcorr_stats(const dynamics::DynamicsLog& log) {
  if (log.rounds() < 1) throw Error("ConfCorr needs at least one recorded round");
  const double t = log.rounds();
  std::vector<ConfCorrStats> out(log.instances());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double mu = log.sum_p()[i] / t;
    out[i].confidence = mu;
    out[i].variability = std::sqrt(std::max(0.0, log.sum_p_sq()[i] / t - mu * mu));
    out[i].correctness = log.correct()[i] / t;
  }
  return out;
}

std::vector<NoiseScore> confcorr_scores(const dynamics::DynamicsLog& log,
                                        std::span<const InstanceId> ids, std::string* warning) {
  auto scores = make_scores(Method::kConfCorr, confcorr_values(log), ids);
  apply_threshold(scores, ThresholdPolicy::gmm(), ids, warning);
  return scores;
}

std::vector<NoiseScore> gradient_scores(const std::deque<dynamics::EpochRecord>& window,
                                        std::span<const InstanceId> ids, std::string* warning) {
  auto scores = make_scores(Method::kGradients, gradient_values(window), ids);
  apply_threshold(scores, ThresholdPolicy::gmm(), ids, warning);
  return scores;
}

ThresholdPolicy DetectorConfig::effective_policy() const {
  if (policy) return *policy;
  switch (method) {
    case Method::kLrt: return ThresholdPolicy::fixed(lrt_epsilon);
    case Method::kAum: return ThresholdPolicy::fixed(0.0);
    case Method::kConfCorr:
    case Method::kGradients: return ThresholdPolicy::gmm();
  }
  return ThresholdPolicy::gmm();
}

std::vector<std::uint8_t> Detection::flags() const {
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i].flagged_noisy;
  return out;
}

Detection run_detector(const DetectorConfig& config, const dynamics::DynamicsLog& log,
                       std::span<const ClassId> labels, std::span<const InstanceId> ids,
                       std::span<const double> weights) {
  std::vector<double> values;
  switch (config.method) {
    case Method::kLrt: {
      if (!(config.lrt_epsilon > 0.0)) throw Error("LRT epsilon must be positive");
      const auto& probs = log.latest().probabilities;
      values.resize(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto row = probs.row(i);
        values[i] = row[static_cast<std::size_t>(labels[i])] / row[argmax(row)];
      }
      break;
    }
    case Method::kAum: values = aum_values(log.window(), labels); break;
    case Method::kConfCorr: values = confcorr_values(log); break;
    case Method::kGradients: values = gradient_values(log.window()); break;
  }

  Detection out;
  out.scores = make_scores(config.method, values, ids);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (weights.empty() || weights[i] > 0.0) active.push_back(i);
  }
  if (active.empty()) return out;
  std::vector<double> active_values(active.size());
  std::vector<InstanceId> active_ids(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    active_values[a] = values[active[a]];
    active_ids[a] = id_at(ids, active[a]);
  }
  auto result = threshold(active_values, polarity_of(config.method), config.effective_policy(),
                          active_ids);
  out.warning = result.warning;
  for (auto& s : out.scores) s.threshold_used = result.threshold_used;
  for (std::size_t a = 0; a < active.size(); ++a) {
    out.scores[active[a]].flagged_noisy = result.flags[a] != 0;
  }
  return out;
}

DetectionMetrics detection_metrics(std::span<const std::uint8_t> flags,
                                   std::span<const std::uint8_t> noise_mask) {
  if (flags.size() != noise_mask.size()) throw Error("flags and noise mask differ in length");
  if (flags.empty()) throw Error("detection metrics over no instances");
  std::size_t tp = 0, fp = 0, fn = 0, agree = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    const bool f = flags[i] != 0;
    const bool m = noise_mask[i] != 0;
    agree += f == m ? 1 : 0;
    tp += f && m ? 1 : 0;
    fp += f && !m ? 1 : 0;
    fn += !f && m ? 1 : 0;
  }
  DetectionMetrics out;
  out.accuracy = static_cast<double>(agree) / static_cast<double>(flags.size());
  out.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  out.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  return out;
}

double estimated_noise_rate(std::span<const std::uint8_t> flags) {
  if (flags.empty()) throw Error("estimated noise rate over no instances");
  std::size_t flagged = 0;
  for (auto f : flags) flagged += f ? 1 : 0;
  return static_cast<double>(flagged) / static_cast<double>(flags.size());
}

void write_scores_csv(std::ostream& out, std::span<const NoiseScore> scores,
                      std::span<const std::uint8_t> noise_mask, bool header) {
  if (noise_mask.size() != scores.size()) throw Error("scores and noise mask differ in length");
  if (header) out << "instance_id,method,score,flagged,noise_mask\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& s = scores[i];
    out << s.instance_id << ',' << to_string(s.method) << ',' << s.score << ','
        << (s.flagged_noisy ? 1 : 0) << ',' << (noise_mask[i] ? 1 : 0) << '\n';
  }
}

}  // namespace noisygbdt::detect
