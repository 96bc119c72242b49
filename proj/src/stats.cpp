#include "mvmocap/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <numeric>

#include "mvmocap/error.hpp"

namespace mvmocap::stats {

namespace {

// Sum over tie groups of (t^3 - t).
double tie_term(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double term = 0.0;
  for (std::size_t i = 0; i < values.size();) {
    std::size_t j = i;
    while (j < values.size() && values[j] == values[i]) ++j;
    const double t = static_cast<double>(j - i);
    term += t * t * t - t;
    i = j;
  }
  return term;
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw ValidationError(std::string(what) + ": non-finite observation");
}

}  // namespace

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j + 1);  // mean of i+1 .. j
    for (std::size_t m = i; m < j; ++m) ranks[order[m]] = rank;
    i = j;
  }
  return ranks;
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ValidationError("kruskal_wallis: need at least 2 groups");
  std::vector<double> pooled;
  for (const auto& g : groups) {
    if (g.empty()) throw ValidationError("kruskal_wallis: every group needs at least one observation");
    check_finite(g, "kruskal_wallis");
    pooled.insert(pooled.end(), g.begin(), g.end());
  }
  const double n = static_cast<double>(pooled.size());
  if (pooled.size() < 3) throw ValidationError("kruskal_wallis: need at least 3 observations");

  const auto ranks = average_ranks(pooled);
  double h = 0.0;
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) rank_sum += ranks[offset + i];
    offset += g.size();
    h += rank_sum * rank_sum / static_cast<double>(g.size());
  }
  h = 12.0 / (n * (n + 1.0)) * h - 3.0 * (n + 1.0);

  const double correction = 1.0 - tie_term(pooled) / (n * n * n - n);
  if (correction <= 0.0) return {0.0, 1.0};
  h /= correction;
  if (h <= 0.0) return {std::max(h, 0.0), 1.0};

  const boost::math::chi_squared_distribution<double> chi2(static_cast<double>(groups.size() - 1));
  return {h, boost::math::cdf(boost::math::complement(chi2, h))};
}

TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw ValidationError("mann_whitney_u: both samples must be non-empty");
  check_finite(a, "mann_whitney_u");
  check_finite(b, "mann_whitney_u");
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = average_ranks(pooled);

  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double rank_sum_a = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];
  const double u_a = rank_sum_a - na * (na + 1.0) / 2.0;
  const double u_b = na * nb - u_a;

  TestResult result;
  result.statistic = std::min(u_a, u_b);
  const double mu = na * nb / 2.0;
  const double variance = na * nb / 12.0 * ((n + 1.0) - tie_term(pooled) / (n * (n - 1.0)));
  if (!(variance > 0.0)) {
    result.p_value = 1.0;
    return result;
  }
  // |U_a - mu| is symmetric in (a, b), so p(a, b) == p(b, a) bit for bit.
  const double z = (std::abs(u_a - mu) - 0.5) / std::sqrt(variance);
  if (z <= 0.0) {
    result.p_value = 1.0;
    return result;
  }
  const boost::math::normal_distribution<double> normal;
  result.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(normal, z)));
  return result;
}

std::vector<double> holm_correction(const std::vector<double>& raw_p) {
  for (double p : raw_p)
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("holm_correction: p-values must lie in [0, 1]");
  const std::size_t m = raw_p.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return raw_p[a] < raw_p[b]; });
  std::vector<double> adjusted(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double factor = static_cast<double>(m - i);
    running = std::max(running, std::min(1.0, factor * raw_p[order[i]]));
    adjusted[order[i]] = running;
  }
  return adjusted;
}

StatReport compare_methods(const std::string& metric, const std::vector<std::string>& methods,
                           const std::vector<std::vector<double>>& samples, const StatOptions& options) {
  if (methods.size() != samples.size()) throw ValidationError("compare_methods: methods and samples differ in length");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw ValidationError("alpha must be in (0, 1)");
  StatReport report;
  report.metric = metric;
  report.alpha = options.alpha;

  std::vector<std::vector<double>> groups;
  for (std::size_t i = 0; i < methods.size(); ++i) {
    if (samples[i].empty()) continue;
    report.methods.push_back(methods[i]);
    report.group_sizes.push_back(samples[i].size());
    groups.push_back(samples[i]);
  }
  std::size_t total = 0;
  for (const auto& g : groups) total += g.size();
  if (groups.size() < 2) {
    report.notice = "fewer than 2 methods with data; statistical tests skipped";
    return report;
  }
  if (total < 3) {
    report.notice = "fewer than 3 observations; statistical tests skipped";
    return report;
  }

  report.omnibus = kruskal_wallis(groups);
  report.omnibus_performed = true;
  report.omnibus_significant = report.omnibus.p_value < options.alpha;
  if (options.gate_pairwise_on_omnibus && !report.omnibus_significant) {
    report.notice = "omnibus test not significant; post hoc comparisons skipped";
    return report;
  }

  std::vector<double> raw;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    for (std::size_t j = i + 1; j < groups.size(); ++j) {
      const auto mw = mann_whitney_u(groups[i], groups[j]);
      report.pairwise.push_back({report.methods[i], report.methods[j], mw.statistic, mw.p_value, 1.0, false});
      raw.push_back(mw.p_value);
    }
  }
  const auto adjusted = holm_correction(raw);
  for (std::size_t i = 0; i < adjusted.size(); ++i) {
    report.pairwise[i].adjusted_p = adjusted[i];
    report.pairwise[i].significant = adjusted[i] < options.alpha;
  }
  report.pairwise_performed = true;
  return report;
}

}  // namespace mvmocap::stats
