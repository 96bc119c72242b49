#pragma once

#include <string>
#include <vector>

namespace mvmocap::stats {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Average ranks (1-based) with ties sharing the mean rank.
std::vector<double> average_ranks(const std::vector<double>& values);

// Kruskal-Wallis H with tie correction; p from the chi-squared survival
// function with k-1 degrees of freedom. All-identical input gives H = 0,
// p = 1. Throws ValidationError for fewer than 2 groups, an empty group,
// or fewer than 3 observations.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Two-sided Mann-Whitney U. statistic = min(U_a, U_b); p from the normal
// approximation with tie correction and 0.5 continuity correction.
TestResult mann_whitney_u(const std::vector<double>& a, const std::vector<double>& b);

// Holm step-down adjustment, returned in input order.
std::vector<double> holm_correction(const std::vector<double>& raw_p);

struct PairwiseComparison {
  std::string method_a;
  std::string method_b;
  double u_statistic = 0.0;
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool significant = false;
};

struct StatReport {
  std::string metric;
  std::vector<std::string> methods;
  std::vector<std::size_t> group_sizes;
  TestResult omnibus;
  bool omnibus_performed = false;
  bool omnibus_significant = false;
  bool pairwise_performed = false;
  std::vector<PairwiseComparison> pairwise;
  double alpha = 0.05;
  std::string notice;  // why a test was skipped, if it was
};

struct StatOptions {
  double alpha = 0.05;
  // Run post hoc comparisons only after a significant omnibus test.
  bool gate_pairwise_on_omnibus = true;
};

// Omnibus Kruskal-Wallis across methods, then pairwise Mann-Whitney U with
// Holm adjustment across all method pairs. Fewer than 2 usable methods
// yields a report with a notice and no tests.
StatReport compare_methods(const std::string& metric, const std::vector<std::string>& methods,
                           const std::vector<std::vector<double>>& samples, const StatOptions& options = {});

}  // namespace mvmocap::stats
