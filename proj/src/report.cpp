#include "mvmocap/report.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "mvmocap/error.hpp"
#include "text_util.hpp"

namespace mvmocap {

namespace {

using json = nlohmann::json;

std::string opt_number(const std::optional<double>& v) { return v ? detail::format_double(*v) : "NA"; }

bool is_gc(const std::string& key) { return key.starts_with("gc_"); }

std::string tsv_header_metrics(const std::vector<double>& thresholds) {
  std::string h = kReprojectionKey;
  for (double d : thresholds) h += "\t" + gc_metric_key(d);
  return h + "\t" + kPositionKey;
}

}  // namespace

std::string gc_metric_key(double d) { return "gc_" + detail::format_double(d); }

std::string metric_label(const std::string& key) {
  if (key == kReprojectionKey) return "Mean reprojection error (pixels)";
  if (key == kPositionKey) return "Mean position error (mm)";
  if (is_gc(key)) return "GC" + key.substr(3);
  return key;
}

std::optional<MeanSd> mean_sd(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  MeanSd out;
  out.n = values.size();
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(out.n);
  if (out.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / static_cast<double>(out.n - 1));
  }
  return out;
}

std::string format_table1_cell(const std::string& metric, const std::optional<MeanSd>& value) {
  if (!value) return "N/A";
  const int mean_decimals = is_gc(metric) ? 2 : 1;
  return detail::format_fixed(value->mean, mean_decimals) + " ± " + detail::format_fixed(value->sd, 1);
}

std::string format_table1_tsv(const Table1& table, double alpha) {
  std::string out;
  if (!table.caption.empty()) out += "# " + table.caption + "\n";
  out += "metric";
  for (const auto& m : table.methods) out += "\t" + m;
  out += "\n";
  bool any_marked = false;
  for (const auto& row : table.rows) {
    const bool marked = row.omnibus_p && *row.omnibus_p < alpha;
    any_marked = any_marked || marked;
    out += metric_label(row.metric) + (marked ? "*" : "");
    for (const auto& v : row.values) out += "\t" + format_table1_cell(row.metric, v);
    out += "\n";
  }
  if (any_marked) out += "# * Kruskal-Wallis p < " + detail::format_double(alpha) + " across methods\n";
  return out;
}

Table1 parse_table1_fixture(const std::string& text) {
  try {
    const auto doc = json::parse(text);
    Table1 t;
    t.caption = doc.value("caption", std::string());
    t.methods = doc.at("methods").get<std::vector<std::string>>();
    for (const auto& r : doc.at("rows")) {
      Table1::Row row;
      row.metric = r.at("metric").get<std::string>();
      if (r.contains("omnibus_p") && !r["omnibus_p"].is_null()) row.omnibus_p = r["omnibus_p"].get<double>();
      const auto& values = r.at("values");
      if (values.size() != t.methods.size()) {
        throw ValidationError("table fixture row '" + row.metric + "' does not have one value per method");
      }
      for (const auto& v : values) {
        if (v.is_null()) {
          row.values.emplace_back();
        } else {
          row.values.push_back(MeanSd{v.at(0).get<double>(), v.at(1).get<double>(), 0});
        }
      }
      t.rows.push_back(std::move(row));
    }
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("table fixture: ") + e.what());
  }
}

Table1 load_table1_fixture(const std::filesystem::path& path) { return parse_table1_fixture(detail::read_file(path)); }

std::filesystem::path default_table1_fixture_path() { return detail::data_directory() / "table1_fixture.json"; }

Table1 build_table1(const std::vector<std::string>& methods, const std::vector<std::string>& metrics,
                    const MetricSamples& samples, const std::vector<stats::StatReport>& stat_reports) {
  Table1 t;
  t.caption = "Performance metrics across methods";
  t.methods = methods;
  for (const auto& metric : metrics) {
    Table1::Row row;
    row.metric = metric;
    const auto it = samples.find(metric);
    for (const auto& method : methods) {
      if (it == samples.end() || !it->second.contains(method)) {
        row.values.emplace_back();
      } else {
        row.values.push_back(mean_sd(it->second.at(method)));
      }
    }
    for (const auto& s : stat_reports)
      if (s.metric == metric && s.omnibus_performed) row.omnibus_p = s.omnibus.p_value;
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string format_stats_tsv(const std::vector<stats::StatReport>& reports) {
  std::string out = "metric\ttest\tmethod_a\tmethod_b\tstatistic\tp_value\tp_adjusted\tsignificant\tnotice\n";
  for (const auto& r : reports) {
    if (r.omnibus_performed) {
      out += r.metric + "\tkruskal_wallis\t*\t*\t" + detail::format_double(r.omnibus.statistic) + "\t" +
             detail::format_double(r.omnibus.p_value) + "\tNA\t" + (r.omnibus_significant ? "yes" : "no") + "\t" +
             r.notice + "\n";
    } else {
      out += r.metric + "\tnone\t*\t*\tNA\tNA\tNA\tno\t" + r.notice + "\n";
    }
    for (const auto& p : r.pairwise) {
      out += r.metric + "\tmann_whitney_u\t" + p.method_a + "\t" + p.method_b + "\t" +
             detail::format_double(p.u_statistic) + "\t" + detail::format_double(p.raw_p) + "\t" +
             detail::format_double(p.adjusted_p) + "\t" + (p.significant ? "yes" : "no") + "\t\n";
    }
  }
  return out;
}

std::string format_stats_json(const std::vector<stats::StatReport>& reports) {
  json doc = json::array();
  for (const auto& r : reports) {
    json j = json::object();
    j["metric"] = r.metric;
    j["alpha"] = r.alpha;
    j["methods"] = r.methods;
    j["group_sizes"] = r.group_sizes;
    if (r.omnibus_performed) {
      j["omnibus"] = {{"test", "kruskal_wallis"},
                      {"statistic", r.omnibus.statistic},
                      {"p_value", r.omnibus.p_value},
                      {"significant", r.omnibus_significant}};
    } else {
      j["omnibus"] = nullptr;
    }
    j["pairwise_performed"] = r.pairwise_performed;
    json pairs = json::array();
    for (const auto& p : r.pairwise) {
      pairs.push_back({{"method_a", p.method_a},
                       {"method_b", p.method_b},
                       {"test", "mann_whitney_u"},
                       {"u_statistic", p.u_statistic},
                       {"p_value", p.raw_p},
                       {"p_adjusted", p.adjusted_p},
                       {"significant", p.significant}});
    }
    j["pairwise"] = pairs;
    j["notice"] = r.notice;
    doc.push_back(j);
  }
  return doc.dump(2) + "\n";
}

std::string format_metrics_tsv(const std::vector<MetricReport>& reports, const std::vector<double>& gc_thresholds,
                               double lambda) {
  std::string out = "session_id\ttrial_id\tmethod\tn_frames\tn_cameras\tn_samples\t" + tsv_header_metrics(gc_thresholds) + "\n";
  for (const auto& r : reports) {
    out += r.session_id + "\t" + r.trial_id + "\t" + r.method + "\t" + std::to_string(r.n_frames) + "\t" +
           std::to_string(r.n_cameras) + "\t" + std::to_string(r.n_samples) + "\t" +
           opt_number(r.mean_reprojection_error_px);
    for (double d : gc_thresholds) {
      const auto it = r.gc.find(GcKey{d, lambda});
      out += "\t" + opt_number(it == r.gc.end() ? std::nullopt : it->second);
    }
    out += "\t" + opt_number(r.mean_position_error_mm) + "\n";
  }
  return out;
}

std::string format_per_keypoint_tsv(const std::vector<MetricReport>& reports, const std::vector<double>& gc_thresholds,
                                    double lambda) {
  struct Acc {
    std::vector<double> reproj, position;
    std::vector<std::vector<double>> gc;
  };
  std::vector<std::string> methods;
  std::map<std::string, std::vector<std::string>> keypoint_order;
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& r : reports) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    auto& order = keypoint_order[r.method];
    for (const auto& k : r.per_keypoint) {
      if (std::find(order.begin(), order.end(), k.name) == order.end()) order.push_back(k.name);
      auto& a = acc[{r.method, k.name}];
      a.gc.resize(gc_thresholds.size());
      if (k.reprojection_error_px) a.reproj.push_back(*k.reprojection_error_px);
      if (k.position_error_mm) a.position.push_back(*k.position_error_mm);
      for (std::size_t i = 0; i < gc_thresholds.size(); ++i) {
        const auto it = k.gc.find(GcKey{gc_thresholds[i], lambda});
        if (it != k.gc.end() && it->second) a.gc[i].push_back(*it->second);
      }
    }
  }
  std::sort(methods.begin(), methods.end());
  auto mean_cell = [](const std::vector<double>& v) -> std::string {
    const auto m = mean_sd(v);
    return m ? detail::format_double(m->mean) : "NA";
  };
  std::string out = "method\tkeypoint\t" + tsv_header_metrics(gc_thresholds) + "\n";
  for (const auto& method : methods) {
    for (const auto& name : keypoint_order[method]) {
      const auto& a = acc[{method, name}];
      out += method + "\t" + name + "\t" + mean_cell(a.reproj);
      for (const auto& g : a.gc) out += "\t" + mean_cell(g);
      out += "\t" + mean_cell(a.position) + "\n";
    }
  }
  return out;
}

}  // namespace mvmocap
