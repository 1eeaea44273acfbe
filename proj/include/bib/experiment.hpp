#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bib/data.hpp"
#include "bib/losses.hpp"
#include "bib/matrix.hpp"
#include "bib/metrics.hpp"
#include "bib/model.hpp"
#include "bib/training.hpp"

namespace bib {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataConfig {
  std::size_t num_classes = 10;
  std::size_t n_max = 800;
  double imbalance_factor = 100.0;
  std::size_t dim = 16;
  double separation = 2.0;
  std::size_t test_per_class = 100;
  std::size_t many_threshold = 100;
  std::size_t few_threshold = 20;
  std::string train_csv;  // when set (with test_csv), overrides synthesis
  std::string test_csv;
};

struct ModelConfig {
  std::vector<std::size_t> widths = {32, 32, 32, 32, 32};  // one tap per stage
  std::size_t d_z = 0;                             // 0 = half of last width
};

struct LossSection {
  Method method = Method::Mbib;
  double beta = 2.0;
  double gamma = 0.5;
  double m = 0.1;
  std::vector<double> coefficients = {0.1, 0.1, 0.1, 0.3};  // (a, b, ...)
  bool dedupe_student_bsc = false;
  Reduction reduction = Reduction::Mean;
  bool ensemble_probabilities = false;
};

struct ExperimentConfig {
  DataConfig data;
  ModelConfig model;
  LossSection loss;
  TrainConfig train;
  std::string output_dir;

  MbibConfig mbib_config() const {
    MbibConfig c;
    c.bib.beta = loss.beta;
    c.bib.rebalance.m = loss.m;
    c.bib.rebalance.gamma = loss.gamma;
    c.bib.reduction = loss.reduction;
    c.tap_coefficients = loss.coefficients;
    c.dedupe_student_bsc = loss.dedupe_student_bsc;
    return c;
  }
};

namespace cfg {

using nlohmann::json;

inline void check_keys(const json& obj, const std::vector<std::string>& allowed,
                       const std::string& section) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const std::string& k : allowed)
      if (it.key() == k) ok = true;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in section '" + section + "'");
  }
}

template <typename T>
void get(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

inline ExperimentConfig parse(const json& root) {
  check_keys(root, {"data", "model", "loss", "train", "output"}, "(top level)");
  ExperimentConfig c;

  if (root.contains("data")) {
    const json& d = root.at("data");
    check_keys(d,
               {"num_classes", "n_max", "imbalance_factor", "dim", "separation",
                "test_per_class", "many_threshold", "few_threshold", "train_csv", "test_csv"},
               "data");
    get(d, "num_classes", c.data.num_classes);
    get(d, "n_max", c.data.n_max);
    get(d, "imbalance_factor", c.data.imbalance_factor);
    get(d, "dim", c.data.dim);
    get(d, "separation", c.data.separation);
    get(d, "test_per_class", c.data.test_per_class);
    get(d, "many_threshold", c.data.many_threshold);
    get(d, "few_threshold", c.data.few_threshold);
    get(d, "train_csv", c.data.train_csv);
    get(d, "test_csv", c.data.test_csv);
    if (c.data.train_csv.empty() != c.data.test_csv.empty())
      throw ConfigError("data: train_csv and test_csv must be set together");
  }
  if (root.contains("model")) {
    const json& m = root.at("model");
    check_keys(m, {"widths", "d_z"}, "model");
    get(m, "widths", c.model.widths);
    get(m, "d_z", c.model.d_z);
    if (c.model.widths.empty()) throw ConfigError("model: widths must be nonempty");
  }
  if (root.contains("loss")) {
    const json& l = root.at("loss");
    check_keys(l,
               {"method", "beta", "gamma", "m", "coefficients", "dedupe_student_bsc",
                "reduction", "ensemble"},
               "loss");
    std::string method = method_name(c.loss.method);
    get(l, "method", method);
    try {
      c.loss.method = method_from_string(method);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("loss: ") + e.what());
    }
    get(l, "beta", c.loss.beta);
    get(l, "gamma", c.loss.gamma);
    get(l, "m", c.loss.m);
    get(l, "coefficients", c.loss.coefficients);
    get(l, "dedupe_student_bsc", c.loss.dedupe_student_bsc);
    if (l.contains("reduction")) {
      const std::string r = l.at("reduction").get<std::string>();
      if (r == "mean")
        c.loss.reduction = Reduction::Mean;
      else if (r == "sum")
        c.loss.reduction = Reduction::Sum;
      else
        throw ConfigError("loss: reduction must be 'mean' or 'sum'");
    }
    if (l.contains("ensemble")) {
      const std::string e = l.at("ensemble").get<std::string>();
      if (e == "logits")
        c.loss.ensemble_probabilities = false;
      else if (e == "probabilities")
        c.loss.ensemble_probabilities = true;
      else
        throw ConfigError("loss: ensemble must be 'logits' or 'probabilities'");
    }
    if (c.loss.beta < 0.0) throw ConfigError("loss: beta must be nonnegative");
    if (c.loss.m < 0.0) throw ConfigError("loss: m must be nonnegative");
    if (c.loss.gamma < 0.0) throw ConfigError("loss: gamma must be nonnegative");
    for (double v : c.loss.coefficients)
      if (v < 0.0) throw ConfigError("loss: coefficients must be nonnegative");
  }
  if (root.contains("train")) {
    const json& t = root.at("train");
    check_keys(t,
               {"epochs", "batch_size", "lr_initial", "momentum", "weight_decay",
                "decay_biases", "seed", "schedule"},
               "train");
    get(t, "epochs", c.train.epochs);
    get(t, "batch_size", c.train.batch_size);
    get(t, "lr_initial", c.train.lr_initial);
    get(t, "momentum", c.train.momentum);
    get(t, "weight_decay", c.train.weight_decay);
    get(t, "decay_biases", c.train.decay_biases);
    get(t, "seed", c.train.seed);
    if (t.contains("schedule")) {
      const json& s = t.at("schedule");
      check_keys(s, {"kind", "warmup_epochs", "milestones", "factor", "lr_final"}, "schedule");
      std::string kind = "cosine";
      get(s, "kind", kind);
      if (kind == "cosine") {
        c.train.schedule.kind = Schedule::Kind::Cosine;
        get(s, "lr_final", c.train.schedule.cosine.lr_final);
      } else if (kind == "step") {
        c.train.schedule.kind = Schedule::Kind::Step;
        get(s, "warmup_epochs", c.train.schedule.step.warmup_epochs);
        get(s, "milestones", c.train.schedule.step.milestones);
        get(s, "factor", c.train.schedule.step.factor);
      } else {
        throw ConfigError("schedule: kind must be 'cosine' or 'step'");
      }
    }
  }
  if (root.contains("output")) {
    if (!root.at("output").is_string()) throw ConfigError("output: must be a string");
    c.output_dir = root.at("output").get<std::string>();
  }

  c.train.method = c.loss.method;
  c.train.loss = c.mbib_config();
  try {
    c.train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
  return c;
}

inline ExperimentConfig parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse(root);
}

inline json echo(const ExperimentConfig& c) {
  json root;
  root["data"] = {{"num_classes", c.data.num_classes},
                  {"n_max", c.data.n_max},
                  {"imbalance_factor", c.data.imbalance_factor},
                  {"dim", c.data.dim},
                  {"separation", c.data.separation},
                  {"test_per_class", c.data.test_per_class},
                  {"many_threshold", c.data.many_threshold},
                  {"few_threshold", c.data.few_threshold}};
  if (!c.data.train_csv.empty()) {
    root["data"]["train_csv"] = c.data.train_csv;
    root["data"]["test_csv"] = c.data.test_csv;
  }
  root["model"] = {{"widths", c.model.widths}, {"d_z", c.model.d_z}};
  root["loss"] = {{"method", method_name(c.loss.method)},
                  {"beta", c.loss.beta},
                  {"gamma", c.loss.gamma},
                  {"m", c.loss.m},
                  {"coefficients", c.loss.coefficients},
                  {"dedupe_student_bsc", c.loss.dedupe_student_bsc},
                  {"reduction", c.loss.reduction == Reduction::Mean ? "mean" : "sum"},
                  {"ensemble", c.loss.ensemble_probabilities ? "probabilities" : "logits"}};
  json sched;
  if (c.train.schedule.kind == Schedule::Kind::Cosine)
    sched = {{"kind", "cosine"}, {"lr_final", c.train.schedule.cosine.lr_final}};
  else
    sched = {{"kind", "step"},
             {"warmup_epochs", c.train.schedule.step.warmup_epochs},
             {"milestones", c.train.schedule.step.milestones},
             {"factor", c.train.schedule.step.factor}};
  root["train"] = {{"epochs", c.train.epochs},
                   {"batch_size", c.train.batch_size},
                   {"lr_initial", c.train.lr_initial},
                   {"momentum", c.train.momentum},
                   {"weight_decay", c.train.weight_decay},
                   {"decay_biases", c.train.decay_biases},
                   {"seed", c.train.seed},
                   {"schedule", sched}};
  if (!c.output_dir.empty()) root["output"] = c.output_dir;
  return root;
}

}  // namespace cfg

struct ExperimentReport {
  GroupAccuracy accuracy;
  RepresentationReport rep_v;  // final-tap observation branch
  RepresentationReport rep_z;  // bottleneck branch
  std::vector<double> mean_positive;
  TrainLog log;
  double wall_seconds = 0.0;
};

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_embeddings_csv(const Matrix& reps, const std::vector<std::size_t>& labels,
                                 const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "label";
  for (std::size_t j = 0; j < reps.cols(); ++j) out << ",z_" << (j + 1);
  out << '\n';
  for (std::size_t i = 0; i < reps.rows(); ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < reps.cols(); ++j) out << ',' << fmt_double(reps(i, j));
    out << '\n';
  }
}

inline void write_representation_csv(const RepresentationReport& rep, const std::string& path) {
  std::ofstream out(path);
  out << "d_intra,d_inter,rho\n"
      << fmt_double(rep.d_intra) << ',' << fmt_double(rep.d_inter) << ',' << fmt_double(rep.rho)
      << '\n';
}

}  // namespace detail

// Executes data -> model -> train -> metrics and, if out_dir is nonempty,
// writes the report files there.
inline ExperimentReport run_experiment(const ExperimentConfig& config,
                                       const std::string& out_dir = "") {
  const auto t0 = std::chrono::steady_clock::now();
  Rng top(config.train.seed);

  Dataset train_data, test_data;
  if (!config.data.train_csv.empty()) {
    train_data = load_csv(config.data.train_csv);
    test_data = load_csv(config.data.test_csv);
    test_data.frequency_table.counts = train_data.frequency_table.counts;
  } else {
    ClassFrequencyTable freq = exponential_profile(config.data.num_classes, config.data.n_max,
                                                   config.data.imbalance_factor);
    Rng data_rng = top.substream("data");
    std::tie(train_data, test_data) = synthesize_gaussian(
        freq, config.data.dim, config.data.separation, config.data.test_per_class, data_rng);
  }
  train_data.frequency_table.many_threshold = config.data.many_threshold;
  train_data.frequency_table.few_threshold = config.data.few_threshold;
  test_data.frequency_table.many_threshold = config.data.many_threshold;
  test_data.frequency_table.few_threshold = config.data.few_threshold;

  const std::size_t K = train_data.num_classes();
  std::vector<std::size_t> dims = {train_data.dim()};
  dims.insert(dims.end(), config.model.widths.begin(), config.model.widths.end());
  Rng init_rng = top.substream("init");
  MultiTapNet net = init_net(dims, K, config.model.d_z, init_rng);

  ExperimentReport report;
  report.log = train(net, train_data, test_data, config.train);
  report.accuracy = evaluate(config.train.method, net, test_data);

  const ForwardTrace trace = forward(net, test_data.features);
  report.rep_v = representation_quality(trace.observations.back(), test_data.labels, K);
  report.rep_z = representation_quality(trace.z, test_data.labels, K);

  const Matrix probs = config.loss.ensemble_probabilities
                           ? ensemble_probabilities(trace.tap_logits.back(), trace.g_logits)
                           : softmax(ensemble_logits(trace.tap_logits.back(), trace.g_logits));
  report.mean_positive = mean_positive_posterior(probs, test_data.labels, K);

  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (!out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    {
      std::ofstream out(out_dir + "/config_echo.json");
      out << cfg::echo(config).dump(2) << '\n';
    }
    write_train_log_csv(report.log, out_dir + "/train_log.csv");
    detail::write_embeddings_csv(trace.observations.back(), test_data.labels,
                                 out_dir + "/embeddings_v.csv");
    detail::write_embeddings_csv(trace.z, test_data.labels, out_dir + "/embeddings_z.csv");
    detail::write_representation_csv(report.rep_v, out_dir + "/representation_v.csv");
    detail::write_representation_csv(report.rep_z, out_dir + "/representation_z.csv");
    {
      const auto preds = method_predict(config.train.method, net, test_data.features);
      std::ofstream out(out_dir + "/predictions.csv");
      out << "label,prediction\n";
      for (std::size_t i = 0; i < preds.size(); ++i)
        out << test_data.labels[i] << ',' << preds[i] << '\n';
    }
    {
      std::ofstream out(out_dir + "/per_class.csv");
      out << "class,count,group,accuracy,mean_positive_posterior\n";
      for (std::size_t k = 0; k < K; ++k)
        out << k << ',' << train_data.frequency_table.counts[k] << ','
            << group_name(train_data.frequency_table.group_of(k)) << ','
            << detail::fmt_double(report.accuracy.per_class[k]) << ','
            << detail::fmt_double(report.mean_positive[k]) << '\n';
    }
    save_checkpoint(net, out_dir + "/checkpoint.txt");
    {
      nlohmann::json r;
      r["accuracy"] = {{"all", report.accuracy.all},
                       {"many", report.accuracy.many},
                       {"medium", report.accuracy.medium},
                       {"few", report.accuracy.few}};
      r["representation_v"] = {{"d_intra", report.rep_v.d_intra},
                               {"d_inter", report.rep_v.d_inter},
                               {"rho", report.rep_v.rho}};
      r["representation_z"] = {{"d_intra", report.rep_z.d_intra},
                               {"d_inter", report.rep_z.d_inter},
                               {"rho", report.rep_z.rho}};
      r["train_log"] = "train_log.csv";
      r["config"] = cfg::echo(config);
      r["wall_seconds"] = report.wall_seconds;
      std::ofstream out(out_dir + "/report.json");
      out << r.dump(2) << '\n';
    }
  }
  return report;
}

// ---- sweeps ----

struct SweepAxis {
  enum class Kind { Beta, AbGrid, Taps, Topology } kind = Kind::Beta;
  std::vector<double> beta_values;
  std::vector<double> a_values, b_values;
  std::vector<std::size_t> tap_counts;
  std::vector<Method> topologies;
};

struct SweepRow {
  std::string point;
  std::string seed;  // seed value, or "mean"
  bool failed = false;
  GroupAccuracy accuracy;
  double rho_z = 0.0;
  double rho_v = 0.0;
};

namespace detail {

inline ExperimentConfig at_point(const ExperimentConfig& base, const SweepAxis& axis,
                                 std::size_t i) {
  ExperimentConfig c = base;
  switch (axis.kind) {
    case SweepAxis::Kind::Beta:
      c.loss.beta = axis.beta_values[i];
      break;
    case SweepAxis::Kind::AbGrid: {
      const std::size_t bi = i % axis.b_values.size();
      const std::size_t ai = i / axis.b_values.size();
      c.loss.coefficients = {axis.a_values[ai], axis.b_values[bi]};
      if (c.model.widths.size() != 3)
        c.model.widths.assign(3, c.model.widths.back());
      break;
    }
    case SweepAxis::Kind::Taps: {
      // Stage count follows the tap count; extra stages repeat the last width.
      const std::size_t taps = axis.tap_counts[i];
      std::vector<std::size_t> widths = c.model.widths;
      widths.resize(taps, widths.back());
      c.model.widths = widths;
      std::vector<double> coeffs = c.loss.coefficients;
      coeffs.resize(taps >= 1 ? taps - 1 : 0, coeffs.empty() ? 0.1 : coeffs.back());
      c.loss.coefficients = coeffs;
      break;
    }
    case SweepAxis::Kind::Topology:
      c.loss.method = axis.topologies[i];
      break;
  }
  c.train.method = c.loss.method;
  c.train.loss = c.mbib_config();
  return c;
}

inline std::size_t num_points(const SweepAxis& axis) {
  switch (axis.kind) {
    case SweepAxis::Kind::Beta: return axis.beta_values.size();
    case SweepAxis::Kind::AbGrid: return axis.a_values.size() * axis.b_values.size();
    case SweepAxis::Kind::Taps: return axis.tap_counts.size();
    default: return axis.topologies.size();
  }
}

inline std::string point_label(const SweepAxis& axis, std::size_t i) {
  char buf[64];
  switch (axis.kind) {
    case SweepAxis::Kind::Beta:
      std::snprintf(buf, sizeof(buf), "beta=%g", axis.beta_values[i]);
      return buf;
    case SweepAxis::Kind::AbGrid: {
      const std::size_t bi = i % axis.b_values.size();
      const std::size_t ai = i / axis.b_values.size();
      std::snprintf(buf, sizeof(buf), "a=%g;b=%g", axis.a_values[ai], axis.b_values[bi]);
      return buf;
    }
    case SweepAxis::Kind::Taps:
      std::snprintf(buf, sizeof(buf), "taps=%zu", axis.tap_counts[i]);
      return buf;
    default:
      return std::string("topology=") + method_name(axis.topologies[i]);
  }
}

}  // namespace detail

// One run per (point x seed). A failing point is recorded and the sweep
// continues. Per-point mean rows follow the data rows.
inline std::vector<SweepRow> sweep(const ExperimentConfig& base, const SweepAxis& axis,
                                   const std::vector<std::uint64_t>& seeds) {
  if (detail::num_points(axis) == 0) throw ConfigError("sweep: empty axis");
  if (seeds.empty()) throw ConfigError("sweep: empty seed list");
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < detail::num_points(axis); ++i) {
    const std::string label = detail::point_label(axis, i);
    GroupAccuracy mean_acc;
    double mean_rho_z = 0.0, mean_rho_v = 0.0;
    std::size_t ok = 0;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig c = detail::at_point(base, axis, i);
      c.train.seed = seed;
      c.train.loss = c.mbib_config();
      SweepRow row;
      row.point = label;
      row.seed = std::to_string(seed);
      try {
        const ExperimentReport rep = run_experiment(c);
        row.accuracy = rep.accuracy;
        row.rho_z = rep.rep_z.rho;
        row.rho_v = rep.rep_v.rho;
        mean_acc.all += rep.accuracy.all;
        mean_acc.many += rep.accuracy.many;
        mean_acc.medium += rep.accuracy.medium;
        mean_acc.few += rep.accuracy.few;
        mean_rho_z += rep.rep_z.rho;
        mean_rho_v += rep.rep_v.rho;
        ++ok;
      } catch (const std::exception&) {
        row.failed = true;
      }
      rows.push_back(row);
    }
    SweepRow mean_row;
    mean_row.point = label;
    mean_row.seed = "mean";
    if (ok > 0) {
      const double n = static_cast<double>(ok);
      mean_row.accuracy = {mean_acc.all / n, mean_acc.many / n, mean_acc.medium / n,
                           mean_acc.few / n, {}};
      mean_row.rho_z = mean_rho_z / n;
      mean_row.rho_v = mean_rho_v / n;
    } else {
      mean_row.failed = true;
    }
    rows.push_back(mean_row);
  }
  return rows;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "point,seed,acc_all,acc_many,acc_medium,acc_few,rho_z\n";
  for (const SweepRow& r : rows) {
    if (r.failed) {
      out << r.point << ',' << r.seed << ",failed,failed,failed,failed,failed\n";
      continue;
    }
    out << r.point << ',' << r.seed << ',' << detail::fmt_double(r.accuracy.all) << ','
        << detail::fmt_double(r.accuracy.many) << ',' << detail::fmt_double(r.accuracy.medium)
        << ',' << detail::fmt_double(r.accuracy.few) << ',' << detail::fmt_double(r.rho_z)
        << '\n';
  }
}

struct CompareRow {
  Method method;
  double acc_all_mean = 0, acc_all_sd = 0;
  double acc_many_mean = 0, acc_many_sd = 0;
  double acc_medium_mean = 0, acc_medium_sd = 0;
  double acc_few_mean = 0, acc_few_sd = 0;
  double rho_v_mean = 0, rho_v_sd = 0;
  double rho_z_mean = 0, rho_z_sd = 0;
};

// Per-method mean and sd of accuracy and rho over the seed list.
inline std::vector<CompareRow> compare(const std::vector<Method>& methods,
                                       const ExperimentConfig& base,
                                       const std::vector<std::uint64_t>& seeds) {
  if (methods.empty()) throw ConfigError("compare: empty method list");
  if (seeds.empty()) throw ConfigError("compare: empty seed list");
  auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    sd = 0.0;
    if (v.size() > 1) {
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
    }
  };
  std::vector<CompareRow> rows;
  for (Method method : methods) {
    std::vector<double> all, many, medium, few, rho_v, rho_z;
    for (std::uint64_t seed : seeds) {
      ExperimentConfig c = base;
      c.loss.method = method;
      c.train.method = method;
      c.train.seed = seed;
      c.train.loss = c.mbib_config();
      const ExperimentReport rep = run_experiment(c);
      all.push_back(rep.accuracy.all);
      many.push_back(rep.accuracy.many);
      medium.push_back(rep.accuracy.medium);
      few.push_back(rep.accuracy.few);
      rho_v.push_back(rep.rep_v.rho);
      rho_z.push_back(rep.rep_z.rho);
    }
    CompareRow r;
    r.method = method;
    mean_sd(all, r.acc_all_mean, r.acc_all_sd);
    mean_sd(many, r.acc_many_mean, r.acc_many_sd);
    mean_sd(medium, r.acc_medium_mean, r.acc_medium_sd);
    mean_sd(few, r.acc_few_mean, r.acc_few_sd);
    mean_sd(rho_v, r.rho_v_mean, r.rho_v_sd);
    mean_sd(rho_z, r.rho_z_mean, r.rho_z_sd);
    rows.push_back(r);
  }
  return rows;
}

inline void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "method,acc_all_mean,acc_all_sd,acc_many_mean,acc_many_sd,acc_medium_mean,"
         "acc_medium_sd,acc_few_mean,acc_few_sd,rho_v_mean,rho_v_sd,rho_z_mean,rho_z_sd\n";
  for (const CompareRow& r : rows) {
    out << method_name(r.method);
    for (double v : {r.acc_all_mean, r.acc_all_sd, r.acc_many_mean, r.acc_many_sd,
                     r.acc_medium_mean, r.acc_medium_sd, r.acc_few_mean, r.acc_few_sd,
                     r.rho_v_mean, r.rho_v_sd, r.rho_z_mean, r.rho_z_sd})
      out << ',' << detail::fmt_double(v);
    out << '\n';
  }
}

}  // namespace bib
