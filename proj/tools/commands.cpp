#include "commands.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "socta/error.hpp"
#include "socta/metrics.hpp"
#include "socta/pipeline.hpp"
#include "socta/serialization.hpp"
#include "svg.hpp"

namespace socta::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestTag = "socta-manifest/1";
constexpr const char* kMetricsTag = "socta-metrics/1";

std::string hex(const unsigned char* data, unsigned len) {
  std::ostringstream s;
  for (unsigned i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(data[i]);
  return s.str();
}

std::string digest(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw NumericalError("SHA-256 computation failed");
  }
  return hex(md, len);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string() + ": " + ec.message());
}

/// Merges one command's record into <out>/manifest.json.
void record_run(const fs::path& out, const std::string& command, const RunConfig& cfg,
                const std::vector<fs::path>& artifacts, double runtime_s) {
  const fs::path path = out / "manifest.json";
  Json manifest = {{"version", kManifestTag}, {"runs", Json::object()}};
  if (fs::exists(path)) {
    Json old = read_json(path);
    if (old.value("version", "") == kManifestTag) manifest = std::move(old);
  }
  Json files = Json::object();
  for (const auto& a : artifacts) files[a.filename().string()] = sha256_file(a);
  manifest["runs"][command] = {{"config_sha256", sha256_text(to_json(cfg).dump())},
                               {"seed", cfg.seed},
                               {"artifacts", std::move(files)},
                               {"runtime_s", runtime_s}};
  write_json(path, manifest);
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::vector<DischargeCycle> load_cycles(const fs::path& path) {
  auto loaded = load_csv(path);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << path.string() << ": " << w << '\n';
  return std::move(loaded.cycles);
}

fs::path reference_csv(const RunConfig& cfg, const CommandOptions& opt) {
  if (cfg.data.source == "csv") return cfg.data.reference_csv;
  return opt.out / "reference.csv";
}

fs::path target_csv(const RunConfig& cfg, const CommandOptions& opt) {
  if (cfg.data.source == "csv") {
    if (cfg.data.target_csv.empty()) throw ValidationError("config field 'data.target_csv': required for this command");
    return cfg.data.target_csv;
  }
  return opt.out / "target.csv";
}

ReferenceConfig reference_config(const RunConfig& cfg) {
  ReferenceConfig rc;
  rc.wavelet = cfg.wavelet;
  rc.lag = cfg.lag;
  rc.retained = cfg.retained;
  rc.network = NetworkSpec::parse(cfg.reference_network);
  rc.train = cfg.train;
  rc.train.seed = cfg.seed;
  rc.monitor = cfg.monitor;
  return rc;
}

ReferenceData reference_data(const RunConfig& cfg, const CommandOptions& opt) {
  const auto split = split_cycles(load_cycles(reference_csv(cfg, opt)), cfg.split.test_cycles,
                                  cfg.split.validation_cycles);
  return {split.train, split.validation};
}

ReferenceModel load_reference(const fs::path& path) { return reference_from_json(read_json(path)); }

fs::path reference_model_path(const CommandOptions& opt) {
  if (opt.reference) return *opt.reference;
  if (opt.model) return *opt.model;
  return opt.out / "reference_model.json";
}

void write_predictions(const fs::path& path, const std::vector<DischargeCycle>& cycles,
                       const std::vector<Vector>& estimates, int past_lag) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "cycle_id,k,truth,estimate,error\n";
  for (std::size_t c = 0; c < cycles.size(); ++c) {
    const Vector truth = aligned_truth(cycles[c], past_lag);
    for (Eigen::Index i = 0; i < truth.size(); ++i) {
      out << cycles[c].cycle_id << ',' << past_lag - 1 + i << ',' << format_number(truth(i)) << ','
          << format_number(estimates[c](i)) << ',' << format_number(estimates[c](i) - truth(i)) << '\n';
    }
  }
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

double parse_double(const std::string& s, const fs::path& file, std::size_t row) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(file.string() + ": bad number '" + s + "' in data row " + std::to_string(row));
  }
}

struct PredictionTable {
  std::vector<std::string> order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_cycle;  // truth, estimate
  std::map<std::string, std::vector<double>> k;
};

PredictionTable read_predictions(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "cycle_id,k,truth,estimate,error") {
    throw ValidationError(path.string() + ": not a prediction file");
  }
  PredictionTable t;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != 5) throw ValidationError(path.string() + ": malformed data row " + std::to_string(row));
    if (!t.by_cycle.count(cells[0])) t.order.push_back(cells[0]);
    auto& [truth, est] = t.by_cycle[cells[0]];
    t.k[cells[0]].push_back(parse_double(cells[1], path, row));
    truth.push_back(parse_double(cells[2], path, row));
    est.push_back(parse_double(cells[3], path, row));
  }
  if (t.order.empty()) throw ValidationError(path.string() + ": no data rows");
  return t;
}

Json metrics_json(const MetricsReport& r) {
  Json per = Json::array();
  for (const auto& c : r.per_cycle) {
    per.push_back({{"cycle_id", c.cycle_id}, {"rmse", c.rmse}, {"mae", c.mae}, {"samples", c.samples}});
  }
  return {{"rmse", r.rmse}, {"mae", r.mae}, {"samples", r.samples}, {"per_cycle", std::move(per)}};
}

MetricsReport table_metrics(const PredictionTable& t) {
  std::vector<double> all_truth, all_est;
  MetricsReport report;
  for (const auto& id : t.order) {
    const auto& [truth, est] = t.by_cycle.at(id);
    const auto m = compute_metrics(truth, est);
    report.per_cycle.push_back({id, m.rmse, m.mae, m.samples});
    all_truth.insert(all_truth.end(), truth.begin(), truth.end());
    all_est.insert(all_est.end(), est.begin(), est.end());
  }
  const auto total = compute_metrics(all_truth, all_est);
  report.rmse = total.rmse;
  report.mae = total.mae;
  report.samples = total.samples;
  return report;
}

std::string safe_name(const std::string& id) {
  std::string s = id;
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

}  // namespace

std::string sha256_text(const std::string& text) { return digest(text); }

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return digest(ss.str());
}

void run_simulate(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  ensure_dir(opt.out);
  auto params = EcmParams::panasonic_like();
  params.noise_std_A = cfg.data.noise_std_A;
  params.noise_std_V = cfg.data.noise_std_V;
  const auto ref = simulate_cycles(params, cfg.data.profile, cfg.data.reference_temperature_C,
                                   cfg.data.reference_cycles, cfg.seed, "ref");
  const auto tgt = simulate_cycles(params, cfg.data.profile, cfg.data.target_temperature_C, cfg.data.target_cycles,
                                   cfg.seed + 1, "tgt");
  const fs::path rp = opt.out / "reference.csv";
  const fs::path tp = opt.out / "target.csv";
  write_csv(rp, ref);
  write_csv(tp, tgt);
  std::cout << "simulated " << ref.size() << " reference cycles at " << cfg.data.reference_temperature_C << " C and "
            << tgt.size() << " target cycles at " << cfg.data.target_temperature_C << " C\n";
  record_run(opt.out, "simulate", cfg, {rp, tp}, timer.seconds());
}

void run_train_reference(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  ensure_dir(opt.out);
  const fs::path input = opt.input ? *opt.input : reference_csv(cfg, opt);
  const auto split = split_cycles(load_cycles(input), cfg.split.test_cycles, cfg.split.validation_cycles);
  const auto model = train_reference({split.train, split.validation}, reference_config(cfg));

  const fs::path mp = opt.out / "reference_model.json";
  write_json(mp, to_json(model));
  const fs::path lp = opt.out / "reference_training_loss.csv";
  {
    std::ofstream out(lp);
    out << "epoch,train_mse,validation_mse\n";
    for (std::size_t e = 0; e < model.training.train_loss.size(); ++e) {
      out << e << ',' << format_number(model.training.train_loss[e]) << ','
          << (e < model.training.validation_loss.size() ? format_number(model.training.validation_loss[e]) : "")
          << '\n';
    }
  }
  std::cout << "reference model: lag " << model.cva.lag.past << ", R = " << model.cva.retained << " of "
            << model.cva.past_dim() << ", T2 limit " << model.monitor.t2_limit.value << " ("
            << to_string(model.monitor.t2_limit.method) << "), SPE limit " << model.monitor.spe_limit.value << " ("
            << to_string(model.monitor.spe_limit.method) << "), " << model.training.epochs_run << " epochs\n";
  record_run(opt.out, "train-reference", cfg, {mp, lp}, timer.seconds());
}

void run_evaluate(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  ensure_dir(opt.out);
  const auto model = load_reference(reference_model_path(opt));
  std::vector<DischargeCycle> cycles;
  if (opt.input) {
    cycles = load_cycles(*opt.input);
  } else {
    auto split = split_cycles(load_cycles(reference_csv(cfg, opt)), cfg.split.test_cycles,
                              cfg.split.validation_cycles);
    cycles = split.test.empty() ? split.train : split.test;
  }
  std::vector<Vector> est;
  for (const auto& c : cycles) est.push_back(predict_reference(model, c));
  const fs::path pp = opt.out / "predictions_reference.csv";
  write_predictions(pp, cycles, est, model.cva.lag.past);
  const auto m = table_metrics(read_predictions(pp));
  std::cout << "reference evaluation: RMSE " << m.rmse << ", MAE " << m.mae << " over " << m.samples << " samples\n";
  record_run(opt.out, "evaluate", cfg, {pp}, timer.seconds());
}

void run_monitor(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  ensure_dir(opt.out);
  const auto model = load_reference(reference_model_path(opt));
  std::vector<DischargeCycle> cycles;
  if (opt.input) {
    cycles = load_cycles(*opt.input);
  } else {
    cycles = {load_cycles(target_csv(cfg, opt)).back()};
  }
  Json summary = {{"version", "socta-monitor-summary/1"}, {"cycles", Json::array()}};
  std::vector<fs::path> artifacts;
  for (const auto& c : cycles) {
    const auto report =
        evaluate_stream(model.monitor, model.cva, model.wavelet, c.current_A, c.voltage_V, &model.network);
    const fs::path vp = opt.out / ("verdicts_" + safe_name(c.cycle_id) + ".csv");
    std::ofstream out(vp);
    if (!out) throw ValidationError("cannot write " + vp.string());
    out << "k,t2,spe,cl_t2,cl_spe,case\n";
    std::size_t t2_exceed = 0, spe_exceed = 0, estimates = 0;
    for (const auto& s : report.steps) {
      out << s.k << ',' << format_number(s.verdict.t2) << ',' << format_number(s.verdict.spe) << ','
          << format_number(model.monitor.t2_limit.value) << ',' << format_number(model.monitor.spe_limit.value) << ','
          << (s.verdict.decision == Case::II ? "II" : "I") << '\n';
      t2_exceed += s.verdict.t2_exceeds;
      spe_exceed += s.verdict.spe_exceeds;
      estimates += s.estimate.has_value();
    }
    out.close();
    artifacts.push_back(vp);
    const double n = static_cast<double>(report.steps.size());
    Json entry = {{"cycle_id", c.cycle_id},
                  {"samples", c.size()},
                  {"warmup", report.warmup},
                  {"decision", report.decision == Case::II ? "II" : "I"},
                  {"t2_exceed_rate", t2_exceed / n},
                  {"spe_exceed_rate", spe_exceed / n},
                  {"reference_estimates_emitted", estimates}};
    entry["latch_index"] = report.latch_index ? Json(*report.latch_index) : Json(nullptr);
    summary["cycles"].push_back(entry);
    std::cout << c.cycle_id << ": Case " << (report.decision == Case::II ? "II" : "I");
    if (report.latch_index) std::cout << " latched at sample " << *report.latch_index << " of " << c.size();
    std::cout << '\n';
  }
  const fs::path sp = opt.out / "monitor_summary.json";
  write_json(sp, summary);
  artifacts.push_back(sp);
  record_run(opt.out, "monitor", cfg, artifacts, timer.seconds());
}

void run_train_transfer(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  ensure_dir(opt.out);
  const auto reference = load_reference(reference_model_path(opt));
  const auto data = reference_data(cfg, opt);
  const auto target_cycles = load_cycles(opt.target ? *opt.target : target_csv(cfg, opt));

  TransferConfig tc;
  tc.shared_network = NetworkSpec::parse(cfg.shared_network);
  tc.specific_network = NetworkSpec::parse(cfg.specific_network);
  tc.shared_train = cfg.transfer_train;
  tc.shared_train.seed = cfg.seed + 1;
  tc.specific_train = cfg.transfer_train;
  tc.specific_train.seed = cfg.seed + 2;
  tc.options = cfg.transfer;
  if (opt.eta) {
    if (!(*opt.eta >= 0.0 && *opt.eta <= 1.0)) throw ValidationError("--eta must lie in [0,1]");
    tc.options.eta = *opt.eta;
  }
  tc.monitor = cfg.monitor;
  const auto outcome = fit_transfer(reference, data, target_cycles.front(), tc);

  Json j = to_json(outcome.model);
  j["wavelet"] = {{"levels", reference.wavelet.levels}, {"basis", reference.wavelet.basis}};
  j["target_training_cycle"] = target_cycles.front().cycle_id;
  const fs::path mp = opt.out / "transfer_model.json";
  write_json(mp, j);

  const fs::path sp = opt.out / "transfer_selection.csv";
  {
    std::ofstream out(sp);
    out << "q,cl_q,longest_target_run\n";
    for (std::size_t i = 0; i < outcome.selection.per_q_limits.size(); ++i) {
      out << i + 1 << ',' << format_number(outcome.selection.per_q_limits[i]) << ','
          << outcome.selection.longest_run[i] << '\n';
    }
  }
  const fs::path ap = opt.out / "alpha_trace.csv";
  {
    std::ofstream out(ap);
    out << "k,alpha1,alpha2\n";
    const int l = reference.cva.lag.past;
    for (std::size_t i = 0; i < outcome.model.alpha1_trace.size(); ++i) {
      const double a1 = outcome.model.alpha1_trace[i];
      out << l - 1 + static_cast<int>(i) << ',' << format_number(a1) << ',' << format_number(1.0 - a1) << '\n';
    }
  }
  std::cout << "transfer model: q = " << outcome.model.q << " of " << reference.cva.past_dim() << ", alpha1 "
            << outcome.model.alpha1 << ", alpha2 " << outcome.model.alpha2 << ", H " << outcome.model.similarity_H
            << '\n';
  record_run(opt.out, "train-transfer", cfg, {mp, sp, ap}, timer.seconds());
}

void run_predict(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  ensure_dir(opt.out);
  const fs::path model_path = opt.model ? *opt.model : opt.out / "transfer_model.json";
  const Json j = read_json(model_path);
  const auto model = transfer_from_json(j);
  WaveletConfig wavelet;
  wavelet.levels = j.at("wavelet").at("levels").get<int>();
  wavelet.basis = j.at("wavelet").at("basis").get<std::string>();

  std::vector<DischargeCycle> cycles;
  if (opt.input) {
    cycles = load_cycles(*opt.input);
  } else {
    cycles = {load_cycles(target_csv(cfg, opt)).back()};
  }
  const int l = model.target_cva.lag.past;
  std::vector<Vector> est;
  for (const auto& c : cycles) est.push_back(predict_transfer(model, wavelet, c));
  const fs::path tp = opt.out / "predictions_transfer.csv";
  write_predictions(tp, cycles, est, l);
  std::vector<fs::path> artifacts{tp};

  // Direct application of the reference model, for comparison.
  const fs::path rp = opt.reference ? *opt.reference : opt.out / "reference_model.json";
  if (fs::exists(rp)) {
    const auto reference = load_reference(rp);
    std::vector<Vector> direct;
    for (const auto& c : cycles) direct.push_back(predict_reference(reference, c));
    const fs::path dp = opt.out / "predictions_direct.csv";
    write_predictions(dp, cycles, direct, reference.cva.lag.past);
    artifacts.push_back(dp);
  }
  const auto m = table_metrics(read_predictions(tp));
  std::cout << "transfer prediction: RMSE " << m.rmse << ", MAE " << m.mae << " over " << m.samples << " samples\n";
  record_run(opt.out, "predict", cfg, artifacts, timer.seconds());
}

void run_report(const RunConfig& cfg, const CommandOptions& opt) {
  Timer timer;
  if (!fs::is_directory(opt.out)) throw MissingArtifactError("output directory " + opt.out.string() + " not found");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(opt.out)) {
    const auto name = e.path().filename().string();
    if (name.rfind("predictions_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
  }
  if (files.empty()) throw MissingArtifactError("no predictions_*.csv files in " + opt.out.string());
  std::sort(files.begin(), files.end());

  Json reports = Json::object();
  for (const auto& f : files) {
    const auto table = read_predictions(f);
    const auto key = f.stem().string().substr(std::string("predictions_").size());
    reports[key] = metrics_json(table_metrics(table));
    if (opt.svg) {
      for (const auto& id : table.order) {
        const auto& [truth, est] = table.by_cycle.at(id);
        write_line_chart(opt.out / (f.stem().string() + "_" + safe_name(id) + ".svg"),
                         key + " estimates, cycle " + id, "sample", table.k.at(id),
                         {{"truth", truth, "#1f77b4"}, {"estimate", est, "#d62728"}});
      }
    }
  }
  const fs::path transfer_model = opt.out / "transfer_model.json";
  if (reports.contains("transfer") && fs::exists(transfer_model)) {
    reports["transfer"]["similarity_H"] = read_json(transfer_model).at("similarity_H");
  }
  Json metrics = {{"version", kMetricsTag}, {"reports", reports}};
  if (reports.contains("transfer") && reports.contains("direct")) {
    const double direct = reports["direct"]["rmse"].get<double>();
    if (direct > 0.0) metrics["transfer_to_direct_rmse_ratio"] = reports["transfer"]["rmse"].get<double>() / direct;
  }
  const fs::path mp = opt.out / "metrics.json";
  write_json(mp, metrics);

  if (opt.svg) {
    for (const auto& e : fs::directory_iterator(opt.out)) {
      const auto name = e.path().filename().string();
      if (name.rfind("verdicts_", 0) != 0 || e.path().extension() != ".csv") continue;
      std::ifstream in(e.path());
      std::string line;
      std::getline(in, line);
      std::vector<double> k, t2, spe, cl_t2, cl_spe;
      std::size_t row = 0;
      while (std::getline(in, line)) {
        const auto c = split_line(line);
        if (c.size() != 6) continue;
        ++row;
        k.push_back(parse_double(c[0], e.path(), row));
        t2.push_back(parse_double(c[1], e.path(), row));
        spe.push_back(parse_double(c[2], e.path(), row));
        cl_t2.push_back(parse_double(c[3], e.path(), row));
        cl_spe.push_back(parse_double(c[4], e.path(), row));
      }
      if (k.empty()) continue;
      write_line_chart(opt.out / (e.path().stem().string() + "_t2.svg"), "T2 vs control limit", "sample", k,
                       {{"T2", t2, "#1f77b4"}, {"limit", cl_t2, "#d62728"}});
      write_line_chart(opt.out / (e.path().stem().string() + "_spe.svg"), "SPE vs control limit", "sample", k,
                       {{"SPE", spe, "#1f77b4"}, {"limit", cl_spe, "#d62728"}});
    }
  }
  for (const auto& [key, r] : reports.items()) {
    std::cout << key << ": RMSE " << r["rmse"].get<double>() << ", MAE " << r["mae"].get<double>() << '\n';
  }
  record_run(opt.out, "report", cfg, {mp}, timer.seconds());
}

}  // namespace socta::cli
