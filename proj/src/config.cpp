#include "socta/config.hpp"

#include <fstream>
#include <set>

#include "socta/error.hpp"

namespace socta {

using nlohmann::json;

RunConfig::RunConfig() {
  train.max_epochs = 150;
  train.early_stop_patience = 30;
  transfer_train.max_epochs = 100;
  transfer_train.early_stop_patience = 30;
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& reason) {
  throw ValidationError("config field '" + field + "': " + reason);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) bad(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) bad(where.empty() ? key : where + "." + key, "unknown field");
  }
}

template <class T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    bad(where.empty() ? key : where + "." + key, e.what());
  }
}

json train_to_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"batch_size", t.batch_size},
          {"max_epochs", t.max_epochs},       {"dropout_rate", t.dropout_rate},
          {"l2_lambda", t.l2_lambda},         {"early_stop_patience", t.early_stop_patience},
          {"seq_len", t.seq_len},             {"fit_scalers", t.fit_scalers},
          {"beta1", t.beta1},                 {"beta2", t.beta2},
          {"epsilon", t.epsilon}};
}

void train_from_json(const json& j, const std::string& where, TrainConfig& t) {
  check_keys(j, where,
             {"learning_rate", "batch_size", "max_epochs", "dropout_rate", "l2_lambda", "early_stop_patience",
              "seq_len", "fit_scalers", "beta1", "beta2", "epsilon"});
  read(j, where, "learning_rate", t.learning_rate);
  read(j, where, "batch_size", t.batch_size);
  read(j, where, "max_epochs", t.max_epochs);
  read(j, where, "dropout_rate", t.dropout_rate);
  read(j, where, "l2_lambda", t.l2_lambda);
  read(j, where, "early_stop_patience", t.early_stop_patience);
  read(j, where, "seq_len", t.seq_len);
  read(j, where, "fit_scalers", t.fit_scalers);
  read(j, where, "beta1", t.beta1);
  read(j, where, "beta2", t.beta2);
  read(j, where, "epsilon", t.epsilon);
}

json auto_or_int(const std::optional<int>& v) { return v ? json(*v) : json("auto"); }

std::optional<int> auto_or_int_from(const json& j, const std::string& field) {
  if (j.is_string() && j.get<std::string>() == "auto") return std::nullopt;
  if (j.is_number_integer()) return j.get<int>();
  bad(field, "expected \"auto\" or an integer");
}

}  // namespace

json to_json(const RunConfig& c) {
  const auto& p = c.data.profile;
  return {
      {"version", kRunConfigTag},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
      {"data",
       {{"source", c.data.source},
        {"reference_csv", c.data.reference_csv},
        {"target_csv", c.data.target_csv},
        {"reference_temperature_C", c.data.reference_temperature_C},
        {"target_temperature_C", c.data.target_temperature_C},
        {"reference_cycles", c.data.reference_cycles},
        {"target_cycles", c.data.target_cycles},
        {"noise_std_A", c.data.noise_std_A},
        {"noise_std_V", c.data.noise_std_V},
        {"profile",
         {{"duration_s", p.duration_s},
          {"mean_discharge_A", p.mean_discharge_A},
          {"peak_discharge_A", p.peak_discharge_A},
          {"peak_regen_A", p.peak_regen_A},
          {"regen_fraction", p.regen_fraction},
          {"min_segment_s", p.min_segment_s},
          {"max_segment_s", p.max_segment_s}}}}},
      {"wavelet", {{"levels", c.wavelet.levels}, {"basis", c.wavelet.basis}}},
      {"lag", auto_or_int(c.lag)},
      {"retained", auto_or_int(c.retained)},
      {"reference_network", c.reference_network},
      {"shared_network", c.shared_network},
      {"specific_network", c.specific_network},
      {"train", train_to_json(c.train)},
      {"transfer_train", train_to_json(c.transfer_train)},
      {"monitor",
       {{"significance", c.monitor.significance},
        {"normality_alpha", c.monitor.normality_alpha},
        {"normal_share_required", c.monitor.normal_share_required},
        {"consecutive_limit", c.monitor.consecutive_limit}}},
      {"transfer",
       {{"eta", c.transfer.eta},
        {"shared_on_reference_rows", c.transfer.shared_on_reference_rows},
        {"error_scale", c.transfer.error_scale}}},
      {"split", {{"test_cycles", c.split.test_cycles}, {"validation_cycles", c.split.validation_cycles}}}};
}

RunConfig config_from_json(const json& j) {
  check_keys(j, "",
             {"version", "seed", "output_dir", "data", "wavelet", "lag", "retained", "reference_network",
              "shared_network", "specific_network", "train", "transfer_train", "monitor", "transfer", "split"});
  if (j.contains("version") && j["version"] != kRunConfigTag) {
    bad("version", "expected \"" + std::string(kRunConfigTag) + "\"");
  }
  RunConfig c;
  read(j, "", "seed", c.seed);
  read(j, "", "output_dir", c.output_dir);
  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, "data",
               {"source", "reference_csv", "target_csv", "reference_temperature_C", "target_temperature_C",
                "reference_cycles", "target_cycles", "noise_std_A", "noise_std_V", "profile"});
    read(d, "data", "source", c.data.source);
    read(d, "data", "reference_csv", c.data.reference_csv);
    read(d, "data", "target_csv", c.data.target_csv);
    read(d, "data", "reference_temperature_C", c.data.reference_temperature_C);
    read(d, "data", "target_temperature_C", c.data.target_temperature_C);
    read(d, "data", "reference_cycles", c.data.reference_cycles);
    read(d, "data", "target_cycles", c.data.target_cycles);
    read(d, "data", "noise_std_A", c.data.noise_std_A);
    read(d, "data", "noise_std_V", c.data.noise_std_V);
    if (d.contains("profile")) {
      const auto& p = d["profile"];
      auto& o = c.data.profile;
      check_keys(p, "data.profile",
                 {"duration_s", "mean_discharge_A", "peak_discharge_A", "peak_regen_A", "regen_fraction",
                  "min_segment_s", "max_segment_s"});
      read(p, "data.profile", "duration_s", o.duration_s);
      read(p, "data.profile", "mean_discharge_A", o.mean_discharge_A);
      read(p, "data.profile", "peak_discharge_A", o.peak_discharge_A);
      read(p, "data.profile", "peak_regen_A", o.peak_regen_A);
      read(p, "data.profile", "regen_fraction", o.regen_fraction);
      read(p, "data.profile", "min_segment_s", o.min_segment_s);
      read(p, "data.profile", "max_segment_s", o.max_segment_s);
    }
  }
  if (j.contains("wavelet")) {
    check_keys(j["wavelet"], "wavelet", {"levels", "basis"});
    read(j["wavelet"], "wavelet", "levels", c.wavelet.levels);
    read(j["wavelet"], "wavelet", "basis", c.wavelet.basis);
  }
  if (j.contains("lag")) c.lag = auto_or_int_from(j["lag"], "lag");
  if (j.contains("retained")) c.retained = auto_or_int_from(j["retained"], "retained");
  read(j, "", "reference_network", c.reference_network);
  read(j, "", "shared_network", c.shared_network);
  read(j, "", "specific_network", c.specific_network);
  if (j.contains("train")) train_from_json(j["train"], "train", c.train);
  if (j.contains("transfer_train")) train_from_json(j["transfer_train"], "transfer_train", c.transfer_train);
  if (j.contains("monitor")) {
    const auto& m = j["monitor"];
    check_keys(m, "monitor", {"significance", "normality_alpha", "normal_share_required", "consecutive_limit"});
    read(m, "monitor", "significance", c.monitor.significance);
    read(m, "monitor", "normality_alpha", c.monitor.normality_alpha);
    read(m, "monitor", "normal_share_required", c.monitor.normal_share_required);
    read(m, "monitor", "consecutive_limit", c.monitor.consecutive_limit);
  }
  if (j.contains("transfer")) {
    const auto& t = j["transfer"];
    check_keys(t, "transfer", {"eta", "shared_on_reference_rows", "error_scale"});
    read(t, "transfer", "eta", c.transfer.eta);
    read(t, "transfer", "shared_on_reference_rows", c.transfer.shared_on_reference_rows);
    read(t, "transfer", "error_scale", c.transfer.error_scale);
  }
  if (j.contains("split")) {
    check_keys(j["split"], "split", {"test_cycles", "validation_cycles"});
    read(j["split"], "split", "test_cycles", c.split.test_cycles);
    read(j["split"], "split", "validation_cycles", c.split.validation_cycles);
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (data.source != "simulate" && data.source != "csv") bad("data.source", "must be \"simulate\" or \"csv\"");
  if (data.source == "csv" && data.reference_csv.empty()) bad("data.reference_csv", "required when source is csv");
  if (data.reference_cycles < 1) bad("data.reference_cycles", "must be >= 1");
  if (data.target_cycles < 1) bad("data.target_cycles", "must be >= 1");
  if (data.noise_std_A < 0.0) bad("data.noise_std_A", "must be >= 0");
  if (data.noise_std_V < 0.0) bad("data.noise_std_V", "must be >= 0");
  if (!(data.profile.duration_s >= 2.0)) bad("data.profile.duration_s", "must be >= 2");
  if (!(data.profile.mean_discharge_A > 0.0)) bad("data.profile.mean_discharge_A", "must be > 0");
  if (wavelet.levels < 0 || wavelet.levels > 12) bad("wavelet.levels", "must lie in [0, 12]");
  try {
    WaveletBasis::from_name(wavelet.basis);
  } catch (const ValidationError& e) {
    bad("wavelet.basis", e.what());
  }
  if (lag && *lag < 1) bad("lag", "must be >= 1 or \"auto\"");
  if (retained && *retained < 1) bad("retained", "must be >= 1 or \"auto\"");
  for (const auto& [name, text] : {std::pair<const char*, const std::string&>{"reference_network", reference_network},
                                   {"shared_network", shared_network},
                                   {"specific_network", specific_network}}) {
    try {
      NetworkSpec::parse(text);
    } catch (const ValidationError& e) {
      bad(name, e.what());
    }
  }
  if (NetworkSpec::parse(specific_network).lstm_cells.size() != 1) {
    bad("specific_network", "must have exactly one LSTM layer");
  }
  try {
    train.validate();
  } catch (const ValidationError& e) {
    bad("train", e.what());
  }
  try {
    transfer_train.validate();
  } catch (const ValidationError& e) {
    bad("transfer_train", e.what());
  }
  if (!(monitor.significance > 0.0 && monitor.significance < 1.0)) bad("monitor.significance", "must lie in (0,1)");
  if (!(monitor.normality_alpha > 0.0 && monitor.normality_alpha < 1.0)) {
    bad("monitor.normality_alpha", "must lie in (0,1)");
  }
  if (!(monitor.normal_share_required >= 0.0 && monitor.normal_share_required <= 1.0)) {
    bad("monitor.normal_share_required", "must lie in [0,1]");
  }
  if (monitor.consecutive_limit < 1) bad("monitor.consecutive_limit", "must be >= 1");
  if (!(transfer.eta >= 0.0 && transfer.eta <= 1.0)) bad("transfer.eta", "must lie in [0,1]");
  if (!(transfer.error_scale > 0.0)) bad("transfer.error_scale", "must be > 0");
  if (split.test_cycles < 0) bad("split.test_cycles", "must be >= 0");
  if (split.validation_cycles < 0) bad("split.validation_cycles", "must be >= 0");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("config " + path.string() + ": " + e.what());
  }
  RunConfig c = config_from_json(j);
  const auto base = path.parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  resolve(c.data.reference_csv);
  resolve(c.data.target_csv);
  return c;
}

}  // namespace socta
