#include "socta/serialization.hpp"

#include <fstream>

#include "socta/error.hpp"

namespace socta {

Json matrix_to_json(const Matrix& m) {
  Json data = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Matrix matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError("matrix payload size does not match its shape");
  }
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  }
  return m;
}

Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const Json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

namespace {

Json scaler_to_json(const ColumnScaler& s) {
  return {{"mean", vector_to_json(s.mean)}, {"inv_std", vector_to_json(s.inv_std)}};
}

ColumnScaler scaler_from_json(const Json& j) {
  ColumnScaler s;
  s.mean = vector_from_json(j.at("mean"));
  s.inv_std = vector_from_json(j.at("inv_std"));
  if (s.mean.size() != s.inv_std.size()) throw ValidationError("scaler mean/inv_std lengths differ");
  return s;
}

Json limit_to_json(const ControlLimit& cl) {
  return {{"value", cl.value}, {"method", to_string(cl.method)}, {"normal_fraction", cl.normal_fraction}};
}

ControlLimit limit_from_json(const Json& j) {
  return {j.at("value").get<double>(), limit_method_from_string(j.at("method").get<std::string>()),
          j.at("normal_fraction").get<double>()};
}

Json options_to_json(const MonitorOptions& o) {
  return {{"significance", o.significance},
          {"normality_alpha", o.normality_alpha},
          {"normal_share_required", o.normal_share_required},
          {"consecutive_limit", o.consecutive_limit}};
}

MonitorOptions options_from_json(const Json& j) {
  MonitorOptions o;
  o.significance = j.at("significance").get<double>();
  o.normality_alpha = j.at("normality_alpha").get<double>();
  o.normal_share_required = j.at("normal_share_required").get<double>();
  o.consecutive_limit = j.at("consecutive_limit").get<int>();
  return o;
}

}  // namespace

Json to_json(const CvaModel& m) {
  return {{"lag_past", m.lag.past},
          {"lag_future", m.lag.future},
          {"channels", m.channels},
          {"retained", m.retained},
          {"past_scaler", scaler_to_json(m.past_scaler)},
          {"future_scaler", scaler_to_json(m.future_scaler)},
          {"whiten_past", matrix_to_json(m.whiten_past)},
          {"whiten_future", matrix_to_json(m.whiten_future)},
          {"singvecs_past", matrix_to_json(m.singvecs_past)},
          {"singvecs_future", matrix_to_json(m.singvecs_future)},
          {"singvals", vector_to_json(m.singvals)}};
}

CvaModel cva_from_json(const Json& j) {
  CvaModel m;
  m.lag = {j.at("lag_past").get<int>(), j.at("lag_future").get<int>()};
  m.lag.validate();
  m.channels = j.at("channels").get<int>();
  m.past_scaler = scaler_from_json(j.at("past_scaler"));
  m.future_scaler = scaler_from_json(j.at("future_scaler"));
  m.whiten_past = matrix_from_json(j.at("whiten_past"));
  m.whiten_future = matrix_from_json(j.at("whiten_future"));
  m.singvecs_past = matrix_from_json(j.at("singvecs_past"));
  m.singvecs_future = matrix_from_json(j.at("singvecs_future"));
  m.singvals = vector_from_json(j.at("singvals"));
  const auto dp = m.whiten_past.rows();
  if (dp != m.channels * m.lag.past || m.singvecs_past.rows() != dp || m.singvecs_past.cols() != dp ||
      m.singvals.size() != dp || m.past_scaler.mean.size() != dp) {
    throw ValidationError("CVA artifact has inconsistent dimensions");
  }
  m.proj_full = m.singvecs_past.transpose() * m.whiten_past;
  m.proj_future = m.singvecs_future.transpose() * m.whiten_future;
  m.set_retained(j.at("retained").get<int>());
  return m;
}

Json to_json(const MonitoringModel& m) {
  return {{"retained", m.retained},
          {"past_dim", m.past_dim},
          {"t2_limit", limit_to_json(m.t2_limit)},
          {"spe_limit", limit_to_json(m.spe_limit)},
          {"options", options_to_json(m.options)}};
}

MonitoringModel monitor_from_json(const Json& j) {
  MonitoringModel m;
  m.retained = j.at("retained").get<int>();
  m.past_dim = j.at("past_dim").get<int>();
  m.t2_limit = limit_from_json(j.at("t2_limit"));
  m.spe_limit = limit_from_json(j.at("spe_limit"));
  m.options = options_from_json(j.at("options"));
  return m;
}

Json to_json(const LstmNetwork& net) {
  return {{"spec", net.spec().to_string()},
          {"input_dim", net.input_dim()},
          {"seed", net.seed()},
          {"input_mean", vector_to_json(net.input_mean)},
          {"input_inv_std", vector_to_json(net.input_inv_std)},
          {"target_offset", net.target_offset},
          {"target_scale", net.target_scale},
          {"parameters", vector_to_json(net.parameters())}};
}

LstmNetwork network_from_json(const Json& j) {
  LstmNetwork net(j.at("input_dim").get<int>(), NetworkSpec::parse(j.at("spec").get<std::string>()),
                  j.at("seed").get<std::uint64_t>());
  Vector params = vector_from_json(j.at("parameters"));
  if (params.size() != net.parameters().size()) {
    throw ValidationError("network artifact has " + std::to_string(params.size()) + " parameters, layout needs " +
                          std::to_string(net.parameters().size()));
  }
  net.parameters() = params;
  net.input_mean = vector_from_json(j.at("input_mean"));
  net.input_inv_std = vector_from_json(j.at("input_inv_std"));
  net.target_offset = j.at("target_offset").get<double>();
  net.target_scale = j.at("target_scale").get<double>();
  return net;
}

Json to_json(const ReferenceModel& m) {
  return {{"version", kReferenceModelTag},
          {"wavelet", {{"levels", m.wavelet.levels}, {"basis", m.wavelet.basis}}},
          {"cva", to_json(m.cva)},
          {"monitor", to_json(m.monitor)},
          {"network", to_json(m.network)},
          {"lag_curve", m.lag_curve},
          {"training",
           {{"train_loss", m.training.train_loss},
            {"validation_loss", m.training.validation_loss},
            {"best_epoch", m.training.best_epoch},
            {"epochs_run", m.training.epochs_run}}}};
}

ReferenceModel reference_from_json(const Json& j) {
  require_version(j, kReferenceModelTag, "reference model");
  ReferenceModel m;
  m.wavelet.levels = j.at("wavelet").at("levels").get<int>();
  m.wavelet.basis = j.at("wavelet").at("basis").get<std::string>();
  m.cva = cva_from_json(j.at("cva"));
  m.monitor = monitor_from_json(j.at("monitor"));
  m.network = network_from_json(j.at("network"));
  m.lag_curve = j.at("lag_curve").get<std::vector<double>>();
  const auto& t = j.at("training");
  m.training.train_loss = t.at("train_loss").get<std::vector<double>>();
  m.training.validation_loss = t.at("validation_loss").get<std::vector<double>>();
  m.training.best_epoch = t.at("best_epoch").get<int>();
  m.training.epochs_run = t.at("epochs_run").get<int>();
  if (m.wavelet.channel_count() != m.cva.channels) throw ValidationError("wavelet and CVA channel counts differ");
  return m;
}

Json to_json(const TransferModel& m) {
  Json j = {{"version", kTransferModelTag},
            {"q", m.q},
            {"has_shared", m.has_shared},
            {"specific_net", to_json(m.specific_net)},
            {"alpha1", m.alpha1},
            {"alpha2", m.alpha2},
            {"eta", m.eta},
            {"target_cva", to_json(m.target_cva)},
            {"similarity_H", m.similarity_H},
            {"alpha1_trace", m.alpha1_trace}};
  if (m.has_shared) j["shared_net"] = to_json(m.shared_net);
  return j;
}

TransferModel transfer_from_json(const Json& j) {
  require_version(j, kTransferModelTag, "transfer model");
  TransferModel m;
  m.q = j.at("q").get<int>();
  m.has_shared = j.at("has_shared").get<bool>();
  m.specific_net = network_from_json(j.at("specific_net"));
  if (m.has_shared) m.shared_net = network_from_json(j.at("shared_net"));
  m.alpha1 = j.at("alpha1").get<double>();
  m.alpha2 = j.at("alpha2").get<double>();
  m.eta = j.at("eta").get<double>();
  m.target_cva = cva_from_json(j.at("target_cva"));
  m.similarity_H = j.at("similarity_H").get<double>();
  m.alpha1_trace = j.at("alpha1_trace").get<std::vector<double>>();
  if (m.q < 0 || m.q > m.target_cva.past_dim()) throw ValidationError("transfer artifact has q out of range");
  m.proj_consistent = m.target_cva.proj_full.topRows(m.q);
  m.proj_specific = specific_projection(m.target_cva, m.q);
  return m;
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << j.dump(1) << '\n';
}

void require_version(const Json& j, const std::string& tag, const std::string& what) {
  if (!j.is_object() || !j.contains("version") || !j["version"].is_string()) {
    throw ValidationError(what + " artifact carries no version tag");
  }
  if (j["version"].get<std::string>() != tag) {
    throw ValidationError(what + " artifact version '" + j["version"].get<std::string>() + "', expected '" + tag +
                          "'");
  }
}

}  // namespace socta
