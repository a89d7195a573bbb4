#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "socta/cva.hpp"
#include "socta/lstm.hpp"
#include "socta/monitor.hpp"
#include "socta/pipeline.hpp"
#include "socta/transfer.hpp"

namespace socta {

using Json = nlohmann::json;

inline constexpr const char* kReferenceModelTag = "socta-reference-model/1";
inline constexpr const char* kTransferModelTag = "socta-transfer-model/1";

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);
Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

Json to_json(const CvaModel& m);
CvaModel cva_from_json(const Json& j);

Json to_json(const MonitoringModel& m);
MonitoringModel monitor_from_json(const Json& j);

Json to_json(const LstmNetwork& net);
LstmNetwork network_from_json(const Json& j);

Json to_json(const ReferenceModel& m);
ReferenceModel reference_from_json(const Json& j);

Json to_json(const TransferModel& m);
TransferModel transfer_from_json(const Json& j);

/// Reads a JSON file; MissingArtifactError if absent, ValidationError if unparsable.
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Throws ValidationError unless `j["version"] == tag`.
void require_version(const Json& j, const std::string& tag, const std::string& what);

}  // namespace socta
