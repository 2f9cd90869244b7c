#pragma once

#include <json.hpp>

#include "mixrec/moments.hpp"
#include "mixrec/pipeline.hpp"
#include "mixrec/supports.hpp"
#include "mixrec/synth.hpp"

namespace mixrec {

using nlohmann::json;

// OccTable: {"ell": L, "rows": [{"subset": [..], "counts": {"01": c, ...}}, ...]}
json occ_to_json(const OccTable& t);
OccTable occ_from_json(const json& j);

// SubsetStatTable: {"kind": "...", "ell": L, "entries": [{"subset": [..], "value": v}, ...]}
json stats_to_json(const SubsetStatTable& t);
SubsetStatTable stats_from_json(const json& j);

json supports_to_json(const SupportSet& s);
SupportSet supports_from_json(const json& j);

json plant_config_to_json(const PlantConfig& c);
// Missing keys keep the values already in `base`.
PlantConfig plant_config_from_json(const json& j, PlantConfig base = {});

json instance_to_json(const PlantedInstance& inst);

json run_config_to_json(const RunConfig& c);
RunConfig run_config_from_json(const json& j, RunConfig base = {});

json report_to_json(const RecoveryReport& r);
json bench_to_json(const RunConfig& base, const std::vector<BenchRow>& rows);

json coefficients_to_json(const MomentFamily& f, int tmax);

}  // namespace mixrec
