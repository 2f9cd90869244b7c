#include "mixrec/json_io.hpp"

namespace mixrec {

json occ_to_json(const OccTable& t) {
  json rows = json::array();
  for (const auto& [c, r] : t.rows()) {
    json counts = json::object();
    for (unsigned mask = 0; mask < r.size(); ++mask) counts[mask_to_pattern(mask, c.size())] = r[mask];
    rows.push_back({{"subset", c}, {"counts", counts}});
  }
  return {{"ell", t.ell()}, {"rows", rows}};
}

OccTable occ_from_json(const json& j) {
  OccTable t(j.at("ell").get<int>());
  for (const auto& row : j.at("rows")) {
    const IndexSet c = canonical(row.at("subset").get<IndexSet>());
    std::vector<int> r(std::size_t{1} << c.size(), 0);
    for (const auto& [pat, v] : row.at("counts").items()) {
      if (pat.size() != c.size()) throw std::invalid_argument("pattern " + pat + " does not fit " + to_string(c));
      r[pattern_to_mask(pat)] = v.get<int>();
    }
    t.set_row(c, std::move(r));
  }
  return t;
}

json stats_to_json(const SubsetStatTable& t) {
  json entries = json::array();
  for (const auto& [c, v] : t.entries()) entries.push_back({{"subset", c}, {"value", v}});
  return {{"kind", to_string(t.kind())}, {"ell", t.ell()}, {"entries", entries}};
}

SubsetStatTable stats_from_json(const json& j) {
  SubsetStatTable t(stat_kind_from_string(j.at("kind").get<std::string>()), j.at("ell").get<int>());
  for (const auto& e : j.at("entries")) {
    const auto& v = e.at("value");
    t.set(canonical(e.at("subset").get<IndexSet>()), v.is_boolean() ? (v.get<bool>() ? 1 : 0) : v.get<int>());
  }
  return t;
}

json supports_to_json(const SupportSet& s) { return {{"n", s.n}, {"members", s.members}}; }

SupportSet supports_from_json(const json& j) {
  SupportSet s;
  s.n = j.at("n").get<int>();
  for (const auto& m : j.at("members")) s.members.push_back(canonical(m.get<IndexSet>()));
  s.canonicalize();
  s.validate();
  return s;
}

namespace {

json sparse_to_json(const std::vector<SparseVector>& vs) {
  json out = json::array();
  for (const auto& v : vs) {
    json one = json::array();
    for (auto [i, x] : v) one.push_back({i, x});
    out.push_back(one);
  }
  return out;
}

std::vector<SparseVector> sparse_from_json(const json& j) {
  std::vector<SparseVector> out;
  for (const auto& v : j) {
    SparseVector one;
    for (const auto& p : v) one.emplace_back(p.at(0).get<int>(), p.at(1).get<double>());
    out.push_back(std::move(one));
  }
  return out;
}

template <class T>
void take(const json& j, const char* key, T& dst) {
  if (j.contains(key) && !j.at(key).is_null()) dst = j.at(key).get<T>();
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& dst) {
  if (j.contains(key)) {
    if (j.at(key).is_null())
      dst.reset();
    else
      dst = j.at(key).get<T>();
  }
}

}  // namespace

json plant_config_to_json(const PlantConfig& c) {
  json j = {{"model", to_string(c.model)},
            {"n", c.n},
            {"k", c.k},
            {"ell", c.ell},
            {"delta", c.delta},
            {"R", c.R},
            {"sigma", c.sigma},
            {"family", c.family},
            {"upper", c.upper},
            {"binary", c.binary},
            {"sign_regime", to_string(c.sign)},
            {"gaussian_entries", c.gaussian_entries},
            {"nu", c.nu},
            {"eta", c.eta},
            {"exact_sparsity", c.exact_sparsity},
            {"plant_seed", c.seed}};
  j["Delta"] = c.norm_gap ? json(*c.norm_gap) : json(nullptr);
  j["variance_ratio"] = c.variance_ratio ? json(*c.variance_ratio) : json(nullptr);
  if (!c.supports.empty()) j["supports"] = c.supports;
  if (!c.vectors.empty()) j["vectors"] = sparse_to_json(c.vectors);
  return j;
}

PlantConfig plant_config_from_json(const json& j, PlantConfig c) {
  if (j.contains("model")) c.model = model_from_string(j.at("model").get<std::string>());
  take(j, "n", c.n);
  take(j, "k", c.k);
  take(j, "ell", c.ell);
  take(j, "delta", c.delta);
  take(j, "R", c.R);
  take(j, "sigma", c.sigma);
  take(j, "family", c.family);
  take(j, "upper", c.upper);
  take(j, "binary", c.binary);
  if (j.contains("sign_regime")) c.sign = sign_regime_from_string(j.at("sign_regime").get<std::string>());
  take_opt(j, "Delta", c.norm_gap);
  take_opt(j, "variance_ratio", c.variance_ratio);
  take(j, "gaussian_entries", c.gaussian_entries);
  take(j, "nu", c.nu);
  take(j, "eta", c.eta);
  take(j, "exact_sparsity", c.exact_sparsity);
  take(j, "plant_seed", c.seed);
  if (j.contains("supports"))
    for (const auto& s : j.at("supports")) c.supports.push_back(canonical(s.get<IndexSet>()));
  if (j.contains("vectors")) c.vectors = sparse_from_json(j.at("vectors"));
  return c;
}

json instance_to_json(const PlantedInstance& inst) {
  json j = plant_config_to_json(inst.config);
  j["ell"] = inst.ell();
  j["vectors"] = sparse_to_json(inst.sparse());
  j["supports"] = inst.supports().members;
  return j;
}

json run_config_to_json(const RunConfig& c) {
  json j = {{"mode", to_string(c.mode)},
            {"plant", plant_config_to_json(c.plant)},
            {"seed", c.seed},
            {"m", c.m},
            {"oracle", c.oracle},
            {"gamma", c.gamma},
            {"threshold_fraction", c.threshold_fraction},
            {"alpha_schedule", c.alpha_schedule},
            {"mlc_conditioned", c.mlc_conditioned},
            {"mlc_cap", c.mlc_cap},
            {"mlr_repeats", c.mlr_repeats},
            {"union_strategy", to_string(c.union_strategy)}};
  j["batches"] = c.batches ? json(*c.batches) : json(nullptr);
  j["a_override"] = c.a_override ? json(*c.a_override) : json(nullptr);
  j["mlr_alpha"] = c.mlr_alpha ? json(*c.mlr_alpha) : json(nullptr);
  j["mlr_epsilon"] = c.mlr_epsilon ? json(*c.mlr_epsilon) : json(nullptr);
  return j;
}

RunConfig run_config_from_json(const json& j, RunConfig c) {
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  // plant parameters may sit flat at top level or nested under "plant"
  c.plant = plant_config_from_json(j, c.plant);
  if (j.contains("plant")) c.plant = plant_config_from_json(j.at("plant"), c.plant);
  take(j, "seed", c.seed);
  take(j, "m", c.m);
  take(j, "oracle", c.oracle);
  take(j, "gamma", c.gamma);
  take_opt(j, "batches", c.batches);
  take(j, "threshold_fraction", c.threshold_fraction);
  take(j, "alpha_schedule", c.alpha_schedule);
  take_opt(j, "a_override", c.a_override);
  take(j, "mlc_conditioned", c.mlc_conditioned);
  take(j, "mlc_cap", c.mlc_cap);
  take_opt(j, "mlr_alpha", c.mlr_alpha);
  take_opt(j, "mlr_epsilon", c.mlr_epsilon);
  take(j, "mlr_repeats", c.mlr_repeats);
  if (j.contains("union_strategy"))
    c.union_strategy = union_strategy_from_string(j.at("union_strategy").get<std::string>());
  take(j, "timing", c.timing);
  return c;
}

json report_to_json(const RecoveryReport& r) {
  json diags = json::array();
  for (const auto& d : r.diagnostics) {
    json e = {{"subset", d.subset}, {"estimate", d.estimate}};
    e["oracle"] = d.oracle ? json(*d.oracle) : json(nullptr);
    diags.push_back(e);
  }
  json j = {{"model", to_string(r.model)},
            {"mode", to_string(r.mode)},
            {"oracle", r.oracle},
            {"seed", r.seed},
            {"plant_seed", r.plant_seed},
            {"sample_seed", r.sample_seed},
            {"n", r.n},
            {"ell", r.ell},
            {"statistic", to_string(r.statistic)},
            {"union", r.union_estimate},
            {"union_truth", r.union_truth},
            {"recovered", r.recovered},
            {"truth", r.truth},
            {"exact_match", r.exact_match},
            {"samples_used", r.samples_used},
            {"subsets_queried", r.subsets_queried},
            {"diagnostics", diags}};
  if (r.error) {
    json e = {{"stage", r.error->stage}, {"message", r.error->message}};
    e["subset"] = r.error->has_subset ? json(r.error->subset) : json(nullptr);
    j["error"] = e;
  } else {
    j["error"] = nullptr;
  }
  if (r.include_timing) j["wall_seconds"] = r.wall_seconds;
  return j;
}

json bench_to_json(const RunConfig& base, const std::vector<BenchRow>& rows) {
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"m", r.m}, {"trials", r.trials}, {"successes", r.successes}, {"rate", r.rate()}});
  return {{"config", run_config_to_json(base)}, {"rows", out}};
}

json coefficients_to_json(const MomentFamily& f, int tmax) {
  json rows = json::array();
  for (int t = 0; t <= tmax; ++t) rows.push_back({{"t", t}, {"beta", f.coefficients(t)}});
  return {{"family", f.name()}, {"param", f.param()}, {"rows", rows}};
}

}  // namespace mixrec
