#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mixrec/json_io.hpp"

using namespace mixrec;

namespace {

struct Flags {
  std::string model, mode, config, out, family, alpha_schedule, sign_regime, union_strategy;
  double sigma = 0, upper = 0, delta = 0, Delta = 0, R = 0, a_override = 0, gamma = 0, threshold = 0;
  double mlr_alpha = 0, mlr_epsilon = 0, variance_ratio = 0;
  int n = 0, k = 0, ell = 0, batches = 0, mlr_repeats = 1;
  std::size_t m = 0, mlc_conditioned = 0;
  std::uint64_t seed = 0;
  bool binary = false, timing = false, oracle = false;
};

void add_run_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON run config; flags below override it");
  app->add_option("--model", f.model, "md | mlr | mlc");
  app->add_option("--mode", f.mode, "exact | maximal");
  app->add_option("--out", f.out, "output file (default stdout)");
  app->add_option("--family", f.family, "gaussian | poisson | uniform");
  app->add_option("--sigma", f.sigma);
  app->add_option("--upper", f.upper, "upper end of the uniform family");
  app->add_flag("--binary", f.binary, "binary planted vectors (MLR)");
  app->add_option("--delta", f.delta);
  app->add_option("--Delta", f.Delta, "norm gap (MLR general)");
  app->add_option("-R,--radius", f.R);
  app->add_option("--variance-ratio", f.variance_ratio);
  app->add_option("--alpha-schedule", f.alpha_schedule, "nonneg | gaussian | explicit:v1,v2,...");
  app->add_option("--sign-regime", f.sign_regime, "any | nonneg | nonpos");
  app->add_option("--a-override", f.a_override, "MLC conditioning threshold");
  app->add_option("--mlc-conditioned", f.mlc_conditioned, "conditioned samples per subset (MLC)");
  app->add_option("--mlr-alpha", f.mlr_alpha, "perturbation scale (MLR general)");
  app->add_option("--mlr-epsilon", f.mlr_epsilon, "matching tolerance (MLR general)");
  app->add_option("--mlr-repeats", f.mlr_repeats, "perturbation draws per subset, median count (MLR general)");
  app->add_option("--union-strategy", f.union_strategy, "default | singleton | cluster");
  app->add_option("--seed", f.seed);
  app->add_option("--m", f.m, "raw samples");
  app->add_option("-n", f.n);
  app->add_option("-k", f.k);
  app->add_option("--ell", f.ell);
  app->add_option("--batches", f.batches, "median-of-means batches per subset");
  app->add_option("--gamma", f.gamma);
  app->add_option("--threshold-fraction", f.threshold);
  app->add_flag("--timing", f.timing, "include wall time in the report");
}

bool given(CLI::App* app, const char* name) { return app->count(name) > 0; }

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

RunConfig build_config(CLI::App* app, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = run_config_from_json(read_json(f.config));
  auto& p = c.plant;
  if (given(app, "--model")) p.model = model_from_string(f.model);
  if (given(app, "--mode")) c.mode = mode_from_string(f.mode);
  if (given(app, "--family")) p.family = f.family;
  if (given(app, "--sigma")) p.sigma = f.sigma;
  if (given(app, "--upper")) p.upper = f.upper;
  if (given(app, "--binary")) p.binary = f.binary;
  if (given(app, "--delta")) p.delta = f.delta;
  if (given(app, "--Delta")) p.norm_gap = f.Delta;
  if (given(app, "--radius")) p.R = f.R;
  if (given(app, "--variance-ratio")) p.variance_ratio = f.variance_ratio;
  if (given(app, "--sign-regime")) p.sign = sign_regime_from_string(f.sign_regime);
  if (given(app, "--alpha-schedule")) c.alpha_schedule = f.alpha_schedule;
  if (given(app, "--a-override")) c.a_override = f.a_override;
  if (given(app, "--mlc-conditioned")) c.mlc_conditioned = f.mlc_conditioned;
  if (given(app, "--mlr-alpha")) c.mlr_alpha = f.mlr_alpha;
  if (given(app, "--mlr-epsilon")) c.mlr_epsilon = f.mlr_epsilon;
  if (given(app, "--mlr-repeats")) c.mlr_repeats = f.mlr_repeats;
  if (given(app, "--union-strategy")) c.union_strategy = union_strategy_from_string(f.union_strategy);
  if (given(app, "--seed")) c.seed = f.seed;
  if (given(app, "--m")) c.m = f.m;
  if (given(app, "-n")) p.n = f.n;
  if (given(app, "-k")) p.k = f.k;
  if (given(app, "--ell")) p.ell = f.ell;
  if (given(app, "--batches")) c.batches = f.batches;
  if (given(app, "--gamma")) c.gamma = f.gamma;
  if (given(app, "--threshold-fraction")) c.threshold_fraction = f.threshold;
  if (f.timing) c.timing = true;
  return c;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::vector<std::uint64_t> parse_seeds(const std::string& s) {
  std::vector<std::uint64_t> out;
  const auto dash = s.find('-');
  if (dash != std::string::npos && s.find(',') == std::string::npos) {
    const auto lo = std::stoull(s.substr(0, dash)), hi = std::stoull(s.substr(dash + 1));
    for (auto v = lo; v <= hi; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(std::stoull(tok));
  return out;
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  for (std::string tok; std::getline(ss, tok, ',');)
    if (!tok.empty()) out.push_back(static_cast<std::size_t>(std::stod(tok)));
  return out;
}

// Decodes a statistics table of any supported kind into supports.
json decode_table(const json& j) {
  if (j.contains("rows")) {
    const OccTable occ = occ_from_json(j);
    int n = j.value("n", 0);
    IndexSet universe;
    for (const auto& [c, r] : occ.rows())
      if (c.size() == 1 && r[1] > 0) universe.push_back(c[0]);
    for (const auto& [c, r] : occ.rows()) n = std::max(n, c.back());
    return supports_to_json(recover_supports(occ, universe, n));
  }
  const SubsetStatTable t = stats_from_json(j);
  int n = j.value("n", 0);
  IndexSet universe;
  for (const auto& [c, v] : t.entries()) {
    n = std::max(n, c.back());
    if (c.size() == 1 && v > 0) universe.push_back(c[0]);
  }
  if (t.kind() == StatKind::Membership) {
    json out = {{"n", n}, {"maximal", recover_maximal(t, universe)}};
    return out;
  }
  const SubsetStatTable inter = t.kind() == StatKind::Union ? intersection_table_from_unions(t) : t;
  const auto sizes = decoding_sizes(t.ell(), static_cast<int>(universe.size()));
  return supports_to_json(recover_supports(build_occ_table(inter, universe, sizes), universe, n));
}

void write_samples(const Samples& s, const std::string& path, bool binary) {
  const bool has_y = s.y.size() > 0;
  if (binary) {
    // header: rows, cols, has_y (int64 each), then row-major doubles; y appended after x
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    const std::int64_t hdr[3] = {s.x.rows(), s.x.cols(), has_y ? 1 : 0};
    out.write(reinterpret_cast<const char*>(hdr), sizeof hdr);
    out.write(reinterpret_cast<const char*>(s.x.data()), static_cast<std::streamsize>(sizeof(double) * s.x.size()));
    if (has_y) out.write(reinterpret_cast<const char*>(s.y.data()), static_cast<std::streamsize>(sizeof(double) * s.y.size()));
    return;
  }
  std::ostringstream out;
  out.precision(17);
  for (long c = 0; c < s.x.cols(); ++c) out << (c ? "," : "") << "x" << c + 1;
  if (has_y) out << ",y";
  out << "\n";
  for (long r = 0; r < s.x.rows(); ++r) {
    for (long c = 0; c < s.x.cols(); ++c) out << (c ? "," : "") << s.x(r, c);
    if (has_y) out << "," << s.y(r);
    out << "\n";
  }
  emit(path, out.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Support recovery for sparse mixtures"};
  app.require_subcommand(1);

  Flags f;
  auto* recover = app.add_subcommand("recover", "plant an instance, sample, and recover supports");
  add_run_flags(recover, f);
  recover->add_flag("--oracle", f.oracle, "use exact statistics instead of estimators");

  auto* oracle = app.add_subcommand("oracle", "plug-the-oracle run (exact statistics)");
  add_run_flags(oracle, f);

  std::string ms = "10000,100000", seeds = "1-20", format = "csv";
  auto* bench = app.add_subcommand("bench", "success rate over a grid of sample sizes and seeds");
  add_run_flags(bench, f);
  bench->add_option("--ms", ms, "comma separated sample sizes");
  bench->add_option("--seeds", seeds, "range a-b or comma list");
  bench->add_option("--format", format, "csv | json");

  std::string samples_path, sample_format = "csv";
  auto* gen = app.add_subcommand("gen", "plant an instance and write it with samples");
  add_run_flags(gen, f);
  gen->add_option("--samples", samples_path, "sample output path");
  gen->add_option("--sample-format", sample_format, "csv | binary");

  std::string input;
  auto* decode = app.add_subcommand("decode", "decode an occ or statistics table (JSON) into supports");
  decode->add_option("input", input, "table file")->required();
  std::string decode_out;
  decode->add_option("--out", decode_out);

  std::string coeff_family = "gaussian";
  double coeff_sigma = 1.0, coeff_upper = 1.0;
  int tmax = 4;
  std::string coeff_out;
  auto* coeffs = app.add_subcommand("coeffs", "dump moment polynomial coefficients");
  coeffs->add_option("--family", coeff_family);
  coeffs->add_option("--sigma", coeff_sigma);
  coeffs->add_option("--upper", coeff_upper);
  coeffs->add_option("--tmax", tmax);
  coeffs->add_option("--out", coeff_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*recover || *oracle) {
      CLI::App* sub = *recover ? recover : oracle;
      RunConfig c = build_config(sub, f);
      if (*oracle || f.oracle) c.oracle = true;
      const auto report = run(c);
      emit(f.out, report_to_json(report).dump(2) + "\n");
      return report.error ? 2 : 0;
    }
    if (*bench) {
      RunConfig c = build_config(bench, f);
      const auto rows = mixrec::bench(c, parse_sizes(ms), parse_seeds(seeds));
      emit(f.out, format == "json" ? bench_to_json(c, rows).dump(2) + "\n" : bench_csv(rows));
      return 0;
    }
    if (*gen) {
      RunConfig c = build_config(gen, f);
      PlantConfig pc = c.plant;
      if (pc.vectors.empty()) pc.seed = c.plant_seed();  // same instance recover would plant
      const auto inst = plant(pc);
      json j = instance_to_json(inst);
      j["sample_seed"] = c.sample_seed();
      j["m"] = c.m;
      emit(f.out, j.dump(2) + "\n");
      if (!samples_path.empty()) write_samples(sample(inst, c.m, c.sample_seed()), samples_path, sample_format == "binary");
      return 0;
    }
    if (*decode) {
      emit(decode_out, decode_table(read_json(input)).dump(2) + "\n");
      return 0;
    }
    if (*coeffs) {
      const auto fam = MomentFamily::from_name(coeff_family, coeff_sigma, coeff_upper);
      emit(coeff_out, coefficients_to_json(fam, tmax).dump(2) + "\n");
      return 0;
    }
  } catch (const NotIdentifiable& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
