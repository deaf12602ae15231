// This code is licensed under the Apache License, Version 2.0. You may obtain
// a copy of this license at http://www.apache.org/licenses/LICENSE-2.0.

#include "qcfe/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "qcfe/errors.hpp"
#include "qcfe/free_energy.hpp"
#include "qcfe/hci.hpp"
#include "qcfe/integrals.hpp"
#include "qcfe/lucj.hpp"
#include "qcfe/rng.hpp"
#include "qcfe/sqd.hpp"
#include "qcfe/toy_ensemble.hpp"

namespace qcfe {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[19];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, 16);
  return "0x" + std::string(buf, res.ptr);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct EnergyRow {
  std::string stage;
  std::string method;
  double energy;
  std::size_t dim;
};

struct StageContext {
  std::string name;
  std::string kind;
  const json* cfg;
  std::uint64_t seed;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("stage '" + name + "' (" + kind + "): " + msg);
  }

  const json& require(const char* key) const {
    if (!cfg->contains(key)) fail(std::string("missing field '") + key + "'");
    return (*cfg)[key];
  }

  double number(const char* key) const {
    const auto& v = require(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }

  double number_or(const char* key, double fallback) const {
    if (!cfg->contains(key)) return fallback;
    return number(key);
  }

  long integer(const char* key) const {
    const auto& v = require(key);
    if (!v.is_number_integer())
      fail(std::string("field '") + key + "' must be an integer");
    return v.get<long>();
  }

  long integer_or(const char* key, long fallback) const {
    if (!cfg->contains(key)) return fallback;
    return integer(key);
  }

  std::string text(const char* key) const {
    const auto& v = require(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }
};

class PipelineRun {
 public:
  PipelineRun(const json& config, const PipelineOptions& options)
      : config_(config), out_dir_(options.out_dir) {
    if (out_dir_.empty())
      throw ValidationError("pipeline: output directory not set");
#ifdef _OPENMP
    if (options.threads > 0) omp_set_num_threads(options.threads);
#endif
  }

  json run() {
    validate_config();
    fs::create_directories(out_dir_);
    root_seed_ = config_.contains("seed")
                     ? config_["seed"].get<std::uint64_t>()
                     : 0;

    for (const auto& stage_cfg : config_["stages"]) {
      StageContext ctx;
      ctx.name = stage_cfg["name"].get<std::string>();
      ctx.kind = stage_cfg["kind"].get<std::string>();
      ctx.cfg = &stage_cfg;
      ctx.seed = derive_seed(root_seed_, ctx.name);
      begin_stage(ctx, stage_cfg);
      try {
        dispatch(ctx);
      } catch (const ValidationError& e) {
        throw ValidationError(located(ctx, e.what()));
      } catch (const NumericError& e) {
        throw NumericError(located(ctx, e.what()), e.residual());
      } catch (const IoError& e) {
        throw IoError(located(ctx, e.what()));
      }
    }

    write_energy_table();
    json manifest = make_manifest();
    atomic_write(fs::path(out_dir_) / "manifest.json",
                 manifest.dump(2) + "\n");
    return manifest;
  }

 private:
  static std::string located(const StageContext& ctx, const std::string& msg) {
    const std::string prefix = "stage '" + ctx.name + "'";
    if (msg.rfind(prefix, 0) == 0) return msg;  // already located
    return prefix + " (" + ctx.kind + "): " + msg;
  }

  void validate_config() {
    if (!config_.is_object())
      throw ValidationError("pipeline config: not a JSON object");
    if (!config_.contains("version") ||
        !config_["version"].is_number_integer() ||
        config_["version"].get<int>() != 1)
      throw ValidationError("pipeline config: requires \"version\": 1");
    if (!config_.contains("stages") || !config_["stages"].is_array() ||
        config_["stages"].empty())
      throw ValidationError("pipeline config: 'stages' must be a non-empty array");
    static const std::vector<std::string> kinds = {
        "fcidump", "fci",  "hci", "lucj_sample", "noise",  "sqd",
        "extsqd",  "ensemble", "ti",  "mbar",        "bookend"};
    std::size_t idx = 0;
    for (const auto& stage : config_["stages"]) {
      const std::string where = "stages[" + std::to_string(idx) + "]";
      if (!stage.is_object())
        throw ValidationError("pipeline config: " + where + " is not an object");
      if (!stage.contains("name") || !stage["name"].is_string())
        throw ValidationError("pipeline config: " + where + " missing string 'name'");
      if (!stage.contains("kind") || !stage["kind"].is_string())
        throw ValidationError("pipeline config: " + where + " missing string 'kind'");
      const std::string name = stage["name"].get<std::string>();
      for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-')
          throw ValidationError("pipeline config: " + where +
                                " name must be [A-Za-z0-9_-]+");
      if (!seen_names_.insert(name).second)
        throw ValidationError("pipeline config: duplicate stage name '" + name + "'");
      const std::string kind = stage["kind"].get<std::string>();
      if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
        throw ValidationError("pipeline config: " + where + " unknown kind '" +
                              kind + "'");
      ++idx;
    }
  }

  void begin_stage(const StageContext& ctx, const json& stage_cfg) {
    fs::create_directories(fs::path(out_dir_) / ctx.name);
    json rec;
    rec["name"] = ctx.name;
    rec["kind"] = ctx.kind;
    rec["seed"] = hex64(ctx.seed);
    rec["config_hash"] = hex64(fnv1a64(stage_cfg.dump()));
    rec["outputs"] = json::array();
    stage_records_.push_back(std::move(rec));
  }

  void atomic_write(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary);
      if (!out) throw IoError("cannot open for writing: " + tmp.string());
      out << content;
      if (!out) throw IoError("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
  }

  void emit(const StageContext& ctx, const std::string& filename,
            const std::string& content, bool deterministic = true) {
    const fs::path rel = fs::path(ctx.name) / filename;
    atomic_write(fs::path(out_dir_) / rel, content);
    json entry;
    entry["path"] = rel.generic_string();
    entry["bytes"] = content.size();
    entry["fnv1a64"] = hex64(fnv1a64(content));
    entry["deterministic"] = deterministic;
    stage_records_.back()["outputs"].push_back(entry);
  }

  // ---- stage bodies ------------------------------------------------------

  const MolecularHamiltonian& hamiltonian_of(const StageContext& ctx,
                                             const char* key = "hamiltonian") {
    const std::string ref = ctx.text(key);
    auto it = hamiltonians_.find(ref);
    if (it == hamiltonians_.end())
      ctx.fail("references unknown hamiltonian stage '" + ref + "'");
    return it->second;
  }

  const SampleSet& samples_of(const StageContext& ctx,
                              const char* key = "samples") {
    const auto& v = ctx.require(key);
    if (v.is_object() && v.contains("file")) {
      loaded_samples_.push_back(
          read_count_dict_file(v["file"].get<std::string>()));
      return loaded_samples_.back();
    }
    if (!v.is_string())
      ctx.fail(std::string("field '") + key +
               "' must be a stage name or {\"file\": path}");
    const std::string ref = v.get<std::string>();
    auto it = samples_.find(ref);
    if (it == samples_.end())
      ctx.fail("references unknown sample stage '" + ref + "'");
    return it->second;
  }

  LambdaSchedule schedule_of(const StageContext& ctx, const json& v) {
    if (v.is_string()) {
      const std::string s = v.get<std::string>();
      if (s == "gauss7") return LambdaSchedule::gauss7_tabulated();
      if (s == "uniform6") return LambdaSchedule::uniform(6);
      ctx.fail("unknown schedule '" + s + "' (use gauss7, uniform6 or an object)");
    }
    if (v.is_object()) {
      if (v.contains("uniform"))
        return LambdaSchedule::uniform(v["uniform"].get<int>());
      if (v.contains("gauss_legendre"))
        return LambdaSchedule::gauss_legendre(v["gauss_legendre"].get<int>());
      if (v.contains("lambdas")) {
        LambdaSchedule s;
        s.lambdas = v["lambdas"].get<std::vector<double>>();
        if (v.contains("weights"))
          s.weights = v["weights"].get<std::vector<double>>();
        s.validate();
        return s;
      }
    }
    ctx.fail("schedule must be gauss7, uniform6, {uniform: n}, "
             "{gauss_legendre: n} or {lambdas: [...], weights: [...]}");
  }

  ToyPotential potential_of(const StageContext& ctx, const json& v) {
    if (v.is_object() && v.contains("harmonic")) {
      const auto& p = v["harmonic"];
      return HarmonicPotential{p.at("k").get<double>(),
                               p.value("x0", 0.0)};
    }
    if (v.is_object() && v.contains("quartic")) {
      const auto& p = v["quartic"];
      return QuarticPotential{p.at("a").get<double>(), p.at("b").get<double>()};
    }
    if (v.is_object() && v.contains("tabulated")) {
      const auto& p = v["tabulated"];
      return TabulatedPotential{p.at("grid").get<std::vector<double>>(),
                                p.at("values").get<std::vector<double>>()};
    }
    ctx.fail("potential must be {harmonic: {k, x0}}, {quartic: {a, b}} or "
             "{tabulated: {grid, values}}");
  }

  void dispatch(const StageContext& ctx) {
    if (ctx.kind == "fcidump") return stage_fcidump(ctx);
    if (ctx.kind == "fci") return stage_fci(ctx);
    if (ctx.kind == "hci") return stage_hci(ctx);
    if (ctx.kind == "lucj_sample") return stage_lucj_sample(ctx);
    if (ctx.kind == "noise") return stage_noise(ctx);
    if (ctx.kind == "sqd") return stage_sqd(ctx);
    if (ctx.kind == "extsqd") return stage_extsqd(ctx);
    if (ctx.kind == "ensemble") return stage_ensemble(ctx);
    if (ctx.kind == "ti") return stage_ti(ctx);
    if (ctx.kind == "mbar") return stage_mbar(ctx);
    if (ctx.kind == "bookend") return stage_bookend(ctx);
    ctx.fail("unhandled kind");  // unreachable after validate_config
  }

  void stage_fcidump(const StageContext& ctx) {
    const std::string path = ctx.text("path");
    auto ham = parse_fcidump_file(path);
    std::ostringstream canonical;
    write_fcidump(ham, canonical);
    emit(ctx, "hamiltonian.fcidump", canonical.str());
    hamiltonians_.emplace(ctx.name, std::move(ham));
  }

  void stage_fci(const StageContext& ctx) {
    const auto& ham = hamiltonian_of(ctx);
    const int dense_limit = static_cast<int>(ctx.integer_or("dense_limit", 4096));
    const auto space = enumerate_fci_space(ham.n_orbitals(), ham.n_alpha(),
                                           ham.n_beta());
    const auto ph = build_subspace_matrix(ham, space);
    const auto solved =
        static_cast<int>(space.size()) <= dense_limit
            ? dense_ground(ph, dense_limit)
            : davidson_ground(ph);
    json result;
    result["energy"] = solved.first;
    result["dim"] = space.size();
    emit(ctx, "result.json", result.dump(2) + "\n");
    energy_rows_.push_back({ctx.name, "fci", solved.first, space.size()});
  }

  void stage_hci(const StageContext& ctx) {
    const auto& ham = hamiltonian_of(ctx);
    const double epsilon = ctx.number("epsilon");
    const int max_rounds = static_cast<int>(ctx.integer_or("max_rounds", 200));
    const auto res =
        hci_solve(ham, epsilon, reference_determinant(ham), {}, max_rounds);

    std::ostringstream trace;
    trace << "iteration,n_dets,energy,wall_seconds\n";
    for (const auto& row : res.trace)
      trace << row.iteration << ',' << row.n_dets << ','
            << format_double(row.energy) << ',' << format_double(row.wall_seconds)
            << '\n';
    emit(ctx, "trace.csv", trace.str(), /*deterministic=*/false);

    json result;
    result["energy"] = res.energy;
    result["epsilon"] = epsilon;
    result["n_dets"] = res.wavefunction.size();
    result["rounds"] = res.trace.size();
    emit(ctx, "result.json", result.dump(2) + "\n");
    energy_rows_.push_back({ctx.name, "hci", res.energy,
                            res.wavefunction.size()});
  }

  void stage_lucj_sample(const StageContext& ctx) {
    const auto& ham = hamiltonian_of(ctx);
    const auto shots = static_cast<std::uint64_t>(ctx.integer("shots"));
    const auto& pspec = ctx.require("params");

    SampleSet samples(1);
    if (pspec.is_object() && pspec.value("exact_state", false)) {
      samples = exact_state_sample(ham, shots, derive_seed(ctx.seed, "shots"));
    } else {
      LucjParameters params;
      if (pspec.is_object() && pspec.contains("file")) {
        params = load_lucj_parameters(pspec["file"].get<std::string>(),
                                      ham.n_alpha(), ham.n_beta());
      } else if (pspec.is_object() && pspec.contains("random_magnitude")) {
        params = random_lucj_parameters(
            ham.n_orbitals(), ham.n_alpha(), ham.n_beta(),
            pspec.value("reps", 2), pspec["random_magnitude"].get<double>(),
            derive_seed(ctx.seed, "params"));
      } else {
        ctx.fail("params must carry 'file', 'random_magnitude' or 'exact_state'");
      }
      emit(ctx, "lucj_params.json",
           lucj_parameters_to_json(params).dump(2) + "\n");
      const auto state = lucj_prepare(params);
      samples = born_sample(state, shots, derive_seed(ctx.seed, "shots"));
    }

    std::ostringstream counts;
    write_count_dict(samples, counts);
    emit(ctx, "count_dict.txt", counts.str());
    samples_.emplace(ctx.name, std::move(samples));
  }

  void stage_noise(const StageContext& ctx) {
    const auto& input = samples_of(ctx);
    const double p = ctx.number("p");
    auto noisy = bitflip_noise(input, p, derive_seed(ctx.seed, "flips"));
    std::ostringstream counts;
    write_count_dict(noisy, counts);
    emit(ctx, "count_dict.txt", counts.str());
    samples_.emplace(ctx.name, std::move(noisy));
  }

  SqdConfig sqd_config_of(const StageContext& ctx) {
    SqdConfig config;
    config.n_batches = static_cast<int>(ctx.integer_or("batches", 10));
    config.batch_size = static_cast<int>(ctx.integer_or("batch_size", 1000));
    config.score_iterations =
        static_cast<int>(ctx.integer_or("score_iterations", 2));
    config.davidson_tol = ctx.number_or("davidson_tol", 1e-8);
    config.ext_cutoff = ctx.number_or("ext_cutoff", 1e-5);
    config.flip_weight_exponent = ctx.number_or("flip_weight_exponent", 1.0);
    config.dense_limit = static_cast<int>(ctx.integer_or("dense_limit", 128));
    config.seed = ctx.seed;
    config.validate();
    return config;
  }

  void stage_sqd(const StageContext& ctx) {
    const auto& ham = hamiltonian_of(ctx);
    const auto& raw = samples_of(ctx);
    const auto config = sqd_config_of(ctx);
    auto result = sqd_run(ham, raw, config);
    emit(ctx, "result.json",
         sqd_result_to_json(result, ham.n_orbitals()).dump(2) + "\n");
    energy_rows_.push_back({ctx.name, "sqd", result.energy,
                            result.subspace_dim});
    sqd_results_.emplace(ctx.name, std::move(result));
  }

  void stage_extsqd(const StageContext& ctx) {
    const auto& ham = hamiltonian_of(ctx);
    const std::string ref = ctx.text("sqd");
    auto it = sqd_results_.find(ref);
    if (it == sqd_results_.end())
      ctx.fail("references unknown sqd stage '" + ref + "'");
    const double cutoff = ctx.number_or("cutoff", 1e-5);
    SqdConfig config;
    config.seed = ctx.seed;
    config.dense_limit = static_cast<int>(ctx.integer_or("dense_limit", 128));
    auto result = extsqd_extend(ham, it->second.wavefunction, cutoff, config);
    json j = extsqd_result_to_json(result, ham);
    j["sqd_energy"] = it->second.energy;
    j["cutoff"] = cutoff;
    emit(ctx, "result.json", j.dump(2) + "\n");
    energy_rows_.push_back({ctx.name, "extsqd", result.energy,
                            result.subspace.total()});
  }

  void stage_ensemble(const StageContext& ctx) {
    const auto schedule = schedule_of(ctx, ctx.require("schedule"));
    const auto u0 = potential_of(ctx, ctx.require("u0"));
    const auto u1 = potential_of(ctx, ctx.require("u1"));
    const double beta = ctx.number_or("beta", 1.0);
    const int samples_per_state =
        static_cast<int>(ctx.integer("samples_per_state"));
    const int stride = static_cast<int>(ctx.integer_or("stride", 1));
    MetropolisOptions opts;
    opts.burn_in = static_cast<int>(ctx.integer_or("burn_in", 1000));
    opts.step_size = ctx.number_or("step_size", 0.5);
    const auto data = generate_ensemble(schedule, u0, u1, beta,
                                        samples_per_state,
                                        derive_seed(ctx.seed, "chains"), opts,
                                        stride);

    std::ostringstream archive;
    write_sample_archive(data, archive);
    emit(ctx, "samples.csv", archive.str());
    std::ostringstream ukn;
    write_ukn_csv(data.u, ukn);
    emit(ctx, "ukn.csv", ukn.str());
    json result;
    result["dudl_means"] = data.dudl_means;
    result["acceptance_rates"] = data.acceptance_rates;
    result["beta"] = beta;
    result["lambdas"] = schedule.lambdas;
    emit(ctx, "result.json", result.dump(2) + "\n");
    ensembles_.emplace(ctx.name, data);
  }

  void stage_ti(const StageContext& ctx) {
    LambdaSchedule schedule;
    std::vector<double> means;
    if (ctx.cfg->contains("ensemble")) {
      const std::string ref = ctx.text("ensemble");
      auto it = ensembles_.find(ref);
      if (it == ensembles_.end())
        ctx.fail("references unknown ensemble stage '" + ref + "'");
      schedule = it->second.schedule;
      means = it->second.dudl_means;
    } else {
      schedule = schedule_of(ctx, ctx.require("schedule"));
      means = ctx.require("means").get<std::vector<double>>();
    }
    if (!schedule.has_weights())
      ctx.fail("schedule carries no quadrature weights");
    const double delta_a = ti_integrate(schedule, means);
    json result;
    result["delta_a"] = delta_a;
    result["lambdas"] = schedule.lambdas;
    result["weights"] = schedule.weights;
    result["dudl_means"] = means;
    emit(ctx, "result.json", result.dump(2) + "\n");
  }

  void stage_mbar(const StageContext& ctx) {
    const double beta = ctx.number_or("beta", 1.0);
    std::optional<ReducedPotentialMatrix> loaded;
    const ReducedPotentialMatrix* u = nullptr;
    const auto& src = ctx.require("ukn");
    if (src.is_string()) {
      auto it = ensembles_.find(src.get<std::string>());
      if (it == ensembles_.end())
        ctx.fail("references unknown ensemble stage '" +
                 src.get<std::string>() + "'");
      u = &it->second.u;
    } else if (src.is_object() && src.contains("file")) {
      loaded = read_ukn_csv_file(src["file"].get<std::string>(), beta);
      u = &*loaded;
    } else {
      ctx.fail("'ukn' must be an ensemble stage name or {\"file\": path}");
    }
    const double tol = ctx.number_or("tol", 1e-10);
    const int max_iter = static_cast<int>(ctx.integer_or("max_iter", 100000));
    auto result = mbar_solve(*u, tol, max_iter);
    emit(ctx, "result.json", mbar_result_to_json(result).dump(2) + "\n");
    mbar_results_.emplace(ctx.name, std::move(result));
  }

  double correction_of(const StageContext& ctx, const char* key) {
    const auto& v = ctx.require(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_object() && v.contains("mbar")) {
      auto it = mbar_results_.find(v["mbar"].get<std::string>());
      if (it == mbar_results_.end())
        ctx.fail(std::string(key) + ": unknown mbar stage '" +
                 v["mbar"].get<std::string>() + "'");
      const int k = static_cast<int>(it->second.free_energies.size());
      const int i = v.value("i", 0);
      const int j = v.value("j", k - 1);
      return mbar_delta(it->second, i, j);
    }
    ctx.fail(std::string(key) +
             " must be a number or {\"mbar\": stage, \"i\": int, \"j\": int}");
  }

  void stage_bookend(const StageContext& ctx) {
    const double ddg_mm = ctx.number("ddg_mm");
    const double cca = correction_of(ctx, "corr_complex_a");
    const double ccb = correction_of(ctx, "corr_complex_b");
    const double cwa = correction_of(ctx, "corr_water_a");
    const double cwb = correction_of(ctx, "corr_water_b");
    const double corrected = bookend_combine(ddg_mm, cca, ccb, cwa, cwb);
    json result;
    result["ddg_mm"] = ddg_mm;
    result["corr_complex_a"] = cca;
    result["corr_complex_b"] = ccb;
    result["corr_water_a"] = cwa;
    result["corr_water_b"] = cwb;
    result["ddg_corrected"] = corrected;
    emit(ctx, "result.json", result.dump(2) + "\n");
  }

  // ---- run-level artifacts ----------------------------------------------

  void write_energy_table() {
    if (energy_rows_.empty()) return;
    std::ostringstream table;
    table << "stage,method,energy,subspace_dim\n";
    for (const auto& row : energy_rows_)
      table << row.stage << ',' << row.method << ','
            << format_double(row.energy) << ',' << row.dim << '\n';
    const fs::path rel = "energy_table.csv";
    atomic_write(fs::path(out_dir_) / rel, table.str());
    json entry;
    entry["path"] = rel.generic_string();
    entry["bytes"] = table.str().size();
    entry["fnv1a64"] = hex64(fnv1a64(table.str()));
    entry["deterministic"] = true;
    run_outputs_.push_back(entry);
  }

  json make_manifest() const {
    json manifest;
    manifest["version"] = 1;
    manifest["root_seed"] = root_seed_;
    manifest["config_hash"] = hex64(fnv1a64(config_.dump()));
    manifest["stages"] = stage_records_;
    manifest["outputs"] = run_outputs_;
    return manifest;
  }

  json config_;
  std::string out_dir_;
  std::uint64_t root_seed_ = 0;

  std::set<std::string> seen_names_;
  std::map<std::string, MolecularHamiltonian> hamiltonians_;
  std::map<std::string, SampleSet> samples_;
  std::map<std::string, SqdResult> sqd_results_;
  std::map<std::string, EnsembleData> ensembles_;
  std::map<std::string, FreeEnergyResult> mbar_results_;
  std::vector<SampleSet> loaded_samples_;
  std::vector<EnergyRow> energy_rows_;
  std::vector<json> stage_records_;
  std::vector<json> run_outputs_;
};

}  // namespace

json run_pipeline(const json& config, const PipelineOptions& options) {
  PipelineRun run(config, options);
  return run.run();
}

json run_pipeline_file(const std::string& config_path,
                       const PipelineOptions& options) {
  std::ifstream in(config_path);
  if (!in) throw IoError("cannot open pipeline config: " + config_path);
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("pipeline config: ") + e.what());
  }
  return run_pipeline(config, options);
}

}  // namespace qcfe
