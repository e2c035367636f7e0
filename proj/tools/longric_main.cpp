#include <filesystem>
#include <fstream>
#include <map>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "longric/experiments.hpp"
#include "longric/generator.hpp"
#include "longric/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace longric;

namespace {

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return json::parse(in);
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

GeneratorSpec generator_spec_from(const json& cfg) {
  GeneratorSpec s;
  if (!cfg.contains("generator")) return s;
  const json& g = cfg.at("generator");
  s.n_patients = get_or(g, "n_patients", s.n_patients);
  s.visits = get_or(g, "visits", s.visits);
  s.base_rate = get_or(g, "base_rate", s.base_rate);
  s.dropout_rate = get_or(g, "dropout_rate", s.dropout_rate);
  s.extra_immutable = get_or(g, "extra_immutable", s.extra_immutable);
  s.extra_direct = get_or(g, "extra_direct", s.extra_direct);
  s.extra_indirect = get_or(g, "extra_indirect", s.extra_indirect);
  s.indirect_noise = get_or(g, "indirect_noise", s.indirect_noise);
  s.lin_marker_noise = get_or(g, "lin_marker_noise", s.lin_marker_noise);
  s.rw_marker_step = get_or(g, "rw_marker_step", s.rw_marker_step);
  if (g.contains("missingness")) {
    s.missingness.clear();
    for (auto it = g.at("missingness").begin(); it != g.at("missingness").end();
         ++it)
      s.missingness[std::stoi(it.key())] =
          it.value().get<std::vector<std::string>>();
  }
  return s;
}

PipelineConfig pipeline_from(const json& cfg, unsigned long long seed) {
  PipelineConfig p;
  p.seed = seed;
  if (!cfg.contains("pipeline")) return p;
  const json& c = cfg.at("pipeline");
  p.svm_C = get_or(c, "svm_C", p.svm_C);
  p.svm_sigma = get_or(c, "svm_sigma", p.svm_sigma);
  p.svm_tol = get_or(c, "svm_tol", p.svm_tol);
  p.platt_cv_folds = get_or(c, "platt_cv_folds", p.platt_cv_folds);
  p.grid_search = get_or(c, "grid_search", p.grid_search);
  p.phi_sigma = get_or(c, "phi_sigma", p.phi_sigma);
  p.optimizer.max_iters = get_or(c, "optimizer_max_iters", p.optimizer.max_iters);
  p.optimizer.restarts = get_or(c, "optimizer_restarts", p.optimizer.restarts);
  p.imputer_params.knn_k = get_or(c, "knn_k", p.imputer_params.knn_k);
  p.imputer_params.ridge_lambda =
      get_or(c, "ridge_lambda", p.imputer_params.ridge_lambda);
  return p;
}

EvaluationPlan plan_from(const json& cfg, unsigned long long seed,
                         double budget) {
  EvaluationPlan plan;
  plan.seed = seed;
  plan.budgets = {budget};
  if (!cfg.contains("plan")) return plan;
  const json& c = cfg.at("plan");
  plan.recommendation_fraction =
      get_or(c, "recommendation_fraction", plan.recommendation_fraction);
  plan.validation_folds = get_or(c, "validation_folds", plan.validation_folds);
  plan.visits = get_or(c, "visits", plan.visits);
  return plan;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string hex64(std::uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_manifest(const fs::path& dir, const std::vector<fs::path>& files) {
  json m;
  m["artifacts"] = json::object();
  for (const auto& f : files)
    m["artifacts"][fs::relative(f, dir).string()] = hex64(file_hash(f));
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string series_table(const std::vector<SeriesPoint>& points) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "series\tv\tmean\tquarter_std\tn\n";
  for (const auto& p : points)
    os << p.series << "\t" << p.v << "\t" << p.mean << "\t" << p.quarter_std
       << "\t" << p.n << "\n";
  return os.str();
}

std::string imputer_table(const std::vector<ImputerComparisonRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "feature\tmethod\tmetric\tvalue\tskipped_folds\n";
  for (const auto& r : rows)
    os << r.feature << "\t" << r.method << "\t" << r.metric << "\t" << r.value
       << "\t" << r.skipped_folds << "\n";
  return os.str();
}

LongitudinalCohort obtain_cohort(const std::string& data_dir, const json& cfg,
                                 unsigned long long seed) {
  if (!data_dir.empty())
    return load_cohort(data_dir, fs::path(data_dir) / "schema.json");
  return generate_cohort(generator_spec_from(cfg), seed);
}

int cmd_generate(const json& cfg, unsigned long long seed,
                 const std::string& out) {
  LongitudinalCohort cohort = generate_cohort(generator_spec_from(cfg), seed);
  fs::path dir(out);
  save_cohort(cohort, dir, dir / "schema.json");
  std::vector<fs::path> files = {dir / "schema.json"};
  for (const auto& vd : cohort.visits())
    files.push_back(dir / ("visit" + std::to_string(vd.v) + ".csv"));
  write_manifest(dir, files);
  std::cout << "wrote cohort with " << cohort.visits().size() << " visits to "
            << dir.string() << "\n";
  return 0;
}

int cmd_train(const json& cfg, unsigned long long seed, const std::string& out,
              const std::string& data_dir, int visit, bool use_risk) {
  LongitudinalCohort raw = obtain_cohort(data_dir, cfg, seed);
  EvaluationPlan plan = plan_from(cfg, seed, 1.0);
  LongitudinalCohort cohort = scale_cohort(raw, plan);
  PipelineConfig config = pipeline_from(cfg, seed);

  std::set<std::string> all_ids;
  for (const auto& inst : cohort.visit(visit).instances) all_ids.insert(inst.id);

  std::vector<VisitModelBundle> chain;
  int first = use_risk ? 1 : visit;
  for (int v = first; v <= visit; ++v) {
    std::set<std::string> ids;
    for (const auto& inst : cohort.visit(v).instances) ids.insert(inst.id);
    chain.push_back(train_visit_bundle(
        cohort, v, use_risk ? chain : std::vector<VisitModelBundle>{}, ids,
        config));
  }

  fs::path dir(out);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  for (const auto& bundle : chain) {
    fs::path p = dir / ("bundle_v" + std::to_string(bundle.v) + ".json");
    save_bundle(bundle, p);
    files.push_back(p);
  }
  write_manifest(dir, files);
  std::cout << "trained " << chain.size() << " bundle(s), visit " << visit
            << (use_risk ? " with" : " without") << " risk augmentation\n";
  return 0;
}

int cmd_recommend(const json& cfg, unsigned long long seed, double budget,
                  const std::string& out, const std::string& data_dir,
                  const std::string& model_dir, const std::string& id,
                  int visit) {
  LongitudinalCohort raw = obtain_cohort(data_dir, cfg, seed);
  EvaluationPlan plan = plan_from(cfg, seed, budget);
  LongitudinalCohort cohort = scale_cohort(raw, plan);

  fs::path mdir(model_dir);
  std::vector<VisitModelBundle> chain;
  for (int v = 1; v <= visit; ++v) {
    fs::path p = mdir / ("bundle_v" + std::to_string(v) + ".json");
    if (fs::exists(p)) chain.push_back(load_bundle(p));
  }
  if (chain.empty() || chain.back().v != visit)
    throw std::runtime_error("no bundle for visit " + std::to_string(visit) +
                             " under " + model_dir);
  const VisitModelBundle& bundle = chain.back();
  std::vector<VisitModelBundle> priors(chain.begin(), chain.end() - 1);

  const Instance* inst = cohort.visit(visit).find(id);
  if (!inst) throw std::runtime_error("id not found at visit: " + id);

  Eigen::VectorXd aug =
      augmented_vector(cohort, priors, bundle, id, inst->values);
  ObjectiveContext ctx = make_objective_context(bundle, aug);
  SplitInstance parts = split_features(aug, bundle.augmented_schema);
  FeasibleRegion region =
      make_feasible_region(bundle.augmented_schema, parts.x_d, budget);
  PipelineConfig config = pipeline_from(cfg, seed);
  RecommendationResult rec = optimize(ctx, region, config.optimizer, seed);
  rec.id = id;

  write_text(out, recommendation_to_json(rec) + "\n");
  std::cout << "p(before)=" << rec.probability_before
            << " p(after)=" << rec.probability_after
            << " cost=" << rec.cost_spent << "\n";
  return 0;
}

int run_experiment(int which, const json& cfg, unsigned long long seed,
                   double budget, const std::string& out,
                   const std::string& data_dir) {
  LongitudinalCohort cohort = obtain_cohort(data_dir, cfg, seed);
  EvaluationPlan plan = plan_from(cfg, seed, budget);
  PipelineConfig config = pipeline_from(cfg, seed);

  fs::path dir(out);
  fs::create_directories(dir);
  std::vector<fs::path> files;
  if (which == 3) {
    auto rows = experiment_3(cohort, plan, config.imputer_params);
    fs::path p = dir / "imputers.tsv";
    write_text(p, imputer_table(rows));
    files.push_back(p);
    std::cout << imputer_table(rows);
  } else {
    auto points = which == 1 ? experiment_1(cohort, plan, config)
                             : experiment_2(cohort, plan, config);
    fs::path p = dir / ("series" + std::to_string(which) + ".tsv");
    write_text(p, series_table(points));
    files.push_back(p);
    // one plot-data file per series: x, mean, quarter_std
    std::map<std::string, std::ostringstream> plots;
    for (const auto& pt : points) {
      auto& os = plots[pt.series];
      if (os.str().empty()) {
        os << std::setprecision(17);
        os << "x\tmean\tquarter_std\n";
      }
      os << pt.v << "\t" << pt.mean << "\t" << pt.quarter_std << "\n";
    }
    for (const auto& [series, os] : plots) {
      fs::path pp = dir / ("plot_" + series + ".tsv");
      write_text(pp, os.str());
      files.push_back(pp);
    }
    std::cout << series_table(points);
  }
  write_manifest(dir, files);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"longitudinal inverse classification toolkit"};
  app.require_subcommand(1);

  std::string config_path, out = "out", data_dir, model_dir, patient_id;
  unsigned long long seed = 1;
  double budget = 1.0;
  int visit = 1;
  bool use_risk = false;

  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--seed", seed, "random seed");
  app.add_option("--budget", budget, "change budget");
  app.add_option("--out", out, "output file or directory");

  auto* gen = app.add_subcommand("generate", "write a synthetic cohort");
  auto* train = app.add_subcommand("train", "fit visit model bundles");
  train->add_option("--data", data_dir, "cohort directory (else synthesize)");
  train->add_option("--visit", visit, "visit to model");
  train->add_flag("--risk", use_risk, "augment with past-risk features");
  auto* rec = app.add_subcommand("recommend", "optimize one instance");
  rec->add_option("--data", data_dir, "cohort directory (else synthesize)");
  rec->add_option("--model", model_dir, "bundle directory")->required();
  rec->add_option("--id", patient_id, "instance id")->required();
  rec->add_option("--visit", visit, "visit of the instance");
  auto* e1 = app.add_subcommand("exp1", "per-visit optimization study");
  auto* e2 = app.add_subcommand("exp2", "risk augmentation and chaining study");
  auto* e3 = app.add_subcommand("exp3", "imputation method comparison");
  auto* ib = app.add_subcommand("impute-bench", "alias of exp3");
  for (auto* s : {e1, e2, e3, ib})
    s->add_option("--data", data_dir, "cohort directory (else synthesize)");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(config_path);
    if (gen->parsed()) return cmd_generate(cfg, seed, out);
    if (train->parsed()) return cmd_train(cfg, seed, out, data_dir, visit, use_risk);
    if (rec->parsed())
      return cmd_recommend(cfg, seed, budget, out, data_dir, model_dir,
                           patient_id, visit);
    if (e1->parsed()) return run_experiment(1, cfg, seed, budget, out, data_dir);
    if (e2->parsed()) return run_experiment(2, cfg, seed, budget, out, data_dir);
    if (e3->parsed() || ib->parsed())
      return run_experiment(3, cfg, seed, budget, out, data_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
