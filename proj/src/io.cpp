#include "longric/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "longric/rng.hpp"

namespace longric {

using nlohmann::json;

namespace {

std::string role_name(FeatureRole r) {
  switch (r) {
    case FeatureRole::Immutable: return "immutable";
    case FeatureRole::Direct: return "direct";
    case FeatureRole::Indirect: return "indirect";
  }
  return "?";
}

FeatureRole role_from_name(const std::string& s) {
  if (s == "immutable") return FeatureRole::Immutable;
  if (s == "direct") return FeatureRole::Direct;
  if (s == "indirect") return FeatureRole::Indirect;
  throw ParseError("unknown feature role: " + s);
}

json spec_to_json(const FeatureSpec& f) {
  json j;
  j["name"] = f.name;
  j["role"] = role_name(f.role);
  j["kind"] = f.kind == FeatureKind::Binary ? "binary" : "continuous";
  j["lower"] = f.lower;
  j["upper"] = f.upper;
  if (f.role == FeatureRole::Direct) {
    j["cost"] = f.cost;
    j["direction"] = f.direction == 0 ? json("free") : json(f.direction);
  }
  if (f.scaling) {
    j["scaling"] = {{"min", f.scaling->min}, {"max", f.scaling->max}};
  }
  return j;
}

FeatureSpec spec_from_json(const json& j) {
  FeatureSpec f;
  f.name = j.at("name").get<std::string>();
  f.role = role_from_name(j.at("role").get<std::string>());
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "binary")
    f.kind = FeatureKind::Binary;
  else if (kind == "continuous")
    f.kind = FeatureKind::Continuous;
  else
    throw ParseError("unknown feature kind: " + kind);
  f.lower = j.at("lower").get<double>();
  f.upper = j.at("upper").get<double>();
  if (f.role == FeatureRole::Direct) {
    f.cost = j.at("cost").get<double>();
    const json& d = j.at("direction");
    if (d.is_string()) {
      if (d.get<std::string>() != "free")
        throw ParseError("direction must be 1, -1 or \"free\"");
      f.direction = 0;
    } else {
      f.direction = d.get<int>();
    }
  }
  if (j.contains("scaling")) {
    f.scaling = ScalingStats{j["scaling"].at("min").get<double>(),
                             j["scaling"].at("max").get<double>()};
  }
  return f;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::move(rows);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(),
                    j.at("cols").get<Eigen::Index>());
  const json& rows = j.at("data");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)]
                    .get<double>();
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  return v;
}

json svm_to_json(const SvmDualModel& m) {
  json j;
  j["support_vectors"] = matrix_to_json(m.support_vectors);
  j["dual_coef"] = vector_to_json(m.dual_coef);
  j["bias"] = m.bias;
  j["sigma"] = m.kernel.sigma;
  j["C"] = m.C;
  return j;
}

SvmDualModel svm_from_json(const json& j) {
  SvmDualModel m;
  m.support_vectors = matrix_from_json(j.at("support_vectors"));
  m.dual_coef = vector_from_json(j.at("dual_coef"));
  m.bias = j.at("bias").get<double>();
  m.kernel = GaussianKernel(j.at("sigma").get<double>());
  m.C = j.at("C").get<double>();
  return m;
}

json imputer_to_json(const ImputerModel& m) {
  json j;
  j["target_feature"] = m.target_feature;
  j["method"] = impute_method_name(m.method);
  j["target_kind"] =
      m.target_kind == FeatureKind::Binary ? "binary" : "continuous";
  j["knn_k"] = m.params.knn_k;
  j["ridge_lambda"] = m.params.ridge_lambda;
  j["cart_max_depth"] = m.params.cart_max_depth;
  j["cart_min_leaf"] = m.params.cart_min_leaf;
  j["weights"] = vector_to_json(m.weights);
  j["knn_inputs"] = matrix_to_json(m.knn_inputs);
  j["knn_targets"] = vector_to_json(m.knn_targets);
  json tree = json::array();
  for (const auto& n : m.tree)
    tree.push_back({{"feature", n.feature},
                    {"threshold", n.threshold},
                    {"left", n.left},
                    {"right", n.right},
                    {"value", n.value}});
  j["tree"] = std::move(tree);
  return j;
}

ImputerModel imputer_from_json(const json& j) {
  ImputerModel m;
  m.target_feature = j.at("target_feature").get<std::string>();
  m.method = impute_method_from_name(j.at("method").get<std::string>());
  m.target_kind = j.at("target_kind").get<std::string>() == "binary"
                      ? FeatureKind::Binary
                      : FeatureKind::Continuous;
  m.params.knn_k = j.at("knn_k").get<int>();
  m.params.ridge_lambda = j.at("ridge_lambda").get<double>();
  m.params.cart_max_depth = j.at("cart_max_depth").get<int>();
  m.params.cart_min_leaf = j.at("cart_min_leaf").get<int>();
  m.weights = vector_from_json(j.at("weights"));
  m.knn_inputs = matrix_from_json(j.at("knn_inputs"));
  m.knn_targets = vector_from_json(j.at("knn_targets"));
  for (const auto& n : j.at("tree")) {
    CartNode node;
    node.feature = n.at("feature").get<int>();
    node.threshold = n.at("threshold").get<double>();
    node.left = n.at("left").get<int>();
    node.right = n.at("right").get<int>();
    node.value = n.at("value").get<double>();
    m.tree.push_back(node);
  }
  return m;
}

json schema_to_json_obj(const FeatureSchema& schema) {
  json feats = json::array();
  for (const auto& f : schema.features()) feats.push_back(spec_to_json(f));
  return json{{"features", std::move(feats)}};
}

FeatureSchema schema_from_json_obj(const json& j) {
  std::vector<FeatureSpec> fs;
  for (const auto& f : j.at("features")) fs.push_back(spec_from_json(f));
  return FeatureSchema(std::move(fs));
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string format_value(double v) {
  // shortest representation that round-trips
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string schema_to_json(const FeatureSchema& schema) {
  return schema_to_json_obj(schema).dump(2);
}

FeatureSchema schema_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("schema parse error: ") + e.what());
  }
  return schema_from_json_obj(j);
}

FeatureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open schema file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return schema_from_json(ss.str());
}

void save_schema(const FeatureSchema& schema,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write schema file: " + path.string());
  out << schema_to_json(schema) << "\n";
}

LongitudinalCohort load_cohort(const std::filesystem::path& dir,
                               const std::filesystem::path& schema_path) {
  FeatureSchema base = load_schema(schema_path);
  std::vector<VisitData> visits;
  for (int v = 1;; ++v) {
    std::filesystem::path file = dir / ("visit" + std::to_string(v) + ".csv");
    if (!std::filesystem::exists(file)) break;
    std::ifstream in(file);
    if (!in) throw ParseError("cannot open " + file.string());
    std::string header;
    if (!std::getline(in, header))
      throw ParseError("empty cohort file: " + file.string());
    if (!header.empty() && header.back() == '\r') header.pop_back();
    std::vector<std::string> cols = split_csv_line(header);

    int id_col = -1, label_col = -1;
    std::vector<std::string> feature_names;
    std::vector<int> feature_cols;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (cols[c] == "id") {
        id_col = static_cast<int>(c);
      } else if (cols[c] == "label") {
        label_col = static_cast<int>(c);
      } else {
        if (!base.has_feature(cols[c]))
          throw ParseError("column " + cols[c] + " not in schema (" +
                           file.string() + ")");
        feature_names.push_back(cols[c]);
        feature_cols.push_back(static_cast<int>(c));
      }
    }
    if (id_col < 0 || label_col < 0)
      throw ParseError("missing id/label column in " + file.string());

    // visit schema keeps the base declaration order
    std::vector<FeatureSpec> specs;
    std::vector<int> ordered_cols;
    for (const auto& f : base.features()) {
      auto it = std::find(feature_names.begin(), feature_names.end(), f.name);
      if (it == feature_names.end()) continue;
      specs.push_back(f);
      ordered_cols.push_back(
          feature_cols[static_cast<std::size_t>(it - feature_names.begin())]);
    }
    if (specs.size() != feature_names.size())
      throw ParseError("duplicate feature column in " + file.string());

    VisitData vd;
    vd.v = v;
    vd.schema = FeatureSchema(std::move(specs));
    std::string line;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      std::vector<std::string> vals = split_csv_line(line);
      if (vals.size() != cols.size())
        throw ParseError(file.string() + ":" + std::to_string(lineno) +
                         ": row width does not match header");
      Instance inst;
      inst.id = vals[static_cast<std::size_t>(id_col)];
      inst.visit = v;
      inst.values.resize(static_cast<Eigen::Index>(ordered_cols.size()));
      try {
        for (std::size_t k = 0; k < ordered_cols.size(); ++k)
          inst.values(static_cast<Eigen::Index>(k)) =
              std::stod(vals[static_cast<std::size_t>(ordered_cols[k])]);
        vd.labels[inst.id] =
            std::stoi(vals[static_cast<std::size_t>(label_col)]);
      } catch (const std::exception&) {
        throw ParseError(file.string() + ":" + std::to_string(lineno) +
                         ": malformed numeric value");
      }
      vd.instances.push_back(std::move(inst));
    }
    visits.push_back(std::move(vd));
  }
  if (visits.empty())
    throw ParseError("no visit files found under " + dir.string());
  return LongitudinalCohort(std::move(visits));
}

void save_cohort(const LongitudinalCohort& cohort,
                 const std::filesystem::path& dir,
                 const std::filesystem::path& schema_path) {
  std::filesystem::create_directories(dir);
  save_schema(cohort.visit(1).schema, schema_path);
  for (const auto& vd : cohort.visits()) {
    std::filesystem::path file =
        dir / ("visit" + std::to_string(vd.v) + ".csv");
    std::ofstream out(file);
    if (!out) throw ParseError("cannot write " + file.string());
    out << "id";
    for (const auto& f : vd.schema.features()) out << "," << f.name;
    out << ",label\n";
    for (const auto& inst : vd.instances) {
      out << inst.id;
      for (Eigen::Index j = 0; j < inst.values.size(); ++j)
        out << "," << format_value(inst.values(j));
      out << "," << vd.labels.at(inst.id) << "\n";
    }
  }
}

std::string bundle_to_json(const VisitModelBundle& bundle) {
  json j;
  j["v"] = bundle.v;
  j["base_schema"] = schema_to_json_obj(bundle.base_schema);
  j["augmented_schema"] = schema_to_json_obj(bundle.augmented_schema);
  j["svm"] = svm_to_json(bundle.classifier.svm);
  j["platt_a"] = bundle.classifier.platt_a;
  j["platt_b"] = bundle.classifier.platt_b;
  j["risk_lo"] = bundle.risk_lo;
  j["risk_hi"] = bundle.risk_hi;
  j["has_phi"] = bundle.has_phi;
  if (bundle.has_phi) {
    j["phi"] = {{"train_inputs", matrix_to_json(bundle.phi.train_inputs)},
                {"train_targets", matrix_to_json(bundle.phi.train_targets)},
                {"sigma", bundle.phi.kernel.sigma},
                {"dim_d", bundle.phi.dim_d}};
  }
  json imp = json::object();
  for (const auto& [name, model] : bundle.imputers)
    imp[name] = imputer_to_json(model);
  j["imputers"] = std::move(imp);
  j["schema_hash"] = fnv1a(schema_to_json_obj(bundle.base_schema).dump());
  return j.dump();
}

VisitModelBundle bundle_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bundle parse error: ") + e.what());
  }
  VisitModelBundle b;
  b.v = j.at("v").get<int>();
  b.base_schema = schema_from_json_obj(j.at("base_schema"));
  b.augmented_schema = schema_from_json_obj(j.at("augmented_schema"));
  b.classifier.svm = svm_from_json(j.at("svm"));
  b.classifier.platt_a = j.at("platt_a").get<double>();
  b.classifier.platt_b = j.at("platt_b").get<double>();
  b.risk_lo = j.at("risk_lo").get<double>();
  b.risk_hi = j.at("risk_hi").get<double>();
  b.has_phi = j.at("has_phi").get<bool>();
  if (b.has_phi) {
    b.phi.train_inputs = matrix_from_json(j["phi"].at("train_inputs"));
    b.phi.train_targets = matrix_from_json(j["phi"].at("train_targets"));
    b.phi.kernel = GaussianKernel(j["phi"].at("sigma").get<double>());
    b.phi.dim_d = j["phi"].at("dim_d").get<Eigen::Index>();
  }
  for (const auto& [name, model] : j.at("imputers").items())
    b.imputers[name] = imputer_from_json(model);
  return b;
}

void save_bundle(const VisitModelBundle& bundle,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write bundle file: " + path.string());
  out << bundle_to_json(bundle);
}

VisitModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open bundle file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return bundle_from_json(ss.str());
}

std::string recommendation_to_json(const RecommendationResult& r) {
  json j;
  j["id"] = r.id;
  j["original"] = vector_to_json(r.original);
  j["optimized"] = vector_to_json(r.optimized);
  j["x_d_original"] = vector_to_json(r.x_d_original);
  j["x_d_optimized"] = vector_to_json(r.x_d_optimized);
  j["cost_spent"] = r.cost_spent;
  j["probability_before"] = r.probability_before;
  j["probability_after"] = r.probability_after;
  j["probability_after_rounded"] = r.probability_after_rounded;
  if (r.probability_next_immutables)
    j["probability_next_immutables"] = *r.probability_next_immutables;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["trace"] = r.trace;
  // per-feature deltas on the direct block
  json deltas = json::array();
  for (Eigen::Index k = 0; k < r.x_d_original.size(); ++k)
    deltas.push_back(r.x_d_optimized(k) - r.x_d_original(k));
  j["direct_deltas"] = std::move(deltas);
  return j.dump();
}

RecommendationResult recommendation_from_json(const std::string& text) {
  json j = json::parse(text);
  RecommendationResult r;
  r.id = j.at("id").get<std::string>();
  r.original = vector_from_json(j.at("original"));
  r.optimized = vector_from_json(j.at("optimized"));
  r.x_d_original = vector_from_json(j.at("x_d_original"));
  r.x_d_optimized = vector_from_json(j.at("x_d_optimized"));
  r.cost_spent = j.at("cost_spent").get<double>();
  r.probability_before = j.at("probability_before").get<double>();
  r.probability_after = j.at("probability_after").get<double>();
  r.probability_after_rounded = j.at("probability_after_rounded").get<double>();
  if (j.contains("probability_next_immutables"))
    r.probability_next_immutables =
        j["probability_next_immutables"].get<double>();
  r.iterations = j.at("iterations").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.trace = j.at("trace").get<std::vector<double>>();
  return r;
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file for hashing: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

}  // namespace longric
