#include <dropsurv/error.hpp>
#include <dropsurv/serialize.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace dropsurv {

namespace {

using nlohmann::json;

constexpr std::string_view kFormat = "dropsurv-model";
constexpr int kVersion = 1;

// NaN and infinities have no JSON literal; they travel as null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

json encoder_json(const Encoder& e) {
  json categorical = json::array();
  for (const auto& c : e.spec().categorical)
    categorical.push_back({{"field", c.field}, {"levels", c.levels}, {"reference", c.reference}});
  json numeric = json::array();
  for (const auto& n : e.spec().numeric) numeric.push_back({{"field", n.field}, {"standardize", n.standardize}});
  json scaling = json::array();
  for (const auto& s : e.scaling())
    scaling.push_back(s ? json{{"mean", s->mean}, {"sd", s->sd}} : json(nullptr));
  return {{"column_names", e.columns()},
          {"scaling", std::move(scaling)},
          {"encoding", {{"categorical", std::move(categorical)}, {"numeric", std::move(numeric)}}}};
}

/// Field access with a schema error naming the path on any mismatch.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {}

  Reader at(std::string_view key) const {
    if (!node_.is_object()) fail("expected an object");
    const auto it = node_.find(key);
    if (it == node_.end()) throw SchemaError("model document: missing '" + join(key) + "'");
    return Reader(*it, join(key));
  }

  bool has(std::string_view key) const { return node_.is_object() && node_.contains(key); }

  std::size_t size() const {
    if (!node_.is_array()) fail("expected an array");
    return node_.size();
  }

  Reader operator[](std::size_t i) const {
    if (!node_.is_array() || i >= node_.size()) fail("index out of range");
    return Reader(node_[i], path_ + "[" + std::to_string(i) + "]");
  }

  bool is_null() const { return node_.is_null(); }

  double number(bool allow_null = false) const {
    if (allow_null && node_.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!node_.is_number()) fail("expected a number");
    return node_.get<double>();
  }

  long integer() const {
    if (!node_.is_number_integer()) fail("expected an integer");
    return node_.get<long>();
  }

  bool boolean() const {
    if (!node_.is_boolean()) fail("expected a boolean");
    return node_.get<bool>();
  }

  std::string string() const {
    if (!node_.is_string()) fail("expected a string");
    return node_.get<std::string>();
  }

  std::vector<std::string> strings() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].string());
    return out;
  }

  Eigen::VectorXd vector(bool allow_null = false) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
    for (std::size_t i = 0; i < size(); ++i) out[static_cast<Eigen::Index>(i)] = (*this)[i].number(allow_null);
    return out;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw SchemaError("model document: '" + path_ + "': " + what);
  }

 private:
  std::string join(std::string_view key) const { return path_.empty() ? std::string(key) : path_ + "." + std::string(key); }

  const json& node_;
  std::string path_;
};

Encoder read_encoder(const Reader& doc) {
  EncodingSpec spec;
  const Reader enc = doc.at("encoding");
  const Reader cats = enc.at("categorical");
  for (std::size_t i = 0; i < cats.size(); ++i)
    spec.categorical.push_back({cats[i].at("field").string(), cats[i].at("levels").strings(),
                                cats[i].at("reference").string()});
  const Reader nums = enc.at("numeric");
  for (std::size_t i = 0; i < nums.size(); ++i)
    spec.numeric.push_back({nums[i].at("field").string(), nums[i].at("standardize").boolean()});

  const auto columns = doc.at("column_names").strings();
  const Reader sc = doc.at("scaling");
  std::vector<std::optional<ColumnScaling>> scaling;
  for (std::size_t i = 0; i < sc.size(); ++i) {
    if (sc[i].is_null())
      scaling.emplace_back();
    else
      scaling.push_back(ColumnScaling{sc[i].at("mean").number(), sc[i].at("sd").number()});
  }
  try {
    if (!spec.categorical.empty() || !spec.numeric.empty()) spec.validate();
    return Encoder(std::move(spec), columns, std::move(scaling));
  } catch (const Error& e) {
    throw SchemaError(std::string("model document: ") + e.what());
  }
}

void check_length(const Reader& node, std::size_t expected, const char* what) {
  if (node.size() != expected)
    node.fail(std::string(what) + " has " + std::to_string(node.size()) + " entries, expected " +
              std::to_string(expected));
}

}  // namespace

std::string_view model_kind(const AnyModel& model) {
  switch (model.index()) {
    case 0:
      return "cox";
    case 1:
      return "ols";
    default:
      return "svr";
  }
}

nlohmann::json model_to_json(const AnyModel& model) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["kind"] = model_kind(model);
  std::visit(
      [&](const auto& m) {
        const json layout = encoder_json(m.encoder);
        for (const auto& [k, v] : layout.items()) doc[k] = v;
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CoxModel>) {
          doc["beta"] = vector_json(m.beta);
          doc["standard_errors"] = vector_json(m.standard_errors);
          json steps = json::array();
          for (const auto& s : m.baseline.steps) steps.push_back({{"semester", s.semester}, {"hazard", s.hazard}});
          doc["baseline"] = std::move(steps);
          doc["diagnostics"] = {{"iterations", m.diagnostics.iterations},
                                {"initial_log_likelihood", number(m.diagnostics.initial_log_likelihood)},
                                {"log_likelihood", number(m.diagnostics.log_likelihood)},
                                {"gradient_max_norm", number(m.diagnostics.gradient_max_norm)}};
        } else if constexpr (std::is_same_v<M, LinearModel>) {
          doc["intercept"] = m.intercept;
          doc["weights"] = vector_json(m.weights);
          doc["diagnostics"] = {{"training_rows", m.training_rows}};
        } else {
          doc["weights"] = vector_json(m.weights);
          doc["bias"] = m.bias;
          doc["epsilon"] = m.epsilon;
          doc["cost"] = m.cost;
          doc["diagnostics"] = {{"iterations", m.diagnostics.iterations},
                                {"primal_objective", number(m.diagnostics.primal_objective)},
                                {"dual_objective", number(m.diagnostics.dual_objective)},
                                {"relative_gap", number(m.diagnostics.relative_gap)},
                                {"max_violation", number(m.diagnostics.max_violation)},
                                {"training_rows", m.training_indices.size()},
                                {"support_vectors", m.support_indices.size()}};
        }
      },
      model);
  return doc;
}

AnyModel model_from_json(const nlohmann::json& document) {
  const Reader doc(document, "");
  if (doc.at("format").string() != kFormat) doc.at("format").fail("not a dropsurv model");
  if (doc.at("version").integer() != kVersion) doc.at("version").fail("unsupported version");
  const std::string kind = doc.at("kind").string();
  const Encoder encoder = read_encoder(doc);
  const std::size_t p = encoder.size();

  if (kind == "cox") {
    CoxModel m;
    m.encoder = encoder;
    check_length(doc.at("beta"), p, "beta");
    m.beta = doc.at("beta").vector();
    check_length(doc.at("standard_errors"), p, "standard_errors");
    m.standard_errors = doc.at("standard_errors").vector(true);
    const Reader steps = doc.at("baseline");
    int previous = 0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      BaselineStep s{static_cast<int>(steps[i].at("semester").integer()), steps[i].at("hazard").number()};
      if (s.semester <= previous) steps[i].fail("semesters must be positive and increasing");
      if (!(s.hazard >= 0.0)) steps[i].fail("hazard increments must be nonnegative");
      previous = s.semester;
      m.baseline.steps.push_back(s);
    }
    const Reader d = doc.at("diagnostics");
    m.diagnostics.iterations = static_cast<int>(d.at("iterations").integer());
    m.diagnostics.initial_log_likelihood = d.at("initial_log_likelihood").number(true);
    m.diagnostics.log_likelihood = d.at("log_likelihood").number(true);
    m.diagnostics.gradient_max_norm = d.at("gradient_max_norm").number(true);
    return m;
  }
  if (kind == "ols") {
    LinearModel m;
    m.encoder = encoder;
    m.intercept = doc.at("intercept").number();
    check_length(doc.at("weights"), p, "weights");
    m.weights = doc.at("weights").vector();
    m.training_rows = static_cast<std::size_t>(doc.at("diagnostics").at("training_rows").integer());
    return m;
  }
  if (kind == "svr") {
    SvrModel m;
    m.encoder = encoder;
    check_length(doc.at("weights"), p, "weights");
    m.weights = doc.at("weights").vector();
    m.bias = doc.at("bias").number();
    m.epsilon = doc.at("epsilon").number();
    m.cost = doc.at("cost").number();
    const Reader d = doc.at("diagnostics");
    m.diagnostics.iterations = d.at("iterations").integer();
    m.diagnostics.primal_objective = d.at("primal_objective").number(true);
    m.diagnostics.dual_objective = d.at("dual_objective").number(true);
    m.diagnostics.relative_gap = d.at("relative_gap").number(true);
    m.diagnostics.max_violation = d.at("max_violation").number(true);
    return m;
  }
  doc.at("kind").fail("unknown model kind '" + kind + "'");
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model_to_json(model).dump(2) + "\n");
}

AnyModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open model file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  json doc;
  try {
    doc = json::parse(text.str());
  } catch (const json::parse_error& e) {
    throw SchemaError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return model_from_json(doc);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path tmp = path.string() + ".tmp" + std::to_string(rd() % 1000000);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw ValidationError("failed writing '" + path.string() + "'");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    fs::remove(tmp, ignored);
    throw ValidationError("cannot write '" + path.string() + "': " + ec.message());
  }
}

}  // namespace dropsurv
