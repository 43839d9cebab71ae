// Model files are JSON objects:
//   {"format": "coughscreen-model", "version": 1, "family": "lr",
//    "feature_dim": D, "spec": {...}, "scaler": {"mean": [...], "scale": [...]},
//    "params": {...family specific arrays...}}

#include <json.hpp>

#include "coughscreen/classifiers.hpp"

namespace coughscreen::classifiers {
namespace {

using nlohmann::json;

constexpr const char* kFormat = "coughscreen-model";
constexpr int kVersion = 1;

json matrix_json(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.data().size()) throw DataError("model file: matrix size mismatch");
  m.data() = data;
  return m;
}

json spec_json(const ClassifierSpec& s) {
  json j{{"family", to_string(s.family)},
         {"nu1", s.nu1},
         {"nu2", s.nu2},
         {"nu3", s.nu3},
         {"lr_tolerance", s.lr_tolerance},
         {"lr_max_iterations", s.lr_max_iterations},
         {"neighbours", s.neighbours},
         {"leaf_size", s.leaf_size},
         {"svm_c", s.svm_c},
         {"svm_gamma", s.svm_gamma},
         {"kernel", to_string(s.kernel)},
         {"svm_tolerance", s.svm_tolerance},
         {"hidden", s.hidden},
         {"mlp_l2", s.mlp_l2},
         {"learning_rate", s.learning_rate},
         {"epochs", s.epochs},
         {"batch_size", s.batch_size},
         {"seed", s.seed},
         {"class_weights", s.class_weights},
         {"paper_mode", s.paper_mode}};
  j["standardize"] = s.standardize ? json(*s.standardize) : json(nullptr);
  return j;
}

ClassifierSpec spec_from(const json& j) {
  ClassifierSpec s;
  s.family = parse_family(j.at("family").get<std::string>());
  s.nu1 = j.at("nu1").get<double>();
  s.nu2 = j.at("nu2").get<double>();
  s.nu3 = j.at("nu3").get<double>();
  s.lr_tolerance = j.at("lr_tolerance").get<double>();
  s.lr_max_iterations = j.at("lr_max_iterations").get<std::size_t>();
  s.neighbours = j.at("neighbours").get<std::size_t>();
  s.leaf_size = j.at("leaf_size").get<std::size_t>();
  s.svm_c = j.at("svm_c").get<double>();
  s.svm_gamma = j.at("svm_gamma").get<double>();
  s.kernel = parse_kernel(j.at("kernel").get<std::string>());
  s.svm_tolerance = j.at("svm_tolerance").get<double>();
  s.hidden = j.at("hidden").get<std::size_t>();
  s.mlp_l2 = j.at("mlp_l2").get<double>();
  s.learning_rate = j.at("learning_rate").get<double>();
  s.epochs = j.at("epochs").get<std::size_t>();
  s.batch_size = j.at("batch_size").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.class_weights = j.at("class_weights").get<bool>();
  s.paper_mode = j.at("paper_mode").get<bool>();
  if (!j.at("standardize").is_null()) s.standardize = j.at("standardize").get<bool>();
  return s;
}

}  // namespace

std::string to_json(const TrainedModel& model) {
  json j{{"format", kFormat},
         {"version", kVersion},
         {"family", to_string(model.spec().family)},
         {"feature_dim", model.feature_dim()},
         {"spec", spec_json(model.spec())},
         {"scaler", {{"mean", model.scaler().mean}, {"scale", model.scaler().scale}}}};
  json params;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LrParams>) {
          params = {{"a", p.a}, {"b", p.b}, {"iterations", p.iterations},
                    {"final_loss", p.final_loss}};
        } else if constexpr (std::is_same_v<T, KnnParams>) {
          params = {{"points", matrix_json(p.tree.points())}, {"labels", p.labels},
                    {"leaf_size", p.tree.leaf_size()}};
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          params = {{"support", matrix_json(p.support)}, {"coef", p.coef}, {"bias", p.bias},
                    {"platt_a", p.platt_a}, {"platt_b", p.platt_b},
                    {"iterations", p.iterations}};
        } else {
          params = {{"w1", matrix_json(p.w1)}, {"b1", p.b1}, {"w2", p.w2}, {"b2", p.b2},
                    {"epochs", p.epochs}, {"final_loss", p.final_loss}};
        }
      },
      model.params());
  j["params"] = std::move(params);
  return j.dump(1);
}

TrainedModel model_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kFormat) throw DataError("not a coughscreen model");
    if (j.at("version").get<int>() != kVersion) {
      throw DataError("unsupported model version " + std::to_string(j.at("version").get<int>()));
    }
    ClassifierSpec spec = spec_from(j.at("spec"));
    const auto dim = j.at("feature_dim").get<std::size_t>();
    Standardizer scaler;
    scaler.mean = j.at("scaler").at("mean").get<std::vector<double>>();
    scaler.scale = j.at("scaler").at("scale").get<std::vector<double>>();
    const json& p = j.at("params");
    TrainedModel::Params params;
    switch (spec.family) {
      case Family::kLR: {
        LrParams lr;
        lr.a = p.at("a").get<double>();
        lr.b = p.at("b").get<std::vector<double>>();
        lr.iterations = p.at("iterations").get<std::size_t>();
        lr.final_loss = p.at("final_loss").get<double>();
        if (lr.b.size() != dim) throw DataError("model file: coefficient count mismatch");
        params = std::move(lr);
        break;
      }
      case Family::kKNN: {
        KnnParams knn;
        knn.tree = KdTree(matrix_from(p.at("points")), p.at("leaf_size").get<std::size_t>());
        knn.labels = p.at("labels").get<std::vector<int>>();
        params = std::move(knn);
        break;
      }
      case Family::kSVM: {
        SvmParams svm;
        svm.support = matrix_from(p.at("support"));
        svm.coef = p.at("coef").get<std::vector<double>>();
        svm.bias = p.at("bias").get<double>();
        svm.platt_a = p.at("platt_a").get<double>();
        svm.platt_b = p.at("platt_b").get<double>();
        svm.iterations = p.at("iterations").get<std::size_t>();
        params = std::move(svm);
        break;
      }
      case Family::kMLP: {
        MlpParams mlp;
        mlp.w1 = matrix_from(p.at("w1"));
        mlp.b1 = p.at("b1").get<std::vector<double>>();
        mlp.w2 = p.at("w2").get<std::vector<double>>();
        mlp.b2 = p.at("b2").get<double>();
        mlp.epochs = p.at("epochs").get<std::size_t>();
        mlp.final_loss = p.at("final_loss").get<double>();
        params = std::move(mlp);
        break;
      }
    }
    return TrainedModel(std::move(spec), dim, std::move(scaler), std::move(params));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

}  // namespace coughscreen::classifiers
