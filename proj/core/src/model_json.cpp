#include <nlohmann/json.hpp>
#include <stdexcept>

#include "polymom/model_spec.hpp"

namespace polymom {

using nlohmann::json;

namespace {

json matrix_to_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const json& rows, const char* what) {
  if (!rows.is_array() || rows.empty()) {
    throw std::invalid_argument(std::string(what) + ": expected a non-empty array of rows");
  }
  int nr = static_cast<int>(rows.size());
  int nc = static_cast<int>(rows[0].size());
  Eigen::MatrixXd m(nr, nc);
  for (int r = 0; r < nr; ++r) {
    if (static_cast<int>(rows[r].size()) != nc) {
      throw std::invalid_argument(std::string(what) + ": ragged rows");
    }
    for (int c = 0; c < nc; ++c) m(r, c) = rows[r][c].get<double>();
  }
  return m;
}

void expect_keys(const json& j, std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed) {
      if (it.key() == k) {
        ok = true;
        break;
      }
    }
    if (!ok) throw std::invalid_argument("model: unknown field \"" + it.key() + "\"");
  }
}

}  // namespace

json model_to_json(const ModelSpec& model) {
  return std::visit(
      [](const auto& node) -> json {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ModelSpec::UnivariateLeaf>) {
          return json{{"kind", family_name(node.family)}, {"params", node.params}};
        } else if constexpr (std::is_same_v<T, ModelSpec::GaussianLeaf>) {
          json params;
          params["mean"] = std::vector<double>(node.mean.data(), node.mean.data() + node.mean.size());
          params["cov"] = matrix_to_rows(node.cov);
          return json{{"kind", "mv_gaussian"}, {"params", std::move(params)}};
        } else if constexpr (std::is_same_v<T, ModelSpec::MixtureNode>) {
          json children = json::array();
          for (const ModelSpec& c : node.children) children.push_back(model_to_json(c));
          return json{{"kind", "mixture"}, {"weights", node.weights}, {"children", std::move(children)}};
        } else if constexpr (std::is_same_v<T, ModelSpec::ProductNode>) {
          json children = json::array();
          for (const ModelSpec& c : node.children) children.push_back(model_to_json(c));
          return json{{"kind", "product"}, {"children", std::move(children)}};
        } else {
          json children = json::array();
          children.push_back(model_to_json(node.child.front()));
          return json{{"kind", "reparam"},
                      {"matrix", matrix_to_rows(node.matrix)},
                      {"children", std::move(children)}};
        }
      },
      model.node());
}

ModelSpec model_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) {
    throw std::invalid_argument("model: expected an object with a \"kind\" field");
  }
  const std::string kind = j["kind"].get<std::string>();

  if (kind == "mixture") {
    expect_keys(j, {"kind", "weights", "children"});
    if (!j.contains("weights") || !j.contains("children")) {
      throw std::invalid_argument("mixture: needs weights and children");
    }
    std::vector<ModelSpec> children;
    for (const json& c : j["children"]) children.push_back(model_from_json(c));
    return ModelSpec::mixture(j["weights"].get<std::vector<double>>(), std::move(children));
  }
  if (kind == "product") {
    expect_keys(j, {"kind", "children"});
    if (!j.contains("children")) throw std::invalid_argument("product: needs children");
    std::vector<ModelSpec> children;
    for (const json& c : j["children"]) children.push_back(model_from_json(c));
    return ModelSpec::product(std::move(children));
  }
  if (kind == "reparam") {
    expect_keys(j, {"kind", "matrix", "children"});
    if (!j.contains("matrix") || !j.contains("children") || j["children"].size() != 1) {
      throw std::invalid_argument("reparam: needs matrix and exactly one child");
    }
    return ModelSpec::reparam(rows_to_matrix(j["matrix"], "reparam matrix"),
                              model_from_json(j["children"][0]));
  }
  if (kind == "mv_gaussian") {
    expect_keys(j, {"kind", "params"});
    if (!j.contains("params") || !j["params"].is_object()) {
      throw std::invalid_argument("mv_gaussian: needs params with mean and cov");
    }
    const json& p = j["params"];
    expect_keys(p, {"mean", "cov"});
    auto mean_vec = p.at("mean").get<std::vector<double>>();
    Eigen::VectorXd mean = Eigen::Map<Eigen::VectorXd>(mean_vec.data(), mean_vec.size());
    return ModelSpec::mv_gaussian(std::move(mean), rows_to_matrix(p.at("cov"), "mv_gaussian cov"));
  }

  expect_keys(j, {"kind", "params"});
  auto family = family_from_name(kind);  // throws for weibull/cauchy
  if (!family) throw std::invalid_argument("model: unknown kind \"" + kind + "\"");
  if (!j.contains("params")) throw std::invalid_argument(kind + ": needs params");
  return ModelSpec::leaf(*family, j["params"].get<std::vector<double>>());
}

}  // namespace polymom
