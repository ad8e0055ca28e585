#include <mmse/config.hpp>

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace mmse {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
  }
}

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) fail(std::string("missing key '") + key + "' in " + where);
  return *it;
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) fail(what + " must be a number");
  return v.get<double>();
}

VectorXd vector_of(const json& v, int k, const std::string& what) {
  if (!v.is_array() || static_cast<int>(v.size()) != k) fail(what + " must be an array of length " + std::to_string(k));
  VectorXd out(k);
  for (int i = 0; i < k; ++i) out(i) = number(v[static_cast<std::size_t>(i)], what);
  return out;
}

MatrixXd matrix_of(const json& v, int k, const std::string& what) {
  if (!v.is_array() || static_cast<int>(v.size()) != k) fail(what + " must have " + std::to_string(k) + " rows");
  MatrixXd out(k, k);
  for (int r = 0; r < k; ++r) out.row(r) = vector_of(v[static_cast<std::size_t>(r)], k, what).transpose();
  return out;
}

json matrix_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

ProblemConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("config must be a JSON object");
  reject_unknown(doc, {"dimension", "mu0", "sigma0", "channels", "epsilon"}, "config");

  ProblemConfig cfg;
  const json& dim = require(doc, "dimension", "config");
  if (!dim.is_number_integer() || dim.get<int>() < 1) fail("dimension must be a positive integer");
  cfg.dimension = dim.get<int>();
  cfg.mu0 = vector_of(require(doc, "mu0", "config"), cfg.dimension, "mu0");
  cfg.sigma0 = matrix_of(require(doc, "sigma0", "config"), cfg.dimension, "sigma0");
  cfg.epsilon = number(require(doc, "epsilon", "config"), "epsilon");

  const json& channels = require(doc, "channels", "config");
  if (!channels.is_array() || channels.empty()) fail("channels must be a non-empty array");
  for (std::size_t j = 0; j < channels.size(); ++j) {
    const std::string where = "channels[" + std::to_string(j) + "]";
    const json& ch = channels[j];
    if (!ch.is_object()) fail(where + " must be an object");
    reject_unknown(ch, {"lambda", "sigma_n"}, where);
    cfg.ensemble.channels.push_back({matrix_of(require(ch, "sigma_n", where), cfg.dimension, where + ".sigma_n"),
                                     number(require(ch, "lambda", where), where + ".lambda")});
  }
  return cfg;
}

ProblemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string dump_config(const ProblemConfig& cfg) {
  json doc;
  doc["dimension"] = cfg.dimension;
  doc["mu0"] = json::array();
  for (Eigen::Index i = 0; i < cfg.mu0.size(); ++i) doc["mu0"].push_back(cfg.mu0(i));
  doc["sigma0"] = matrix_json(cfg.sigma0);
  doc["channels"] = json::array();
  for (const auto& ch : cfg.ensemble.channels) {
    doc["channels"].push_back({{"lambda", ch.weight}, {"sigma_n", matrix_json(ch.noise_covariance)}});
  }
  doc["epsilon"] = cfg.epsilon;
  return doc.dump(2) + "\n";
}

void write_config(const ProblemConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("cannot write config file '" + path + "'");
  out << dump_config(cfg);
  if (!out) fail("failed writing '" + path + "'");
}

Problem<double> to_problem(const ProblemConfig& cfg) {
  DivergenceBall<double> ball{{cfg.mu0, cfg.sigma0}, cfg.epsilon};
  return validate_problem(cfg.ensemble, ball);
}

}  // namespace mmse
