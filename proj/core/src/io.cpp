#include "overcount/io.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "overcount/errors.hpp"

namespace overcount {

namespace {

using nlohmann::json;

constexpr int kSchema = 1;

json vec(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(m.row(i).transpose()));
  return rows;
}

Eigen::VectorXd to_vec(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_array()) {
    throw InputError(std::string("missing array field '") + name + "'");
  }
  const auto v = j.at(name).get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double to_num(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_number()) {
    throw InputError(std::string("missing numeric field '") + name + "'");
  }
  return j.at(name).get<double>();
}

Eigen::MatrixXd to_mat(const json& j, const char* name) {
  if (!j.contains(name) || !j.at(name).is_array()) {
    throw InputError(std::string("missing array field '") + name + "'");
  }
  const auto rows = j.at(name).get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw InputError("ragged matrix field");
    for (std::size_t c = 0; c < rows[i].size(); ++c) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
    }
  }
  return m;
}

json params_json(const FamilyParams& params) {
  json p;
  std::visit(
      [&p](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, MnParams>) {
          p["pi"] = vec(q.pi);
        } else if constexpr (std::is_same_v<T, DmParams>) {
          p["theta"] = vec(q.theta);
        } else if constexpr (std::is_same_v<T, RcmParams>) {
          p["pi"] = vec(q.pi);
          p["rho"] = q.rho;
        } else if constexpr (std::is_same_v<T, NmParams>) {
          p["pi"] = vec(q.pi);
          p["beta"] = q.beta;
        } else if constexpr (std::is_same_v<T, GdmParams>) {
          p["alpha"] = vec(q.alpha);
          p["beta"] = vec(q.beta);
        } else {
          p["w"] = vec(q.w);
          p["beta"] = vec(q.beta);
          p["alpha"] = mat(q.alpha);
        }
      },
      params);
  return p;
}

FamilyParams params_from(Family family, const json& p) {
  FamilyParams out;
  switch (family) {
    case Family::mn: out = MnParams{to_vec(p, "pi")}; break;
    case Family::dm: out = DmParams{to_vec(p, "theta")}; break;
    case Family::rcm: out = RcmParams{to_vec(p, "pi"), to_num(p, "rho")}; break;
    case Family::nm: out = NmParams{to_vec(p, "pi"), to_num(p, "beta")}; break;
    case Family::gdm: out = GdmParams{to_vec(p, "alpha"), to_vec(p, "beta")}; break;
    case Family::ddm: out = DdmParams{to_vec(p, "w"), to_vec(p, "beta"), to_mat(p, "alpha")}; break;
  }
  try {
    validate(out);
  } catch (const std::domain_error& e) {
    throw InputError(std::string("invalid parameters: ") + e.what());
  }
  return out;
}

json parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw InputError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw InputError("JSON document must be an object");
  if (!j.contains("schema") || !j.at("schema").is_number_integer()) {
    throw InputError("missing schema version");
  }
  if (j.at("schema").get<int>() != kSchema) {
    throw InputError("unsupported schema version " + j.at("schema").dump());
  }
  if (!j.contains("family") || !j.at("family").is_string()) throw InputError("missing family");
  return j;
}

}  // namespace

std::string params_to_json(const FamilyParams& params, int indent) {
  json j;
  j["schema"] = kSchema;
  j["family"] = std::string(to_string(family_of(params)));
  j["params"] = params_json(params);
  return j.dump(indent) + "\n";
}

FamilyParams params_from_json(std::string_view text) {
  const json j = parse(text);
  if (!j.contains("params")) throw InputError("missing params");
  try {
    return params_from(parse_family(j.at("family").get<std::string>()), j.at("params"));
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed parameters: ") + e.what());
  }
}

std::string fit_result_to_json(const FitResult& r, int indent) {
  json j;
  j["schema"] = kSchema;
  j["family"] = std::string(to_string(family_of(r.params)));
  if (family_of(r.params) == Family::ddm) j["k"] = std::get<DdmParams>(r.params).components();
  j["params"] = params_json(r.params);
  j["loglik"] = r.loglik;
  j["n_params"] = r.n_params;
  j["n_obs"] = r.n_obs;
  j["aic"] = r.aic;
  j["bic"] = r.bic;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["overparameterized"] = r.overparameterized;
  j["message"] = r.message;
  j["trace"] = r.trace;
  return j.dump(indent) + "\n";
}

FitResult fit_result_from_json(std::string_view text) {
  const json j = parse(text);
  FitResult r;
  try {
    r.params = params_from(parse_family(j.at("family").get<std::string>()), j.at("params"));
    r.loglik = j.at("loglik").get<double>();
    r.n_params = j.at("n_params").get<std::size_t>();
    r.n_obs = j.value("n_obs", std::size_t{0});
    r.aic = j.at("aic").get<double>();
    r.bic = j.at("bic").get<double>();
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.value("iterations", 0);
    r.overparameterized = j.value("overparameterized", false);
    r.message = j.value("message", std::string());
    r.trace = j.value("trace", std::vector<double>{});
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed fit result: ") + e.what());
  }
  return r;
}

void write_trace_csv(const FitResult& result, std::ostream& out) {
  out << "iteration,loglik\n";
  char buf[40];
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", result.trace[i]);
    out << i << ',' << buf << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()) % 100000) +
         "_" + std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw std::runtime_error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw std::runtime_error("cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace overcount
