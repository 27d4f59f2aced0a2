#include "epsfbm/manifest.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "epsfbm/holder.hpp"

namespace epsfbm::io {

namespace {

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

void write_path_csv(std::ostream& os, const DyadicPath& path) {
  os << "time,value\n";
  for (std::size_t i = 0; i < path.values.size(); ++i)
    os << fmt17(path.time_at(i)) << ',' << fmt17(path.values[i]) << '\n';
}

void write_states_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& states,
                      int level) {
  os << "time";
  if (!states.empty())
    for (Eigen::Index c = 0; c < states[0].size(); ++c) os << ",y" << c;
  os << '\n';
  const double mesh = 1.0 / static_cast<double>(std::size_t{1} << level);
  for (std::size_t i = 0; i < states.size(); ++i) {
    os << fmt17(static_cast<double>(i) * mesh);
    for (Eigen::Index c = 0; c < states[i].size(); ++c)
      os << ',' << fmt17(states[i](c));
    os << '\n';
  }
}

nlohmann::json certificate_manifest(const SfbmResult& result) {
  const EpsilonCertificate& c = result.cert;
  nlohmann::json j;
  j["schema"] = kSchema;
  j["kind"] = "fbm_certificate";
  j["params"] = {{"hurst", c.params.hurst}, {"delta", c.params.delta},
                 {"rho", c.params.rho},     {"nu", c.params.nu},
                 {"nustar", c.params.nustar}};
  j["seed"] = c.seed;
  j["stream"] = c.stream_id;
  j["starting_level"] = result.ledger.starting_level;
  j["breaker_levels"] = result.ledger.breaker_levels;
  j["N"] = c.last_breaker;
  j["N_eps"] = c.truncation;
  j["K_nu"] = c.k_nu;
  j["sup_bound"] = c.sup_bound;
  if (c.holder) {
    j["holder"] = {{"alpha", c.holder->alpha}, {"bound", c.holder->bound}};
  }
  j["level"] = result.path.level;
  j["values"] = result.path.values;
  return j;
}

SfbmResult certificate_from_manifest(const nlohmann::json& j) {
  if (j.at("schema").get<std::string>() != kSchema)
    throw std::invalid_argument("certificate_from_manifest: unknown schema");
  SfbmResult r;
  const auto& pj = j.at("params");
  r.cert.params = RecordParams(pj.at("hurst").get<double>(), pj.at("delta").get<double>(),
                               pj.at("nu").get<double>(), pj.at("nustar").get<double>());
  r.cert.seed = j.at("seed").get<std::uint64_t>();
  r.cert.stream_id = j.at("stream").get<std::uint64_t>();
  r.cert.last_breaker = j.at("N").get<int>();
  r.cert.truncation = j.at("N_eps").get<int>();
  r.cert.k_nu = j.at("K_nu").get<int>();
  r.cert.sup_bound = j.at("sup_bound").get<double>();
  if (j.contains("holder")) {
    HolderCertificate hc;
    hc.alpha = j.at("holder").at("alpha").get<double>();
    hc.bound = j.at("holder").at("bound").get<double>();
    r.cert.holder = hc;
  }
  r.ledger.starting_level = j.at("starting_level").get<int>();
  r.ledger.breaker_levels = j.at("breaker_levels").get<std::vector<int>>();
  r.ledger.last_breaker = r.cert.last_breaker;
  r.ledger.finalized = true;
  r.path = DyadicPath(r.cert.params.hurst, j.at("level").get<int>(),
                      j.at("values").get<std::vector<double>>());
  return r;
}

void validate_certificate_manifest(const nlohmann::json& j) {
  const SfbmResult r = certificate_from_manifest(j);
  const double sup = uniform_error_bound(r.cert.truncation, r.cert.params);
  if (std::abs(sup - r.cert.sup_bound) > 1e-12)
    throw std::runtime_error("manifest validation: sup bound mismatch");
  if (r.cert.holder) {
    const double hb = fbm_holder_certificate(r.path, r.ledger, r.cert.holder->alpha,
                                             r.cert.params);
    if (std::abs(hb - r.cert.holder->bound) > 1e-12)
      throw std::runtime_error("manifest validation: Hoelder bound mismatch");
  }
  const int k_nu = K_of_nu(r.cert.params.nu, r.cert.params.delta);
  if (k_nu != r.cert.k_nu)
    throw std::runtime_error("manifest validation: K(nu) mismatch");
}

nlohmann::json sde_manifest(const sde::SdeResult& result) {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["kind"] = "sde_solution";
  j["eps"] = result.eps;
  j["G"] = result.g_constant;
  j["N_Y"] = result.level;
  j["C_alpha"] = result.c_alpha;
  nlohmann::json certs = nlohmann::json::array();
  for (const EpsilonCertificate& c : result.driver_certs) {
    nlohmann::json cj;
    cj["N"] = c.last_breaker;
    cj["level"] = c.truncation;
    cj["sup_bound"] = c.sup_bound;
    cj["seed"] = c.seed;
    cj["stream"] = c.stream_id;
    if (c.holder)
      cj["holder"] = {{"alpha", c.holder->alpha}, {"bound", c.holder->bound}};
    certs.push_back(cj);
  }
  j["driver_certificates"] = certs;
  return j;
}

nlohmann::json mlmc_report(const mlmc::MlmcPlan& plan, const mlmc::MlmcEstimate& est) {
  nlohmann::json j;
  j["schema"] = kSchema;
  j["kind"] = "mlmc_report";
  j["plan"] = {{"K", plan.top_level},
               {"replications", plan.replications},
               {"eps", plan.eps},
               {"var_constant", plan.var_constant},
               {"decay", plan.decay}};
  j["estimate"] = est.value;
  j["std_error"] = est.std_error;
  j["level_means"] = est.level_means;
  j["level_vars"] = est.level_vars;
  j["level_costs"] = est.level_costs;
  j["total_cost"] = est.total_cost;
  j["breaker_search_cost"] = est.breaker_search_cost;
  return j;
}

namespace {

Eigen::VectorXd parse_vector(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

Eigen::MatrixXd parse_matrix(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const Eigen::Index r = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd out(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
      throw std::invalid_argument("field spec: ragged matrix");
    for (Eigen::Index k = 0; k < c; ++k)
      out(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace

sde::VectorFieldSpec field_from_json(const nlohmann::json& j) {
  sde::VectorFieldSpec spec;
  spec.dim = j.at("dim").get<int>();
  spec.driver_dim = j.at("driver_dim").get<int>();
  if (spec.dim < 1 || spec.driver_dim < 1)
    throw std::invalid_argument("field spec: dimensions must be positive");

  const Eigen::VectorXd mu_const = j.contains("mu") && j["mu"].contains("const")
                                       ? parse_vector(j["mu"]["const"])
                                       : Eigen::VectorXd::Zero(spec.dim);
  const Eigen::MatrixXd mu_linear = j.contains("mu") && j["mu"].contains("linear")
                                        ? parse_matrix(j["mu"]["linear"])
                                        : Eigen::MatrixXd::Zero(spec.dim, spec.dim);
  if (mu_const.size() != spec.dim || mu_linear.rows() != spec.dim ||
      mu_linear.cols() != spec.dim)
    throw std::invalid_argument("field spec: mu dimensions inconsistent");

  Eigen::MatrixXd sigma_const = Eigen::MatrixXd::Zero(spec.dim, spec.driver_dim);
  if (j.contains("sigma") && j["sigma"].contains("const"))
    sigma_const = parse_matrix(j["sigma"]["const"]);
  std::vector<Eigen::MatrixXd> sigma_linear(
      static_cast<std::size_t>(spec.driver_dim),
      Eigen::MatrixXd::Zero(spec.dim, spec.dim));
  if (j.contains("sigma") && j["sigma"].contains("linear")) {
    const auto& lin = j["sigma"]["linear"];
    if (static_cast<int>(lin.size()) != spec.dim)
      throw std::invalid_argument("field spec: sigma.linear shape");
    for (int i = 0; i < spec.dim; ++i) {
      const auto& row = lin[static_cast<std::size_t>(i)];
      if (static_cast<int>(row.size()) != spec.driver_dim)
        throw std::invalid_argument("field spec: sigma.linear shape");
      for (int jcol = 0; jcol < spec.driver_dim; ++jcol) {
        const auto coeffs = row[static_cast<std::size_t>(jcol)].get<std::vector<double>>();
        if (static_cast<int>(coeffs.size()) != spec.dim)
          throw std::invalid_argument("field spec: sigma.linear shape");
        for (int kdim = 0; kdim < spec.dim; ++kdim)
          sigma_linear[static_cast<std::size_t>(jcol)](i, kdim) = coeffs[static_cast<std::size_t>(kdim)];
      }
    }
  }
  if (sigma_const.rows() != spec.dim || sigma_const.cols() != spec.driver_dim)
    throw std::invalid_argument("field spec: sigma dimensions inconsistent");

  spec.drift = [mu_const, mu_linear](const Eigen::VectorXd& y) -> Eigen::VectorXd {
    return mu_const + mu_linear * y;
  };
  spec.diffusion = [sigma_const, sigma_linear,
                    d = spec.dim, dp = spec.driver_dim](const Eigen::VectorXd& y) {
    Eigen::MatrixXd s = sigma_const;
    for (int jcol = 0; jcol < dp; ++jcol)
      s.col(jcol) += sigma_linear[static_cast<std::size_t>(jcol)] * y;
    (void)d;
    return s;
  };

  const auto& bounds = j.at("bounds");
  spec.f_bound = bounds.at("f").get<double>();
  spec.df_bound = bounds.at("df").get<double>();
  spec.d2f_bound = bounds.at("d2f").get<double>();
  return spec;
}

sde::VectorFieldSpec field_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("field spec: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return field_from_json(j);
}

}  // namespace epsfbm::io
