#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "epsfbm/engine.hpp"
#include "epsfbm/mlmc.hpp"
#include "epsfbm/sde.hpp"

namespace epsfbm::io {

inline constexpr const char* kSchema = "epsfbm/1";

/// Two-column CSV (time,value), 17 significant digits.
void write_path_csv(std::ostream& os, const DyadicPath& path);

/// CSV with one time column and one column per state component.
void write_states_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& states,
                      int level);

nlohmann::json certificate_manifest(const SfbmResult& result);
SfbmResult certificate_from_manifest(const nlohmann::json& j);

/// Recomputes every bound field of a certificate manifest from its stored
/// parameters and checks agreement to 1e-12.
void validate_certificate_manifest(const nlohmann::json& j);

nlohmann::json sde_manifest(const sde::SdeResult& result);

nlohmann::json mlmc_report(const mlmc::MlmcPlan& plan, const mlmc::MlmcEstimate& est);

/// Declarative affine field spec:
/// {"dim":d, "driver_dim":d', "mu":{"const":[...], "linear":[[...]]},
///  "sigma":{"const":[[...]], "linear":[[[...]]]},
///  "bounds":{"f":..., "df":..., "d2f":...}}
/// mu(y) = const + linear y; sigma_ij(y) = const_ij + sum_k linear_ijk y_k.
sde::VectorFieldSpec field_from_json(const nlohmann::json& j);
sde::VectorFieldSpec field_from_file(const std::string& path);

}  // namespace epsfbm::io
