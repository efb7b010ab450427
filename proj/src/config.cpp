#include "gpphs/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gpphs/digest.hpp"
#include "gpphs/errors.hpp"

namespace gpphs {

namespace {

using nlohmann::json;

json vec_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vec vec_from(const json& arr) {
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
  return v;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void maybe_vec(const json& j, const char* key, Vec& out) {
  if (j.contains(key)) out = vec_from(j.at(key));
}

}  // namespace

std::string ExperimentConfig::canonical_json() const {
  json j;
  j["schema_version"] = 1;
  j["seed"] = seed;
  j["plant"] = {{"plate_area", plant.plate_area},
                {"mass", plant.mass},
                {"permittivity", plant.permittivity},
                {"rest_gap", plant.rest_gap},
                {"damping", plant.damping},
                {"resistance", plant.resistance},
                {"spring_coeff", plant.spring_coeff}};
  j["excitation"] = {{"amplitude", excitation.amplitude},
                     {"frequency", excitation.frequency}};
  j["sampling"] = {{"t_end", sampling.t_end},
                   {"N", sampling.N},
                   {"noise_var", sampling.noise_var},
                   {"dt_target", sampling.dt_target},
                   {"x0", vec_json(sampling.x0)}};
  j["filter"] = {{"window", filter.window}, {"poly_order", filter.poly_order}};
  j["training"] = {{"restarts", training.restarts},
                   {"max_iters", training.max_iters},
                   {"init_step", training.init_step},
                   {"restart_jitter", training.restart_jitter}};
  j["design"] = {{"r_d", design.r_d},
                 {"x1_target", design.x1_target},
                 {"beta", vec_json(design.beta)},
                 {"domain_lo", vec_json(design.domain.lo)},
                 {"domain_hi", vec_json(design.domain.hi)},
                 {"grid_counts", design.grid_counts},
                 {"tol_match", design.tol_match},
                 {"x3_starts", design.x3_starts}};
  j["closed_loop"] = {{"t_end", closed_loop.t_end}, {"dt", closed_loop.dt}};
  j["sweep"] = {{"enabled", sweep.enabled},
                {"sizes", sweep.sizes},
                {"restarts", sweep.restarts},
                {"max_iters", sweep.max_iters}};
  return j.dump(2);
}

std::string ExperimentConfig::digest() const { return digest_hex(canonical_json()); }

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j = json::parse(text);
  if (j.value("schema_version", 1) != 1)
    throw Error("unsupported config schema_version");
  ExperimentConfig c;
  maybe(j, "seed", c.seed);
  if (j.contains("plant")) {
    const json& p = j["plant"];
    maybe(p, "plate_area", c.plant.plate_area);
    maybe(p, "mass", c.plant.mass);
    maybe(p, "permittivity", c.plant.permittivity);
    maybe(p, "rest_gap", c.plant.rest_gap);
    maybe(p, "damping", c.plant.damping);
    maybe(p, "resistance", c.plant.resistance);
    maybe(p, "spring_coeff", c.plant.spring_coeff);
  }
  if (j.contains("excitation")) {
    const json& e = j["excitation"];
    maybe(e, "amplitude", c.excitation.amplitude);
    maybe(e, "frequency", c.excitation.frequency);
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    maybe(s, "t_end", c.sampling.t_end);
    maybe(s, "N", c.sampling.N);
    maybe(s, "noise_var", c.sampling.noise_var);
    maybe(s, "dt_target", c.sampling.dt_target);
    maybe_vec(s, "x0", c.sampling.x0);
  }
  if (j.contains("filter")) {
    const json& f = j["filter"];
    maybe(f, "window", c.filter.window);
    maybe(f, "poly_order", c.filter.poly_order);
  }
  if (j.contains("training")) {
    const json& t = j["training"];
    maybe(t, "restarts", c.training.restarts);
    maybe(t, "max_iters", c.training.max_iters);
    maybe(t, "init_step", c.training.init_step);
    maybe(t, "restart_jitter", c.training.restart_jitter);
  }
  if (j.contains("design")) {
    const json& d = j["design"];
    maybe(d, "r_d", c.design.r_d);
    maybe(d, "x1_target", c.design.x1_target);
    maybe_vec(d, "beta", c.design.beta);
    maybe_vec(d, "domain_lo", c.design.domain.lo);
    maybe_vec(d, "domain_hi", c.design.domain.hi);
    maybe(d, "grid_counts", c.design.grid_counts);
    maybe(d, "tol_match", c.design.tol_match);
    maybe(d, "x3_starts", c.design.x3_starts);
  }
  if (j.contains("closed_loop")) {
    const json& cl = j["closed_loop"];
    maybe(cl, "t_end", c.closed_loop.t_end);
    maybe(cl, "dt", c.closed_loop.dt);
  }
  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    maybe(s, "enabled", c.sweep.enabled);
    maybe(s, "sizes", c.sweep.sizes);
    maybe(s, "restarts", c.sweep.restarts);
    maybe(s, "max_iters", c.sweep.max_iters);
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

void ExperimentConfig::to_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot open for writing: " + path);
  out << canonical_json() << "\n";
}

void ExperimentConfig::validate() const {
  plant.validate();
  if (!(sampling.t_end > 0.0) || sampling.N < 2 || sampling.noise_var < 0.0 ||
      !(sampling.dt_target > 0.0))
    throw ContractViolation("config: invalid sampling section");
  if (filter.window % 2 == 0 || filter.window < filter.poly_order + 2)
    throw ContractViolation("config: invalid filter section");
  if (training.restarts < 1 || training.max_iters < 1)
    throw ContractViolation("config: invalid training section");
  if (!(design.r_d > 0.0) || design.beta.size() != 3 ||
      (design.beta.array() < 0.0).any() || design.grid_counts.size() != 3)
    throw ContractViolation("config: invalid design section");
  if (design.domain.lo.size() != 3 || design.domain.hi.size() != 3 ||
      (design.domain.hi - design.domain.lo).minCoeff() <= 0.0)
    throw ContractViolation("config: invalid design domain");
  if (!(closed_loop.t_end > 0.0) || !(closed_loop.dt > 0.0))
    throw ContractViolation("config: invalid closed_loop section");
  if (sweep.enabled) {
    if (sweep.sizes.empty() || sweep.restarts < 1 || sweep.max_iters < 1)
      throw ContractViolation("config: invalid sweep section");
    for (int s : sweep.sizes)
      if (s < 2) throw ContractViolation("config: sweep sizes must be >= 2");
  }
}

}  // namespace gpphs
