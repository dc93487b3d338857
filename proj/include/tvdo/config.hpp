#pragma once

// JSON run configuration: strict schema validation (unknown keys rejected,
// errors carry a JSON pointer), resolution into an EnsembleConfig, and the
// echo document embedded into every output file.

#include <Eigen/Dense>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "tvdo/errors.hpp"
#include "tvdo/graph.hpp"
#include "tvdo/montecarlo.hpp"
#include "tvdo/objectives.hpp"
#include "tvdo/protocols.hpp"
#include "tvdo/sde.hpp"
#include "tvdo/timefn.hpp"

namespace tvdo::config {

using json = nlohmann::ordered_json;
using Eigen::VectorXd;

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& ptr) {
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key)) throw ConfigInvalid("unknown key '" + key + "'", ptr + "/" + key);
}

inline const json* find(const json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline double number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ConfigInvalid("expected a number", ptr);
  return j.get<double>();
}

inline double number_or(const json& obj, const std::string& key, double fallback,
                        const std::string& ptr) {
  const json* v = find(obj, key);
  return v ? number(*v, ptr + "/" + key) : fallback;
}

inline TimeFn parse_timefn(const json& j, const std::string& ptr) {
  if (j.is_number()) return TimeFn::constant(j.get<double>());
  if (!j.is_array()) throw ConfigInvalid("time coefficient must be a number or term list", ptr);
  TimeFn f;
  int idx = 0;
  for (const auto& term : j) {
    const std::string tptr = ptr + "/" + std::to_string(idx++);
    if (!term.is_object()) throw ConfigInvalid("term must be an object", tptr);
    reject_unknown(term, {"fn", "coef", "a", "b", "c", "d"}, tptr);
    const json* fn = find(term, "fn");
    if (!fn || !fn->is_string()) throw ConfigInvalid("term needs a string 'fn'", tptr);
    const std::string kind = fn->get<std::string>();
    const double coef = number_or(term, "coef", 1.0, tptr);
    const double a = number_or(term, "a", 1.0, tptr);
    if (kind == "const")
      f += TimeFn::constant(coef);
    else if (kind == "exp")
      f += TimeFn::exp(coef, a);
    else if (kind == "sin")
      f += TimeFn::sin(coef, a);
    else if (kind == "cos")
      f += TimeFn::cos(coef, a);
    else if (kind == "tanh")
      f += TimeFn::tanh(coef, a);
    else if (kind == "rational")
      f += TimeFn::rational(a, number_or(term, "b", 0.0, tptr), number_or(term, "c", 0.0, tptr),
                            number_or(term, "d", 1.0, tptr), coef);
    else
      throw ConfigInvalid("unknown coefficient kind '" + kind + "'", tptr + "/fn");
  }
  return f;
}

}  // namespace detail

struct RunConfig {
  json resolved;  // the document all outputs echo

  bool has_graph = false;
  graph::WeightedDigraph digraph;
  graph::BalanceMode balance_mode = graph::BalanceMode::least_squares;

  std::vector<objectives::ObjectiveModel> models;
  std::vector<std::string> objective_names;

  bool has_centralized_gains = false;
  bool has_estimator_gains = false;
  bool has_distributed_gains = false;
  protocols::CentralizedGains cgains;
  protocols::EstimatorGains egains;
  protocols::DistributedGains dgains;

  double dt = 1e-3;
  double horizon = 1.0;
  double sigma_bar = 0.0;
  double boundary_layer = 0.0;
  sde::DiffusionSpec diffusion;

  montecarlo::Mode mode = montecarlo::Mode::centralized;
  int realizations = 1;
  std::uint64_t root_seed = 0;
  long record_stride = 1;
  bool save_states = false;  // write one state CSV per realization
  std::vector<VectorXd> initial_states;

  double theta = 0.01;
  std::map<std::string, double> overrides;  // analysis constant overrides
  double grid_t_max = 10.0, grid_t_step = 0.1;  // constant-estimation sampling grids
  double grid_x_max = 10.0, grid_x_step = 1.0;

  int threads = 0;  // CLI only

  montecarlo::EnsembleConfig to_ensemble() const {
    montecarlo::EnsembleConfig e;
    e.mode = mode;
    e.realizations = realizations;
    e.root_seed = root_seed;
    e.dt = dt;
    e.horizon = horizon;
    e.record_stride = record_stride;
    e.initial_states = initial_states;
    e.cgains = cgains;
    e.egains = egains;
    e.egains.boundary_layer = boundary_layer;
    e.dgains = dgains;
    if (has_graph) e.balanced = graph::detail_balance(digraph, balance_mode);
    e.models = models;
    e.diffusion = diffusion;
    e.threads = threads;
    e.keep_states = save_states;
    return e;
  }
};

inline graph::BalanceMode parse_balance_mode(const std::string& s, const std::string& ptr) {
  if (s == "strict") return graph::BalanceMode::strict;
  if (s == "least-squares") return graph::BalanceMode::least_squares;
  if (s == "symmetrize") return graph::BalanceMode::symmetrize;
  throw ConfigInvalid("balance_mode must be strict|least-squares|symmetrize", ptr);
}

inline RunConfig parse_config(const json& doc, const std::string& base_dir = ".") {
  using detail::find;
  using detail::number;
  using detail::number_or;
  using detail::reject_unknown;
  if (!doc.is_object()) throw ConfigInvalid("config must be a JSON object", "");
  reject_unknown(doc, {"graph", "objectives", "gains", "sde", "ensemble", "analysis"}, "");

  RunConfig c;
  c.resolved = doc;

  if (const json* g = find(doc, "graph")) {
    reject_unknown(*g, {"file", "matrix", "balance_mode"}, "/graph");
    Eigen::MatrixXd a;
    if (const json* file = find(*g, "file")) {
      if (!file->is_string()) throw ConfigInvalid("graph.file must be a string", "/graph/file");
      std::string path = file->get<std::string>();
      if (!path.empty() && path[0] != '/') path = base_dir + "/" + path;
      a = graph::load_adjacency_csv(path);
    } else if (const json* mat = find(*g, "matrix")) {
      if (!mat->is_array() || mat->empty())
        throw ConfigInvalid("graph.matrix must be a nonempty array of rows", "/graph/matrix");
      const int n = static_cast<int>(mat->size());
      a.resize(n, n);
      for (int i = 0; i < n; ++i) {
        const json& row = (*mat)[i];
        if (!row.is_array() || int(row.size()) != n)
          throw ConfigInvalid("graph.matrix rows must all have length n",
                              "/graph/matrix/" + std::to_string(i));
        for (int j = 0; j < n; ++j)
          a(i, j) = number(row[j], "/graph/matrix/" + std::to_string(i));
      }
    } else {
      throw ConfigInvalid("graph needs 'file' or 'matrix'", "/graph");
    }
    try {
      c.digraph = graph::WeightedDigraph::from_matrix(std::move(a));
    } catch (const Error& e) {
      throw ConfigInvalid(e.what(), "/graph/matrix");
    }
    if (const json* bm = find(*g, "balance_mode")) {
      if (!bm->is_string())
        throw ConfigInvalid("balance_mode must be a string", "/graph/balance_mode");
      c.balance_mode = parse_balance_mode(bm->get<std::string>(), "/graph/balance_mode");
    }
    c.has_graph = true;
  }

  const json* objs = find(doc, "objectives");
  if (!objs || !objs->is_array() || objs->empty())
    throw ConfigInvalid("objectives must be a nonempty array", "/objectives");
  int oi = 0;
  for (const auto& o : *objs) {
    const std::string optr = "/objectives/" + std::to_string(oi++);
    if (o.is_string()) {
      const std::string name = o.get<std::string>();
      try {
        c.models.push_back(objectives::registry_make(name));
      } catch (const Error& e) {
        throw ConfigInvalid(e.what(), optr);
      }
      c.objective_names.push_back(name);
    } else if (o.is_object()) {
      reject_unknown(o, {"name", "w", "r", "c"}, optr);
      const json* w = find(o, "w");
      const json* r = find(o, "r");
      if (!w || !r || !w->is_array() || !r->is_array() || w->size() != r->size() || w->empty())
        throw ConfigInvalid("custom objective needs matching nonempty 'w' and 'r' arrays",
                            optr);
      std::vector<TimeFn> wf, rf;
      for (size_t k = 0; k < w->size(); ++k) {
        wf.push_back(detail::parse_timefn((*w)[k], optr + "/w/" + std::to_string(k)));
        rf.push_back(detail::parse_timefn((*r)[k], optr + "/r/" + std::to_string(k)));
      }
      TimeFn cf;
      if (const json* cc = find(o, "c")) cf = detail::parse_timefn(*cc, optr + "/c");
      std::string name = "tracking-quadratic";
      if (const json* nm = find(o, "name")) {
        if (!nm->is_string()) throw ConfigInvalid("name must be a string", optr + "/name");
        name = nm->get<std::string>();
      }
      c.models.push_back(objectives::make_tracking_quadratic(name, wf, rf, cf));
      c.objective_names.push_back(name);
    } else {
      throw ConfigInvalid("objective entries are registry names or custom objects", optr);
    }
  }
  const int dim = c.models.front().dimension;
  for (const auto& m : c.models)
    if (m.dimension != dim)
      throw ConfigInvalid("objectives must share one dimension", "/objectives");

  if (const json* g = find(doc, "gains")) {
    reject_unknown(*g,
                   {"gamma1", "alpha1", "beta1", "gamma2", "alpha2", "beta2", "gamma3",
                    "gamma4", "p", "q"},
                   "/gains");
    if (find(*g, "gamma1")) {
      c.cgains.gamma1 = number_or(*g, "gamma1", 0.0, "/gains");
      c.has_centralized_gains = true;
    }
    const double p = number_or(*g, "p", 0.0, "/gains");
    const double q = number_or(*g, "q", 0.0, "/gains");
    if (find(*g, "alpha1") || find(*g, "beta1") || find(*g, "gamma2")) {
      c.egains.alpha1 = number_or(*g, "alpha1", 0.0, "/gains");
      c.egains.beta1 = number_or(*g, "beta1", 0.0, "/gains");
      c.egains.gamma2 = number_or(*g, "gamma2", 0.0, "/gains");
      c.egains.p = p;
      c.egains.q = q;
      c.has_estimator_gains = true;
    }
    if (find(*g, "alpha2") || find(*g, "beta2") || find(*g, "gamma3") || find(*g, "gamma4")) {
      c.dgains.alpha2 = number_or(*g, "alpha2", 0.0, "/gains");
      c.dgains.beta2 = number_or(*g, "beta2", 0.0, "/gains");
      c.dgains.gamma3 = number_or(*g, "gamma3", 0.0, "/gains");
      c.dgains.gamma4 = number_or(*g, "gamma4", 0.0, "/gains");
      c.dgains.p = p;
      c.dgains.q = q;
      c.has_distributed_gains = true;
    }
  }

  if (const json* s = find(doc, "sde")) {
    reject_unknown(*s, {"dt", "horizon", "sigma_bar", "diffusion", "boundary_layer"}, "/sde");
    c.dt = number_or(*s, "dt", c.dt, "/sde");
    c.horizon = number_or(*s, "horizon", c.horizon, "/sde");
    c.sigma_bar = number_or(*s, "sigma_bar", 0.0, "/sde");
    c.boundary_layer = number_or(*s, "boundary_layer", 0.0, "/sde");
    if (!(c.dt > 0.0) || !(c.horizon > 0.0))
      throw ConfigInvalid("dt and horizon must be positive", "/sde");
    if (const json* d = find(*s, "diffusion")) {
      if (d->is_string()) {
        const std::string name = d->get<std::string>();
        if (name == "example-trig") {
          if (dim != 2)
            throw ConfigInvalid("example-trig diffusion is 2-dimensional", "/sde/diffusion");
          c.diffusion = sde::DiffusionSpec::example_trig();
        } else if (name == "zero") {
          c.diffusion = sde::DiffusionSpec::zero(dim);
        } else {
          throw ConfigInvalid("diffusion must be example-trig|zero|{diag:[...]}",
                              "/sde/diffusion");
        }
      } else if (d->is_object()) {
        reject_unknown(*d, {"diag"}, "/sde/diffusion");
        const json* diag = find(*d, "diag");
        if (!diag || !diag->is_array() || int(diag->size()) != dim)
          throw ConfigInvalid("diffusion.diag must list one coefficient per coordinate",
                              "/sde/diffusion/diag");
        c.diffusion.name = "custom-diag";
        c.diffusion.diag.clear();
        for (size_t k = 0; k < diag->size(); ++k)
          c.diffusion.diag.push_back(
              detail::parse_timefn((*diag)[k], "/sde/diffusion/diag/" + std::to_string(k)));
        c.diffusion.sigma_bar = c.sigma_bar;
      } else {
        throw ConfigInvalid("diffusion must be a name or {diag:[...]}", "/sde/diffusion");
      }
    } else {
      c.diffusion = sde::DiffusionSpec::zero(dim);
    }
    c.diffusion.sigma_bar = c.sigma_bar;
  } else {
    c.diffusion = sde::DiffusionSpec::zero(dim);
  }

  const json* e = find(doc, "ensemble");
  if (!e) throw ConfigInvalid("config needs an 'ensemble' section", "/ensemble");
  reject_unknown(
      *e, {"mode", "realizations", "root_seed", "record_stride", "save_states",
           "initial_states"},
      "/ensemble");
  if (const json* ss = find(*e, "save_states")) {
    if (!ss->is_boolean())
      throw ConfigInvalid("save_states must be a boolean", "/ensemble/save_states");
    c.save_states = ss->get<bool>();
  }
  const json* mode = find(*e, "mode");
  if (!mode || !mode->is_string())
    throw ConfigInvalid("ensemble.mode must be centralized|distributed", "/ensemble/mode");
  const std::string ms = mode->get<std::string>();
  if (ms == "centralized")
    c.mode = montecarlo::Mode::centralized;
  else if (ms == "distributed")
    c.mode = montecarlo::Mode::distributed;
  else
    throw ConfigInvalid("ensemble.mode must be centralized|distributed", "/ensemble/mode");
  c.realizations = int(number_or(*e, "realizations", 1, "/ensemble"));
  if (c.realizations < 1)
    throw ConfigInvalid("realizations must be >= 1", "/ensemble/realizations");
  if (const json* seed = find(*e, "root_seed")) {
    if (!seed->is_number_integer() && !seed->is_number_unsigned())
      throw ConfigInvalid("root_seed must be an integer", "/ensemble/root_seed");
    c.root_seed = seed->get<std::uint64_t>();
  }
  c.record_stride = long(number_or(*e, "record_stride", 1, "/ensemble"));
  if (c.record_stride < 1)
    throw ConfigInvalid("record_stride must be >= 1", "/ensemble/record_stride");
  const json* init = find(*e, "initial_states");
  if (!init || !init->is_array() || init->empty())
    throw ConfigInvalid("ensemble.initial_states must be a nonempty array",
                        "/ensemble/initial_states");
  int si = 0;
  for (const auto& row : *init) {
    const std::string sptr = "/ensemble/initial_states/" + std::to_string(si++);
    if (!row.is_array() || int(row.size()) != dim)
      throw ConfigInvalid("initial state dimension mismatch", sptr);
    VectorXd x(dim);
    for (int k = 0; k < dim; ++k) x(k) = number(row[k], sptr);
    c.initial_states.push_back(std::move(x));
  }

  if (const json* a = find(doc, "analysis")) {
    reject_unknown(*a, {"theta", "overrides", "grid"}, "/analysis");
    c.theta = number_or(*a, "theta", c.theta, "/analysis");
    if (!(c.theta > 0.0 && c.theta < 1.0))
      throw ConfigInvalid("theta must lie in (0,1)", "/analysis/theta");
    if (const json* ov = find(*a, "overrides")) {
      reject_unknown(*ov, {"l1", "l2", "h", "L1", "L2", "L3", "L4", "L5", "h_d", "L_H"},
                     "/analysis/overrides");
      for (const auto& [key, val] : ov->items())
        c.overrides[key] = number(val, "/analysis/overrides/" + key);
    }
    if (const json* gr = find(*a, "grid")) {
      reject_unknown(*gr, {"t_max", "t_step", "x_max", "x_step"}, "/analysis/grid");
      c.grid_t_max = number_or(*gr, "t_max", c.grid_t_max, "/analysis/grid");
      c.grid_t_step = number_or(*gr, "t_step", c.grid_t_step, "/analysis/grid");
      c.grid_x_max = number_or(*gr, "x_max", c.grid_x_max, "/analysis/grid");
      c.grid_x_step = number_or(*gr, "x_step", c.grid_x_step, "/analysis/grid");
      if (!(c.grid_t_step > 0.0) || !(c.grid_x_step > 0.0) || !(c.grid_t_max >= 0.0))
        throw ConfigInvalid("grid steps must be positive", "/analysis/grid");
    }
  }

  // cross checks
  if (c.mode == montecarlo::Mode::distributed) {
    if (!c.has_graph) throw ConfigInvalid("distributed mode needs a graph", "/graph");
    if (!c.has_estimator_gains || !c.has_distributed_gains)
      throw ConfigInvalid("distributed mode needs estimator and protocol gains", "/gains");
    if (c.models.size() != c.initial_states.size())
      throw ConfigInvalid("one objective per agent required", "/objectives");
  } else {
    if (!c.has_centralized_gains)
      throw ConfigInvalid("centralized mode needs gains.gamma1", "/gains");
    if (c.models.size() != 1 || c.initial_states.size() != 1)
      throw ConfigInvalid("centralized mode runs one agent with one objective", "/ensemble");
  }

  // declared diffusion bound must hold on a sampled grid
  if (!c.diffusion.is_zero()) {
    for (int k = 0; k <= 200; ++k) {
      const double t = c.horizon * double(k) / 200.0;
      if (c.diffusion.matrix(t).norm() > c.sigma_bar + 1e-12)
        throw ConfigInvalid("diffusion exceeds declared sigma_bar", "/sde/sigma_bar");
    }
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(std::string("config is not valid JSON: ") + e.what(), "");
  }
  std::string dir = ".";
  const auto slash = path.find_last_of('/');
  if (slash != std::string::npos) dir = path.substr(0, slash);
  return parse_config(doc, dir);
}

}  // namespace tvdo::config
