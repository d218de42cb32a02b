#include "coefid/experiments.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace coefid {

DescentConfig descent_for(const ExperimentSpec& spec) {
  DescentConfig cfg;
  cfg.functional = spec.functional;
  cfg.max_iterations = spec.max_iters;
  return cfg;
}

DescentConfig descent_from_json(const std::string& text, DescentConfig cfg) {
  using json = nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("descent config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("descent config must be a JSON object");

  auto number = [](const json& v, const std::string& key) {
    if (!v.is_number()) throw ValidationError(key + ": expected a number");
    return v.get<double>();
  };
  auto integer = [](const json& v, const std::string& key) {
    if (!v.is_number_integer()) throw ValidationError(key + ": expected an integer");
    return v.get<int>();
  };
  auto boolean = [](const json& v, const std::string& key) {
    if (!v.is_boolean()) throw ValidationError(key + ": expected true or false");
    return v.get<bool>();
  };

  for (const auto& [key, v] : doc.items()) {
    if (key == "functional") {
      if (!v.is_string()) throw ValidationError("functional: expected a string");
      cfg.functional = functional_from_string(v.get<std::string>());
    } else if (key == "recover") {
      if (!v.is_array()) throw ValidationError("recover: expected an array such as [\"p\"]");
      cfg.recover_p = cfg.recover_q = cfg.recover_f = false;
      for (const auto& c : v) {
        const std::string name = c.is_string() ? c.get<std::string>() : "";
        if (name == "p") cfg.recover_p = true;
        else if (name == "q") cfg.recover_q = true;
        else if (name == "f") cfg.recover_f = true;
        else throw ValidationError("recover: entries must be \"p\", \"q\" or \"f\"");
      }
    } else if (key == "alpha0") cfg.initial_step = number(v, key);
    else if (key == "shrink") cfg.shrink = number(v, key);
    else if (key == "growth") cfg.growth = number(v, key);
    else if (key == "c1") cfg.sufficient_decrease = number(v, key);
    else if (key == "max_iters") cfg.max_iterations = integer(v, key);
    else if (key == "tol") cfg.stop_tolerance = number(v, key);
    else if (key == "window") cfg.stop_window = integer(v, key);
    else if (key == "cutoff") {
      if (v.is_null()) cfg.cutoff.reset();
      else cfg.cutoff = number(v, key);
    } else if (key == "neuberger") {
      if (!v.is_object()) throw ValidationError("neuberger: expected an object {p, q, f}");
      for (const auto& [c, flag] : v.items()) {
        if (c == "p") cfg.neuberger_p = boolean(flag, "neuberger.p");
        else if (c == "q") cfg.neuberger_q = boolean(flag, "neuberger.q");
        else if (c == "f") cfg.neuberger_f = boolean(flag, "neuberger.f");
        else throw ValidationError("neuberger." + c + ": unknown field");
      }
    } else if (key == "solver") {
      if (!v.is_object()) throw ValidationError("solver: expected an object");
      for (const auto& [s, val] : v.items()) {
        if (s == "tolerance") cfg.solver.tolerance = number(val, "solver.tolerance");
        else if (s == "max_iterations") cfg.solver.max_iterations = integer(val, "solver.max_iterations");
        else if (s == "kind") {
          const std::string k = val.is_string() ? val.get<std::string>() : "";
          if (k == "minres") cfg.solver.kind = SolverKind::Minres;
          else if (k == "direct") cfg.solver.kind = SolverKind::Direct;
          else throw ValidationError("solver.kind: expected \"minres\" or \"direct\"");
        } else throw ValidationError("solver." + s + ": unknown field");
      }
    } else {
      throw ValidationError(key + ": unknown field");
    }
  }
  cfg.validate();
  return cfg;
}

SlowPhase find_slow_phase(const DescentTrace& trace, int window, double threshold) {
  if (window < 1) throw ValidationError("slow phase window must be positive");
  const auto& rows = trace.rows;
  const auto n = static_cast<int>(rows.size());
  SlowPhase out;
  if (n > 1) {
    const int k = std::min(10, n - 1);
    out.initial_rate = std::abs(rows[k].relerr[0] - rows[0].relerr[0]) / k;
  }
  int best_first = -1, best_last = -1, first = -1;
  for (int m = 0; m + window < n; ++m) {
    const double rate = std::abs(rows[m + window].relerr[0] - rows[m].relerr[0]) / window;
    const bool slow = rate < threshold && rows[m + window].value < rows[m].value;
    if (slow) {
      if (first < 0) first = m;
      if (best_first < 0 || m - first > best_last - best_first) best_first = first, best_last = m;
    } else {
      first = -1;
    }
  }
  if (best_first >= 0) {
    const int end = best_last + window;
    out.start = rows[best_first].iter;
    out.length = rows[end].iter - out.start;
    out.rate = std::abs(rows[end].relerr[0] - rows[best_first].relerr[0]) / out.length;
  }
  return out;
}

std::vector<int> default_snapshots() { return {10, 20, 50, 500, 1000, 2000}; }

ExperimentResult run_experiment(const ExperimentSpec& spec, const DescentConfig& cfg,
                                const std::vector<int>& snapshot_iters) {
  Synthesis data = synthesize(spec, cfg.solver);
  const ProblemInstance& inst = data.instance;

  CoefficientTriple c0 = initial_guess(inst, cfg.solver);
  if (!cfg.recover_q) c0.q = inst.truth->q;
  if (!cfg.recover_f) c0.f = inst.truth->f;

  std::map<int, CoefficientTriple> snaps;
  for (int it : snapshot_iters)
    if (it == 0) snaps.emplace(0, c0);
  auto observer = [&](int m, const CoefficientTriple& c) {
    if (std::find(snapshot_iters.begin(), snapshot_iters.end(), m) != snapshot_iters.end())
      snaps.emplace(m, c);
  };

  DescentResult res = run(c0, inst, cfg, observer);
  const double err = rel_L1_error(res.c.p, inst.truth->p);
  const SlowPhase slow = find_slow_phase(res.trace);
  const SpikeReport spikes = spike_report(data.clean.front());
  return {std::move(data), std::move(c0), std::move(res), err, std::move(snaps), slow, spikes};
}

}  // namespace coefid
