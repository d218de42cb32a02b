// coefid: forward solves, coefficient recovery and the built-in experiments.
//
// Exit codes: 0 ok, 2 invalid input, 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "coefid/experiments.hpp"
#include "coefid/kernels.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace coefid;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 2;
constexpr int kNumerical = 3;

struct Options {
  std::string spec_path;
  std::string descent_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string snapshots;
  bool no_timing = false;
  int example = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

void write_field(const fs::path& dir, const std::string& stem, const Field2D& f,
                 const std::string& format) {
  if (format == "json") write_file(dir / (stem + ".json"), to_json(f) + "\n");
  else write_file(dir / (stem + ".csv"), to_csv(f));
}

std::vector<int> parse_snapshots(const std::string& list) {
  std::vector<int> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size() || v < 0) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError("--snapshots: '" + item + "' is not a non-negative integer");
    }
  }
  return out;
}

ExperimentSpec load_spec(const Options& o) {
  if (o.spec_path.empty()) throw ValidationError("--spec is required");
  ExperimentSpec s = spec_from_json(read_file(o.spec_path));
  if (o.seed) s.seed = *o.seed;
  return s;
}

json spikes_json(const SpikeReport& r) {
  json j;
  j["max"] = r.max;
  j["argmax"] = {r.argmax_x, r.argmax_y};
  j["min"] = r.min;
  j["argmin"] = {r.argmin_x, r.argmin_y};
  j["boundary_range"] = {r.boundary_min, r.boundary_max};
  j["overshoot"] = r.overshoot;
  return j;
}

json synthesis_json(const Synthesis& d) {
  json j;
  j["spec"] = json::parse(spec_to_json(d.spec));
  j["lambdas"] = d.instance.lambdas();
  j["realized_noise"] = d.realized_noise;
  j["solver_residuals"] = d.solver_residuals;
  j["notes"] = d.notes;
  j["spikes"] = spikes_json(spike_report(d.clean.front()));
  return j;
}

int cmd_forward(const Options& o) {
  const ExperimentSpec spec = load_spec(o);
  const Synthesis d = synthesize(spec);
  const fs::path dir(o.out_dir);
  for (std::size_t n = 0; n < d.clean.size(); ++n) {
    write_field(dir, "u_" + std::to_string(n), d.clean[n], o.format);
    write_field(dir, "u_measured_" + std::to_string(n), d.instance.data[n].u, o.format);
  }
  json meta = synthesis_json(d);
  meta["isa"] = kernels::isa_name(kernels::active_isa());
  write_file(dir / "metadata.json", meta.dump(2) + "\n");
  std::cout << "wrote " << d.clean.size() << " solution(s) to " << dir.string() << "\n";
  return kOk;
}

int write_recovery(const Options& o, const ExperimentSpec& spec, const DescentConfig& cfg,
                   const std::vector<int>& snapshot_iters) {
  const ExperimentResult r = run_experiment(spec, cfg, snapshot_iters);
  const fs::path dir(o.out_dir);
  write_field(dir, "p", r.descent.c.p, o.format);
  write_field(dir, "q", r.descent.c.q, o.format);
  write_field(dir, "f", r.descent.c.f, o.format);
  write_field(dir, "p_true", r.data.instance.truth->p, o.format);
  write_field(dir, "p_initial", r.initial.p, o.format);
  for (std::size_t n = 0; n < r.data.instance.data.size(); ++n)
    write_field(dir, "u_measured_" + std::to_string(n), r.data.instance.data[n].u, o.format);
  for (const auto& [m, c] : r.snapshots)
    write_field(dir / "snapshots", "p_iter" + std::to_string(m), c.p, o.format);
  write_file(dir / "trace.csv", r.descent.trace.to_csv(!o.no_timing));

  json s;
  s["relerr_p"] = r.relerr_p;
  s["iterations"] = r.descent.iterations;
  s["stopped_reason"] = to_string(r.descent.reason);
  s["realized_noise"] = *std::max_element(r.data.realized_noise.begin(), r.data.realized_noise.end());
  s["functional"] = to_string(cfg.functional);
  s["final_G"] = r.descent.trace.rows.back().value;
  s["initial_relerr_p"] = rel_L1_error(r.initial.p, r.data.instance.truth->p);
  s["diverged"] = r.descent.diverged;
  s["max_abs_p"] = r.descent.max_abs_p;
  s["min_p"] = r.descent.min_p;
  s["boundary_drift"] = r.descent.boundary_drift;
  s["monotone"] = r.descent.trace.monotone();
  s["slow_phase"] = {{"length", r.slow.length},
                     {"start", r.slow.start},
                     {"rate", r.slow.rate},
                     {"initial_rate", r.slow.initial_rate}};
  s["snapshots"] = json::array();
  for (const auto& kv : r.snapshots) s["snapshots"].push_back(kv.first);
  s["warnings"] = r.descent.warnings;
  if (!r.descent.failure.empty()) s["failure"] = r.descent.failure;
  s["data"] = synthesis_json(r.data);
  write_file(dir / "summary.json", s.dump(2) + "\n");

  std::cout << "relerr_p " << format_double(r.relerr_p) << " after " << r.descent.iterations
            << " iterations (" << to_string(r.descent.reason) << ")\n";
  if (r.descent.reason == StopReason::Failed) {
    std::cerr << "error: " << r.descent.failure << "\n";
    return kNumerical;
  }
  return kOk;
}

int cmd_recover(const Options& o) {
  const ExperimentSpec spec = load_spec(o);
  DescentConfig cfg = descent_for(spec);
  if (!o.descent_path.empty()) cfg = descent_from_json(read_file(o.descent_path), cfg);
  return write_recovery(o, spec, cfg, parse_snapshots(o.snapshots));
}

int cmd_reproduce(const Options& o) {
  ExperimentSpec spec = canned_spec(o.example);
  if (o.example == 0) throw UnknownExample("0");
  if (o.seed) spec.seed = *o.seed;
  DescentConfig cfg = descent_for(spec);
  if (!o.descent_path.empty()) cfg = descent_from_json(read_file(o.descent_path), cfg);
  const std::vector<int> snaps =
      o.snapshots.empty() ? default_snapshots() : parse_snapshots(o.snapshots);
  return write_recovery(o, spec, cfg, snaps);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coefficient identification for -div(p grad u) + lambda q u = f"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", o.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--format", o.format, "Grid file format")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Noise seed, overrides the spec");
  };
  auto descent = [&](CLI::App* sub) {
    sub->add_option("--descent", o.descent_path, "Descent configuration JSON");
    sub->add_option("--snapshots", o.snapshots, "Comma-separated iterations to save p at");
    sub->add_flag("--no-timing", o.no_timing, "Write 0 in the trace seconds column");
  };

  CLI::App* fwd = app.add_subcommand("forward", "Synthesize data for an experiment spec");
  fwd->add_option("--spec", o.spec_path, "Experiment spec JSON")->required();
  common(fwd);

  CLI::App* rec = app.add_subcommand("recover", "Recover coefficients for an experiment spec");
  rec->add_option("--spec", o.spec_path, "Experiment spec JSON")->required();
  common(rec);
  descent(rec);

  CLI::App* rep = app.add_subcommand("reproduce", "Run a built-in example (1-4)");
  rep->add_option("example", o.example, "Example id")->required();
  common(rep);
  descent(rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*fwd) return cmd_forward(o);
    if (*rec) return cmd_recover(o);
    return cmd_reproduce(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumerical;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
}
