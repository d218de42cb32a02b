#pragma once

#include <map>
#include <string>
#include <vector>

#include "coefid/data_pipeline.hpp"
#include "coefid/descent.hpp"

namespace coefid {

/// Recover p only with the spec's functional and iteration budget.
DescentConfig descent_for(const ExperimentSpec& spec);

/// Parses a descent configuration document. Fields omitted keep the values
/// of `base`. Throws ValidationError naming the field.
DescentConfig descent_from_json(const std::string& text, DescentConfig base);

/// Stretch of the descent where relerr_p moves by less than `threshold` per
/// iteration on average over every `window` consecutive iterations, while G
/// keeps decreasing.
struct SlowPhase {
  int length = 0;             ///< iterations covered, 0 if none
  int start = 0;              ///< first iteration of the stretch
  double rate = 0.0;          ///< mean |change of relerr_p| per iteration inside it
  double initial_rate = 0.0;  ///< same over the first 10 iterations
};

SlowPhase find_slow_phase(const DescentTrace& trace, int window = 100, double threshold = 1e-4);

struct ExperimentResult {
  Synthesis data;
  CoefficientTriple initial;
  DescentResult descent;
  double relerr_p = 0.0;
  std::map<int, CoefficientTriple> snapshots;
  SlowPhase slow;
  SpikeReport spikes;  ///< of the clean solution for the first lambda
};

/// Synthesizes the data, starts from initial_guess (inactive components take
/// the true values) and runs the descent. Snapshots of the iterate are kept
/// for the listed iterations.
ExperimentResult run_experiment(const ExperimentSpec& spec, const DescentConfig& cfg,
                                const std::vector<int>& snapshot_iters = {});

/// Snapshot iterations used by `reproduce`.
std::vector<int> default_snapshots();

}  // namespace coefid
