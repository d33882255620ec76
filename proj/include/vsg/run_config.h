#ifndef VSG_RUN_CONFIG_H_
#define VSG_RUN_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vsg/instancing.h"
#include "vsg/metrics.h"
#include "vsg/phantom.h"
#include "vsg/relation_model.h"
#include "vsg/trainer.h"

namespace vsg {

// Every tunable of a pipeline run. The text form is one `key = value` per
// line; `#` starts a comment. Unknown keys are rejected.
struct RunConfig {
  std::string data_dir;
  std::string output_dir;
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  uint64_t degrade_seed = 1;
  InstancingConfig instancing;
  ModelConfig model;
  TrainConfig train;
  TripletMatchSpec match;
  bool unconstrained = false;
  // Generation parameters; `noise.*` keys set phantom.noise.
  PhantomConfig phantom;

  void check() const;
};

// Throws kInvalidConfig naming the line for unknown keys or bad values.
RunConfig ParseRunConfig(const std::string& text, RunConfig base = {});
RunConfig LoadRunConfig(const std::string& path);
// Every key with its current value, in documentation order.
std::string RunConfigToText(const RunConfig& config);

}  // namespace vsg

#endif  // VSG_RUN_CONFIG_H_
