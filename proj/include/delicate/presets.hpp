#pragma once

// Named configurations binding the published per-partition hyper-parameters
// and NIL thresholds, so those setups are one flag away.

#include <string>

#include "delicate/error.hpp"
#include "delicate/gbt.hpp"

namespace delicate::presets {

struct Preset {
  std::string name;
  gbt::Hyperparams hp;
  double nil_threshold = 0.4;
};

inline Preset dz() {
  Preset p;
  p.name = "dz";
  p.hp.learning_rate = 0.115;
  p.hp.max_depth = 11;
  p.hp.min_samples_leaf = 0.0155;
  p.hp.min_samples_split = 0.015;
  p.hp.n_estimators = 350;
  p.hp.block_size = 50;
  p.hp.c_neg_size = 10;
  p.nil_threshold = 0.4;
  return p;
}

inline Preset amd() {
  Preset p;
  p.name = "amd";
  p.hp.learning_rate = 0.185;
  p.hp.max_depth = 14;
  p.hp.min_samples_leaf = 0.08;
  p.hp.min_samples_split = 0.02;
  p.hp.n_estimators = 300;
  p.hp.block_size = 20;
  p.hp.c_neg_size = 6;
  p.nil_threshold = 0.2;
  return p;
}

// The whole-corpus model ran with the dz threshold in the out-of-domain
// evaluation; that value is the preset default here.
inline Preset all() {
  Preset p;
  p.name = "all";
  p.hp.learning_rate = 0.135;
  p.hp.max_depth = 8;
  p.hp.min_samples_leaf = 0.01;
  p.hp.min_samples_split = 0.037;
  p.hp.n_estimators = 500;
  p.hp.block_size = 50;
  p.hp.c_neg_size = 8;
  p.nil_threshold = 0.4;
  return p;
}

inline Preset by_name(const std::string& name) {
  if (name == "dz") return dz();
  if (name == "amd") return amd();
  if (name == "all") return all();
  throw ConfigError("unknown preset \"" + name + "\" (expected dz, amd or all)");
}

}  // namespace delicate::presets
