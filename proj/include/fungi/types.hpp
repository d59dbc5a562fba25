#pragma once

#include <Eigen/Dense>

#include <string>

#include "fungi/error.hpp"

namespace fungi {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using RowVec = Eigen::RowVectorXd;
using Index = Eigen::Index;

inline constexpr double kPi = 3.14159265358979323846;

// Growth stages in life-cycle order. The ordinal indexes parameter tables,
// prototype sets and confusion matrices throughout.
enum class StageClass : int { Spore = 0, Hyphae = 1, Mycelium = 2 };

inline constexpr int kNumStages = 3;

inline int ordinal(StageClass s) { return static_cast<int>(s); }

inline const char* stage_name(StageClass s) {
  switch (s) {
    case StageClass::Spore: return "spore";
    case StageClass::Hyphae: return "hyphae";
    case StageClass::Mycelium: return "mycelium";
  }
  throw Error("invalid stage ordinal");
}

inline StageClass stage_from_ordinal(int ord) {
  if (ord < 0 || ord >= kNumStages) throw Error("stage ordinal out of range: " + std::to_string(ord));
  return static_cast<StageClass>(ord);
}

inline StageClass stage_from_name(const std::string& name) {
  for (int k = 0; k < kNumStages; ++k) {
    if (name == stage_name(static_cast<StageClass>(k))) return static_cast<StageClass>(k);
  }
  throw Error("unknown stage name: " + name);
}

}  // namespace fungi
