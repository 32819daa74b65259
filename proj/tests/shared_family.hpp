// The d = 4 constrained family, built once per test binary (~30 s).
#pragma once

#include "knotcycle/family.hpp"

inline const knotcycle::knots::GluedFamily& family_d4() {
  static const auto f = knotcycle::knots::build_family(4, knotcycle::knots::IsotopyMode::constrained);
  return f;
}
