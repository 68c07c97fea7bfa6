#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ltrisk/simulation.hpp"

namespace ltrisk {

/// Shipped data-generating processes.
///
/// desk: 3 intervals, baseline sex and age group, two time-varying
///   comorbidities, one exposure, death and censoring active; outcome
///   prevalence near 2% by the last interval.
/// dr: same node structure with common events and strong time-varying
///   confounding, used for the double-robustness grid.
std::vector<std::string> dgp_preset_names();
CoefficientMatrix dgp_preset(std::string_view name);

/// Sustained exposure versus sustained non-exposure at the last interval.
EstimandSpec preset_estimand(const SchemaLayout& layout);

}  // namespace ltrisk
