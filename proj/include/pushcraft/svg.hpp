#pragma once

#include <string>
#include <vector>

#include "pushcraft/pipeline.hpp"

namespace pushcraft {

/// Workspace, obstacles and whatever of the rest is given: guiding path,
/// plan segments and keyframe outlines coloured by mode, the executed object
/// trace and robot traces. Modes are numbered in order of first use.
std::string render_svg(const Scenario& sc, const GuidingPath* path, const std::vector<HybridPlan>& plans,
                       const ExecutionLog* log);

}  // namespace pushcraft
