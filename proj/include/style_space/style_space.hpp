#pragma once

#include "style_space/cluster_stats.hpp"
#include "style_space/common.hpp"
#include "style_space/dataset.hpp"
#include "style_space/interpolation.hpp"
#include "style_space/nelder_mead.hpp"
#include "style_space/projection.hpp"
#include "style_space/representative.hpp"

namespace style_space {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace style_space
