#pragma once

#include <string>

#include "kmpc/harness.hpp"

namespace kmpc::report {

/// Self-contained SVG with three stacked panels sharing the time axis: the
/// state as a space-time heat map, its spatial mean against the reference,
/// and the applied inputs.
std::string closed_loop_svg(const harness::ClosedLoopLog& log);

}  // namespace kmpc::report
