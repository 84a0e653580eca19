#pragma once

// Human-readable run outputs: summary text, an accuracy-vs-time SVG and the
// closed-form timing report.

#include <string>

#include "orbitfl/sim.hpp"

namespace orbitfl {

/// Onboard compute budget used as a reference line in summaries [FLOP/s].
inline constexpr double kOnboardFlopsBudget = 472e9;

std::string summary_text(const RunResult& result, const Scenario& scenario);

/// Polyline of test accuracy against simulated hours, starting at (0, initial accuracy).
std::string accuracy_svg(const RunResult& result);

std::string timing_report(const ClosedForm& cf);

}  // namespace orbitfl
