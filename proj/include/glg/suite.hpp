#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "glg/report.hpp"
#include "glg/witten_flow.hpp"

namespace glg {

// Uniform in [-1, 1) from the top 53 bits.
inline double uniform_pm1(std::mt19937_64& rng) { return (double)(rng() >> 11) * 0x1.0p-52 - 1.0; }

// A free critical point of L moved onto the delta slice; seeds drawn from `seed`.
CVec slice_critical_point(const LGModel& m, std::uint64_t seed = 1);

// Constant path at q plus a seeded bump perturbation, for the action checks.
Path1D perturbed_path(const LGModel& m, const CVec& q, std::uint64_t seed, int nodes = 2001, double length = 10.0);

enum class SuiteProfile { quick, full };

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<ExperimentReport(SuiteProfile)> run;
};

// The acceptance battery, criteria 1 to 13 in order.
std::vector<Criterion> acceptance_criteria();

struct SuiteEntry {
  int id;
  std::string name;
  ExperimentReport report;
  double seconds = 0;
  std::string error;  // non-empty if the member threw
};
std::vector<SuiteEntry> run_suite(SuiteProfile p, const std::function<void(const SuiteEntry&)>& on_done = {});
// Deterministic scorecard (no timings).
ojson scorecard(SuiteProfile p, const std::vector<SuiteEntry>& entries);

}  // namespace glg
