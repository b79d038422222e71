#pragma once

// Finite-difference verification of the taped gradients of the full
// training objective and of the network's time derivative.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sinn {

struct GradcheckOptions {
  std::size_t num_users = 10;
  std::size_t layers = 3;
  std::size_t width = 8;
  std::size_t K = 2;
  std::size_t embed_dim = 4;
  std::size_t batch = 6;
  std::size_t J = 2;
  double h = 1e-5;
  double rel_tol = 1e-4;
  double abs_tol = 1e-8;      // used when the analytic gradient is tiny
  double tiny = 1e-6;
  std::size_t max_elements_per_tensor = 12;  // larger tensors are sampled
  double min_opinion_gap = 5e-3;  // bounded-confidence cases closer than this are redrawn
  std::size_t max_redraws = 50;
};

struct GradcheckGroup {
  std::string name;  // "<variant>/<tensor group>" or "time_derivative"
  double max_rel_err = 0.0;
  double max_abs_err = 0.0;  // over entries judged on the absolute scale
  std::size_t checked = 0;
  std::size_t failures = 0;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  std::vector<std::uint64_t> failing_case_seeds;
  std::size_t cases = 0;
  bool pass() const { return failing_case_seeds.empty(); }
  std::string text() const;
};

/// `cases` random models per ODE variant (and as many random networks for
/// the time derivative). Case i uses seed mix_seed(seed, i).
GradcheckReport run_gradcheck(std::uint64_t seed, std::size_t cases, const GradcheckOptions& options = {});

/// Only the time-derivative part.
GradcheckReport run_time_derivative_check(std::uint64_t seed, std::size_t cases,
                                          const GradcheckOptions& options = {});

}  // namespace sinn
