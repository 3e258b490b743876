// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT
//
// Planar powered-descent application: a lander on a rotating planet with a
// finite set of thrust modes, each usable only inside a norm band and a
// gimbal wedge, at most K modes burning at once.
//
// The state is x = (r_x, r_y, v_x, v_y) in pad-fixed coordinates (r_y is
// altitude above the pad).  In the rotating frame
//
//     rdot = v
//     vdot = omega^2 (r + l) + 2 omega S v + g + sum_i u_i,
//
// with S the quarter-turn matrix [[0, 1], [-1, 0]], l the pad position
// measured from the planet center, g constant gravity, and u_i the thrust
// acceleration of mode i.  Mode i burns with ||u_i|| in [rho1_i, rho2_i]
// inside a wedge of opening theta_i about the local vertical, the descent
// must stay inside the glide-slope cone  r_y >= ||r|| sin(gamma_gs), and the
// lander must reach the pad at rest: r(t_f) = v(t_f) = 0.
//
// The cost blends time and effort through the zeta switch:
//   zeta = 0   minimize t_f (weight xi_max / t_f_max) + position shaping
//   zeta = 1   minimize the effort accumulator xi(t_f) + position shaping
// where xi_max = t_f_max * max_i rho2_i normalizes the two regimes to a
// comparable scale, and the shaping term is a small weighted L1 pull toward
// the glide-slope apex, 1e-3 * xi_max * (|r_x| tan(gamma_gs) + |r_y|) / h0.
//
// `run_case` is the end-to-end pipeline: golden search over the horizon,
// adjoint recovery, the a-posteriori optimality-condition checks, the
// losslessness audit, and the almost-everywhere assumption proxies.

#pragma once

#include "lcvx/conditions.hpp"
#include "lcvx/driver.hpp"
#include "lcvx/micp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace lcvx {

/// Scenario description in SI units (meters, seconds, radians internally;
/// the JSON form takes angles in degrees and the pad vector in kilometers).
struct RocketConfig {
    /// Planet rotation rate, rad/s (default: one Martian sol).
    double omega = 2.0 * 3.14159265358979323846 / 88775.0;
    /// Per-mode thrust-acceleration band, m/s^2; mode i burns with
    /// ||u_i|| in [rho1[i], rho2[i]].
    std::vector<double> rho1 = {4.0, 8.0};
    std::vector<double> rho2 = {8.0, 12.0};
    /// Per-mode gimbal range, degrees: thrust within theta/2 of vertical.
    std::vector<double> theta_deg = {120.0, 10.0};
    /// Glide-slope half-angle from horizontal, degrees, in (0, 90).
    double gamma_gs_deg = 10.0;
    /// Pad position measured from the planet center, m.
    Eigen::Vector2d l{0.0, 3396200.0};
    /// Gravity at the pad, m/s^2.
    Eigen::Vector2d g{0.0, -3.71};
    /// Initial altitude above the pad, m.
    double h0 = 800.0;
    /// Initial downrange offset, m.
    double r0_downrange = 1500.0;
    /// Initial velocity, m/s.
    Eigen::Vector2d v0{50.0, -70.0};
    /// Cost switch: 0 minimizes time, 1 minimizes effort (see file header).
    int zeta = 0;
    /// Horizon cap for the golden search, s.
    double t_f_max = 100.0;
    /// Grid nodes for the transcription.
    int N = 150;
    /// Max simultaneously burning modes.
    int K = 1;

    int num_modes() const { return static_cast<int>(rho1.size()); }
};

/// Builds the semi-continuous optimal control problem for a scenario.
/// Throws std::invalid_argument when a config invariant fails (mode arrays
/// empty or mismatched, theta outside (0, 180), gamma_gs outside (0, 90),
/// non-positive h0 or t_f_max, zeta outside {0, 1}, K outside [1, modes],
/// or any non-finite number).
SemiContinuousOCP build_rocket_ocp(const RocketConfig& cfg);

/// Almost-everywhere assumption proxies evaluated on the discrete solution.
struct AssumptionProxies {
    /// Nodes where the downrange or altitude coordinate is numerically zero.
    /// The touchdown node always counts, so <= 2 is the healthy range.
    int near_zero_position_nodes = 0;
    bool positions_nonzero_ae = false;  ///< near_zero_position_nodes <= 2
    /// Whether the total downrange acceleration sum_i u_{i,x} changes sign.
    bool downrange_accel_sign_change = false;
};

/// Tuning for the end-to-end pipeline.
struct RocketRunOptions {
    double t_lo = 1.0;    ///< golden-search bracket lower edge, s
    double tol_t = 0.05;  ///< golden-search horizon tolerance, s
    SolverSettings solver;
    AuditTolerances audit;
};

/// Everything one scenario produces.
struct RocketCaseResult {
    RocketConfig config;  ///< the config as run
    SemiContinuousOCP problem;
    double t_f = 0.0;  ///< optimized horizon, s
    OCPSolution solution;
    AdjointTrajectory adjoint;
    ConditionReport conditions;
    LosslessReport lossless;
    AssumptionProxies proxies;
    int evaluations = 0;  ///< horizon-search relaxation solves
    double wall_time_s = 0.0;
};

/// Golden search over [t_lo, t_f_max], then adjoint recovery, condition
/// checks, losslessness audit, and assumption proxies.  Throws
/// std::invalid_argument on a bad config and BracketInfeasibleError when no
/// horizon in the bracket is feasible.
RocketCaseResult run_case(const RocketConfig& cfg, const RocketRunOptions& options = {});

/// One sweep entry; `error` records why a case failed while the sweep
/// carried on.
struct SweepRow {
    double h0 = 0.0;
    int zeta = 0;
    bool ok = false;
    std::string error;
    std::optional<RocketCaseResult> result;
};

/// Runs `run_case` once per altitude in `h0_list` (other fields from
/// `base`), in parallel when hardware allows.  Rows keep the order of
/// `h0_list`; individual failures are recorded in their row and do not stop
/// the sweep.  Throws std::invalid_argument on an empty list.
std::vector<SweepRow> run_sweep(const RocketConfig& base, const std::vector<double>& h0_list,
                                const RocketRunOptions& options = {});

/// Relaxation-vs-integer comparison at desk scale.
struct MicpComparison {
    double t_f = 0.0;       ///< horizon fixed by a golden search at n_small
    double j_relaxed = 0.0; ///< relaxation objective at that horizon
    MicpResult micp;        ///< branch-and-bound outcome at the same horizon
    EquivalenceCheck check; ///< objective comparison (gap +inf if no incumbent)
    int evaluations = 0;    ///< horizon-search relaxation solves
};

/// Fixes the horizon by a golden search on an n_small-node grid, solves the
/// relaxation and the mixed-integer reference at that horizon, and compares
/// objectives at rel_tol.  n_small is capped at 20 nodes -- beyond that the
/// binary tree stops being an overnight-tractable oracle.  Throws
/// std::invalid_argument on a bad config, n_small outside [2, 20], or a bad
/// rel_tol.
MicpComparison run_micp_comparison(const RocketConfig& cfg, int n_small,
                                   double rel_tol = 1e-3,
                                   const RocketRunOptions& options = {},
                                   const MicpSettings& micp_settings = {});

/// JSON round trip for RocketConfig.  Angles are in degrees and the pad
/// vector in kilometers on the JSON side ("pad_km"); everything else is SI.
/// Absent keys keep their defaults; unknown keys are rejected.
RocketConfig rocket_config_from_json_string(const std::string& text);
std::string rocket_config_to_json_string(const RocketConfig& cfg, int indent = 2);
RocketConfig load_rocket_config_file(const std::string& path);
void save_rocket_config_file(const RocketConfig& cfg, const std::string& path, int indent = 2);

}  // namespace lcvx
