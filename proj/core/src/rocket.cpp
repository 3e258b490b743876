// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/rocket.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace lcvx {

namespace {

constexpr double kPi = 3.14159265358979323846;

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("rocket config: " + what);
}

bool finite(double v) { return std::isfinite(v); }
bool finite(const Eigen::Vector2d& v) { return v.allFinite(); }

void validate_config(const RocketConfig& cfg) {
    const int M = cfg.num_modes();
    require(M > 0, "at least one thrust mode is required");
    require(static_cast<int>(cfg.rho2.size()) == M &&
                static_cast<int>(cfg.theta_deg.size()) == M,
            "rho1, rho2, and theta_deg must have one entry per mode");
    for (int i = 0; i < M; ++i) {
        require(finite(cfg.rho1[static_cast<size_t>(i)]) &&
                    finite(cfg.rho2[static_cast<size_t>(i)]),
                "thrust bounds must be finite");
        const double th = cfg.theta_deg[static_cast<size_t>(i)];
        require(finite(th) && th > 0.0 && th < 180.0,
                "gimbal range must lie strictly inside (0, 180) degrees");
    }
    require(finite(cfg.gamma_gs_deg) && cfg.gamma_gs_deg > 0.0 && cfg.gamma_gs_deg < 90.0,
            "glide-slope angle must lie strictly inside (0, 90) degrees");
    require(finite(cfg.omega), "rotation rate must be finite");
    require(finite(cfg.l) && finite(cfg.g) && finite(cfg.v0), "vectors must be finite");
    require(finite(cfg.h0) && cfg.h0 > 0.0, "initial altitude must be positive");
    require(finite(cfg.r0_downrange), "initial downrange must be finite");
    require(cfg.zeta == 0 || cfg.zeta == 1, "zeta must be 0 or 1");
    require(finite(cfg.t_f_max) && cfg.t_f_max > 0.0, "horizon cap must be positive");
    require(cfg.K >= 1 && cfg.K <= M, "budget K must lie in [1, modes]");
}

double max_rho2(const RocketConfig& cfg) {
    double m = 0.0;
    for (const double r : cfg.rho2) m = std::max(m, r);
    return m;
}

}  // namespace

SemiContinuousOCP build_rocket_ocp(const RocketConfig& cfg) {
    validate_config(cfg);
    const int n = 4;
    const int m = 2;
    const double om = cfg.omega;

    SemiContinuousOCP p;
    p.A = Eigen::MatrixXd::Zero(n, n);
    p.A.topRightCorner(2, 2).setIdentity();
    p.A.bottomLeftCorner(2, 2) = om * om * Eigen::Matrix2d::Identity();
    Eigen::Matrix2d quarter_turn;
    quarter_turn << 0.0, 1.0, -1.0, 0.0;
    p.A.bottomRightCorner(2, 2) = 2.0 * om * quarter_turn;

    p.B = Eigen::MatrixXd::Zero(n, m);
    p.B.bottomRows(2).setIdentity();

    p.w = Eigen::VectorXd::Zero(n);
    p.w.tail(2) = om * om * cfg.l + cfg.g;

    const int M = cfg.num_modes();
    p.channels.resize(static_cast<size_t>(M));
    for (int i = 0; i < M; ++i) {
        InputChannel& ch = p.channels[static_cast<size_t>(i)];
        ch.rho1 = cfg.rho1[static_cast<size_t>(i)];
        ch.rho2 = cfg.rho2[static_cast<size_t>(i)];
        // Thrust within theta/2 of the local vertical: both wedge edges as
        // halfplanes through the origin.
        const double half = 0.5 * cfg.theta_deg[static_cast<size_t>(i)] * kPi / 180.0;
        ch.cone_matrix = Eigen::MatrixXd(2, m);
        ch.cone_matrix << -std::cos(half), -std::sin(half),  //
            std::cos(half), -std::sin(half);
    }
    p.K = cfg.K;

    p.x0 = Eigen::VectorXd(n);
    p.x0 << cfg.r0_downrange, cfg.h0, cfg.v0(0), cfg.v0(1);

    p.E = Eigen::MatrixXd::Identity(n, n);
    p.e_target = Eigen::VectorXd::Zero(n);

    // Glide slope r_y >= ||r|| sin(gamma_gs) as a norm cone on the position.
    const double gs = cfg.gamma_gs_deg * kPi / 180.0;
    NormConeAtom cone;
    cone.P = Eigen::MatrixXd::Zero(2, n);
    cone.P(0, 0) = std::sin(gs);
    cone.P(1, 1) = std::sin(gs);
    cone.q = Eigen::VectorXd::Zero(n);
    cone.q(1) = 1.0;
    cone.r = 0.0;
    p.state_set.atoms = {cone};

    // Cost: xi_max puts the time and effort regimes on the same scale.
    const double xi_max = cfg.t_f_max * max_rho2(cfg);
    p.cost.zeta = cfg.zeta;
    p.cost.terminal.time_weight = (1.0 - static_cast<double>(cfg.zeta)) * xi_max / cfg.t_f_max;
    p.cost.terminal.state_weights = Eigen::VectorXd::Zero(n);
    p.cost.terminal.offset = 0.0;
    // Lateral-offset penalty: weights the absolute downrange distance,
    // normalized so a glide-slope-sized offset at the initial altitude costs
    // a fixed fraction of the input-integral scale.
    RunningCostTerm downrange;
    downrange.weight = 1e-3 * xi_max * std::tan(gs) / cfg.h0;
    downrange.f.a = Eigen::VectorXd::Zero(n);
    downrange.f.a(0) = 1.0;
    p.cost.running = {downrange};
    return p;
}

namespace {

AssumptionProxies evaluate_proxies(const RocketConfig& cfg, const OCPSolution& sol) {
    AssumptionProxies px;
    const double pos_tol =
        1e-9 * std::max({1.0, cfg.h0, std::abs(cfg.r0_downrange)});
    for (int k = 0; k < sol.x.rows(); ++k)
        if (std::abs(sol.x(k, 0)) <= pos_tol || std::abs(sol.x(k, 1)) <= pos_tol)
            ++px.near_zero_position_nodes;
    px.positions_nonzero_ae = px.near_zero_position_nodes <= 2;

    const int S = static_cast<int>(sol.sigma.rows());
    Eigen::VectorXd accel = Eigen::VectorXd::Zero(S);
    for (const auto& u_i : sol.u) accel += u_i.col(0);
    const double eps = 1e-9 * (1.0 + accel.cwiseAbs().maxCoeff());
    int first_sign = 0;
    for (int k = 0; k < S; ++k) {
        if (std::abs(accel(k)) <= eps) continue;
        const int s = accel(k) > 0.0 ? 1 : -1;
        if (first_sign == 0) {
            first_sign = s;
        } else if (s != first_sign) {
            px.downrange_accel_sign_change = true;
            break;
        }
    }
    return px;
}

ConditionReport evaluate_conditions(const SemiContinuousOCP& p, const OCPSolution& sol,
                                    const AdjointTrajectory& adj, double h0) {
    ConditionReport report;
    report.assumption1 = true;
    for (const auto& ch : p.channels) {
        if (ch.cone_matrix.rows() == 0) continue;
        const Eigen::JacobiSVD<Eigen::MatrixXd> svd(ch.cone_matrix);
        const auto& sv = svd.singularValues();
        if (ch.cone_matrix.rows() > ch.cone_matrix.cols() ||
            sv(sv.size() - 1) <= 1e-10 * sv(0))
            report.assumption1 = false;
    }
    report.assumption2 = true;
    for (const auto& ch : p.channels)
        if (!(ch.rho1 < ch.rho2)) report.assumption2 = false;

    report.condition1 = check_condition1(p);
    const double tie_tol = 1e-9 * (1.0 + adj.gains.cwiseAbs().maxCoeff());
    report.conditions23 = check_conditions23_posteriori(adj, p.K, tie_tol);
    report.condition4 = check_condition4_posteriori(sol, p);
    report.contacts = contact_set(sol, p.state_set, 1e-6 * (1.0 + h0));
    return report;
}

}  // namespace

RocketCaseResult run_case(const RocketConfig& cfg, const RocketRunOptions& options) {
    const auto t_start = std::chrono::steady_clock::now();
    RocketCaseResult out;
    out.config = cfg;
    out.problem = build_rocket_ocp(cfg);
    const RelaxedOCP relaxed = relax(out.problem);

    GoldenSearchResult gsr = golden_search_tf(relaxed, cfg.N, options.t_lo, cfg.t_f_max,
                                              options.tol_t, options.solver);
    out.t_f = gsr.t_f;
    out.solution = std::move(gsr.solution);
    out.evaluations = gsr.evaluations;

    const TranscribedProblem tp = transcribe(relaxed, cfg.N, out.t_f);
    out.adjoint = recover_primer(tp, out.solution, out.problem.B);
    out.conditions = evaluate_conditions(out.problem, out.solution, out.adjoint, cfg.h0);
    out.lossless = audit_losslessness(out.solution, out.problem, options.audit);
    out.proxies = evaluate_proxies(cfg, out.solution);
    out.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return out;
}

std::vector<SweepRow> run_sweep(const RocketConfig& base, const std::vector<double>& h0_list,
                                const RocketRunOptions& options) {
    if (h0_list.empty()) throw std::invalid_argument("run_sweep: empty altitude list");
    std::vector<SweepRow> rows(h0_list.size());

    std::atomic<size_t> cursor{0};
    const auto worker = [&] {
        for (size_t i; (i = cursor.fetch_add(1)) < rows.size();) {
            SweepRow& row = rows[i];
            row.h0 = h0_list[i];
            row.zeta = base.zeta;
            try {
                RocketConfig cfg = base;
                cfg.h0 = h0_list[i];
                row.result = run_case(cfg, options);
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            } catch (...) {
                row.error = "unknown error";
            }
        }
    };

    const size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const size_t workers = std::min(hw, rows.size());
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return rows;
}

MicpComparison run_micp_comparison(const RocketConfig& cfg, int n_small, double rel_tol,
                                   const RocketRunOptions& options,
                                   const MicpSettings& micp_settings) {
    if (n_small < 2 || n_small > 20)
        throw std::invalid_argument("run_micp_comparison: n_small must lie in [2, 20]");
    if (!(rel_tol >= 0.0) || !std::isfinite(rel_tol))
        throw std::invalid_argument("run_micp_comparison: rel_tol must be finite and >= 0");

    const SemiContinuousOCP p = build_rocket_ocp(cfg);
    const RelaxedOCP relaxed = relax(p);

    MicpComparison out;
    GoldenSearchResult gsr = golden_search_tf(relaxed, n_small, options.t_lo, cfg.t_f_max,
                                              options.tol_t, options.solver);
    out.t_f = gsr.t_f;
    out.j_relaxed = gsr.solution.J;
    out.evaluations = gsr.evaluations;

    out.micp = solve_micp(relaxed, n_small, out.t_f, micp_settings);
    if (out.micp.solution)
        out.check = verify_equivalence(gsr.solution, *out.micp.solution, rel_tol);
    return out;
}

// --- JSON form ---------------------------------------------------------

namespace {

using nlohmann::json;

json vec2_to_json(const Eigen::Vector2d& v) { return json::array({v(0), v(1)}); }

Eigen::Vector2d json_to_vec2(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument(where + ": expected an array of two numbers");
    return Eigen::Vector2d(j[0].get<double>(), j[1].get<double>());
}

double take_number(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number())
        throw std::invalid_argument(std::string("rocket config: '") + key + "' must be a number");
    return j[key].get<double>();
}

int take_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer())
        throw std::invalid_argument(std::string("rocket config: '") + key +
                                    "' must be an integer");
    return j[key].get<int>();
}

}  // namespace

RocketConfig rocket_config_from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("rocket config JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("rocket config JSON: expected an object");

    static const char* known[] = {"omega", "modes",         "gamma_gs_deg", "pad_km",
                                  "gravity", "h0",          "r0_downrange", "v0",
                                  "zeta",  "t_f_max",       "nodes",        "budget"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        bool found = false;
        for (const char* k : known) found = found || key == k;
        if (!found)
            throw std::invalid_argument("rocket config: unknown key '" + key + "'");
    }

    RocketConfig cfg;
    cfg.omega = take_number(doc, "omega", cfg.omega);
    if (doc.contains("modes")) {
        const json& modes = doc["modes"];
        if (!modes.is_array() || modes.empty())
            throw std::invalid_argument("rocket config: 'modes' must be a non-empty array");
        cfg.rho1.clear();
        cfg.rho2.clear();
        cfg.theta_deg.clear();
        for (const json& mode : modes) {
            if (!mode.is_object() || !mode.contains("rho1") || !mode.contains("rho2") ||
                !mode.contains("theta_deg"))
                throw std::invalid_argument(
                    "rocket config: each mode needs rho1, rho2, and theta_deg");
            for (const auto& [key, value] : mode.items()) {
                if (key != "rho1" && key != "rho2" && key != "theta_deg")
                    throw std::invalid_argument("rocket config: unknown mode key '" + key + "'");
                if (!value.is_number())
                    throw std::invalid_argument("rocket config: mode '" + key +
                                                "' must be a number");
            }
            cfg.rho1.push_back(mode["rho1"].get<double>());
            cfg.rho2.push_back(mode["rho2"].get<double>());
            cfg.theta_deg.push_back(mode["theta_deg"].get<double>());
        }
    }
    cfg.gamma_gs_deg = take_number(doc, "gamma_gs_deg", cfg.gamma_gs_deg);
    if (doc.contains("pad_km")) cfg.l = 1000.0 * json_to_vec2(doc["pad_km"], "pad_km");
    if (doc.contains("gravity")) cfg.g = json_to_vec2(doc["gravity"], "gravity");
    cfg.h0 = take_number(doc, "h0", cfg.h0);
    cfg.r0_downrange = take_number(doc, "r0_downrange", cfg.r0_downrange);
    if (doc.contains("v0")) cfg.v0 = json_to_vec2(doc["v0"], "v0");
    cfg.zeta = take_int(doc, "zeta", cfg.zeta);
    cfg.t_f_max = take_number(doc, "t_f_max", cfg.t_f_max);
    cfg.N = take_int(doc, "nodes", cfg.N);
    cfg.K = take_int(doc, "budget", cfg.K);
    validate_config(cfg);
    return cfg;
}

std::string rocket_config_to_json_string(const RocketConfig& cfg, int indent) {
    json doc;
    doc["omega"] = cfg.omega;
    json modes = json::array();
    for (int i = 0; i < cfg.num_modes(); ++i) {
        json mode;
        mode["rho1"] = cfg.rho1[static_cast<size_t>(i)];
        mode["rho2"] = cfg.rho2[static_cast<size_t>(i)];
        mode["theta_deg"] = cfg.theta_deg[static_cast<size_t>(i)];
        modes.push_back(mode);
    }
    doc["modes"] = modes;
    doc["gamma_gs_deg"] = cfg.gamma_gs_deg;
    doc["pad_km"] = vec2_to_json(cfg.l / 1000.0);
    doc["gravity"] = vec2_to_json(cfg.g);
    doc["h0"] = cfg.h0;
    doc["r0_downrange"] = cfg.r0_downrange;
    doc["v0"] = vec2_to_json(cfg.v0);
    doc["zeta"] = cfg.zeta;
    doc["t_f_max"] = cfg.t_f_max;
    doc["nodes"] = cfg.N;
    doc["budget"] = cfg.K;
    return doc.dump(indent);
}

RocketConfig load_rocket_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open rocket config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return rocket_config_from_json_string(buffer.str());
}

void save_rocket_config_file(const RocketConfig& cfg, const std::string& path, int indent) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write rocket config file: " + path);
    out << rocket_config_to_json_string(cfg, indent) << '\n';
    if (!out) throw std::invalid_argument("failed writing rocket config file: " + path);
}

}  // namespace lcvx
