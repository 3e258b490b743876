// Copyright (c) lcvx contributors
// SPDX-License-Identifier: MIT

#include "lcvx/ocp_json.hpp"

#include <json.hpp>

#include <fstream>
#include <stdexcept>

namespace lcvx {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

json mat_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Eigen::VectorXd json_to_vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw std::invalid_argument(where + ": expected an array");
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw std::invalid_argument(where + ": expected numbers");
        v[static_cast<int>(i)] = j[i].get<double>();
    }
    return v;
}

// cols_if_empty resolves the column count of a legitimately empty matrix.
Eigen::MatrixXd json_to_mat(const json& j, const std::string& where, int cols_if_empty = 0) {
    if (!j.is_array()) throw std::invalid_argument(where + ": expected an array of rows");
    if (j.empty()) return Eigen::MatrixXd(0, cols_if_empty);
    if (!j[0].is_array()) throw std::invalid_argument(where + ": expected rows to be arrays");
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(j.size(), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw std::invalid_argument(where + ": ragged rows");
        for (std::size_t c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) throw std::invalid_argument(where + ": expected numbers");
            m(static_cast<int>(i), static_cast<int>(c)) = j[i][c].get<double>();
        }
    }
    return m;
}

double get_number(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_number())
        throw std::invalid_argument(where + ": missing numeric field '" + key + "'");
    return j[key].get<double>();
}

const json& get_field(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key))
        throw std::invalid_argument(where + ": missing field '" + key + "'");
    return j.at(key);
}

} // namespace

SemiContinuousOCP ocp_from_json_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("problem JSON: ") + e.what());
    }
    if (!doc.is_object()) throw std::invalid_argument("problem JSON: expected an object");

    SemiContinuousOCP p;

    const json& dyn = get_field(doc, "dynamics", "problem");
    p.A = json_to_mat(get_field(dyn, "A", "dynamics"), "dynamics.A");
    p.B = json_to_mat(get_field(dyn, "B", "dynamics"), "dynamics.B");
    p.w = json_to_vec(get_field(dyn, "w", "dynamics"), "dynamics.w");

    const json& chans = get_field(doc, "channels", "problem");
    if (!chans.is_array()) throw std::invalid_argument("channels: expected an array");
    for (std::size_t i = 0; i < chans.size(); ++i) {
        const std::string where = "channels[" + std::to_string(i) + "]";
        InputChannel ch;
        ch.rho1 = get_number(chans[i], "rho1", where);
        ch.rho2 = get_number(chans[i], "rho2", where);
        if (chans[i].contains("C"))
            ch.cone_matrix = json_to_mat(chans[i]["C"], where + ".C", static_cast<int>(p.B.cols()));
        else
            ch.cone_matrix = Eigen::MatrixXd(0, p.B.cols());
        p.channels.push_back(std::move(ch));
    }

    p.K = static_cast<int>(get_number(doc, "K", "problem"));
    p.x0 = json_to_vec(get_field(doc, "x0", "problem"), "x0");

    const json& term = get_field(doc, "terminal", "problem");
    p.E = json_to_mat(get_field(term, "E", "terminal"), "terminal.E",
                      static_cast<int>(p.A.cols()));
    p.e_target = json_to_vec(get_field(term, "target", "terminal"), "terminal.target");

    if (doc.contains("state_set")) {
        const json& atoms = doc["state_set"];
        if (!atoms.is_array()) throw std::invalid_argument("state_set: expected an array");
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            const std::string where = "state_set[" + std::to_string(i) + "]";
            const json& a = atoms[i];
            const std::string type =
                a.contains("type") && a["type"].is_string() ? a["type"].get<std::string>() : "";
            if (type == "halfspace") {
                HalfspaceAtom hs;
                hs.a = json_to_vec(get_field(a, "a", where), where + ".a");
                hs.c = get_number(a, "c", where);
                p.state_set.atoms.emplace_back(std::move(hs));
            } else if (type == "norm_cone") {
                NormConeAtom nc;
                nc.P = json_to_mat(get_field(a, "P", where), where + ".P",
                                   static_cast<int>(p.A.cols()));
                nc.q = json_to_vec(get_field(a, "q", where), where + ".q");
                nc.r = get_number(a, "r", where);
                p.state_set.atoms.emplace_back(std::move(nc));
            } else {
                throw std::invalid_argument(where +
                                            ": type must be 'halfspace' or 'norm_cone'");
            }
        }
    }

    if (doc.contains("cost")) {
        const json& cost = doc["cost"];
        p.cost.zeta = static_cast<int>(get_number(cost, "zeta", "cost"));
        if (cost.contains("terminal")) {
            const json& t = cost["terminal"];
            if (t.contains("time_weight"))
                p.cost.terminal.time_weight = get_number(t, "time_weight", "cost.terminal");
            if (t.contains("state_weights"))
                p.cost.terminal.state_weights =
                    json_to_vec(t["state_weights"], "cost.terminal.state_weights");
            if (t.contains("offset"))
                p.cost.terminal.offset = get_number(t, "offset", "cost.terminal");
        }
        if (cost.contains("running")) {
            const json& terms = cost["running"];
            if (!terms.is_array())
                throw std::invalid_argument("cost.running: expected an array");
            for (std::size_t i = 0; i < terms.size(); ++i) {
                const std::string where = "cost.running[" + std::to_string(i) + "]";
                RunningCostTerm term;
                term.weight = get_number(terms[i], "weight", where);
                term.f.a = json_to_vec(get_field(terms[i], "a", where), where + ".a");
                term.f.b = get_number(terms[i], "b", where);
                p.cost.running.push_back(std::move(term));
            }
        }
    }

    return p;
}

std::string ocp_to_json_string(const SemiContinuousOCP& p, int indent) {
    json doc;
    doc["dynamics"] = {{"A", mat_to_json(p.A)}, {"B", mat_to_json(p.B)}, {"w", vec_to_json(p.w)}};
    json chans = json::array();
    for (const auto& ch : p.channels)
        chans.push_back({{"rho1", ch.rho1}, {"rho2", ch.rho2}, {"C", mat_to_json(ch.cone_matrix)}});
    doc["channels"] = std::move(chans);
    doc["K"] = p.K;
    doc["x0"] = vec_to_json(p.x0);
    doc["terminal"] = {{"E", mat_to_json(p.E)}, {"target", vec_to_json(p.e_target)}};

    json atoms = json::array();
    for (const auto& atom : p.state_set.atoms) {
        if (const auto* hs = std::get_if<HalfspaceAtom>(&atom)) {
            atoms.push_back({{"type", "halfspace"}, {"a", vec_to_json(hs->a)}, {"c", hs->c}});
        } else {
            const auto& nc = std::get<NormConeAtom>(atom);
            atoms.push_back({{"type", "norm_cone"},
                             {"P", mat_to_json(nc.P)},
                             {"q", vec_to_json(nc.q)},
                             {"r", nc.r}});
        }
    }
    doc["state_set"] = std::move(atoms);

    json running = json::array();
    for (const auto& term : p.cost.running)
        running.push_back({{"weight", term.weight}, {"a", vec_to_json(term.f.a)}, {"b", term.f.b}});
    doc["cost"] = {{"zeta", p.cost.zeta},
                   {"terminal",
                    {{"time_weight", p.cost.terminal.time_weight},
                     {"state_weights", vec_to_json(p.cost.terminal.state_weights)},
                     {"offset", p.cost.terminal.offset}}},
                   {"running", std::move(running)}};
    return doc.dump(indent);
}

SemiContinuousOCP load_ocp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open problem file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ocp_from_json_string(text);
}

void save_ocp_file(const SemiContinuousOCP& problem, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write problem file: " + path);
    out << ocp_to_json_string(problem) << "\n";
    if (!out) throw std::invalid_argument("failed writing problem file: " + path);
}

} // namespace lcvx
