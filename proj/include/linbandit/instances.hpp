#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"

namespace linbandit {

inline constexpr double kTieTol = 1e-12;  // exact-comparison tolerance throughout

/// A finite set of k action feature vectors in R^d.
struct ActionSet {
    std::vector<Vec> arms;
    int d = 0;
    int k = 0;

    Mat as_matrix() const {  // k x d, rows are arms
        Mat m(k, d);
        for (int i = 0; i < k; ++i) m.row(i) = arms[i].transpose();
        return m;
    }
};

/// Ground truth of one bandit problem: actions plus the parameter vector.
struct Instance {
    ActionSet actions;
    Vec theta;
    std::string name;
};

/// Gap structure derived from an instance. gap_min is the smallest strictly
/// positive gap (0 when every arm is optimal).
struct GapInfo {
    Vec means;
    double best_mean = 0.0;
    Vec gaps;
    double gap_min = 0.0;
    double gap_max = 0.0;
    std::vector<int> optimal_indices;
};

inline ActionSet make_action_set(std::vector<Vec> arms) {
    ActionSet a;
    a.k = static_cast<int>(arms.size());
    if (a.k == 0) throw std::invalid_argument("action set must contain arms");
    a.d = static_cast<int>(arms[0].size());
    for (const auto& x : arms)
        if (x.size() != a.d)
            throw std::invalid_argument("action set arms must share one dimension");
    a.arms = std::move(arms);
    return a;
}

inline GapInfo compute_gaps(const Instance& inst) {
    GapInfo g;
    const int k = inst.actions.k;
    g.means.resize(k);
    for (int i = 0; i < k; ++i) g.means[i] = inst.actions.arms[i].dot(inst.theta);
    g.best_mean = g.means.maxCoeff();
    g.gaps = Vec::Constant(k, g.best_mean) - g.means;
    g.gap_max = g.gaps.maxCoeff();
    g.gap_min = 0.0;
    for (int i = 0; i < k; ++i) {
        if (g.gaps[i] <= kTieTol) {
            g.gaps[i] = 0.0;  // snap ties to exact optimality
            g.optimal_indices.push_back(i);
        } else if (g.gap_min == 0.0 || g.gaps[i] < g.gap_min) {
            g.gap_min = g.gaps[i];
        }
    }
    return g;
}

// ---------------------------------------------------------------------------
// Instance catalog

inline Instance make_finite_armed(int d, const Vec& theta) {
    if (d < 2) throw std::invalid_argument("finite_armed: d must be >= 2");
    if (theta.size() != d) throw std::invalid_argument("finite_armed: theta must have length d");
    std::vector<Vec> arms;
    for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e[i] = 1.0;
        arms.push_back(e);
    }
    Instance inst{make_action_set(std::move(arms)), theta, "finite_armed"};
    return inst;
}

/// Arms {(1,0), (0,1), (1-eps, alpha*eps)} with theta = (1,0); the third
/// arm's gap equals eps exactly.
inline Instance make_example2(double alpha, double eps) {
    if (!(alpha > 0.0) || !(eps > 0.0))
        throw std::invalid_argument("example2: alpha and eps must be positive");
    std::vector<Vec> arms{Vec(2), Vec(2), Vec(2)};
    arms[0] << 1.0, 0.0;
    arms[1] << 0.0, 1.0;
    arms[2] << 1.0 - eps, alpha * eps;
    Instance inst{make_action_set(std::move(arms)), Vec(2), "example2"};
    inst.theta << 1.0, 0.0;
    return inst;
}

/// Arms {e1, e2, (1-eps, 8*alpha*eps)} with theta = e1; the instance on
/// which ellipsoid-optimistic play starves the informative arm e2.
inline Instance make_counterexample(double alpha, double eps) {
    if (!(alpha > 0.0) || !(eps > 0.0))
        throw std::invalid_argument("counterexample: alpha and eps must be positive");
    std::vector<Vec> arms{Vec(2), Vec(2), Vec(2)};
    arms[0] << 1.0, 0.0;
    arms[1] << 0.0, 1.0;
    arms[2] << 1.0 - eps, 8.0 * alpha * eps;
    Instance inst{make_action_set(std::move(arms)), Vec(2), "counterexample"};
    inst.theta << 1.0, 0.0;
    return inst;
}

/// Named-instance factory. params carries {"d", "theta"} for finite_armed
/// and {"alpha", "eps"} for example2/counterexample.
inline Instance catalog(const std::string& name, const nlohmann::json& params) {
    auto need = [&](const char* field) -> const nlohmann::json& {
        if (!params.contains(field))
            throw ConfigError("catalog '" + name + "': missing parameter '" + field + "'");
        return params.at(field);
    };
    if (name == "finite_armed") {
        const int d = need("d").get<int>();
        const auto tj = need("theta");
        if (!tj.is_array() || static_cast<int>(tj.size()) != d)
            throw ConfigError("catalog 'finite_armed': theta must be an array of length d");
        Vec theta(d);
        for (int i = 0; i < d; ++i) theta[i] = tj.at(i).get<double>();
        return make_finite_armed(d, theta);
    }
    if (name == "example2")
        return make_example2(need("alpha").get<double>(), need("eps").get<double>());
    if (name == "counterexample")
        return make_counterexample(need("alpha").get<double>(), need("eps").get<double>());
    throw ConfigError("catalog: unknown instance name '" + name + "'");
}

// ---------------------------------------------------------------------------
// Validation (report only; nothing here throws)

struct ValidationReport {
    int rank = 0;
    double max_arm_norm = 0.0;
    bool spans = false;
    bool unique_optimum = false;
    std::vector<std::pair<int, int>> duplicate_arms;
    std::vector<int> norm_violations;  // arms with ||x|| > 1 (beyond tolerance)
    std::vector<std::string> warnings;

    bool clean() const { return warnings.empty(); }
};

inline ValidationReport validate(const Instance& inst) {
    ValidationReport r;
    const auto& a = inst.actions;
    Mat m = a.as_matrix();
    Eigen::FullPivLU<Mat> lu(m);
    lu.setThreshold(1e-10);
    r.rank = static_cast<int>(lu.rank());
    r.spans = r.rank == a.d;
    if (!r.spans) r.warnings.push_back("arms do not span the ambient space");
    for (int i = 0; i < a.k; ++i) {
        const double nrm = a.arms[i].norm();
        r.max_arm_norm = std::max(r.max_arm_norm, nrm);
        if (nrm > 1.0 + 1e-9) {
            r.norm_violations.push_back(i);
            r.warnings.push_back("arm " + std::to_string(i) + " has norm > 1");
        }
        for (int j = i + 1; j < a.k; ++j)
            if ((a.arms[i] - a.arms[j]).cwiseAbs().maxCoeff() <= kTieTol) {
                r.duplicate_arms.emplace_back(i, j);
                r.warnings.push_back("arms " + std::to_string(i) + " and " + std::to_string(j) +
                                     " are duplicates");
            }
    }
    if (a.k < 2) r.warnings.push_back("action set has fewer than 2 arms");
    GapInfo g = compute_gaps(inst);
    r.unique_optimum = g.optimal_indices.size() == 1;
    if (!r.unique_optimum) r.warnings.push_back("optimal arm is not unique");
    return r;
}

// ---------------------------------------------------------------------------
// Instance file format: { "arms": [[...], ...], "theta": [...], "name"?: s }

inline Instance parse_instance(const nlohmann::json& j, const std::string& context = "instance") {
    if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
    if (!j.contains("arms") || !j.at("arms").is_array() || j.at("arms").empty())
        throw ConfigError(context + ": field 'arms' must be a non-empty array of rows");
    if (!j.contains("theta") || !j.at("theta").is_array())
        throw ConfigError(context + ": field 'theta' must be an array");
    const auto& rows = j.at("arms");
    const int d = static_cast<int>(rows.at(0).size());
    std::vector<Vec> arms;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows.at(r);
        if (!row.is_array() || static_cast<int>(row.size()) != d)
            throw ConfigError(context + ": arms row " + std::to_string(r) +
                              " must be an array of length " + std::to_string(d));
        Vec x(d);
        for (int c = 0; c < d; ++c) {
            if (!row.at(c).is_number())
                throw ConfigError(context + ": arms[" + std::to_string(r) + "][" +
                                  std::to_string(c) + "] is not a number");
            x[c] = row.at(c).get<double>();
            if (!std::isfinite(x[c]))
                throw ConfigError(context + ": arms[" + std::to_string(r) + "][" +
                                  std::to_string(c) + "] is not finite");
        }
        arms.push_back(std::move(x));
    }
    const auto& tj = j.at("theta");
    if (static_cast<int>(tj.size()) != d)
        throw ConfigError(context + ": theta has length " + std::to_string(tj.size()) +
                          ", expected " + std::to_string(d));
    Vec theta(d);
    for (int c = 0; c < d; ++c) {
        if (!tj.at(c).is_number())
            throw ConfigError(context + ": theta[" + std::to_string(c) + "] is not a number");
        theta[c] = tj.at(c).get<double>();
    }
    Instance inst{make_action_set(std::move(arms)), theta,
                  j.value("name", std::string{})};
    return inst;
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open instance file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("instance file '" + path + "': " + e.what());
    }
    return parse_instance(j, path);
}

inline nlohmann::json instance_to_json(const Instance& inst) {
    nlohmann::json j;
    j["arms"] = nlohmann::json::array();
    for (const auto& x : inst.actions.arms) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < x.size(); ++c) row.push_back(x[c]);
        j["arms"].push_back(row);
    }
    j["theta"] = nlohmann::json::array();
    for (int c = 0; c < inst.theta.size(); ++c) j["theta"].push_back(inst.theta[c]);
    if (!inst.name.empty()) j["name"] = inst.name;
    return j;
}

}  // namespace linbandit
