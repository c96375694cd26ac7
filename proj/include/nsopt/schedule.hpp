#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nsopt/vector_ops.hpp"

namespace nsopt {

// Power-law parameter families
//   rho_k   = c_rho   (k+k0)^{-rho_exp}, capped at rho_cap
//   alpha_k = c_alpha (k+k0)^{-alpha_exp}
//   delta_k = c_delta (k+k0)^{-delta_exp}   (default alpha_k^2)
//   a_k     = c_a     (k+k0)^{-a_exp}
// Exponents are kept so admissibility conditions reduce to inequalities.
struct Schedule {
    double rho_c = 1.0, rho_exp = 1.0;
    double alpha_c = 1.0, alpha_exp = 1.0 / 3.0;
    double delta_c = 0.0, delta_exp = 0.0;  // delta_c == 0 -> delta = alpha^2
    double a_c = 1.0, a_exp = 2.0 / 3.0;
    double k0 = 1.0;
    double rho_cap = std::numeric_limits<double>::infinity();

    bool delta_is_alpha_sq() const { return delta_c <= 0.0; }

    double rho(std::uint64_t k) const {
        return std::min(rho_cap, rho_c * std::pow(double(k) + k0, -rho_exp));
    }
    double alpha(std::uint64_t k) const { return alpha_c * std::pow(double(k) + k0, -alpha_exp); }
    double delta(std::uint64_t k) const {
        if (delta_is_alpha_sq()) {
            double a = alpha(k);
            return a * a;
        }
        return delta_c * std::pow(double(k) + k0, -delta_exp);
    }
    double a(std::uint64_t k) const { return std::min(1.0, a_c * std::pow(double(k) + k0, -a_exp)); }

    // Effective exponents for validation.
    double eff_delta_exp() const { return delta_is_alpha_sq() ? 2.0 * alpha_exp : delta_exp; }
};

// Admissibility profiles: each solver family imposes its own set of joint
// conditions on the step/smoothing/averaging sequences.
enum class TheoremTag {
    ggd,             // generalized gradient descent: rho -> 0, sum rho = inf
    fd_basic,        // plain finite-difference descent
    fd_minimax,      // finite differences on the active max component
    fd_averaged,     // windowed direction averaging
    cond_gradient,   // conditional/reduced gradient with an estimate averager
    analytic_penalty,  // closed-form penalty coefficient with two averagers
    saddle,          // Cesaro primal-dual steps
    kw,              // projected gradient-free stochastic approximation
    tracking,        // averaging operation on a slowly driven path
    averaged_smooth  // averaged directions with exact per-sample gradients
};

inline const char* to_string(TheoremTag t) {
    switch (t) {
        case TheoremTag::ggd: return "ggd";
        case TheoremTag::fd_basic: return "fd_basic";
        case TheoremTag::fd_minimax: return "fd_minimax";
        case TheoremTag::fd_averaged: return "fd_averaged";
        case TheoremTag::cond_gradient: return "cond_gradient";
        case TheoremTag::analytic_penalty: return "analytic_penalty";
        case TheoremTag::saddle: return "saddle";
        case TheoremTag::kw: return "kw";
        case TheoremTag::tracking: return "tracking";
        case TheoremTag::averaged_smooth: return "averaged_smooth";
    }
    return "?";
}

inline bool theorem_tag_from_string(const std::string& s, TheoremTag& out) {
    const std::pair<const char*, TheoremTag> table[] = {
        {"ggd", TheoremTag::ggd},
        {"fd_basic", TheoremTag::fd_basic},
        {"fd_minimax", TheoremTag::fd_minimax},
        {"fd_averaged", TheoremTag::fd_averaged},
        {"cond_gradient", TheoremTag::cond_gradient},
        {"analytic_penalty", TheoremTag::analytic_penalty},
        {"saddle", TheoremTag::saddle},
        {"kw", TheoremTag::kw},
        {"tracking", TheoremTag::tracking},
        {"averaged_smooth", TheoremTag::averaged_smooth},
    };
    for (const auto& [name, tag] : table)
        if (s == name) {
            out = tag;
            return true;
        }
    return false;
}

struct ConditionReport {
    std::string name;        // e.g. "sum rho^2 < inf"
    std::string inequality;  // the exponent inequality that was checked
    bool pass = false;
};

struct ScheduleReport {
    std::vector<ConditionReport> conditions;
    bool all_pass() const {
        for (const auto& c : conditions)
            if (!c.pass) return false;
        return true;
    }
    std::string first_failure() const {
        for (const auto& c : conditions)
            if (!c.pass) return c.name + " violated: needs " + c.inequality;
        return {};
    }
};

// Symbolic admissibility check of a power-law schedule against the conditions
// a given convergence theorem imposes.
inline ScheduleReport validate_schedule(const Schedule& s, TheoremTag theorem) {
    ScheduleReport rep;
    const double b = s.rho_exp;     // rho ~ k^-b
    const double mu = s.alpha_exp;  // alpha ~ k^-mu
    const double d = s.eff_delta_exp();
    const double t = s.a_exp;  // a ~ k^-t

    auto add = [&](const std::string& name, const std::string& ineq, bool pass) {
        rep.conditions.push_back({name, ineq, pass});
    };
    auto sum_rho_inf = [&] { add("sum rho = inf", "rho_exp <= 1", b <= 1.0 && s.rho_c > 0.0); };
    auto sum_rho2 = [&] { add("sum rho^2 < inf", "rho_exp > 1/2", b > 0.5); };
    auto rho_over_alpha = [&] { add("rho/alpha -> 0", "rho_exp > alpha_exp", b > mu); };
    auto delta_over_alpha = [&] { add("delta/alpha -> 0", "delta_exp > alpha_exp", d > mu); };
    auto alpha_to_zero = [&] { add("alpha -> 0", "alpha_exp > 0", mu > 0.0); };
    auto alpha_drift = [&] {
        add("|alpha_k - alpha_{k+1}|/rho -> 0", "rho_exp < alpha_exp + 1", b < mu + 1.0);
    };
    auto sum_a2 = [&] { add("sum a^2 < inf", "a_exp > 1/2", t > 0.5); };
    auto sum_a_inf = [&] { add("sum a = inf", "a_exp <= 1", t <= 1.0 && s.a_c > 0.0); };
    auto rho_over_alpha_a = [&] {
        add("rho/(alpha a) -> 0", "rho_exp > alpha_exp + a_exp", b > mu + t);
    };
    auto sum_rho_over_alpha_sq = [&] {
        add("sum (rho/alpha)^2 < inf", "rho_exp - alpha_exp > 1/2", b - mu > 0.5);
    };
    auto sum_rho_alpha = [&] {
        add("sum rho*alpha < inf", "rho_exp + alpha_exp > 1", b + mu > 1.0);
    };
    auto rho_over_a = [&] { add("rho/a -> 0", "rho_exp > a_exp", b > t); };

    switch (theorem) {
        case TheoremTag::ggd:
            add("rho -> 0", "rho_exp > 0", b > 0.0);
            sum_rho_inf();
            break;
        case TheoremTag::fd_basic:
        case TheoremTag::kw:
            sum_rho_inf();
            sum_rho2();
            rho_over_alpha();
            delta_over_alpha();
            alpha_drift();
            alpha_to_zero();
            break;
        case TheoremTag::fd_minimax:
            sum_rho_inf();
            sum_rho2();
            delta_over_alpha();
            alpha_to_zero();
            break;
        case TheoremTag::fd_averaged:
            sum_rho_inf();
            sum_rho2();
            rho_over_alpha();
            delta_over_alpha();
            alpha_drift();
            alpha_to_zero();
            // alpha_{k-1}/alpha_k -> 1 and limsup rho_k/rho_{k+1} < inf hold
            // for every power law; recorded as always-pass conditions.
            add("alpha_{k-1}/alpha_k -> 1", "power law", true);
            add("limsup rho_k/rho_{k+1} < inf", "power law", true);
            break;
        case TheoremTag::cond_gradient:
            sum_rho_inf();
            sum_a2();
            rho_over_alpha_a();
            sum_rho_over_alpha_sq();
            alpha_drift();
            alpha_to_zero();
            break;
        case TheoremTag::analytic_penalty:
            sum_rho_inf();
            sum_rho_over_alpha_sq();
            rho_over_alpha_a();
            sum_a2();
            alpha_drift();
            alpha_to_zero();
            delta_over_alpha();
            break;
        case TheoremTag::saddle:
            sum_rho_inf();
            sum_rho2();
            delta_over_alpha();
            alpha_to_zero();
            sum_rho_alpha();
            break;
        case TheoremTag::tracking:
            sum_a_inf();
            sum_a2();
            rho_over_a();
            break;
        case TheoremTag::averaged_smooth:
            sum_rho_inf();
            sum_a2();
            rho_over_a();
            break;
    }
    return rep;
}

}  // namespace nsopt
