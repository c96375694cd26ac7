#pragma once

#include <memory>

#include "nsopt/min_norm_point.hpp"
#include "nsopt/oracle.hpp"

namespace nsopt {

struct MaxSelection {
    double value = 0.0;
    Vec gradient;
    std::size_t active_index = 0;
};

// Value and pseudogradient selection of max_i f_i(x). Ties break to the
// lowest index, a valid selection from the active hull.
inline MaxSelection pg_select_max(const std::vector<FunctionOracle>& children, const Vec& x) {
    if (children.empty()) throw std::invalid_argument("pg_select_max: no children");
    MaxSelection sel;
    sel.value = children[0].checked_value(x);
    sel.active_index = 0;
    for (std::size_t i = 1; i < children.size(); ++i) {
        double v = children[i].checked_value(x);
        if (v > sel.value) {
            sel.value = v;
            sel.active_index = i;
        }
    }
    sel.gradient = children[sel.active_index].checked_gradient(x);
    return sel;
}

// min_i f_i via the negation identity; lowest-index ties.
inline MaxSelection pg_select_min(const std::vector<FunctionOracle>& children, const Vec& x) {
    if (children.empty()) throw std::invalid_argument("pg_select_min: no children");
    MaxSelection sel;
    sel.value = children[0].checked_value(x);
    sel.active_index = 0;
    for (std::size_t i = 1; i < children.size(); ++i) {
        double v = children[i].checked_value(x);
        if (v < sel.value) {
            sel.value = v;
            sel.active_index = i;
        }
    }
    sel.gradient = children[sel.active_index].checked_gradient(x);
    return sel;
}

struct ComposeResult {
    double value = 0.0;
    Vec gradient;
};

// Chain rule for f0(f1(x),...,fm(x)): g = [g^1 ... g^m] g^0 with g^0 taken at
// z(x) and g^i the inner selections.
inline ComposeResult pg_compose(const FunctionOracle& outer,
                                const std::vector<FunctionOracle>& inner, const Vec& x) {
    if (outer.dim != inner.size())
        throw DimensionError("pg_compose: outer dimension != number of inner functions");
    const std::size_t m = inner.size();
    Vec z(m);
    std::vector<Vec> gi(m);
    for (std::size_t i = 0; i < m; ++i) {
        z[i] = inner[i].checked_value(x);
        gi[i] = inner[i].checked_gradient(x);
    }
    Vec g0 = outer.checked_gradient(z);
    ComposeResult r;
    r.value = outer.checked_value(z);
    r.gradient = zeros(x.size());
    for (std::size_t i = 0; i < m; ++i) axpy(g0[i], gi[i], r.gradient);
    return r;
}

// Expression tree over oracles; every node evaluates to a FunctionOracle.
class PgExpr {
  public:
    using Ptr = std::shared_ptr<const PgExpr>;

    static Ptr leaf(FunctionOracle f) {
        auto e = std::make_shared<PgExpr>();
        e->kind_ = Kind::leaf;
        e->leaf_ = std::move(f);
        return e;
    }
    static Ptr max_of(std::vector<Ptr> children) { return nary(Kind::max, std::move(children)); }
    static Ptr min_of(std::vector<Ptr> children) { return nary(Kind::min, std::move(children)); }
    static Ptr abs_of(Ptr child) {
        auto e = std::make_shared<PgExpr>();
        e->kind_ = Kind::abs;
        e->children_ = {std::move(child)};
        return e;
    }
    static Ptr affine(Vec weights, std::vector<Ptr> children, double constant = 0.0) {
        if (weights.size() != children.size())
            throw DimensionError("PgExpr::affine: weights/children mismatch");
        auto e = nary_mut(Kind::affine, std::move(children));
        e->weights_ = std::move(weights);
        e->constant_ = constant;
        return e;
    }
    static Ptr compose(FunctionOracle outer, std::vector<Ptr> inner) {
        if (outer.dim != inner.size())
            throw DimensionError("PgExpr::compose: outer dim != inner count");
        auto e = nary_mut(Kind::compose, std::move(inner));
        e->leaf_ = std::move(outer);
        return e;
    }

    std::size_t dim() const {
        if (kind_ == Kind::leaf) return leaf_.dim;
        return children_.at(0)->dim();
    }

    // Materialize the tree as a plain oracle. Nodes are immutable, so the
    // captured copy shares children with the original.
    FunctionOracle to_oracle() const {
        auto self = std::make_shared<const PgExpr>(*this);
        FunctionOracle f;
        f.dim = dim();
        f.value = [self](const Vec& x) { return self->eval(x).value; };
        f.pseudogradient = [self](const Vec& x) { return self->eval(x).gradient; };
        return f;
    }

    ComposeResult eval(const Vec& x) const {
        switch (kind_) {
            case Kind::leaf:
                return {leaf_.checked_value(x), leaf_.checked_gradient(x)};
            case Kind::max: {
                auto sel = pg_select_max(child_oracles(), x);
                return {sel.value, sel.gradient};
            }
            case Kind::min: {
                auto sel = pg_select_min(child_oracles(), x);
                return {sel.value, sel.gradient};
            }
            case Kind::abs: {
                ComposeResult c = children_[0]->eval(x);
                if (c.value >= 0.0) return c;  // max(f,-f): f wins ties at 0
                return {-c.value, scaled(c.gradient, -1.0)};
            }
            case Kind::affine: {
                ComposeResult r{constant_, zeros(x.size())};
                for (std::size_t i = 0; i < children_.size(); ++i) {
                    ComposeResult c = children_[i]->eval(x);
                    r.value += weights_[i] * c.value;
                    axpy(weights_[i], c.gradient, r.gradient);
                }
                return r;
            }
            case Kind::compose:
                return pg_compose(leaf_, child_oracles(), x);
        }
        throw std::logic_error("unreachable");
    }

    PgExpr() = default;

  private:
    enum class Kind { leaf, max, min, abs, affine, compose };

    static std::shared_ptr<PgExpr> nary_mut(Kind k, std::vector<Ptr> children) {
        if (children.empty()) throw std::invalid_argument("PgExpr: empty children");
        auto e = std::make_shared<PgExpr>();
        e->kind_ = k;
        e->children_ = std::move(children);
        return e;
    }
    static Ptr nary(Kind k, std::vector<Ptr> children) { return nary_mut(k, std::move(children)); }

    std::vector<FunctionOracle> child_oracles() const {
        std::vector<FunctionOracle> v;
        v.reserve(children_.size());
        for (const Ptr& c : children_) v.push_back(c->to_oracle());
        return v;
    }

    Kind kind_ = Kind::leaf;
    FunctionOracle leaf_;
    std::vector<Ptr> children_;
    Vec weights_;
    double constant_ = 0.0;
};

// Sampled stationarity certificate: the norm of the minimum-norm point of
// co{g(y_j)} over n_samples uniform draws from the delta-ball around x. An
// upper estimate of gamma_delta(x); monotone nonincreasing in delta in
// expectation.
inline double stationarity_residual(const FunctionOracle& oracle, const Vec& x, double delta,
                                    std::size_t n_samples, Rng& rng) {
    if (delta <= 0.0) throw std::invalid_argument("stationarity_residual: delta must be > 0");
    if (n_samples < 1) throw std::invalid_argument("stationarity_residual: n_samples must be >= 1");
    std::vector<Vec> grads;
    grads.reserve(n_samples);
    for (std::size_t j = 0; j < n_samples; ++j) {
        Vec y = rng.uniform_ball(x, delta);
        grads.push_back(oracle.checked_gradient(y));
    }
    return norm2(min_norm_point(grads, 1e-10));
}

}  // namespace nsopt
