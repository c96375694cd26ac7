#include "nsopt/problems.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "nsopt/calculus.hpp"
#include "nsopt/lp.hpp"

namespace nsopt {

namespace {

double phi_pdf(double z) { return std::exp(-0.5 * z * z) / 2.5066282746310005024157652848110; }

// sign selection of |t| as max(t, -t): the t branch wins ties at 0
double abs_sign(double t) { return t >= 0.0 ? 1.0 : -1.0; }

std::vector<double> parse_args(const std::string& text, std::string& name) {
    auto open = text.find('(');
    std::vector<double> args;
    if (open == std::string::npos) {
        name = text;
        return args;
    }
    name = text.substr(0, open);
    auto close = text.rfind(')');
    if (close == std::string::npos || close < open)
        throw std::invalid_argument("make_benchmark: unbalanced parentheses in '" + text + "'");
    std::string inner = text.substr(open + 1, close - open - 1);
    std::stringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        args.push_back(std::stod(tok));
    }
    return args;
}

}  // namespace

DemandLaw DemandLaw::uniform(double a, double b) {
    if (!(b > a)) throw std::invalid_argument("DemandLaw::uniform: need b > a");
    DemandLaw l;
    l.kind = Kind::uniform;
    l.a = a;
    l.b = b;
    return l;
}

DemandLaw DemandLaw::discrete(Vec values, Vec probs) {
    if (values.empty() || values.size() != probs.size())
        throw std::invalid_argument("DemandLaw::discrete: values/probs mismatch");
    double s = std::accumulate(probs.begin(), probs.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-9)
        throw std::invalid_argument("DemandLaw::discrete: probabilities must sum to 1");
    // keep atoms sorted for the inverse CDF
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    DemandLaw l;
    l.kind = Kind::discrete;
    for (std::size_t i : idx) {
        l.values.push_back(values[i]);
        l.probs.push_back(probs[i]);
    }
    return l;
}

DemandLaw DemandLaw::truncnormal(double mu, double sigma, double a, double b) {
    if (!(b > a) || sigma <= 0.0)
        throw std::invalid_argument("DemandLaw::truncnormal: need b > a and sigma > 0");
    DemandLaw l;
    l.kind = Kind::truncnormal;
    l.mu = mu;
    l.sigma = sigma;
    l.a = a;
    l.b = b;
    return l;
}

DemandLaw DemandLaw::parse(const std::string& text) {
    std::string name;
    std::vector<double> args = parse_args(text, name);
    if (name == "uniform" && args.size() == 2) return uniform(args[0], args[1]);
    if (name == "truncnormal" && args.size() == 4)
        return truncnormal(args[0], args[1], args[2], args[3]);
    if (name == "discrete" && args.size() >= 2 && args.size() % 2 == 0) {
        Vec v(args.begin(), args.begin() + std::ptrdiff_t(args.size() / 2));
        Vec p(args.begin() + std::ptrdiff_t(args.size() / 2), args.end());
        return discrete(v, p);
    }
    throw std::invalid_argument("DemandLaw::parse: cannot parse '" + text + "'");
}

std::string DemandLaw::to_string() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::uniform: os << "uniform(" << a << "," << b << ")"; break;
        case Kind::truncnormal:
            os << "truncnormal(" << mu << "," << sigma << "," << a << "," << b << ")";
            break;
        case Kind::discrete: {
            os << "discrete(";
            for (double v : values) os << v << ",";
            for (std::size_t i = 0; i < probs.size(); ++i)
                os << probs[i] << (i + 1 < probs.size() ? "," : "");
            os << ")";
            break;
        }
    }
    return os.str();
}

double DemandLaw::quantile(double q) const {
    q = std::clamp(q, 0.0, 1.0);
    switch (kind) {
        case Kind::uniform: return a + (b - a) * q;
        case Kind::discrete: {
            double c = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i) {
                c += probs[i];
                if (q <= c + 1e-15) return values[i];
            }
            return values.back();
        }
        case Kind::truncnormal: {
            double za = (a - mu) / sigma, zb = (b - mu) / sigma;
            double Fa = normal_cdf(za), Fb = normal_cdf(zb);
            double p = Fa + q * (Fb - Fa);
            p = std::clamp(p, 1e-15, 1.0 - 1e-15);
            return mu + sigma * normal_quantile(p);
        }
    }
    throw std::logic_error("unreachable");
}

double DemandLaw::cdf(double t) const {
    switch (kind) {
        case Kind::uniform: return std::clamp((t - a) / (b - a), 0.0, 1.0);
        case Kind::discrete: {
            double c = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i)
                if (values[i] <= t) c += probs[i];
            return c;
        }
        case Kind::truncnormal: {
            if (t <= a) return 0.0;
            if (t >= b) return 1.0;
            double za = (a - mu) / sigma, zb = (b - mu) / sigma, zt = (t - mu) / sigma;
            double Z = normal_cdf(zb) - normal_cdf(za);
            return (normal_cdf(zt) - normal_cdf(za)) / Z;
        }
    }
    throw std::logic_error("unreachable");
}

double DemandLaw::mean() const { return mean_below(std::numeric_limits<double>::infinity()); }

double DemandLaw::mean_below(double t) const {
    switch (kind) {
        case Kind::uniform: {
            double tt = std::clamp(t, a, b);
            return (tt * tt - a * a) / (2.0 * (b - a));
        }
        case Kind::discrete: {
            double s = 0.0;
            for (std::size_t i = 0; i < values.size(); ++i)
                if (values[i] <= t) s += probs[i] * values[i];
            return s;
        }
        case Kind::truncnormal: {
            double tt = std::clamp(t, a, b);
            double za = (a - mu) / sigma, zb = (b - mu) / sigma, zt = (tt - mu) / sigma;
            double Z = normal_cdf(zb) - normal_cdf(za);
            double F = (normal_cdf(zt) - normal_cdf(za)) / Z;
            return mu * F + sigma * (phi_pdf(za) - phi_pdf(zt)) / Z;
        }
    }
    throw std::logic_error("unreachable");
}

double DemandLaw::expected_loss(double x, double alpha, double beta) const {
    // E max{alpha (x - theta), beta (theta - x)}; the two branches never
    // overlap in sign, so the loss splits at theta = x.
    double F = cdf(x), Mb = mean_below(x), M = mean();
    return alpha * (x * F - Mb) + beta * ((M - Mb) - x * (1.0 - F));
}

double DemandLaw::expected_loss_grad(double x, double alpha, double beta) const {
    double F = cdf(x);
    return alpha * F - beta * (1.0 - F);
}

ProblemSpec make_abs_sum(std::size_t n) {
    ProblemSpec p;
    p.name = "abs_sum(" + std::to_string(n) + ")";
    p.dim = n;
    FunctionOracle f;
    f.dim = n;
    f.value = [](const Vec& x) {
        double s = 0.0;
        for (double v : x) s += std::abs(v);
        return s;
    };
    f.pseudogradient = [](const Vec& x) {
        Vec g(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) g[i] = abs_sign(x[i]);
        return g;
    };
    f.lipschitz_bound = std::sqrt(double(n));
    p.objective = f;
    p.lipschitz = std::sqrt(double(n));
    p.known_solution = KnownSolution{zeros(n), 0.0, "closed form: unique minimizer 0"};
    p.brute_force_oracle = "separable: per-coordinate minimum of |t| at 0";
    p.x0 = Vec(n, 0.5);
    return p;
}

ProblemSpec make_max_abs(std::size_t n) {
    ProblemSpec p;
    p.name = "max_abs(" + std::to_string(n) + ")";
    p.dim = n;
    FunctionOracle f;
    f.dim = n;
    f.value = [](const Vec& x) { return norm_inf(x); };
    f.pseudogradient = [](const Vec& x) {
        std::size_t arg = 0;
        for (std::size_t i = 1; i < x.size(); ++i)
            if (std::abs(x[i]) > std::abs(x[arg])) arg = i;
        Vec g = zeros(x.size());
        g[arg] = abs_sign(x[arg]);
        return g;
    };
    f.lipschitz_bound = 1.0;
    p.objective = f;
    p.lipschitz = 1.0;
    p.known_solution = KnownSolution{zeros(n), 0.0, "closed form: unique minimizer 0"};
    p.brute_force_oracle = "max of absolutes vanishes only at the origin";
    p.x0 = Vec(n, 0.5);
    return p;
}

ProblemSpec make_max_linear(std::size_t m, std::size_t n, std::uint64_t seed) {
    ProblemSpec p;
    p.name = "max_linear(" + std::to_string(m) + "," + std::to_string(n) + ")";
    p.dim = n;
    Rng rng = Rng::for_run(seed, 0xBEEF);
    Mat A(m, n);
    Vec c(m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) A(i, j) = rng.uniform(-1.0, 1.0);
        c[i] = rng.uniform(0.0, 1.0);
    }
    // Recenter so that the max is coercive: add +-e_j rows scaled up.
    auto value = [A, c](const Vec& x) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < A.rows; ++i) best = std::max(best, dot(A.row(i), x) + c[i]);
        best = std::max(best, 2.0 * norm_inf(x) - 1.0);  // coercive envelope
        return best;
    };
    FunctionOracle f;
    f.dim = n;
    f.value = value;
    f.pseudogradient = [A, c](const Vec& x) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < A.rows; ++i) {
            double v = dot(A.row(i), x) + c[i];
            if (v > best) {
                best = v;
                arg = i;
            }
        }
        double env = 2.0 * norm_inf(x) - 1.0;
        if (env > best) {
            std::size_t j = 0;
            for (std::size_t i = 1; i < x.size(); ++i)
                if (std::abs(x[i]) > std::abs(x[j])) j = i;
            Vec g = zeros(x.size());
            g[j] = 2.0 * abs_sign(x[j]);
            return g;
        }
        return A.row(arg);
    };
    p.objective = f;

    // Exact minimizer by LP: min t s.t. A x + c <= t, 2 x_j - 1 <= t, -2 x_j - 1 <= t.
    LpProblem lp;
    lp.A = Mat(m + 2 * n, n + 1);
    lp.b = Vec(m + 2 * n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) lp.A(i, j) = A(i, j);
        lp.A(i, n) = -1.0;
        lp.b[i] = -c[i];
    }
    for (std::size_t j = 0; j < n; ++j) {
        lp.A(m + 2 * j, j) = 2.0;
        lp.A(m + 2 * j, n) = -1.0;
        lp.b[m + 2 * j] = 1.0;
        lp.A(m + 2 * j + 1, j) = -2.0;
        lp.A(m + 2 * j + 1, n) = -1.0;
        lp.b[m + 2 * j + 1] = 1.0;
    }
    lp.c = zeros(n + 1);
    lp.c[n] = 1.0;
    lp.lo = Vec(n + 1, -std::numeric_limits<double>::infinity());
    lp.hi = Vec(n + 1, std::numeric_limits<double>::infinity());
    LpResult sol = lp_solve(lp);
    if (sol.status == LpStatus::optimal) {
        Vec xs(sol.x.begin(), sol.x.begin() + std::ptrdiff_t(n));
        p.known_solution = KnownSolution{xs, sol.x[n], "lp: epigraph reformulation"};
    }
    p.brute_force_oracle = "lp over the epigraph of the max";
    p.x0 = zeros(n);
    // expose the affine pieces (and the coercive envelope pieces) for the
    // minimax solvers
    for (std::size_t i = 0; i < m; ++i) {
        FunctionOracle piece;
        piece.dim = n;
        Vec ai = A.row(i);
        double ci = c[i];
        piece.value = [ai, ci](const Vec& x) { return dot(ai, x) + ci; };
        piece.pseudogradient = [ai](const Vec&) { return ai; };
        p.components.push_back(piece);
    }
    for (std::size_t j = 0; j < n; ++j) {
        for (double sgn : {1.0, -1.0}) {
            FunctionOracle piece;
            piece.dim = n;
            piece.value = [j, sgn](const Vec& x) { return 2.0 * sgn * x[j] - 1.0; };
            piece.pseudogradient = [n, j, sgn](const Vec&) {
                return scaled(unit(n, j), 2.0 * sgn);
            };
            p.components.push_back(piece);
        }
    }
    p.set = FeasibleSet::box(Vec(n, -2.0), Vec(n, 2.0));
    return p;
}

ProblemSpec make_resource_split() {
    ProblemSpec p;
    p.name = "resource_split";
    p.dim = 3;
    StochasticOracle o;  // E || x - c(theta) ||^2 over the probability simplex
    o.dim = 3;
    o.draw_theta = [](Rng& rng) { return Theta{rng.next_double()}; };
    auto target = [](const Theta& th) { return Vec{0.6 * th[0], 0.3, 0.1}; };
    o.sample_value = [target](const Vec& x, const Theta& th) {
        return norm2_sq(sub(x, target(th)));
    };
    o.sample_gradient = [target](const Vec& x, const Theta& th) {
        return scaled(sub(x, target(th)), 2.0);
    };
    FunctionOracle mean;
    mean.dim = 3;
    mean.value = [](const Vec& x) {
        // E theta = 1/2 and Var(0.6 theta) = 0.03: quadratic around (0.3,0.3,0.1)
        Vec c{0.3, 0.3, 0.1};
        return norm2_sq(sub(x, c)) + 0.03;
    };
    mean.pseudogradient = [](const Vec& x) {
        Vec c{0.3, 0.3, 0.1};
        return scaled(sub(x, c), 2.0);
    };
    o.mean_oracle = mean;
    p.stochastic = o;
    p.objective = mean;
    p.eq_A = Mat(1, 3, 1.0);
    p.eq_b = Vec{1.0};
    p.x0 = Vec{1.0 / 3, 1.0 / 3, 1.0 / 3};
    p.brute_force_oracle = "projection of the mean target onto the simplex";
    return p;
}

ProblemSpec make_quantile_floor() {
    ProblemSpec p;
    p.name = "quantile_floor";
    p.dim = 1;
    StochasticOracle o;  // E (x - theta)^2, theta ~ U[0,1]
    o.dim = 1;
    o.draw_theta = [](Rng& rng) { return Theta{rng.next_double()}; };
    o.sample_value = [](const Vec& x, const Theta& th) {
        double d = x[0] - th[0];
        return d * d;
    };
    o.sample_gradient = [](const Vec& x, const Theta& th) {
        return Vec{2.0 * (x[0] - th[0])};
    };
    FunctionOracle mean;
    mean.dim = 1;
    mean.value = [](const Vec& x) { return (x[0] - 0.5) * (x[0] - 0.5) + 1.0 / 12.0; };
    mean.pseudogradient = [](const Vec& x) { return Vec{2.0 * (x[0] - 0.5)}; };
    o.mean_oracle = mean;
    p.stochastic = o;
    p.objective = mean;
    FunctionOracle floor_c;
    floor_c.dim = 1;
    floor_c.value = [](const Vec& x) { return 0.7 - x[0]; };
    floor_c.pseudogradient = [](const Vec&) { return Vec{-1.0}; };
    p.constraint_list = {floor_c};
    p.known_solution = KnownSolution{Vec{0.7}, 0.04 + 1.0 / 12.0,
                                     "projected mean: the floor binds at 0.7"};
    p.brute_force_oracle = "1-d grid over the closed-form expectation";
    p.x0 = Vec{0.9};
    return p;
}

ProblemSpec make_ravine(double kappa) {
    if (kappa <= 0.0) throw std::invalid_argument("make_ravine: kappa must be positive");
    ProblemSpec p;
    p.name = "ravine(" + std::to_string(int(kappa)) + ")";
    p.dim = 2;
    FunctionOracle f;
    f.dim = 2;
    f.value = [kappa](const Vec& x) { return 0.5 * (x[0] * x[0] + kappa * x[1] * x[1]); };
    f.pseudogradient = [kappa](const Vec& x) { return Vec{x[0], kappa * x[1]}; };
    p.objective = f;
    p.known_solution = KnownSolution{zeros(2), 0.0, "closed form: strictly convex quadratic"};
    p.brute_force_oracle = "gradient vanishes only at the origin";
    p.x0 = Vec{1.0, 1.0};
    return p;
}

ProblemSpec make_circle_linear() {
    ProblemSpec p;
    p.name = "circle_linear";
    p.dim = 2;
    FunctionOracle f;
    f.dim = 2;
    f.value = [](const Vec& x) { return x[0]; };
    f.pseudogradient = [](const Vec& x) {
        (void)x;
        return Vec{1.0, 0.0};
    };
    p.objective = f;
    FunctionOracle h;
    h.dim = 2;
    h.value = [](const Vec& x) { return x[0] * x[0] + x[1] * x[1] - 1.0; };
    h.pseudogradient = [](const Vec& x) { return Vec{2.0 * x[0], 2.0 * x[1]}; };
    p.constraint_h = h;
    p.known_solution = KnownSolution{Vec{-1.0, 0.0}, -1.0, "kkt: grad f + u grad h = 0, u = 1/2"};
    p.brute_force_oracle = "minimize x1 on the unit circle";
    p.x0 = zeros(2);
    p.set = FeasibleSet::box(Vec{-2.0, -2.0}, Vec{2.0, 2.0});
    return p;
}

ProblemSpec make_sin_sum() {
    ProblemSpec p;
    p.name = "sin_sum";
    p.dim = 1;
    FunctionOracle f;
    f.dim = 1;
    f.value = [](const Vec& x) { return std::sin(x[0]) + std::sin(10.0 * x[0] / 3.0); };
    f.pseudogradient = [](const Vec& x) {
        return Vec{std::cos(x[0]) + (10.0 / 3.0) * std::cos(10.0 * x[0] / 3.0)};
    };
    f.lipschitz_bound = 1.0 + 10.0 / 3.0;
    p.objective = f;
    p.lipschitz = 6.0;  // safe overestimate of sup|f'| = 13/3
    p.set = FeasibleSet::box(Vec{2.7}, Vec{7.5});
    p.x0 = Vec{2.7};
    p.brute_force_oracle = "dense grid over [2.7, 7.5]";
    return p;
}

ProblemSpec make_newsvendor(std::size_t products, Vec alpha, Vec beta,
                            std::vector<DemandLaw> laws, Mat interchange, double capacity,
                            Vec unit_volume) {
    const std::size_t r = laws.size();
    if (r == 0) throw std::invalid_argument("make_newsvendor: need at least one demand law");
    check_dim(alpha, r, "make_newsvendor alpha");
    check_dim(beta, r, "make_newsvendor beta");
    for (std::size_t s = 0; s < r; ++s)
        if (alpha[s] <= 0.0 || beta[s] <= 0.0)
            throw std::invalid_argument("make_newsvendor: alpha, beta must be positive");
    if (interchange.rows == 0) {  // default: product j serves demand j
        if (products != r)
            throw std::invalid_argument("make_newsvendor: identity interchange needs n == r");
        interchange = Mat::identity(products);
    }
    if (interchange.rows != products || interchange.cols != r)
        throw DimensionError("make_newsvendor: interchange must be products x demands");

    ProblemSpec p;
    p.name = "newsvendor";
    const std::size_t dim = products * r;  // x_{js} flattened row-major
    p.dim = dim;
    Mat lam = interchange;

    auto supply = [lam, products, r](const Vec& x, std::size_t s) {
        double y = 0.0;
        for (std::size_t j = 0; j < products; ++j) y += lam(j, s) * x[j * r + s];
        return y;
    };

    StochasticOracle o;
    o.dim = dim;
    o.draw_theta = [laws](Rng& rng) {
        Theta th(laws.size());
        for (std::size_t s = 0; s < laws.size(); ++s) th[s] = laws[s].sample(rng);
        return th;
    };
    Vec av = alpha, bv = beta;
    o.sample_value = [supply, av, bv, r](const Vec& x, const Theta& th) {
        double loss = 0.0;
        for (std::size_t s = 0; s < r; ++s) {
            double y = supply(x, s);
            loss += std::max(av[s] * (y - th[s]), bv[s] * (th[s] - y));
        }
        return loss;
    };
    o.sample_gradient = [supply, av, bv, lam, products, r](const Vec& x, const Theta& th) {
        Vec g = zeros(x.size());
        for (std::size_t s = 0; s < r; ++s) {
            double y = supply(x, s);
            // subgradient of the two-branch max: alpha on oversupply, -beta on
            // shortage; oversupply branch wins ties
            double slope = av[s] * (y - th[s]) >= bv[s] * (th[s] - y) ? av[s] : -bv[s];
            for (std::size_t j = 0; j < products; ++j) g[j * r + s] += slope * lam(j, s);
        }
        return g;
    };
    // closed-form expectation via the laws' partial moments
    FunctionOracle mean;
    mean.dim = dim;
    mean.value = [supply, av, bv, laws, r](const Vec& x) {
        double v = 0.0;
        for (std::size_t s = 0; s < r; ++s) v += laws[s].expected_loss(supply(x, s), av[s], bv[s]);
        return v;
    };
    mean.pseudogradient = [supply, av, bv, laws, lam, products, r](const Vec& x) {
        Vec g = zeros(x.size());
        for (std::size_t s = 0; s < r; ++s) {
            double slope = laws[s].expected_loss_grad(supply(x, s), av[s], bv[s]);
            for (std::size_t j = 0; j < products; ++j) g[j * r + s] += slope * lam(j, s);
        }
        return g;
    };
    o.mean_oracle = mean;
    p.stochastic = o;
    p.objective = mean;

    if (std::isfinite(capacity)) {
        if (unit_volume.empty()) unit_volume = Vec(products, 1.0);
        check_dim(unit_volume, products, "make_newsvendor unit_volume");
        // { x >= 0, sum_j a_j sum_s x_js <= capacity }
        Mat A(dim + 1, dim);
        Vec b(dim + 1, 0.0);
        for (std::size_t i = 0; i < dim; ++i) A(i, i) = -1.0;
        for (std::size_t j = 0; j < products; ++j)
            for (std::size_t s = 0; s < r; ++s) A(dim, j * r + s) = unit_volume[j];
        b[dim] = capacity;
        p.set = FeasibleSet::polytope(A, b);
    } else {
        p.set = FeasibleSet::box(zeros(dim), Vec(dim, std::numeric_limits<double>::infinity()));
    }

    if (products == 1 && r == 1 && !std::isfinite(capacity)) {
        double q = beta[0] / (alpha[0] + beta[0]);
        double xs = laws[0].quantile(q);
        p.known_solution =
            KnownSolution{Vec{xs}, laws[0].expected_loss(xs, alpha[0], beta[0]),
                          "quantile beta/(alpha+beta) of the demand law"};
        p.brute_force_oracle = "1-d grid search over the expected loss";
    }
    p.x0 = Vec(dim, 0.0);
    return p;
}

ProblemSpec make_transport(std::size_t warehouses, std::size_t markets, Mat cost, Vec capacity,
                           std::vector<DemandLaw> laws, Vec alpha, Vec beta) {
    if (cost.rows != warehouses || cost.cols != markets)
        throw DimensionError("make_transport: cost must be warehouses x markets");
    check_dim(capacity, warehouses, "make_transport capacity");
    if (laws.size() != markets) throw DimensionError("make_transport: one law per market");
    check_dim(alpha, markets, "make_transport alpha");
    check_dim(beta, markets, "make_transport beta");

    ProblemSpec p;
    p.name = "transport";
    const std::size_t dim = warehouses * markets;  // x_{ij} row-major
    p.dim = dim;

    auto delivered = [warehouses, markets](const Vec& x, std::size_t j) {
        double y = 0.0;
        for (std::size_t i = 0; i < warehouses; ++i) y += x[i * markets + j];
        return y;
    };
    Vec flat_cost = cost.a;

    StochasticOracle o;
    o.dim = dim;
    o.draw_theta = [laws](Rng& rng) {
        Theta th(laws.size());
        for (std::size_t j = 0; j < laws.size(); ++j) th[j] = laws[j].sample(rng);
        return th;
    };
    o.sample_value = [delivered, flat_cost, alpha, beta, markets](const Vec& x, const Theta& th) {
        double v = dot(flat_cost, x);
        for (std::size_t j = 0; j < markets; ++j) {
            double y = delivered(x, j);
            v += std::max(alpha[j] * (y - th[j]), beta[j] * (th[j] - y));
        }
        return v;
    };
    o.sample_gradient = [delivered, flat_cost, alpha, beta, warehouses, markets](const Vec& x,
                                                                                 const Theta& th) {
        Vec g = flat_cost;
        for (std::size_t j = 0; j < markets; ++j) {
            double y = delivered(x, j);
            double slope = alpha[j] * (y - th[j]) >= beta[j] * (th[j] - y) ? alpha[j] : -beta[j];
            for (std::size_t i = 0; i < warehouses; ++i) g[i * markets + j] += slope;
        }
        return g;
    };
    FunctionOracle mean;
    mean.dim = dim;
    mean.value = [delivered, flat_cost, alpha, beta, laws, markets](const Vec& x) {
        double v = dot(flat_cost, x);
        for (std::size_t j = 0; j < markets; ++j)
            v += laws[j].expected_loss(delivered(x, j), alpha[j], beta[j]);
        return v;
    };
    mean.pseudogradient = [delivered, flat_cost, alpha, beta, laws, warehouses,
                           markets](const Vec& x) {
        Vec g = flat_cost;
        for (std::size_t j = 0; j < markets; ++j) {
            double slope = laws[j].expected_loss_grad(delivered(x, j), alpha[j], beta[j]);
            for (std::size_t i = 0; i < warehouses; ++i) g[i * markets + j] += slope;
        }
        return g;
    };
    o.mean_oracle = mean;
    p.stochastic = o;
    p.objective = mean;

    // per-warehouse capacity rows + nonnegativity
    Mat A(dim + warehouses, dim);
    Vec b(dim + warehouses, 0.0);
    for (std::size_t i = 0; i < dim; ++i) A(i, i) = -1.0;
    for (std::size_t i = 0; i < warehouses; ++i) {
        for (std::size_t j = 0; j < markets; ++j) A(dim + i, i * markets + j) = 1.0;
        b[dim + i] = capacity[i];
    }
    p.set = FeasibleSet::polytope(A, b);

    if (warehouses == 1 && markets == 1 && norm_inf(flat_cost) == 0.0) {
        double q = beta[0] / (alpha[0] + beta[0]);
        double xs = std::min(laws[0].quantile(q), capacity[0]);
        p.known_solution = KnownSolution{Vec{xs}, laws[0].expected_loss(xs, alpha[0], beta[0]),
                                         "newsvendor reduction: demand quantile"};
        p.brute_force_oracle = "1-d grid search over the expected loss";
    }
    p.x0 = Vec(dim, 0.0);
    return p;
}

ProblemSpec make_crop_allocation(std::size_t crops, std::size_t plots, Mat mean_yield, Vec gamma,
                                 Vec plot_area) {
    if (mean_yield.rows != crops || mean_yield.cols != plots)
        throw DimensionError("make_crop_allocation: yield must be crops x plots");
    check_dim(gamma, crops, "make_crop_allocation gamma");
    check_dim(plot_area, plots, "make_crop_allocation areas");
    for (double g : gamma)
        if (g <= 0.0)
            throw std::invalid_argument(
                "make_crop_allocation: proportions gamma must be strictly positive");

    ProblemSpec p;
    p.name = "crop_allocation";
    const std::size_t dim = crops * plots;  // x_{ij} row-major
    p.dim = dim;

    // Yield a_ij(theta) = mean_yield_ij * theta_i, theta_i ~ U[0.5, 1.5]:
    // output of crop i is a random linear form; we minimize the negative of
    // the worst normalized output (min-of-linear calculus).
    StochasticOracle o;
    o.dim = dim;
    o.draw_theta = [crops](Rng& rng) {
        Theta th(crops);
        for (std::size_t i = 0; i < crops; ++i) th[i] = rng.uniform(0.5, 1.5);
        return th;
    };
    auto crop_output = [mean_yield, gamma, plots](const Vec& x, const Theta& th, std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < plots; ++j) s += mean_yield(i, j) * th[i] * x[i * plots + j];
        return s / gamma[i];
    };
    o.sample_value = [crop_output, crops](const Vec& x, const Theta& th) {
        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < crops; ++i) worst = std::min(worst, crop_output(x, th, i));
        return -worst;
    };
    o.sample_gradient = [crop_output, mean_yield, gamma, crops, plots](const Vec& x,
                                                                       const Theta& th) {
        std::size_t arg = 0;
        double worst = crop_output(x, th, 0);
        for (std::size_t i = 1; i < crops; ++i) {
            double v = crop_output(x, th, i);
            if (v < worst) {
                worst = v;
                arg = i;
            }
        }
        Vec g = zeros(x.size());
        for (std::size_t j = 0; j < plots; ++j)
            g[arg * plots + j] = -mean_yield(arg, j) * th[arg] / gamma[arg];
        return g;
    };
    p.stochastic = o;

    // per-plot area rows + nonnegativity; block structure keeps the
    // linear-minimization subproblem separable per plot
    Mat A(dim + plots, dim);
    Vec b(dim + plots, 0.0);
    for (std::size_t i = 0; i < dim; ++i) A(i, i) = -1.0;
    for (std::size_t j = 0; j < plots; ++j) {
        for (std::size_t i = 0; i < crops; ++i) A(dim + j, i * plots + j) = 1.0;
        b[dim + j] = plot_area[j];
    }
    p.set = FeasibleSet::polytope(A, b);
    p.brute_force_oracle = "sample-average maximin over a simplex grid";
    p.x0 = Vec(dim, 0.0);
    return p;
}

ProblemSpec make_benchmark(const std::string& name_with_args) {
    std::string name;
    std::vector<double> args = parse_args(name_with_args, name);
    auto argc = args.size();
    if (name == "abs_sum" && argc == 1) return make_abs_sum(std::size_t(args[0]));
    if (name == "max_abs" && argc == 1) return make_max_abs(std::size_t(args[0]));
    if (name == "max_linear" && argc >= 2)
        return make_max_linear(std::size_t(args[0]), std::size_t(args[1]),
                               argc > 2 ? std::uint64_t(args[2]) : 7);
    if (name == "ravine" && argc == 1) return make_ravine(args[0]);
    if (name == "circle_linear" && argc == 0) return make_circle_linear();
    if (name == "sin_sum" && argc == 0) return make_sin_sum();
    if (name == "resource_split" && argc == 0) return make_resource_split();
    if (name == "quantile_floor" && argc == 0) return make_quantile_floor();
    if (name == "newsvendor" && (argc == 2 || argc == 4)) {
        // newsvendor(alpha, beta[, law_lo, law_hi])
        double lo = argc == 4 ? args[2] : 0.0, hi = argc == 4 ? args[3] : 1.0;
        return make_newsvendor(1, Vec{args[0]}, Vec{args[1]}, {DemandLaw::uniform(lo, hi)});
    }
    throw std::invalid_argument("make_benchmark: unknown problem '" + name_with_args + "'");
}

std::vector<std::string> catalog_names() {
    return {"abs_sum(n)",
            "max_abs(n)",
            "max_linear(m,n[,seed])",
            "ravine(kappa)",
            "circle_linear",
            "sin_sum",
            "resource_split",
            "quantile_floor",
            "sign_game        [cli: solver = game]",
            "mean_floor       [cli: solver = sto_arrow_hurwicz]",
            "newsvendor(alpha,beta[,lo,hi])  [typed API: laws, interchange, capacity]",
            "transport  [typed API]",
            "crop_allocation  [typed API]"};
}

}  // namespace nsopt
