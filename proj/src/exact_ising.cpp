#include "thermolens/exact_ising.hpp"

#include "thermolens/hamiltonians.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace thermolens {

QuadratureError::QuadratureError(double est, double err)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "quadrature did not converge within the subdivision "
                "budget; estimate "
             << est << ", error bound " << err;
          return os.str();
      }()),
      estimate(est), error_bound(err) {}

namespace {

constexpr long kPanelBudget = 1'000'000;
constexpr int kMaxDepth = 52;

// Adaptive Simpson on [a, b] with absolute tolerance. `fa/fm/fb` are the
// endpoint and midpoint values, `whole` the Simpson estimate of the panel.
struct AdaptiveSimpson {
    const std::function<double(double)>& f;
    long panels = 0;
    double rough = 0.0;      // best estimate accumulated so far
    double rough_err = 0.0;  // its error bound

    double run(double a, double b, double tol) {
        double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
        double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        return recurse(a, b, fa, fm, fb, whole, tol, 0);
    }

    double recurse(double a, double b, double fa, double fm, double fb,
                   double whole, double tol, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = f(lm), frm = f(rm);
        const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        const double delta = left + right - whole;
        if (++panels > kPanelBudget) {
            throw QuadratureError(rough + left + right,
                                  rough_err + std::abs(delta));
        }
        if (depth >= kMaxDepth || std::abs(delta) <= 15.0 * tol) {
            rough += left + right + delta / 15.0;
            rough_err += std::abs(delta) / 15.0;
            return left + right + delta / 15.0;
        }
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth + 1) +
               recurse(m, b, fm, frm, fb, right, tol / 2.0, depth + 1);
    }
};

double integrate(const std::function<double(double)>& f, double a, double b,
                 double tol, int seed_panels) {
    // Seed with uniform panels so oscillations of cos(phi r) and the
    // sharp tanh feature at large beta are sampled before recursion.
    AdaptiveSimpson as{f};
    double total = 0.0;
    const double w = (b - a) / seed_panels;
    for (int i = 0; i < seed_panels; ++i) {
        total += as.run(a + i * w, a + (i + 1) * w, tol / seed_panels);
    }
    return total;
}

double tanhOverOmega(double beta, double omega) {
    if (omega < 1e-8) {
        const double x = 0.5 * beta * omega;
        return 0.5 * beta * (1.0 - x * x / 3.0);
    }
    return std::tanh(0.5 * beta * omega) / omega;
}

} // namespace

double compute_G(double beta, double h, int r, double quad_tol) {
    if (beta < 0) throw std::invalid_argument("compute_G: beta >= 0");
    if (quad_tol <= 0) throw std::invalid_argument("compute_G: quad_tol > 0");
    if (beta == 0.0) return 0.0; // tanh(0) = 0 identically

    const double pi = std::acos(-1.0);
    auto omega = [h](double phi) {
        const double s = std::sin(phi), c = std::cos(phi);
        return std::sqrt(s * s + (h - c) * (h - c));
    };
    std::function<double(double)> f1 = [&](double phi) {
        return -(1.0 / pi) * std::cos(phi * r) * (std::cos(phi) - h) *
               tanhOverOmega(beta, omega(phi));
    };
    std::function<double(double)> f2 = [&](double phi) {
        return (1.0 / pi) * std::sin(phi * r) * std::sin(phi) *
               tanhOverOmega(beta, omega(phi));
    };
    const int seed = std::max(16, 4 * std::abs(r));
    return integrate(f1, 0.0, pi, quad_tol, seed) +
           integrate(f2, 0.0, pi, quad_tol, seed);
}

CorrelatorTable::CorrelatorTable(double beta, double h, int r_max,
                                 double quad_tol)
    : beta_(beta), h_(h), quad_tol_(quad_tol), r_max_(r_max) {
    if (r_max < 1) throw std::invalid_argument("CorrelatorTable: r_max >= 1");
    G_.resize(2 * r_max + 1);
    for (int r = -r_max; r <= r_max; ++r) {
        G_[r + r_max] = compute_G(beta, h, r, quad_tol);
    }
}

double CorrelatorTable::g(int r) const {
    if (std::abs(r) > r_max_) {
        throw std::out_of_range("CorrelatorTable: separation exceeds r_max");
    }
    return G_[r + r_max_];
}

double CorrelatorTable::xx(int r) const {
    if (r < 1 || r > r_max_) {
        throw std::out_of_range("CorrelatorTable::xx: r out of table range");
    }
    Eigen::MatrixXd T(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) T(i, j) = g(j - i - 1);
    return T.partialPivLu().determinant();
}

double CorrelatorTable::yy(int r) const {
    if (r < 1 || r > r_max_) {
        throw std::out_of_range("CorrelatorTable::yy: r out of table range");
    }
    Eigen::MatrixXd T(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) T(i, j) = g(i - j + 1);
    return T.partialPivLu().determinant();
}

double CorrelatorTable::zz(int r) const {
    if (r < 1) throw std::out_of_range("CorrelatorTable::zz: r >= 1");
    return g(0) * g(0) - g(r) * g(-r);
}

PairRDM build_pair_rdm(double beta, double h, int r, double quad_tol) {
    if (r < 1) throw std::invalid_argument("build_pair_rdm: r >= 1");
    CorrelatorTable table(beta, h, r, quad_tol);
    std::map<PauliString, double> c;
    c[PauliString::fromLabel("II")] = 1.0;
    c[PauliString::fromLabel("ZI")] = table.mz();
    c[PauliString::fromLabel("IZ")] = table.mz();
    c[PauliString::fromLabel("XX")] = table.xx(r);
    c[PauliString::fromLabel("YY")] = table.yy(r);
    c[PauliString::fromLabel("ZZ")] = table.zz(r);
    try {
        // The clamp allows quadrature error to shave the smallest
        // eigenvalue slightly below zero near pure-state limits.
        DensityMatrix rho = from_pauli_coefficients(
            c, 2, std::max(1e-10, 100.0 * quad_tol));
        return PairRDM{std::move(rho), r, beta, h};
    } catch (const std::domain_error& e) {
        throw std::domain_error(std::string(e.what()) +
                                " [tighten quad_tol and rebuild]");
    }
}

DensityMatrix reference_distant_pair(double beta, double h, int r) {
    if (r < 1) throw std::invalid_argument("reference_distant_pair: r >= 1");
    if (r + 1 > kDenseMaxSites) {
        throw std::length_error(
            "reference_distant_pair: r + 1 exceeds the dense limit");
    }
    ThermalED ed(SpinChainSpec{r + 1, h});
    return ed.block_rdm(beta, {0, r});
}

} // namespace thermolens
