#include "thermolens/thermometry.hpp"

#include <cmath>
#include <stdexcept>

namespace thermolens {

DensityMatrix reduced_block_state(double beta, double h, int m,
                                  const Backend& backend) {
    if (backend.kind == Backend::Kind::ExactThermodynamicLimit) {
        if (m != 2) {
            throw std::invalid_argument(
                "reduced_block_state: the thermodynamic-limit backend "
                "covers m = 2 only; use the MPS backend");
        }
        return build_pair_rdm(beta, h, 1, backend.quad_tol).rho;
    }
    PurifiedMPS state =
        PurifiedMPS::infiniteTemperature(backend.mps.n, backend.mps.D);
    evolve_to_beta(state, SpinChainSpec{backend.mps.n, h},
                   TrotterSchedule::forTarget(beta, backend.mps.dt));
    return block_rdm(state, -1, m);
}

namespace {

// F as a function of beta' against a fixed reduced state, with the
// block-Hamiltonian eigendecomposition and sqrt(rho~) precomputed.
class LocalFidelityCurve {
  public:
    LocalFidelityCurve(const DensityMatrix& rho_tilde, double h, int m)
        : dim_(Eigen::Index(1) << m) {
        if (rho_tilde.dim() != dim_) {
            throw std::invalid_argument(
                "optimize_local_beta: reduced state dimension != 2^m");
        }
        EigResult eh =
            eig_hermitian(local_block_hamiltonian(SpinChainSpec{m, h}, m));
        evals_ = eh.eigenvalues;
        evecs_ = eh.eigenvectors;

        EigResult er = eig_hermitian(rho_tilde.matrix());
        Eigen::VectorXd lam = er.eigenvalues;
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            if (lam[i] < -1e-6) {
                throw std::domain_error(
                    "optimize_local_beta: reduced state is not PSD");
            }
            lam[i] = std::sqrt(std::max(lam[i], 0.0));
        }
        sqrt_rho_ = er.eigenvectors * lam.asDiagonal() *
                    er.eigenvectors.adjoint();
    }

    double operator()(double beta_prime) const {
        ++evaluations;
        Eigen::VectorXd w =
            (-beta_prime * (evals_.array() - evals_.minCoeff())).exp();
        w /= w.sum();
        DenseOperator omega =
            evecs_ * w.asDiagonal() * evecs_.adjoint();
        DenseOperator inner = sqrt_rho_ * omega * sqrt_rho_;
        Eigen::SelfAdjointEigenSolver<DenseOperator> es(
            (inner + inner.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
        double f = 0.0;
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
            f += std::sqrt(std::max(es.eigenvalues()[i], 0.0));
        return f;
    }

    mutable int evaluations = 0;

  private:
    Eigen::Index dim_;
    Eigen::VectorXd evals_;
    Eigen::MatrixXcd evecs_;
    DenseOperator sqrt_rho_;
};

constexpr int kCoarsePoints = 64;
constexpr double kGolden = 0.6180339887498949;
constexpr double kPlateauRel = 1e-6;  // fidelity degeneracy threshold
constexpr double kPlateauGap = 0.05;  // log-beta' gap that flags a plateau

} // namespace

LocalTempResult optimize_local_beta_for(const DensityMatrix& rho_tilde,
                                        double beta, double h, int m,
                                        const OptimizerOptions& opt) {
    LocalFidelityCurve F(rho_tilde, h, m);

    const double lo = opt.bracket_lo.value_or(1e-3);
    const double hi = opt.bracket_hi.value_or(std::max(2.0 * beta, 50.0));
    if (!(lo > 0 && hi > lo)) {
        throw std::invalid_argument("optimize_local_beta: bad bracket");
    }
    const double tlo = std::log(lo), thi = std::log(hi);

    // Coarse scan to bracket the global maximum.
    std::vector<double> tg(kCoarsePoints), fg(kCoarsePoints);
    int ibest = 0;
    for (int i = 0; i < kCoarsePoints; ++i) {
        tg[i] = tlo + (thi - tlo) * i / (kCoarsePoints - 1);
        fg[i] = F(std::exp(tg[i]));
        if (fg[i] > fg[ibest]) ibest = i;
    }

    LocalTempResult res;
    res.beta = beta;
    res.h = h;
    res.m = m;
    res.bracket_edge = (ibest == 0 || ibest == kCoarsePoints - 1);

    // Golden-section maximization on log beta'.
    double a = tg[std::max(ibest - 1, 0)];
    double b = tg[std::min(ibest + 1, kCoarsePoints - 1)];
    double x1 = b - kGolden * (b - a);
    double x2 = a + kGolden * (b - a);
    double f1 = F(std::exp(x1)), f2 = F(std::exp(x2));
    while (b - a > opt.tol) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + kGolden * (b - a);
            f2 = F(std::exp(x2));
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - kGolden * (b - a);
            f1 = F(std::exp(x1));
        }
    }
    double t_star = (f1 > f2) ? x1 : x2;
    double f_star = std::max(f1, f2);
    f_star = std::max(f_star, fg[ibest]);
    if (fg[ibest] > std::max(f1, f2)) t_star = tg[ibest];

    // Degenerate-argmax tie-breaking: when a whole range of beta' is
    // within (1 - 1e-6) of the maximum, report the smallest such beta'.
    const double thr = f_star * (1.0 - kPlateauRel);
    int ifirst = 0;
    while (ifirst < kCoarsePoints && fg[ifirst] < thr) ++ifirst;
    double t_small = t_star;
    if (ifirst == 0) {
        t_small = tg[0];
    } else if (ifirst < kCoarsePoints) {
        // Bisect the threshold crossing in (tg[ifirst-1], tg[ifirst]).
        double ta = tg[ifirst - 1], tb = tg[ifirst];
        while (tb - ta > opt.tol) {
            const double tm = 0.5 * (ta + tb);
            if (F(std::exp(tm)) >= thr) tb = tm;
            else ta = tm;
        }
        t_small = tb;
    }
    if (t_star - t_small > kPlateauGap) {
        res.plateau_flag = true;
        t_star = t_small;
    }

    res.F_at_global = F(beta);
    res.F_opt = std::max(f_star, res.F_at_global);
    res.beta_tilde = std::exp(t_star);
    if (res.F_at_global >= f_star) res.beta_tilde = beta;
    res.evaluations = F.evaluations;
    return res;
}

LocalTempResult optimize_local_beta(double beta, double h, int m,
                                    const Backend& backend,
                                    const OptimizerOptions& opt) {
    return optimize_local_beta_for(reduced_block_state(beta, h, m, backend),
                                   beta, h, m, opt);
}

double intensive_fidelity_for(const DensityMatrix& rho_tilde, double beta,
                              double h, int m) {
    DensityMatrix omega =
        gibbs_dense(local_block_hamiltonian(SpinChainSpec{m, h}, m), beta);
    return fidelity(rho_tilde, omega, 1e-6);
}

double intensive_fidelity(double beta, double h, int m,
                          const Backend& backend) {
    return intensive_fidelity_for(reduced_block_state(beta, h, m, backend),
                                  beta, h, m);
}

namespace {

template <typename Fn>
DerivativeResult centralDerivative(Fn&& f, double h, double step) {
    const double d1 = (f(h + step) - f(h - step)) / (2.0 * step);
    const double d2 =
        (f(h + step / 2.0) - f(h - step / 2.0)) / step;
    DerivativeResult out;
    out.value = d2;
    out.richardson_delta = std::abs(d1 - d2);
    out.flagged = out.richardson_delta >
                  0.10 * std::max(std::abs(d2), 1e-9);
    return out;
}

} // namespace

DerivativeResult fidelity_derivative_h(double beta, double h, int m,
                                       const Backend& backend, double step) {
    return centralDerivative(
        [&](double hh) { return intensive_fidelity(beta, hh, m, backend); },
        h, step);
}

DerivativeResult local_beta_derivative_h(double beta, double h, int m,
                                         const Backend& backend,
                                         double step) {
    OptimizerOptions opt;
    opt.tol = 1e-7;
    return centralDerivative(
        [&](double hh) {
            return optimize_local_beta(beta, hh, m, backend, opt).beta_tilde;
        },
        h, step);
}

double neighbor_fidelity(double beta, double dbeta, double h, int m,
                         const Backend& backend) {
    if (dbeta < 0) {
        throw std::invalid_argument("neighbor_fidelity: dbeta >= 0");
    }
    DensityMatrix a = reduced_block_state(beta, h, m, backend);
    if (dbeta == 0.0) return fidelity(a, a, 1e-6);
    DensityMatrix b = reduced_block_state(beta + dbeta, h, m, backend);
    return fidelity(a, b, 1e-6);
}

double distant_pair_fidelity(double beta, double h, int r, double quad_tol) {
    DensityMatrix reference = reference_distant_pair(beta, h, r);
    PairRDM pair = build_pair_rdm(beta, h, r, quad_tol);
    return fidelity(pair.rho, reference, 1e-6);
}

} // namespace thermolens
