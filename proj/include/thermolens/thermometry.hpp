#pragma once

#include "thermolens/exact_ising.hpp"
#include "thermolens/hamiltonians.hpp"
#include "thermolens/mps_thermal.hpp"
#include "thermolens/qstate.hpp"

#include <optional>
#include <vector>

// Fidelity thermometry of spin-chain blocks: how well the m-site reduced
// state of a global thermal chain is described by the m-site Gibbs state,
// first at the global temperature and then at an optimized effective
// local temperature.

namespace thermolens {

struct MpsOptions {
    int n = 50;
    int D = 15;
    double dt = 0.02;
};

// Source of the reduced block state. The thermodynamic-limit correlator
// backend covers m = 2 only; larger blocks go through the purified MPS.
struct Backend {
    enum class Kind { ExactThermodynamicLimit, Mps };
    Kind kind = Kind::ExactThermodynamicLimit;
    MpsOptions mps;
    double quad_tol = 1e-10;

    static Backend exact(double quad_tol = 1e-10) {
        return Backend{Kind::ExactThermodynamicLimit, {}, quad_tol};
    }
    static Backend withMps(MpsOptions opt) {
        return Backend{Kind::Mps, opt, 1e-10};
    }
    const char* name() const {
        return kind == Kind::ExactThermodynamicLimit ? "exact" : "mps";
    }
};

// m-site reduced state of the global chain at (beta, h) via the chosen
// backend (centered block for the MPS).
DensityMatrix reduced_block_state(double beta, double h, int m,
                                  const Backend& backend);

// F[Omega_m(beta), rho~_m(beta)]: both sides at the global temperature.
double intensive_fidelity(double beta, double h, int m,
                          const Backend& backend);

struct LocalTempResult {
    double beta = 0, h = 0;
    int m = 0;
    double beta_tilde = 0; // optimized inverse temperature
    double F_opt = 0;      // best fidelity found
    double F_at_global = 0;
    bool plateau_flag = false; // argmax numerically degenerate; smallest
                               // near-optimal beta' reported
    bool bracket_edge = false; // best coarse point at a bracket edge
    int evaluations = 0;
};

struct OptimizerOptions {
    // Default bracket [1e-3, max(2 beta, 50)].
    std::optional<double> bracket_lo;
    std::optional<double> bracket_hi;
    double tol = 1e-4; // relative in beta'
};

// Effective local temperature: maximize F[Omega_m(beta'), rho~_m(beta)]
// over beta' by a 64-point log-grid scan followed by golden-section
// search on log beta'. The reduced state is computed once and reused.
LocalTempResult optimize_local_beta(double beta, double h, int m,
                                    const Backend& backend,
                                    const OptimizerOptions& opt = {});

// Same optimization against a precomputed reduced state (lets sweep
// drivers reuse one MPS evolution for several block sizes).
LocalTempResult optimize_local_beta_for(const DensityMatrix& rho_tilde,
                                        double beta, double h, int m,
                                        const OptimizerOptions& opt = {});

double intensive_fidelity_for(const DensityMatrix& rho_tilde, double beta,
                              double h, int m);

struct DerivativeResult {
    double value = 0;            // step/2 central-difference estimate
    double richardson_delta = 0; // |step estimate - step/2 estimate|
    bool flagged = false;        // estimates disagree by > 10%
};

// dF/dh of the intensive fidelity at fixed beta, central differences
// with step-halving verification.
DerivativeResult fidelity_derivative_h(double beta, double h, int m,
                                       const Backend& backend,
                                       double step = 1e-3);

// d beta~ / dh. The optimizer is run at a tightened tolerance so the
// difference quotient is not dominated by optimizer resolution.
DerivativeResult local_beta_derivative_h(double beta, double h, int m,
                                         const Backend& backend,
                                         double step = 1e-3);

// F[rho~_m(beta), rho~_m(beta + dbeta)].
double neighbor_fidelity(double beta, double dbeta, double h, int m,
                         const Backend& backend);

// F[Omega_{2,r}(beta), rho~_{2,r}(beta)]: finite-chain extremal-pair
// reference against the thermodynamic-limit reconstruction.
double distant_pair_fidelity(double beta, double h, int r,
                             double quad_tol = 1e-10);

// Rectangular parameter grid driving phase-diagram sweeps.
struct SweepGrid {
    std::vector<double> beta_values; // ascending
    std::vector<double> h_values;    // ascending
    int m = 2;
    int r = 1;
    Backend backend = Backend::exact();
};

} // namespace thermolens
