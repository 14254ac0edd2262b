#pragma once

#include "thermolens/qstate.hpp"

#include <stdexcept>
#include <vector>

// Thermodynamic-limit (n -> infinity) spin correlators of the
// transverse-field Ising chain. The fermionic two-point function
//
//   G_r = -(1/pi) Int_0^pi cos(phi r) (cos phi - h) tanh(beta w/2)/w dphi
//         +(1/pi) Int_0^pi sin(phi r) sin(phi)     tanh(beta w/2)/w dphi,
//   w(phi) = sqrt(sin^2 phi + (h - cos phi)^2),
//
// feeds Toeplitz determinants for <sx sx> and <sy sy>, and
// <sz^i sz^{i+r}> = G_0^2 - G_r G_{-r} with Pauli magnetization
// <sz> = G_0 (see the note on the determinant/magnetization convention
// in the README: the verbatim 4<sz>^2 prefactor of the source formula is
// only consistent with the polarized and infinite-temperature limits when
// <sz> is read as the spin-1/2 moment G_0/2; both conventions then agree
// with exact diagonalization, which the tests assert).

namespace thermolens {

// Raised when adaptive subdivision exhausts its panel budget.
class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(double estimate, double error_bound);
    double estimate;
    double error_bound;
};

// Single G_r by adaptive Simpson quadrature, absolute tolerance quad_tol,
// panel budget 1e6. The removable point w -> 0 (h = 1, phi = 0) uses the
// series tanh(beta w/2)/w = beta/2 (1 - (beta w/2)^2/3) for w < 1e-8.
double compute_G(double beta, double h, int r, double quad_tol = 1e-10);

// G_r for r in [-r_max, r_max] at fixed (beta, h), plus derived Pauli
// correlators. Immutable after construction; shareable across threads.
class CorrelatorTable {
  public:
    CorrelatorTable(double beta, double h, int r_max,
                    double quad_tol = 1e-10);

    double beta() const { return beta_; }
    double h() const { return h_; }
    int r_max() const { return r_max_; }
    double quad_tol() const { return quad_tol_; }

    double g(int r) const;

    // <sx^i sx^{i+r}>: r x r Toeplitz determinant, entry (i,j) = G_{j-i-1}.
    double xx(int r) const;
    // <sy^i sy^{i+r}>: entry (i,j) = G_{i-j+1}.
    double yy(int r) const;
    // <sz^i sz^{i+r}> = G_0^2 - G_r G_{-r}.
    double zz(int r) const;
    // Pauli <sz> = G_0.
    double mz() const { return g(0); }

  private:
    double beta_, h_, quad_tol_;
    int r_max_;
    std::vector<double> G_; // index r + r_max
};

struct PairRDM {
    DensityMatrix rho;
    int r;
    double beta, h;
};

// Two-spin reduced state of the infinite chain at separation r (r = 1 is
// nearest neighbors), reconstructed from the correlators:
// rho = 1/4 [II + mz(ZI + IZ) + xx XX + yy YY + zz ZZ]; all cross terms
// vanish by spin-flip symmetry and by reality of the Hamiltonian.
PairRDM build_pair_rdm(double beta, double h, int r,
                       double quad_tol = 1e-10);

// Finite-chain reference for distant pairs: Gibbs state of r+1 spins with
// everything but the two extremal sites traced out. Requires r + 1 <= 14.
DensityMatrix reference_distant_pair(double beta, double h, int r);

} // namespace thermolens
