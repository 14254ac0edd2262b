#pragma once

#include "thermolens/qstate.hpp"

#include <vector>

// Transverse-field Ising chains with open boundaries,
//
//   H_n = 1/2 sum_{i<n} sx_i sx_{i+1}  -  h/2 sum_i sz_i,
//
// dense Gibbs states, and the classical-Ising pair marginal used as a
// cross-check of intensive temperature in the classical limit.

namespace thermolens {

enum class ChainModel { TransverseIsing };

struct SpinChainSpec {
    int n;                                        // sites, >= 2
    double h;                                     // transverse field
    ChainModel model = ChainModel::TransverseIsing;
    // boundary is open: n-1 bonds.
};

// Stand-in for T = 0; Gibbs construction at any finite beta keeps the
// spin-flip symmetric state.
inline constexpr double kBetaMax = 1e6;

// Largest register handled by the dense routines.
inline constexpr int kDenseMaxSites = 14;

// Dense 2^n x 2^n Hamiltonian. Throws std::length_error for n > 14
// (use the purified-MPS backend for longer chains).
DenseOperator build_dense(const SpinChainSpec& spec);

// Omega = exp(-beta (H - E0)) / Z. The ground-energy shift keeps the
// exponentials finite at any beta.
DensityMatrix gibbs_dense(const DenseOperator& H, double beta);

// H restricted to an m-site block: m-1 bonds, m field terms, no boundary
// correction (the mean-field term vanishes identically at T > 0 because
// <sx> = 0 under the global spin-flip symmetry).
DenseOperator local_block_hamiltonian(const SpinChainSpec& spec, int m);

// Probability table of an adjacent classical-spin pair (s^k, s^{k+1})
// inside an n-site antiferromagnetic Ising chain, obtained by
// transfer-matrix summation over the other n-2 spins. Index 0 <-> s=+1,
// index 1 <-> s=-1. Requires 1 < k < n.
Eigen::Matrix2d classical_block_marginal(int n, double beta, int k);

// Symmetry-adapted exact diagonalization of the chain: the Hamiltonian is
// block diagonal in spin-flip parity (popcount of the z-basis index) and
// in reflection, cutting the eigenproblem into four sectors of dimension
// ~2^(n-2). One decomposition serves any number of temperatures.
class ThermalED {
  public:
    explicit ThermalED(const SpinChainSpec& spec);

    int sites() const { return n_; }
    double ground_energy() const { return e0_; }

    // Thermal reduced density matrix on `keep` (ascending 0-based sites).
    DensityMatrix block_rdm(double beta, const std::vector<int>& keep) const;

    // Tr(Omega H) at inverse temperature beta.
    double thermal_energy(double beta) const;

    // All eigenvalues, ascending.
    std::vector<double> spectrum() const;

  private:
    struct Sector {
        std::vector<Eigen::Index> reps; // orbit representatives
        int chi;                        // reflection character +-1
        Eigen::VectorXd evals;
        Eigen::MatrixXd evecs;          // columns, in sector basis
    };

    int n_;
    double e0_;
    std::vector<Sector> sectors_;
};

} // namespace thermolens
