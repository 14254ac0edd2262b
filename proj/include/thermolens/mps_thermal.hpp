#pragma once

#include "thermolens/hamiltonians.hpp"
#include "thermolens/qstate.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

// Finite-temperature states of chains up to n ~ 50 as purifications: a
// tensor train over the combined physical (x) ancilla index representing
// sqrt(exp(-beta H)) as a pure state. Imaginary-time evolution applies
// second-order symmetric bond sweeps of exp(-dt h_bond) lifted to act as
// identity on the ancillas; tracing the ancillas then yields
// exp(-beta H)/Z with beta = 2 M dt.

namespace thermolens {

inline constexpr double kTrotterDtMax = 0.05;
inline constexpr double kSvdRelCutoff = 1e-12;

struct TrotterSchedule {
    double beta_target;
    double dt;  // imaginary-time step; 2 * steps * dt = beta_target
    int steps;

    // Largest dt <= dt_request that divides beta_target/2 evenly.
    static TrotterSchedule forTarget(double beta_target,
                                     double dt_request = 0.02);
};

class PurifiedMPS {
  public:
    // Product of per-site maximally entangled physical-ancilla pairs
    // (|00> + |11>)/sqrt(2): the beta = 0 (completely mixed) state at
    // bond dimension 1.
    static PurifiedMPS infiniteTemperature(int n, int max_bond);

    int sites() const { return static_cast<int>(A_.size()); }
    int maxBond() const { return max_bond_; }
    double beta() const { return beta_; }
    double truncationError() const { return trunc_err_; }
    bool truncationWarning() const { return trunc_warning_; }
    void setTruncationBudget(double budget) { trunc_budget_ = budget; }

    // Site tensor: four (left-bond x right-bond) matrices indexed by the
    // combined index c = 2 s + a.
    const std::array<Eigen::MatrixXcd, 4>& tensor(int k) const {
        return A_[k];
    }

    int bondDim(int k) const { return static_cast<int>(A_[k][0].cols()); }

  private:
    PurifiedMPS() = default;

    std::vector<std::array<Eigen::MatrixXcd, 4>> A_;
    int max_bond_ = 1;
    double beta_ = 0.0;
    double trunc_err_ = 0.0;
    double trunc_budget_ = 1e-4;
    bool trunc_warning_ = false;

    friend void evolve_to_beta(PurifiedMPS&, const SpinChainSpec&,
                               const TrotterSchedule&);
    friend PurifiedMPS load_checkpoint(const std::string&);
    friend void save_checkpoint(const PurifiedMPS&, const std::string&);
};

// Imaginary-time evolution from the state's current beta up to
// schedule.beta_target. Gates act on the physical index only; each
// two-site SVD truncates to the state's max bond dimension with relative
// singular-value cutoff 1e-12, accumulating the discarded weight.
void evolve_to_beta(PurifiedMPS& state, const SpinChainSpec& spec,
                    const TrotterSchedule& schedule);

// <prod_k O_k>_rho via site transfer matrices; unspecified sites default
// to the identity. Normalized by <rho|rho>.
double expectation(const PurifiedMPS& state,
                   const std::map<int, Eigen::Matrix2cd>& ops);

enum class RdmMethod {
    PauliReconstruction, // all 4^m Pauli expectations, then Eq.-(8)-style
                         // assembly; capped at m <= 6
    DirectContraction    // environment contraction; capped at m <= 10
};

// Reduced density matrix of the m contiguous physical sites starting at
// first_site (pass first_site = -1 to center the block).
DensityMatrix block_rdm(const PurifiedMPS& state, int first_site, int m,
                        RdmMethod method = RdmMethod::DirectContraction);

// Binary checkpoint: header (n, D, beta, truncation error, per-site
// shapes), payload of little-endian 8-byte floats (re, im per value).
void save_checkpoint(const PurifiedMPS& state, const std::string& path);
PurifiedMPS load_checkpoint(const std::string& path);

} // namespace thermolens
