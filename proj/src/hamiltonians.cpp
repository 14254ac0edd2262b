#include "thermolens/hamiltonians.hpp"

#include <lapacke.h>

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>

namespace thermolens {

namespace {

void checkSpec(const SpinChainSpec& spec) {
    if (spec.n < 2) {
        throw std::invalid_argument("SpinChainSpec: n must be >= 2");
    }
    if (!std::isfinite(spec.h)) {
        throw std::invalid_argument("SpinChainSpec: h must be finite");
    }
}

// H on `m` sites with field h: bonds (i, i+1) for i < m-1. Assembled in
// the computational basis through bit operations; site 0 is the most
// significant bit.
DenseOperator assembleIsing(int m, double h) {
    const Eigen::Index dim = Eigen::Index(1) << m;
    DenseOperator H = DenseOperator::Zero(dim, dim);
    for (Eigen::Index x = 0; x < dim; ++x) {
        double diag = 0.0;
        for (int i = 0; i < m; ++i) {
            int b = (x >> (m - 1 - i)) & 1;
            diag -= 0.5 * h * (1 - 2 * b);
        }
        H(x, x) = diag;
        for (int i = 0; i + 1 < m; ++i) {
            Eigen::Index mask = Eigen::Index(3) << (m - 2 - i);
            H(x ^ mask, x) += 0.5; // sx_i sx_{i+1}
        }
    }
    return H;
}

} // namespace

DenseOperator build_dense(const SpinChainSpec& spec) {
    checkSpec(spec);
    if (spec.n > kDenseMaxSites) {
        std::ostringstream os;
        os << "build_dense: n = " << spec.n << " exceeds the dense limit "
           << kDenseMaxSites << "; use the purified-MPS backend";
        throw std::length_error(os.str());
    }
    return assembleIsing(spec.n, spec.h);
}

DensityMatrix gibbs_dense(const DenseOperator& H, double beta) {
    if (beta < 0) {
        throw std::invalid_argument("gibbs_dense: beta must be >= 0");
    }
    EigResult e = eig_hermitian(H);
    const double e0 = e.eigenvalues.minCoeff();
    Eigen::VectorXd w =
        (-beta * (e.eigenvalues.array() - e0)).exp().matrix();
    w /= w.sum();
    DenseOperator rho =
        e.eigenvectors * w.asDiagonal() * e.eigenvectors.adjoint();
    return DensityMatrix((rho + rho.adjoint()) / 2.0);
}

DenseOperator local_block_hamiltonian(const SpinChainSpec& spec, int m) {
    checkSpec(spec);
    if (m < 2) {
        throw std::invalid_argument(
            "local_block_hamiltonian: m >= 2 required (a single site "
            "carries no bond term)");
    }
    if (m > spec.n) {
        throw std::invalid_argument("local_block_hamiltonian: m > n");
    }
    return assembleIsing(m, spec.h);
}

Eigen::Matrix2d classical_block_marginal(int n, double beta, int k) {
    if (n < 3) {
        throw std::invalid_argument("classical_block_marginal: n >= 3");
    }
    if (!(k > 1 && k < n)) {
        throw std::invalid_argument(
            "classical_block_marginal: pair index must satisfy 1 < k < n");
    }
    // Transfer matrix over s = +-1; row sums are uniform, so the marginal
    // is independent of n and k. The summation below keeps that fact a
    // numerical statement rather than an assumption.
    Eigen::Matrix2d T;
    T << std::exp(-beta), std::exp(beta), std::exp(beta), std::exp(-beta);
    Eigen::Vector2d ones(1.0, 1.0);
    Eigen::Vector2d u = ones, v = ones;
    for (int i = 0; i < k - 1; ++i) u = T * u;       // bonds left of site k
    for (int i = 0; i < n - k - 1; ++i) v = T * v;   // bonds right of k+1
    Eigen::Matrix2d P;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) P(a, b) = u(a) * T(a, b) * v(b);
    P /= P.sum();
    return P;
}

// ---------------------------------------------------------------------
// ThermalED
// ---------------------------------------------------------------------

namespace {

Eigen::Index reflect(Eigen::Index x, int n) {
    Eigen::Index r = 0;
    for (int i = 0; i < n; ++i) {
        r = (r << 1) | ((x >> i) & 1);
    }
    return r;
}

} // namespace

ThermalED::ThermalED(const SpinChainSpec& spec) : n_(spec.n) {
    checkSpec(spec);
    if (spec.n > kDenseMaxSites) {
        throw std::length_error("ThermalED: n exceeds the dense limit");
    }
    const Eigen::Index dim = Eigen::Index(1) << n_;
    const double h = spec.h;

    std::vector<Eigen::Index> refl(dim);
    for (Eigen::Index x = 0; x < dim; ++x) refl[x] = reflect(x, n_);

    // Enumerate the four (parity, reflection-character) sectors.
    for (int parity = 0; parity < 2; ++parity) {
        for (int chi : {+1, -1}) {
            Sector sec;
            sec.chi = chi;
            for (Eigen::Index x = 0; x < dim; ++x) {
                if ((__builtin_popcountll(x) & 1) != parity) continue;
                if (refl[x] < x) continue;            // orbit representative
                if (refl[x] == x && chi == -1) continue; // palindrome: sym only
                sec.reps.push_back(x);
            }
            if (sec.reps.empty()) continue;

            const Eigen::Index sdim =
                static_cast<Eigen::Index>(sec.reps.size());
            std::vector<Eigen::Index> index_of(dim, -1);
            for (Eigen::Index i = 0; i < sdim; ++i)
                index_of[sec.reps[i]] = i;

            Eigen::MatrixXd M = Eigen::MatrixXd::Zero(sdim, sdim);
            for (Eigen::Index i = 0; i < sdim; ++i) {
                const Eigen::Index x = sec.reps[i];
                const bool pal = (refl[x] == x);
                const double nx = pal ? 1.0 : 1.0 / std::sqrt(2.0);
                // |b_x> = nx (|x> + chi |Rx>), skipping the mirror term
                // for palindromes.
                const int nstates = pal ? 1 : 2;
                for (int t = 0; t < nstates; ++t) {
                    const Eigen::Index u = (t == 0) ? x : refl[x];
                    const double amp = (t == 0) ? nx : chi * nx;
                    // field term (diagonal)
                    double diag = 0.0;
                    for (int s = 0; s < n_; ++s) {
                        int b = (u >> (n_ - 1 - s)) & 1;
                        diag -= 0.5 * h * (1 - 2 * b);
                    }
                    auto deposit = [&](Eigen::Index v, double w) {
                        const Eigen::Index rv = refl[v];
                        const Eigen::Index rep = std::min(v, rv);
                        const Eigen::Index j = index_of[rep];
                        if (j < 0) return; // cancelled by symmetry
                        const bool palv = (rep == rv && rep == v);
                        const double ny = palv ? 1.0 : 1.0 / std::sqrt(2.0);
                        double coeff = 0.0;
                        if (v == rep) coeff += ny;
                        if (v == rv && rep != v) {
                            // cannot happen: rep = min(v, rv)
                        }
                        if (rv == rep && v != rep) coeff += chi * ny;
                        M(j, i) += w * coeff;
                    };
                    deposit(u, amp * diag);
                    for (int s = 0; s + 1 < n_; ++s) {
                        Eigen::Index mask = Eigen::Index(3) << (n_ - 2 - s);
                        deposit(u ^ mask, amp * 0.5);
                    }
                }
            }

            sec.evals.resize(sdim);
            sec.evecs = M;
            int info = LAPACKE_dsyevd(
                LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(sdim),
                sec.evecs.data(), static_cast<lapack_int>(sdim),
                sec.evals.data());
            if (info != 0) {
                throw std::runtime_error("ThermalED: dsyevd failed, info = " +
                                         std::to_string(info));
            }
            sectors_.push_back(std::move(sec));
        }
    }

    e0_ = sectors_.front().evals.minCoeff();
    for (const Sector& s : sectors_) e0_ = std::min(e0_, s.evals.minCoeff());
}

DensityMatrix ThermalED::block_rdm(double beta,
                                   const std::vector<int>& keep) const {
    if (beta < 0) throw std::invalid_argument("ThermalED: beta >= 0");
    const Eigen::Index dim = Eigen::Index(1) << n_;
    const int m = static_cast<int>(keep.size());
    const Eigen::Index keep_dim = Eigen::Index(1) << m;
    const Eigen::Index env_dim = dim >> m;

    std::vector<bool> kept(n_, false);
    for (int s : keep) {
        if (s < 0 || s >= n_) {
            throw std::out_of_range("ThermalED: keep site out of range");
        }
        kept[s] = true;
    }

    // Global index -> (block bits)*env_dim + (env bits) permutation.
    std::vector<Eigen::Index> perm(dim);
    for (Eigen::Index x = 0; x < dim; ++x) {
        Eigen::Index a = 0, e = 0;
        for (int s = 0; s < n_; ++s) {
            int b = (x >> (n_ - 1 - s)) & 1;
            if (kept[s]) a = (a << 1) | b;
            else e = (e << 1) | b;
        }
        perm[x] = a * env_dim + e;
    }

    double Z = 0.0;
    Eigen::MatrixXd rdm = Eigen::MatrixXd::Zero(keep_dim, keep_dim);

    for (const Sector& sec : sectors_) {
        const Eigen::Index sdim =
            static_cast<Eigen::Index>(sec.reps.size());
        // Columns with negligible Boltzmann weight contribute nothing.
        std::vector<Eigen::Index> cols;
        for (Eigen::Index k = 0; k < sdim; ++k) {
            if (-beta * (sec.evals[k] - e0_) > -745.0) cols.push_back(k);
        }
        if (cols.empty()) continue;

        Eigen::MatrixXd W =
            Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t c = 0; c < cols.size(); ++c) {
            const Eigen::Index k = cols[c];
            const double w = std::exp(-beta * (sec.evals[k] - e0_));
            Z += w;
            const double sw = std::sqrt(w);
            for (Eigen::Index i = 0; i < sdim; ++i) {
                const Eigen::Index x = sec.reps[i];
                const Eigen::Index rx = reflect(x, n_);
                const double v = sec.evecs(i, k) * sw;
                if (rx == x) {
                    W(perm[x], static_cast<Eigen::Index>(c)) += v;
                } else {
                    const double nx = 1.0 / std::sqrt(2.0);
                    W(perm[x], static_cast<Eigen::Index>(c)) += nx * v;
                    W(perm[rx], static_cast<Eigen::Index>(c)) +=
                        sec.chi * nx * v;
                }
            }
        }
        for (Eigen::Index a = 0; a < keep_dim; ++a) {
            for (Eigen::Index b = 0; b <= a; ++b) {
                const double s = W.middleRows(a * env_dim, env_dim)
                                     .cwiseProduct(
                                         W.middleRows(b * env_dim, env_dim))
                                     .sum();
                rdm(a, b) += s;
                if (a != b) rdm(b, a) += s;
            }
        }
    }
    rdm /= Z;
    return DensityMatrix(rdm.cast<Complex>());
}

double ThermalED::thermal_energy(double beta) const {
    double Z = 0.0, E = 0.0;
    for (const Sector& sec : sectors_) {
        for (Eigen::Index k = 0; k < sec.evals.size(); ++k) {
            const double w = std::exp(-beta * (sec.evals[k] - e0_));
            Z += w;
            E += w * sec.evals[k];
        }
    }
    return E / Z;
}

std::vector<double> ThermalED::spectrum() const {
    std::vector<double> all;
    for (const Sector& sec : sectors_) {
        all.insert(all.end(), sec.evals.data(),
                   sec.evals.data() + sec.evals.size());
    }
    std::sort(all.begin(), all.end());
    return all;
}

} // namespace thermolens
