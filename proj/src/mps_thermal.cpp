#include "thermolens/mps_thermal.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace thermolens {

TrotterSchedule TrotterSchedule::forTarget(double beta_target,
                                           double dt_request) {
    if (beta_target < 0) {
        throw std::invalid_argument("TrotterSchedule: beta_target >= 0");
    }
    if (dt_request <= 0 || dt_request > kTrotterDtMax) {
        throw std::invalid_argument(
            "TrotterSchedule: dt must be in (0, 0.05]");
    }
    int steps = beta_target == 0.0
                    ? 0
                    : static_cast<int>(
                          std::ceil(beta_target / (2.0 * dt_request) - 1e-12));
    double dt = steps == 0 ? dt_request : beta_target / (2.0 * steps);
    return TrotterSchedule{beta_target, dt, steps};
}

PurifiedMPS PurifiedMPS::infiniteTemperature(int n, int max_bond) {
    if (n < 2) throw std::invalid_argument("PurifiedMPS: n >= 2");
    if (max_bond < 1) throw std::invalid_argument("PurifiedMPS: D >= 1");
    PurifiedMPS s;
    s.max_bond_ = max_bond;
    s.A_.resize(n);
    const double amp = 1.0 / std::sqrt(2.0);
    for (int k = 0; k < n; ++k) {
        for (int c = 0; c < 4; ++c) {
            s.A_[k][c] = Eigen::MatrixXcd::Zero(1, 1);
        }
        s.A_[k][0](0, 0) = amp; // s = 0, a = 0
        s.A_[k][3](0, 0) = amp; // s = 1, a = 1
    }
    return s;
}

namespace {

// Bond Hamiltonian on sites (k, k+1): the coupling plus the field terms,
// with interior fields split evenly between their two adjacent bonds.
Eigen::Matrix4d bondHamiltonian(const SpinChainSpec& spec, int k) {
    const int n = spec.n;
    const double wl = (k == 0) ? 1.0 : 0.5;
    const double wr = (k == n - 2) ? 1.0 : 0.5;
    Eigen::Matrix4d hb = Eigen::Matrix4d::Zero();
    // 1/2 sx sx in the (s1 s2) basis |00>,|01>,|10>,|11>
    hb(0, 3) = hb(3, 0) = hb(1, 2) = hb(2, 1) = 0.5;
    for (int v = 0; v < 4; ++v) {
        const int b1 = v >> 1, b2 = v & 1;
        hb(v, v) += -0.5 * spec.h * (wl * (1 - 2 * b1) + wr * (1 - 2 * b2));
    }
    return hb;
}

Eigen::Matrix4d bondGate(const Eigen::Matrix4d& hb, double tau) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(hb);
    return es.eigenvectors() *
           (-tau * es.eigenvalues().array()).exp().matrix().asDiagonal() *
           es.eigenvectors().transpose();
}

struct GateResult {
    Eigen::MatrixXcd left[4], right[4];
    double discarded;
};

// Apply a two-site gate (physical indices only) and split back by
// truncated SVD. `left_canonical` selects which factor absorbs the
// singular values.
GateResult applyGate(const std::array<Eigen::MatrixXcd, 4>& A1,
                     const std::array<Eigen::MatrixXcd, 4>& A2,
                     const Eigen::Matrix4d& gate, int max_bond,
                     bool left_canonical) {
    const Eigen::Index Dl = A1[0].rows();
    const Eigen::Index Db = A1[0].cols();
    const Eigen::Index Dr = A2[0].cols();

    // theta[(l*4 + c1), (c2*Dr + r)]
    Eigen::MatrixXcd theta(Dl * 4, 4 * Dr);
    for (int c1 = 0; c1 < 4; ++c1) {
        for (int c2 = 0; c2 < 4; ++c2) {
            Eigen::MatrixXcd blk = A1[c1] * A2[c2]; // Dl x Dr
            for (Eigen::Index l = 0; l < Dl; ++l)
                theta.block(l * 4 + c1, c2 * Dr, 1, Dr) = blk.row(l);
        }
    }
    (void)Db;

    // Lift the gate to the combined index: G4 acts on (s1, s2), identity
    // on (a1, a2).
    Eigen::MatrixXcd theta2 = Eigen::MatrixXcd::Zero(Dl * 4, 4 * Dr);
    for (int s1p = 0; s1p < 2; ++s1p)
        for (int s2p = 0; s2p < 2; ++s2p)
            for (int s1 = 0; s1 < 2; ++s1)
                for (int s2 = 0; s2 < 2; ++s2) {
                    const double gv = gate(2 * s1p + s2p, 2 * s1 + s2);
                    if (gv == 0.0) continue;
                    for (int a1 = 0; a1 < 2; ++a1)
                        for (int a2 = 0; a2 < 2; ++a2) {
                            const int c1p = 2 * s1p + a1, c2p = 2 * s2p + a2;
                            const int c1 = 2 * s1 + a1, c2 = 2 * s2 + a2;
                            for (Eigen::Index l = 0; l < Dl; ++l)
                                theta2.block(l * 4 + c1p, c2p * Dr, 1, Dr) +=
                                    gv *
                                    theta.block(l * 4 + c1, c2 * Dr, 1, Dr);
                        }
                }

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(
        theta2, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.squaredNorm();

    Eigen::Index keep = 0;
    for (; keep < sv.size(); ++keep) {
        if (keep >= max_bond || sv[keep] < kSvdRelCutoff * sv[0]) break;
    }
    keep = std::max<Eigen::Index>(keep, 1);

    double kept = sv.head(keep).squaredNorm();
    GateResult out;
    out.discarded = total > 0 ? 1.0 - kept / total : 0.0;

    Eigen::VectorXd s_norm = sv.head(keep) / std::sqrt(kept);
    Eigen::MatrixXcd U = svd.matrixU().leftCols(keep);
    Eigen::MatrixXcd Vd = svd.matrixV().leftCols(keep).adjoint();
    if (left_canonical) {
        Vd = s_norm.asDiagonal() * Vd;
    } else {
        U = U * s_norm.asDiagonal();
    }

    for (int c = 0; c < 4; ++c) {
        out.left[c].resize(Dl, keep);
        for (Eigen::Index l = 0; l < Dl; ++l)
            out.left[c].row(l) = U.row(l * 4 + c);
        out.right[c] = Vd.block(0, c * Dr, keep, Dr);
    }
    return out;
}

} // namespace

void evolve_to_beta(PurifiedMPS& state, const SpinChainSpec& spec,
                    const TrotterSchedule& schedule) {
    if (spec.n != state.sites()) {
        throw std::invalid_argument("evolve_to_beta: chain length mismatch");
    }
    if (schedule.dt > kTrotterDtMax) {
        throw std::invalid_argument("evolve_to_beta: dt exceeds dt_max");
    }
    const double dbeta = schedule.beta_target - state.beta_;
    if (dbeta < -1e-12) {
        throw std::invalid_argument(
            "evolve_to_beta: target below the state's current beta");
    }
    if (dbeta <= 1e-15) return;

    const int steps =
        static_cast<int>(std::ceil(dbeta / (2.0 * schedule.dt) - 1e-12));
    const double dt = dbeta / (2.0 * steps);
    const int n = spec.n;

    // Half-step gates; one evolution step is the palindromic double sweep
    //   prod_{k=0}^{n-2} g_k  *  prod_{k=n-2}^{0} g_k,   g = exp(-dt/2 h_k),
    // which is second-order accurate in dt and keeps the active bond at
    // the orthogonality center in both directions.
    std::vector<Eigen::Matrix4d> gates(n - 1);
    for (int k = 0; k + 1 < n; ++k) {
        gates[k] = bondGate(bondHamiltonian(spec, k), dt / 2.0);
    }

    for (int step = 0; step < steps; ++step) {
        for (int k = 0; k + 1 < n; ++k) {
            GateResult r = applyGate(state.A_[k], state.A_[k + 1], gates[k],
                                     state.max_bond_, true);
            for (int c = 0; c < 4; ++c) {
                state.A_[k][c] = std::move(r.left[c]);
                state.A_[k + 1][c] = std::move(r.right[c]);
            }
            state.trunc_err_ += r.discarded;
        }
        for (int k = n - 2; k >= 0; --k) {
            GateResult r = applyGate(state.A_[k], state.A_[k + 1], gates[k],
                                     state.max_bond_, false);
            for (int c = 0; c < 4; ++c) {
                state.A_[k][c] = std::move(r.left[c]);
                state.A_[k + 1][c] = std::move(r.right[c]);
            }
            state.trunc_err_ += r.discarded;
        }
    }
    state.beta_ = schedule.beta_target;
    if (state.trunc_err_ > state.trunc_budget_) state.trunc_warning_ = true;
}

namespace {

// Transfer step with a single-site operator O (identity on the ancilla):
// L'(r, rbar) = sum_{s,sbar,a} O(sbar, s) (A^{2s+a})^T L conj(A^{2sbar+a}).
Eigen::MatrixXcd transferLeft(const Eigen::MatrixXcd& L,
                              const std::array<Eigen::MatrixXcd, 4>& A,
                              const Eigen::Matrix2cd& O) {
    const Eigen::Index Dr = A[0].cols();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(Dr, Dr);
    for (int s = 0; s < 2; ++s)
        for (int sb = 0; sb < 2; ++sb) {
            const Complex o = O(sb, s);
            if (o == Complex(0, 0)) continue;
            for (int a = 0; a < 2; ++a)
                out.noalias() +=
                    o * (A[2 * s + a].transpose() * L * A[2 * sb + a].conjugate());
        }
    return out;
}

Eigen::MatrixXcd transferLeftId(const Eigen::MatrixXcd& L,
                                const std::array<Eigen::MatrixXcd, 4>& A) {
    const Eigen::Index Dr = A[0].cols();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(Dr, Dr);
    for (int c = 0; c < 4; ++c)
        out.noalias() += A[c].transpose() * L * A[c].conjugate();
    return out;
}

Eigen::MatrixXcd transferRightId(const Eigen::MatrixXcd& R,
                                 const std::array<Eigen::MatrixXcd, 4>& A) {
    const Eigen::Index Dl = A[0].rows();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(Dl, Dl);
    for (int c = 0; c < 4; ++c)
        out.noalias() += A[c] * R * A[c].adjoint();
    return out;
}

} // namespace

double expectation(const PurifiedMPS& state,
                   const std::map<int, Eigen::Matrix2cd>& ops) {
    const int n = state.sites();
    static const Eigen::Matrix2cd id2 = Eigen::Matrix2cd::Identity();
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Ones(1, 1);
    Eigen::MatrixXcd Lnorm = Eigen::MatrixXcd::Ones(1, 1);
    for (int k = 0; k < n; ++k) {
        auto it = ops.find(k);
        if (it != ops.end()) {
            if ((it->second - it->second.adjoint()).cwiseAbs().maxCoeff() >
                1e-12) {
                throw std::invalid_argument(
                    "expectation: site operators must be Hermitian");
            }
            L = transferLeft(L, state.tensor(k), it->second);
        } else {
            L = transferLeftId(L, state.tensor(k));
        }
        Lnorm = transferLeftId(Lnorm, state.tensor(k));
    }
    const Complex val = L(0, 0) / Lnorm(0, 0);
    if (std::abs(val.imag()) > 1e-9) {
        throw std::runtime_error("expectation: imaginary residue " +
                                 std::to_string(val.imag()));
    }
    return val.real();
}

namespace {

int resolveFirstSite(const PurifiedMPS& state, int first_site, int m) {
    const int n = state.sites();
    if (m < 1) throw std::invalid_argument("block_rdm: m >= 1");
    if (first_site < 0) first_site = (n - m) / 2; // centered default
    if (first_site + m > n) {
        throw std::out_of_range("block_rdm: block extends past the chain");
    }
    return first_site;
}

struct BlockEnvs {
    Eigen::MatrixXcd L, R;
    double norm;
};

BlockEnvs blockEnvironments(const PurifiedMPS& state, int first, int m) {
    const int n = state.sites();
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Ones(1, 1);
    for (int k = 0; k < first; ++k) L = transferLeftId(L, state.tensor(k));
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Ones(1, 1);
    for (int k = n - 1; k >= first + m; --k)
        R = transferRightId(R, state.tensor(k));
    Eigen::MatrixXcd Lfull = L;
    for (int k = first; k < first + m; ++k)
        Lfull = transferLeftId(Lfull, state.tensor(k));
    const double norm = (Lfull.array() * R.array()).sum().real();
    return {std::move(L), std::move(R), norm};
}

DensityMatrix blockRdmDirect(const PurifiedMPS& state, int first, int m) {
    BlockEnvs env = blockEnvironments(state, first, m);
    const Eigen::Index dim = Eigen::Index(1) << m;

    // T[sigma * dim + sigmabar] is the (r, rbar) environment with open
    // (unconjugated, conjugated) physical strings sigma, sigmabar.
    std::vector<Eigen::MatrixXcd> T{env.L};
    for (int j = 0; j < m; ++j) {
        const auto& A = state.tensor(first + j);
        const Eigen::Index cur = Eigen::Index(1) << j;
        std::vector<Eigen::MatrixXcd> next(cur * 2 * cur * 2);
        for (Eigen::Index sg = 0; sg < cur; ++sg)
            for (Eigen::Index sb = 0; sb < cur; ++sb) {
                const Eigen::MatrixXcd& t = T[sg * cur + sb];
                for (int s = 0; s < 2; ++s)
                    for (int s2 = 0; s2 < 2; ++s2) {
                        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(
                            A[0].cols(), A[0].cols());
                        for (int a = 0; a < 2; ++a)
                            acc.noalias() += A[2 * s + a].transpose() * t *
                                             A[2 * s2 + a].conjugate();
                        next[(sg * 2 + s) * (cur * 2) + (sb * 2 + s2)] =
                            std::move(acc);
                    }
            }
        T = std::move(next);
    }

    DenseOperator rho(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j)
            rho(i, j) =
                (T[i * dim + j].array() * env.R.array()).sum() / env.norm;
    rho = (rho + rho.adjoint()) / 2.0;
    rho /= rho.trace();
    return DensityMatrix(std::move(rho));
}

void pauliRecurse(const PurifiedMPS& state, int first, int m, int depth,
                  const Eigen::MatrixXcd& T, std::vector<Pauli>& prefix,
                  const BlockEnvs& env,
                  std::map<PauliString, double>& coeffs) {
    if (depth == m) {
        const Complex v = (T.array() * env.R.array()).sum() / env.norm;
        coeffs[PauliString(prefix)] = v.real();
        return;
    }
    for (Pauli p : {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z}) {
        Eigen::MatrixXcd next = transferLeft(
            T, state.tensor(first + depth), pauliMatrix(p).cast<Complex>());
        prefix.push_back(p);
        pauliRecurse(state, first, m, depth + 1, next, prefix, env, coeffs);
        prefix.pop_back();
    }
}

DensityMatrix blockRdmPauli(const PurifiedMPS& state, int first, int m) {
    BlockEnvs env = blockEnvironments(state, first, m);
    std::map<PauliString, double> coeffs;
    std::vector<Pauli> prefix;
    pauliRecurse(state, first, m, 0, env.L, prefix, env, coeffs);
    // Truncation can push the smallest eigenvalue slightly negative; the
    // clamp here is sized to the SVD truncation scale, not the exact
    // 1e-10 contract used for exact inputs.
    return from_pauli_coefficients(coeffs, m, 1e-6);
}

} // namespace

DensityMatrix block_rdm(const PurifiedMPS& state, int first_site, int m,
                        RdmMethod method) {
    const int first = resolveFirstSite(state, first_site, m);
    if (method == RdmMethod::PauliReconstruction) {
        if (m > 6) {
            throw std::length_error(
                "block_rdm: Pauli reconstruction capped at m = 6 "
                "(4^m expectation blow-up); use DirectContraction");
        }
        return blockRdmPauli(state, first, m);
    }
    if (m > 10) {
        throw std::length_error("block_rdm: dense output capped at m = 10");
    }
    return blockRdmDirect(state, first, m);
}

// ---------------------------------------------------------------------
// checkpointing
// ---------------------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'T', 'L', 'M', 'P', 'S', '0', '1', '\0'};

template <typename T>
void put(std::ofstream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}
} // namespace

void save_checkpoint(const PurifiedMPS& state, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_checkpoint: cannot open " + path);
    os.write(kMagic, sizeof(kMagic));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(state.sites()));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(state.maxBond()));
    put<double>(os, state.beta());
    put<double>(os, state.truncationError());
    for (int k = 0; k < state.sites(); ++k) {
        put<std::uint32_t>(os,
                           static_cast<std::uint32_t>(state.tensor(k)[0].rows()));
        put<std::uint32_t>(os,
                           static_cast<std::uint32_t>(state.tensor(k)[0].cols()));
    }
    for (int k = 0; k < state.sites(); ++k) {
        for (int c = 0; c < 4; ++c) {
            const auto& M = state.tensor(k)[c];
            for (Eigen::Index i = 0; i < M.rows(); ++i)
                for (Eigen::Index j = 0; j < M.cols(); ++j) {
                    put<double>(os, M(i, j).real());
                    put<double>(os, M(i, j).imag());
                }
        }
    }
    if (!os) throw std::runtime_error("save_checkpoint: write failed");
}

PurifiedMPS load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_checkpoint: cannot open " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("load_checkpoint: bad magic");
    }
    const auto n = get<std::uint32_t>(is);
    const auto D = get<std::uint32_t>(is);
    PurifiedMPS s;
    s.max_bond_ = static_cast<int>(D);
    s.beta_ = get<double>(is);
    s.trunc_err_ = get<double>(is);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> shapes(n);
    for (auto& sh : shapes) {
        sh.first = get<std::uint32_t>(is);
        sh.second = get<std::uint32_t>(is);
    }
    s.A_.resize(n);
    for (std::uint32_t k = 0; k < n; ++k) {
        for (int c = 0; c < 4; ++c) {
            Eigen::MatrixXcd M(shapes[k].first, shapes[k].second);
            for (Eigen::Index i = 0; i < M.rows(); ++i)
                for (Eigen::Index j = 0; j < M.cols(); ++j) {
                    const double re = get<double>(is);
                    const double im = get<double>(is);
                    M(i, j) = Complex(re, im);
                }
            s.A_[k][c] = std::move(M);
        }
    }
    if (!is) throw std::runtime_error("load_checkpoint: truncated file");
    return s;
}

} // namespace thermolens
