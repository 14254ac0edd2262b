#include "thermolens/qstate.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace thermolens {

namespace {

void checkHermitian(const DenseOperator& A, double tol, const char* who) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument(std::string(who) + ": matrix not square");
    }
    double dev = (A - A.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol) {
        std::ostringstream os;
        os << who << ": symmetry violation, ||A - A^dag||_max = " << dev
           << " exceeds " << tol;
        throw std::invalid_argument(os.str());
    }
}

} // namespace

DensityMatrix::DensityMatrix(DenseOperator rho) : mat_(std::move(rho)) {
    checkHermitian(mat_, 1e-12, "DensityMatrix");
    double tr = mat_.trace().real();
    if (std::abs(tr - 1.0) > 1e-10) {
        std::ostringstream os;
        os << "DensityMatrix: trace = " << tr << ", expected 1";
        throw std::invalid_argument(os.str());
    }
}

PauliString PauliString::fromLabel(const std::string& label) {
    std::vector<Pauli> s;
    s.reserve(label.size());
    for (char c : label) {
        switch (c) {
            case 'I': s.push_back(Pauli::I); break;
            case 'X': s.push_back(Pauli::X); break;
            case 'Y': s.push_back(Pauli::Y); break;
            case 'Z': s.push_back(Pauli::Z); break;
            default:
                throw std::invalid_argument("PauliString: bad label char");
        }
    }
    return PauliString(std::move(s));
}

std::string PauliString::label() const {
    std::string out;
    for (Pauli p : sites) out.push_back(static_cast<char>(p));
    return out;
}

int PauliString::xCount() const {
    int c = 0;
    for (Pauli p : sites) c += (p == Pauli::X);
    return c;
}

int PauliString::yCount() const {
    int c = 0;
    for (Pauli p : sites) c += (p == Pauli::Y);
    return c;
}

const Eigen::Matrix2cd& pauliMatrix(Pauli p) {
    static const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    static const Eigen::Matrix2cd sx =
        (Eigen::Matrix2cd() << 0, 1, 1, 0).finished();
    static const Eigen::Matrix2cd sy =
        (Eigen::Matrix2cd() << 0, Complex(0, -1), Complex(0, 1), 0).finished();
    static const Eigen::Matrix2cd sz =
        (Eigen::Matrix2cd() << 1, 0, 0, -1).finished();
    switch (p) {
        case Pauli::X: return sx;
        case Pauli::Y: return sy;
        case Pauli::Z: return sz;
        default: return id;
    }
}

DenseOperator kron(const DenseOperator& a, const DenseOperator& b) {
    DenseOperator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) =
                a(i, j) * b;
    return out;
}

DenseOperator PauliString::toMatrix() const {
    DenseOperator out = DenseOperator::Identity(1, 1);
    for (Pauli p : sites) out = kron(out, pauliMatrix(p));
    return out;
}

EigResult eig_hermitian(const DenseOperator& A) {
    checkHermitian(A, 1e-10, "eig_hermitian");
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(A);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("eig_hermitian: eigensolver failed");
    }
    return {es.eigenvalues(), es.eigenvectors()};
}

DenseOperator sqrt_psd(const DensityMatrix& rho) {
    EigResult e = eig_hermitian(rho.matrix());
    Eigen::VectorXd lam = e.eigenvalues;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < -1e-10) {
            std::ostringstream os;
            os << "sqrt_psd: PSD violation, eigenvalue " << lam[i];
            throw std::domain_error(os.str());
        }
        lam[i] = std::sqrt(std::max(lam[i], 0.0));
    }
    return e.eigenvectors * lam.asDiagonal() *
           e.eigenvectors.adjoint();
}

double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma,
                double psd_tol) {
    if (rho.dim() != sigma.dim()) {
        throw std::invalid_argument("fidelity: dimension mismatch");
    }
    EigResult es = eig_hermitian(sigma.matrix());
    Eigen::VectorXd lam = es.eigenvalues;
    for (Eigen::Index i = 0; i < lam.size(); ++i) {
        if (lam[i] < -psd_tol) {
            std::ostringstream os;
            os << "fidelity: sigma not PSD, eigenvalue " << lam[i];
            throw std::domain_error(os.str());
        }
        lam[i] = std::sqrt(std::max(lam[i], 0.0));
    }
    DenseOperator sqrt_sigma =
        es.eigenvectors * lam.asDiagonal() * es.eigenvectors.adjoint();
    DenseOperator inner = sqrt_sigma * rho.matrix() * sqrt_sigma;
    // inner is Hermitian PSD up to roundoff; clamp the noise floor.
    Eigen::SelfAdjointEigenSolver<DenseOperator> ei(
        (inner + inner.adjoint()) / 2.0, Eigen::EigenvaluesOnly);
    double f = 0.0;
    for (Eigen::Index i = 0; i < ei.eigenvalues().size(); ++i) {
        f += std::sqrt(std::max(ei.eigenvalues()[i], 0.0));
    }
    return f;
}

double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma) {
    if (rho.dim() != sigma.dim()) {
        throw std::invalid_argument("trace_distance: dimension mismatch");
    }
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(
        rho.matrix() - sigma.matrix(), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& keep,
                            const std::vector<int>& register_shape) {
    const int nsites = static_cast<int>(register_shape.size());
    std::vector<bool> kept(nsites, false);
    for (int s : keep) {
        if (s < 0 || s >= nsites) {
            throw std::out_of_range("partial_trace: site index out of range");
        }
        if (kept[s]) {
            throw std::invalid_argument("partial_trace: duplicate keep index");
        }
        kept[s] = true;
    }

    // Strides with site 0 most significant.
    std::vector<Eigen::Index> stride(nsites, 1);
    for (int i = nsites - 2; i >= 0; --i) {
        stride[i] = stride[i + 1] * register_shape[i + 1];
    }
    Eigen::Index full_dim = stride.empty() ? 1 : stride[0] * register_shape[0];
    if (rho.dim() != full_dim) {
        throw std::invalid_argument(
            "partial_trace: register_shape does not match matrix dimension");
    }

    Eigen::Index keep_dim = 1, env_dim = 1;
    std::vector<int> traced;
    for (int i = 0; i < nsites; ++i) {
        if (kept[i]) keep_dim *= register_shape[i];
        else { env_dim *= register_shape[i]; traced.push_back(i); }
    }

    // Maps from (kept digits) and (traced digits) to full-index offsets.
    auto offsets = [&](const std::vector<int>& sites, Eigen::Index dim) {
        std::vector<Eigen::Index> off(dim, 0);
        for (Eigen::Index v = 0; v < dim; ++v) {
            Eigen::Index rem = v;
            for (auto it = sites.rbegin(); it != sites.rend(); ++it) {
                Eigen::Index d = register_shape[*it];
                off[v] += (rem % d) * stride[*it];
                rem /= d;
            }
        }
        return off;
    };
    std::vector<int> keep_sorted;
    for (int i = 0; i < nsites; ++i)
        if (kept[i]) keep_sorted.push_back(i);
    std::vector<Eigen::Index> koff = offsets(keep_sorted, keep_dim);
    std::vector<Eigen::Index> eoff = offsets(traced, env_dim);

    DenseOperator out = DenseOperator::Zero(keep_dim, keep_dim);
    const DenseOperator& m = rho.matrix();
    for (Eigen::Index a = 0; a < keep_dim; ++a)
        for (Eigen::Index b = 0; b < keep_dim; ++b) {
            Complex acc = 0;
            for (Eigen::Index e = 0; e < env_dim; ++e)
                acc += m(koff[a] + eoff[e], koff[b] + eoff[e]);
            out(a, b) = acc;
        }
    return DensityMatrix((out + out.adjoint()) / 2.0);
}

namespace {

// Sparse action of a Pauli string: column j has its single nonzero at
// row j ^ flip_mask with phase prod_i phi_i(b_i).
struct PauliAction {
    Eigen::Index flip = 0;
    // phase(j) computed on the fly from z_mask / y_mask.
    Eigen::Index z_mask = 0;
    Eigen::Index y_mask = 0;

    Complex phase(Eigen::Index j) const {
        int zbits = __builtin_popcountll(j & z_mask);
        int ybits_set = __builtin_popcountll(j & y_mask);
        int ny = __builtin_popcountll(y_mask);
        // sigma_y|b> = i(1-2b)|1-b>, sigma_z|b> = (1-2b)|b>
        Complex ph = (zbits + ybits_set) % 2 == 0 ? 1.0 : -1.0;
        switch (ny % 4) {
            case 1: ph *= Complex(0, 1); break;
            case 2: ph *= -1.0; break;
            case 3: ph *= Complex(0, -1); break;
            default: break;
        }
        return ph;
    }
};

PauliAction actionOf(const PauliString& P) {
    PauliAction a;
    const int m = static_cast<int>(P.size());
    for (int i = 0; i < m; ++i) {
        Eigen::Index bit = Eigen::Index(1) << (m - 1 - i);
        switch (P.sites[i]) {
            case Pauli::X: a.flip |= bit; break;
            case Pauli::Y: a.flip |= bit; a.y_mask |= bit; break;
            case Pauli::Z: a.z_mask |= bit; break;
            case Pauli::I: break;
        }
    }
    return a;
}

} // namespace

double pauli_expectation(const DensityMatrix& rho, const PauliString& P) {
    Eigen::Index dim = Eigen::Index(1) << P.size();
    if (rho.dim() != dim) {
        throw std::invalid_argument("pauli_expectation: dimension mismatch");
    }
    PauliAction a = actionOf(P);
    Complex acc = 0;
    const DenseOperator& m = rho.matrix();
    for (Eigen::Index j = 0; j < dim; ++j) {
        acc += a.phase(j) * m(j ^ a.flip, j);
    }
    if (std::abs(acc.imag()) > 1e-10) {
        throw std::runtime_error("pauli_expectation: imaginary residue " +
                                 std::to_string(acc.imag()));
    }
    return acc.real();
}

DensityMatrix from_pauli_coefficients(
    const std::map<PauliString, double>& coeffs, int m, double psd_tol) {
    Eigen::Index dim = Eigen::Index(1) << m;
    DenseOperator rho = DenseOperator::Zero(dim, dim);
    const double norm = 1.0 / static_cast<double>(dim);
    for (const auto& [P, c] : coeffs) {
        if (static_cast<int>(P.size()) != m) {
            throw std::invalid_argument(
                "from_pauli_coefficients: string length != register size");
        }
        if (P.label() == std::string(m, 'I') && std::abs(c - 1.0) > 1e-12) {
            throw std::invalid_argument(
                "from_pauli_coefficients: identity coefficient must be 1");
        }
        PauliAction a = actionOf(P);
        for (Eigen::Index j = 0; j < dim; ++j) {
            rho(j ^ a.flip, j) += norm * c * a.phase(j);
        }
    }
    rho = (rho + rho.adjoint()) / 2.0;

    Eigen::SelfAdjointEigenSolver<DenseOperator> es(rho,
                                                    Eigen::EigenvaluesOnly);
    double lam_min = es.eigenvalues().minCoeff();
    if (lam_min < -psd_tol) {
        std::ostringstream os;
        os << "from_pauli_coefficients: reconstruction not PSD, most "
              "negative eigenvalue "
           << lam_min << " (inconsistent correlator input)";
        throw std::domain_error(os.str());
    }
    return DensityMatrix(std::move(rho));
}

std::vector<PauliString> all_pauli_strings(int m) {
    const Pauli letters[4] = {Pauli::I, Pauli::X, Pauli::Y, Pauli::Z};
    std::size_t total = std::size_t(1) << (2 * m);
    std::vector<PauliString> out;
    out.reserve(total);
    for (std::size_t code = 0; code < total; ++code) {
        std::vector<Pauli> s(m);
        std::size_t c = code;
        for (int i = m - 1; i >= 0; --i) {
            s[i] = letters[c % 4];
            c /= 4;
        }
        out.emplace_back(std::move(s));
    }
    return out;
}

} // namespace thermolens
