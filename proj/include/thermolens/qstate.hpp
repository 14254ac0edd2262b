#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>
#include <vector>

// Dense linear algebra for small quantum registers: Hermitian
// eigendecompositions, PSD square roots, Uhlmann fidelity, partial traces
// and Pauli-basis manipulation.
//
// Basis convention: the first site of a register is the most significant
// qubit of the computational-basis index, i.e. for an m-site register the
// basis state |b_0 b_1 ... b_{m-1}> has index sum_i b_i * 2^(m-1-i).

namespace thermolens {

using Complex = std::complex<double>;
using DenseOperator = Eigen::MatrixXcd;

// Wrapper enforcing the density-matrix contract at construction time:
// square, Hermitian (1e-12 entrywise) and unit trace (1e-10). Positivity
// is checked where operations require it (see sqrt_psd,
// from_pauli_coefficients) since a spectral test on every construction
// would dominate the cost of large registers.
class DensityMatrix {
  public:
    explicit DensityMatrix(DenseOperator rho);

    Eigen::Index dim() const { return mat_.rows(); }
    const DenseOperator& matrix() const { return mat_; }

  private:
    DenseOperator mat_;
};

enum class Pauli : char { I = 'I', X = 'X', Y = 'Y', Z = 'Z' };

// Ordered Pauli label per site; the all-I string is the identity.
struct PauliString {
    std::vector<Pauli> sites;

    PauliString() = default;
    explicit PauliString(std::vector<Pauli> s) : sites(std::move(s)) {}
    // From a label such as "XZI".
    static PauliString fromLabel(const std::string& label);

    std::size_t size() const { return sites.size(); }
    std::string label() const;
    bool operator<(const PauliString& o) const { return sites < o.sites; }

    // Dense 2^m x 2^m matrix (test/oracle use; hot paths use the sparse
    // action below).
    DenseOperator toMatrix() const;

    int xCount() const;
    int yCount() const;
    int xyCount() const { return xCount() + yCount(); }
};

const Eigen::Matrix2cd& pauliMatrix(Pauli p);

// Kronecker product, first factor most significant.
DenseOperator kron(const DenseOperator& a, const DenseOperator& b);

struct EigResult {
    Eigen::VectorXd eigenvalues;   // ascending
    Eigen::MatrixXcd eigenvectors; // columns, unitary
};

// Hermitian eigendecomposition. Throws std::invalid_argument with a
// symmetry-violation report if ||A - A^dag||_max > 1e-10.
EigResult eig_hermitian(const DenseOperator& A);

// Hermitian PSD square root. Eigenvalues in [-1e-10, 0) are clamped to
// zero; anything more negative throws std::domain_error carrying the
// offending eigenvalue.
DenseOperator sqrt_psd(const DensityMatrix& rho);

// Uhlmann fidelity F = Tr sqrt(sqrt(sigma) rho sqrt(sigma)), in [0, 1].
// psd_tol is the clamping threshold applied to the spectrum of sigma
// (and of the inner product matrix); the default matches sqrt_psd.
double fidelity(const DensityMatrix& rho, const DensityMatrix& sigma,
                double psd_tol = 1e-10);

// (1/2) || rho - sigma ||_1.
double trace_distance(const DensityMatrix& rho, const DensityMatrix& sigma);

// Trace out every site not in `keep` (ascending 0-based indices into
// register_shape); kept sites preserve their order.
DensityMatrix partial_trace(const DensityMatrix& rho,
                            const std::vector<int>& keep,
                            const std::vector<int>& register_shape);

// <P> = Tr(rho P); real up to a 1e-10 imaginary residue.
double pauli_expectation(const DensityMatrix& rho, const PauliString& P);

// rho = 2^-m sum_P c_P P. Requires c_identity = 1; verifies positivity
// down to -psd_tol and throws std::domain_error naming the most negative
// eigenvalue otherwise (the usual cause is inconsistent correlator input).
DensityMatrix from_pauli_coefficients(
    const std::map<PauliString, double>& coeffs, int m,
    double psd_tol = 1e-10);

// All 4^m strings on m sites, in lexicographic I<X<Y<Z order.
std::vector<PauliString> all_pauli_strings(int m);

} // namespace thermolens
