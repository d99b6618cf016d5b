#pragma once

// Finite-dimensional Hilbert-space engine.
//
// Basis ordering is big-endian over the layout: subsystem 0 is the
// slowest-varying index, so |a b> sits at a * dim(1) + b.

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace ep {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NotHermitianError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroProbabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class SubsystemLayout {
  public:
    SubsystemLayout() = default;
    // Labels may be empty; non-empty labels must be unique.
    explicit SubsystemLayout(std::vector<int> dims, std::vector<std::string> labels = {});

    size_t size() const { return dims_.size(); }
    int dim(size_t i) const { return dims_.at(i); }
    const std::vector<int>& dims() const { return dims_; }
    const std::string& label(size_t i) const { return labels_.at(i); }
    const std::vector<std::string>& labels() const { return labels_; }
    size_t total_dim() const;
    // Flat-index stride of subsystem i.
    size_t stride(size_t i) const;
    SubsystemLayout concat(const SubsystemLayout& other) const;
    SubsystemLayout without(size_t i) const;
    SubsystemLayout permuted(const std::vector<size_t>& order) const;
    // Position of a label, or size() if absent.
    size_t index_of(const std::string& label) const;

    bool operator==(const SubsystemLayout& o) const { return dims_ == o.dims_ && labels_ == o.labels_; }
    bool operator!=(const SubsystemLayout& o) const { return !(*this == o); }

  private:
    std::vector<int> dims_;
    std::vector<std::string> labels_;
};

class StateVector {
  public:
    // Throws DimensionError on length mismatch and std::invalid_argument if
    // the norm is not 1 within 1e-9.
    StateVector(Vec amplitudes, SubsystemLayout layout);

    static StateVector normalized(Vec amplitudes, SubsystemLayout layout);
    // Product basis state with the given per-subsystem digits.
    static StateVector basis(const SubsystemLayout& layout, const std::vector<int>& digits);
    static StateVector from_index(const SubsystemLayout& layout, size_t index);

    const Vec& amplitudes() const { return amp_; }
    const SubsystemLayout& layout() const { return layout_; }
    size_t dim() const { return static_cast<size_t>(amp_.size()); }
    cplx operator[](size_t i) const { return amp_[static_cast<Eigen::Index>(i)]; }

  private:
    Vec amp_;
    SubsystemLayout layout_;
};

class LinearMap {
  public:
    LinearMap(SpMat m, SubsystemLayout layout);
    LinearMap(Mat m, SubsystemLayout layout);

    bool is_sparse() const { return sparse_; }
    bool hermitian() const { return hermitian_; }
    const SubsystemLayout& layout() const { return layout_; }
    size_t dim() const { return layout_.total_dim(); }

    Mat dense() const;
    const SpMat& sparse_matrix() const { return sp_; }
    const Mat& dense_matrix() const { return dn_; }
    Vec apply(const Vec& v) const;
    StateVector apply(const StateVector& s) const;
    bool is_diagonal() const;
    // Max-row-sum bound on the operator norm.
    double norm_bound() const;

  private:
    bool sparse_;
    bool hermitian_ = false;
    SpMat sp_;
    Mat dn_;
    SubsystemLayout layout_;
};

// Max entry of |M - M^dagger|.
double hermiticity_defect(const Mat& m);
// Max entry of |U^dagger U - I|.
double unitarity_defect(const Mat& u);

StateVector tensor(const std::vector<StateVector>& states);
StateVector tensor(const StateVector& a, const StateVector& b);
LinearMap tensor(const std::vector<LinearMap>& maps);

// exp(-i H t) for a dense hermitian H via eigendecomposition.
Mat expm_hermitian(const Mat& h, double t);

// exp(-i H t) |state>; H hermitian, t >= 0, same layout.
StateVector evolve(const StateVector& state, const LinearMap& h, double t);
// Lanczos approximation of exp(-i H t) v for hermitian sparse H.
Vec krylov_expv(const SpMat& h, const Vec& v, double t, double tol = 1e-13);

cplx inner(const StateVector& a, const StateVector& b);
double fidelity(const StateVector& a, const StateVector& b);

// Singular values (descending, length min(dA, dB)) of the amplitude matrix
// reshaped with rows over `subsystems`.
std::vector<double> schmidt_spectrum(const StateVector& state, const std::vector<size_t>& subsystems);

struct Projection {
    StateVector state;
    double probability;
};
// Applies a single-subsystem projector and renormalizes.
Projection partial_project(const StateVector& state, size_t subsystem, const LinearMap& projector);

// Applies a local operator acting on `targets` (in that order) to a full
// amplitude vector. `op` is square of size prod(dims[targets]).
Vec apply_local(const Vec& v, const SubsystemLayout& layout, const Mat& op, const std::vector<size_t>& targets);
StateVector apply_local(const StateVector& s, const Mat& op, const std::vector<size_t>& targets);
// Lifts a local operator to a sparse map on the full layout.
LinearMap embed(const Mat& op, const SubsystemLayout& layout, const std::vector<size_t>& targets);

// Reorders subsystems: result subsystem k is input subsystem order[k].
StateVector permute(const StateVector& s, const std::vector<size_t>& order);
// Projects subsystem i onto <local| and drops it. The state must factor as
// |local> on i (overlap >= 1 - tol) or std::invalid_argument is thrown.
StateVector remove_subsystem(const StateVector& s, size_t i, const Vec& local, double tol = 1e-9);
// Inserts |local> as a new subsystem at position `pos`.
StateVector insert_subsystem(const StateVector& s, size_t pos, const Vec& local, const std::string& label = "");

// Square unitary whose leading columns are `leading` (orthonormal columns),
// completed by modified Gram-Schmidt over the standard basis.
Mat complete_orthonormal(const Mat& leading);

// Flat index -> per-subsystem digits.
std::vector<int> digits_of(const SubsystemLayout& layout, size_t index);
size_t index_of(const SubsystemLayout& layout, const std::vector<int>& digits);

}  // namespace ep
