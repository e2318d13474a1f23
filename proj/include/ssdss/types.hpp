#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace ssdss {

using Complex = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::MatrixXi;
using Eigen::VectorXcd;
using Eigen::VectorXd;

// Thrown when an input file or constructed object violates its contract.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown on numerical failure (singular operator, rank deficiency,
// near-defective eigenproblem). The CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class Domain { displacement, velocity, acceleration };

enum class Representation { diagonal_complex, real_valued, general };

std::string to_string(Domain d);
std::string to_string(Representation r);
Domain domain_from_string(const std::string& s);
Representation representation_from_string(const std::string& s);

// Modal model per the pole/residue expansion with lower/upper residual
// matrices. Poles are stored once per underdamped pair (the +Im member);
// conjugates are expanded on demand. All frequencies in rad/s.
struct ModalModel {
    VectorXcd poles;           // n_m, Im > 0 for every entry
    MatrixXcd part_factors;    // n_m x n_i
    MatrixXcd mode_shapes;     // n_o x n_m
    MatrixXd lower_residual;   // n_o x n_i, divided by (jw)^2 at evaluation
    MatrixXd upper_residual;   // n_o x n_i, constant over frequency

    ModalModel(VectorXcd poles_, MatrixXcd part_factors_, MatrixXcd mode_shapes_,
               MatrixXd lower_residual_, MatrixXd upper_residual_);

    Eigen::Index n_modes() const { return poles.size(); }
    Eigen::Index n_outputs() const { return mode_shapes.rows(); }
    Eigen::Index n_inputs() const { return part_factors.cols(); }
};

// LTI state-space model. Matrices are stored complex; real-valued models
// carry zero imaginary parts. The provenance string records the build
// lineage for diagnostics only.
struct StateSpaceModel {
    MatrixXcd A, B, C, D;
    Domain domain = Domain::displacement;
    Representation representation = Representation::general;
    std::string provenance;

    StateSpaceModel(MatrixXcd A_, MatrixXcd B_, MatrixXcd C_, MatrixXcd D_,
                    Domain domain_, Representation representation_,
                    std::string provenance_ = {});

    Eigen::Index n_states() const { return A.rows(); }
    Eigen::Index n_outputs() const { return C.rows(); }
    Eigen::Index n_inputs() const { return B.cols(); }

    bool is_real() const;       // max |Im| over all matrices == 0 within 0 tolerance
    MatrixXd real_A() const;    // requires is_real-like content; throws otherwise
    MatrixXd real_B() const;
    MatrixXd real_C() const;
    MatrixXd real_D() const;

    static StateSpaceModel empty(Eigen::Index n_outputs, Eigen::Index n_inputs,
                                 Domain domain, std::string provenance = {});
};

// FRF set on a strictly increasing, strictly positive angular-frequency grid.
struct FrfSet {
    VectorXd grid;                   // rad/s
    std::vector<MatrixXcd> values;   // n_f entries, each n_o x n_i
    Domain domain = Domain::displacement;

    FrfSet(VectorXd grid_, std::vector<MatrixXcd> values_, Domain domain_);

    Eigen::Index n_freqs() const { return grid.size(); }
    Eigen::Index n_outputs() const { return values.empty() ? 0 : values.front().rows(); }
    Eigen::Index n_inputs() const { return values.empty() ? 0 : values.front().cols(); }
};

enum class PoleClass { stable_pair, unstable_pair, stable_real, unstable_real };

std::string to_string(PoleClass c);

// Pole with derived natural frequency / damping ratio. xi carries the sign
// of the instability: xi < 0 iff Re(value) > 0.
struct PoleDescriptor {
    Complex value;         // rad/s
    double natural_freq;   // |value|, rad/s
    double damping_ratio;  // -Re(value)/|value|
    PoleClass cls;
};

// Realness tolerance used to separate real poles from conjugate pairs.
inline constexpr double kPoleRealnessTol = 1e-9;

PoleDescriptor pole_params(Complex lambda);

// Natural frequencies and damping ratios for residual compensation modes.
// All frequencies rad/s, damping ratios in (0, 1).
struct RcmConfig {
    double omega_lr, xi_lr;
    double omega_ur, xi_ur;
    double omega_cb, xi_cb;

    RcmConfig(double omega_lr_, double xi_lr_, double omega_ur_, double xi_ur_,
              double omega_cb_, double xi_cb_);
};

// Signed Boolean compatibility map: each row rigidly pairs two outputs of
// the concatenated output vector (+1 and -1 entries).
struct InterfaceMap {
    struct Row {
        Eigen::Index plus_output;
        Eigen::Index minus_output;
    };

    Eigen::Index n_outputs = 0;
    std::vector<Row> rows;

    InterfaceMap(Eigen::Index n_outputs_, std::vector<Row> rows_);

    Eigen::Index n_constraints() const { return static_cast<Eigen::Index>(rows.size()); }
    bool empty() const { return rows.empty(); }

    // Dense n_constraints x n_outputs matrix with entries in {-1, 0, +1}.
    MatrixXd matrix() const;
};

// Multiplies every FRF matrix by (jw)^k and advances/retards the domain tag.
// k in {-2,-1,1,2}; displacement <-> velocity <-> acceleration.
FrfSet frf_reweight(const FrfSet& frf, int k);

// Largest absolute entry; 0 for empty matrices.
double max_abs(const MatrixXcd& m);
double max_abs(const MatrixXd& m);

}  // namespace ssdss
