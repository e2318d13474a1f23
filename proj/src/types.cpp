#include "ssdss/types.hpp"

#include <cmath>

namespace ssdss {

std::string to_string(Domain d) {
    switch (d) {
        case Domain::displacement: return "displacement";
        case Domain::velocity: return "velocity";
        case Domain::acceleration: return "acceleration";
    }
    throw ValidationError("unknown domain tag");
}

std::string to_string(Representation r) {
    switch (r) {
        case Representation::diagonal_complex: return "diagonal-complex";
        case Representation::real_valued: return "real-valued";
        case Representation::general: return "general";
    }
    throw ValidationError("unknown representation tag");
}

Domain domain_from_string(const std::string& s) {
    if (s == "displacement") return Domain::displacement;
    if (s == "velocity") return Domain::velocity;
    if (s == "acceleration") return Domain::acceleration;
    throw ValidationError("unknown domain: \"" + s + "\"");
}

Representation representation_from_string(const std::string& s) {
    if (s == "diagonal-complex") return Representation::diagonal_complex;
    if (s == "real-valued") return Representation::real_valued;
    if (s == "general") return Representation::general;
    throw ValidationError("unknown representation: \"" + s + "\"");
}

std::string to_string(PoleClass c) {
    switch (c) {
        case PoleClass::stable_pair: return "stable-pair";
        case PoleClass::unstable_pair: return "unstable-pair";
        case PoleClass::stable_real: return "stable-real";
        case PoleClass::unstable_real: return "unstable-real";
    }
    throw ValidationError("unknown pole class");
}

double max_abs(const MatrixXcd& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

double max_abs(const MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    return m.cwiseAbs().maxCoeff();
}

namespace {

bool all_finite(const MatrixXcd& m) {
    return m.real().allFinite() && m.imag().allFinite();
}

}  // namespace

ModalModel::ModalModel(VectorXcd poles_, MatrixXcd part_factors_, MatrixXcd mode_shapes_,
                       MatrixXd lower_residual_, MatrixXd upper_residual_)
    : poles(std::move(poles_)),
      part_factors(std::move(part_factors_)),
      mode_shapes(std::move(mode_shapes_)),
      lower_residual(std::move(lower_residual_)),
      upper_residual(std::move(upper_residual_)) {
    const Eigen::Index nm = poles.size();
    for (Eigen::Index r = 0; r < nm; ++r) {
        if (!(poles(r).imag() > 0.0)) {
            throw ValidationError("modal model: pole " + std::to_string(r) +
                                  " must have strictly positive imaginary part");
        }
    }
    if (part_factors.rows() != nm) {
        throw ValidationError("modal model: participation factor rows != number of poles");
    }
    if (mode_shapes.cols() != nm) {
        throw ValidationError("modal model: mode shape columns != number of poles");
    }
    const Eigen::Index no = mode_shapes.rows();
    const Eigen::Index ni = part_factors.cols();
    if (lower_residual.rows() != no || lower_residual.cols() != ni ||
        upper_residual.rows() != no || upper_residual.cols() != ni) {
        throw ValidationError("modal model: residual matrices must be n_outputs x n_inputs");
    }
    if (!all_finite(part_factors) || !all_finite(mode_shapes) ||
        !lower_residual.allFinite() || !upper_residual.allFinite() ||
        !poles.real().allFinite() || !poles.imag().allFinite()) {
        throw ValidationError("modal model: non-finite entries");
    }
}

StateSpaceModel::StateSpaceModel(MatrixXcd A_, MatrixXcd B_, MatrixXcd C_, MatrixXcd D_,
                                 Domain domain_, Representation representation_,
                                 std::string provenance_)
    : A(std::move(A_)),
      B(std::move(B_)),
      C(std::move(C_)),
      D(std::move(D_)),
      domain(domain_),
      representation(representation_),
      provenance(std::move(provenance_)) {
    const Eigen::Index ns = A.rows();
    if (A.cols() != ns) throw ValidationError("state-space model: A must be square");
    if (B.rows() != ns) throw ValidationError("state-space model: B rows != states");
    if (C.cols() != ns) throw ValidationError("state-space model: C columns != states");
    if (D.rows() != C.rows() || D.cols() != B.cols()) {
        throw ValidationError("state-space model: D must be n_outputs x n_inputs");
    }
    if (!all_finite(A) || !all_finite(B) || !all_finite(C) || !all_finite(D)) {
        throw ValidationError("state-space model: non-finite entries");
    }
    if (domain == Domain::displacement && max_abs(D) != 0.0) {
        throw ValidationError("state-space model: displacement domain requires D == 0");
    }
    if (representation == Representation::diagonal_complex) {
        for (Eigen::Index i = 0; i < ns; ++i) {
            for (Eigen::Index j = 0; j < ns; ++j) {
                if (i != j && A(i, j) != Complex(0.0, 0.0)) {
                    throw ValidationError(
                        "state-space model: diagonal-complex representation requires diagonal A");
                }
            }
        }
    }
}

bool StateSpaceModel::is_real() const {
    return max_abs(MatrixXcd(A.imag().cast<Complex>())) == 0.0 &&
           max_abs(MatrixXcd(B.imag().cast<Complex>())) == 0.0 &&
           max_abs(MatrixXcd(C.imag().cast<Complex>())) == 0.0 &&
           max_abs(MatrixXcd(D.imag().cast<Complex>())) == 0.0;
}

namespace {

MatrixXd real_part_checked(const MatrixXcd& m, const char* name) {
    const double scale = max_abs(m);
    const double im = m.size() == 0 ? 0.0 : m.imag().cwiseAbs().maxCoeff();
    if (im > 1e-12 * std::max(1.0, scale)) {
        throw NumericalError(std::string("matrix ") + name +
                             " has non-negligible imaginary part: " + std::to_string(im));
    }
    return m.real();
}

}  // namespace

MatrixXd StateSpaceModel::real_A() const { return real_part_checked(A, "A"); }
MatrixXd StateSpaceModel::real_B() const { return real_part_checked(B, "B"); }
MatrixXd StateSpaceModel::real_C() const { return real_part_checked(C, "C"); }
MatrixXd StateSpaceModel::real_D() const { return real_part_checked(D, "D"); }

StateSpaceModel StateSpaceModel::empty(Eigen::Index n_outputs, Eigen::Index n_inputs,
                                       Domain domain, std::string provenance) {
    return StateSpaceModel(MatrixXcd::Zero(0, 0), MatrixXcd::Zero(0, n_inputs),
                           MatrixXcd::Zero(n_outputs, 0), MatrixXcd::Zero(n_outputs, n_inputs),
                           domain, Representation::diagonal_complex, std::move(provenance));
}

FrfSet::FrfSet(VectorXd grid_, std::vector<MatrixXcd> values_, Domain domain_)
    : grid(std::move(grid_)), values(std::move(values_)), domain(domain_) {
    if (static_cast<std::size_t>(grid.size()) != values.size()) {
        throw ValidationError("frf set: grid length != number of value matrices");
    }
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        if (!(grid(f) > 0.0)) throw ValidationError("frf set: grid must be strictly positive");
        if (f > 0 && !(grid(f) > grid(f - 1))) {
            throw ValidationError("frf set: grid must be strictly increasing");
        }
    }
    for (std::size_t f = 0; f < values.size(); ++f) {
        if (values[f].rows() != values.front().rows() ||
            values[f].cols() != values.front().cols()) {
            throw ValidationError("frf set: inconsistent matrix dimensions across frequencies");
        }
        if (!all_finite(values[f])) {
            throw ValidationError("frf set: non-finite entry at frequency index " +
                                  std::to_string(f));
        }
    }
}

PoleDescriptor pole_params(Complex lambda) {
    const double mag = std::abs(lambda);
    if (!(mag > 0.0) || !std::isfinite(mag)) {
        throw NumericalError("pole_params: pole must be finite and nonzero");
    }
    PoleDescriptor d;
    d.value = lambda;
    d.natural_freq = mag;
    d.damping_ratio = -lambda.real() / mag;
    const bool is_real_pole = std::abs(lambda.imag()) <= kPoleRealnessTol * std::max(1.0, mag);
    const bool unstable = lambda.real() > 0.0;
    if (is_real_pole) {
        d.cls = unstable ? PoleClass::unstable_real : PoleClass::stable_real;
    } else {
        d.cls = unstable ? PoleClass::unstable_pair : PoleClass::stable_pair;
    }
    return d;
}

RcmConfig::RcmConfig(double omega_lr_, double xi_lr_, double omega_ur_, double xi_ur_,
                     double omega_cb_, double xi_cb_)
    : omega_lr(omega_lr_),
      xi_lr(xi_lr_),
      omega_ur(omega_ur_),
      xi_ur(xi_ur_),
      omega_cb(omega_cb_),
      xi_cb(xi_cb_) {
    auto check = [](double omega, double xi, const char* tag) {
        if (!(omega > 0.0)) {
            throw ValidationError(std::string("rcm config: omega_") + tag + " must be > 0");
        }
        if (!(xi > 0.0 && xi < 1.0)) {
            throw ValidationError(std::string("rcm config: xi_") + tag + " must be in (0, 1)");
        }
    };
    check(omega_lr, xi_lr, "lr");
    check(omega_ur, xi_ur, "ur");
    check(omega_cb, xi_cb, "cb");
}

InterfaceMap::InterfaceMap(Eigen::Index n_outputs_, std::vector<Row> rows_)
    : n_outputs(n_outputs_), rows(std::move(rows_)) {
    if (n_outputs < 0) throw ValidationError("interface map: negative output count");
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const Row& row = rows[r];
        if (row.plus_output < 0 || row.plus_output >= n_outputs ||
            row.minus_output < 0 || row.minus_output >= n_outputs) {
            throw ValidationError("interface map: row " + std::to_string(r) +
                                  " references an output out of range");
        }
        if (row.plus_output == row.minus_output) {
            throw ValidationError("interface map: row " + std::to_string(r) +
                                  " pairs an output with itself");
        }
    }
}

MatrixXd InterfaceMap::matrix() const {
    MatrixXd b = MatrixXd::Zero(n_constraints(), n_outputs);
    for (Eigen::Index r = 0; r < n_constraints(); ++r) {
        b(r, rows[static_cast<std::size_t>(r)].plus_output) = 1.0;
        b(r, rows[static_cast<std::size_t>(r)].minus_output) = -1.0;
    }
    return b;
}

FrfSet frf_reweight(const FrfSet& frf, int k) {
    if (k != -2 && k != -1 && k != 1 && k != 2) {
        throw ValidationError("frf_reweight: exponent must be one of {-2,-1,1,2}");
    }
    const int step = k > 0 ? 1 : -1;
    const int count = std::abs(k);
    int dom = static_cast<int>(frf.domain) + step * count;
    if (dom < 0 || dom > 2) {
        throw ValidationError("frf_reweight: reweighting would leave the domain enum (" +
                              to_string(frf.domain) + " with k=" + std::to_string(k) + ")");
    }
    std::vector<MatrixXcd> out(frf.values.size());
    for (Eigen::Index f = 0; f < frf.grid.size(); ++f) {
        const double w = frf.grid(f);
        Complex factor;
        switch (k) {
            case 1: factor = Complex(0.0, w); break;
            case 2: factor = Complex(-w * w, 0.0); break;
            case -1: factor = Complex(0.0, -1.0 / w); break;
            default: factor = Complex(-1.0 / (w * w), 0.0); break;
        }
        out[static_cast<std::size_t>(f)] = frf.values[static_cast<std::size_t>(f)] * factor;
    }
    return FrfSet(frf.grid, std::move(out), static_cast<Domain>(dom));
}

}  // namespace ssdss
