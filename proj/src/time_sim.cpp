#include "ssdss/time_sim.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <cmath>

#include "ssdss/model_builder.hpp"
#include "ssdss/ss_analysis.hpp"

namespace ssdss {

namespace {

constexpr double kDivergenceThreshold = 1e12;

StateSpaceModel to_real_model(const StateSpaceModel& m) {
    if (m.representation == Representation::diagonal_complex) return to_real_form(m);
    return m;  // real_A() below rejects genuinely complex content
}

}  // namespace

DiscreteModel foh_discretize(const StateSpaceModel& m, double fs_hz) {
    if (!(fs_hz > 0.0)) throw ValidationError("foh_discretize: fs must be > 0");
    const StateSpaceModel rm = to_real_model(m);
    const MatrixXd a = rm.real_A();
    const MatrixXd b = rm.real_B();
    const MatrixXd c = rm.real_C();
    const MatrixXd d = rm.real_D();

    const Eigen::Index n = a.rows();
    const Eigen::Index mi = b.cols();
    const double ts = 1.0 / fs_hz;

    // exp of [[A, B, 0], [0, 0, I], [0, 0, 0]] * T yields Ad, the held-input
    // integral, and the ramped-input integral in one shot.
    MatrixXd aug = MatrixXd::Zero(n + 2 * mi, n + 2 * mi);
    aug.topLeftCorner(n, n) = a * ts;
    aug.block(0, n, n, mi) = b * ts;
    aug.block(n, n + mi, mi, mi) = MatrixXd::Identity(mi, mi) * ts;
    const MatrixXd phi = aug.exp();

    DiscreteModel dm;
    dm.Ad = phi.topLeftCorner(n, n);
    const MatrixXd gamma1 = phi.block(0, n, n, mi);
    const MatrixXd gamma2 = phi.block(0, n + mi, n, mi);
    dm.Bd1 = gamma2 / ts;
    dm.Bd0 = gamma1 - dm.Bd1;
    dm.Cd = c;
    dm.Dd = d;
    dm.fs_hz = fs_hz;

    if (!dm.Ad.allFinite() || !dm.Bd0.allFinite() || !dm.Bd1.allFinite()) {
        throw NumericalError("foh_discretize: non-finite discretized matrices");
    }

    double fastest_hz = 0.0;
    if (n > 0) {
        const Eigen::VectorXcd lam = Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues();
        fastest_hz = lam.cwiseAbs().maxCoeff() / (2.0 * M_PI);
    }
    dm.rate_warning = fs_hz < 2.0 * fastest_hz;
    return dm;
}

VectorXd sweep_signal(double f0_hz, double f1_hz, double duration_s, double fs_hz,
                      double fade_fraction) {
    if (!(f0_hz > 0.0 && f1_hz > f0_hz && f1_hz < fs_hz / 2.0)) {
        throw ValidationError("sweep_signal: need 0 < f0 < f1 < fs/2");
    }
    if (!(duration_s > 0.0)) throw ValidationError("sweep_signal: duration must be > 0");
    if (!(fade_fraction >= 0.0 && fade_fraction < 0.5)) {
        throw ValidationError("sweep_signal: fade_fraction must be in [0, 0.5)");
    }
    const Eigen::Index n = static_cast<Eigen::Index>(std::llround(duration_s * fs_hz));
    const double t_fade = fade_fraction * duration_s;
    VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / fs_hz;
        const double phase =
            2.0 * M_PI * (f0_hz * t + (f1_hz - f0_hz) * t * t / (2.0 * duration_s));
        double w = 1.0;
        if (t_fade > 0.0) {
            if (t < t_fade) {
                w = 0.5 - 0.5 * std::cos(M_PI * t / t_fade);
            } else if (t > duration_s - t_fade) {
                w = 0.5 - 0.5 * std::cos(M_PI * (duration_s - t) / t_fade);
            }
        }
        s(k) = w * std::sin(phase);
    }
    const double peak = s.cwiseAbs().maxCoeff();
    if (peak > 0.0) s /= peak;
    return s;
}

SimResult simulate(const DiscreteModel& dm, const MatrixXd& inputs, const VectorXd& x0) {
    const Eigen::Index n_samples = inputs.rows();
    if (n_samples < 1) throw ValidationError("simulate: need at least one input sample");
    if (inputs.cols() != dm.n_inputs()) {
        throw ValidationError("simulate: input channel count does not match the model");
    }
    VectorXd x = x0.size() == 0 ? VectorXd::Zero(dm.n_states()) : x0;
    if (x.size() != dm.n_states()) {
        throw ValidationError("simulate: initial state size does not match the model");
    }

    SimResult res;
    res.outputs.resize(n_samples, dm.n_outputs());
    for (Eigen::Index k = 0; k < n_samples; ++k) {
        const VectorXd y = dm.Cd * x + dm.Dd * inputs.row(k).transpose();
        res.outputs.row(k) = y.transpose();
        if (!y.allFinite() || y.cwiseAbs().maxCoeff() > kDivergenceThreshold) {
            res.diverged = true;
            res.diverged_at = k;
            res.outputs.conservativeResize(k + 1, Eigen::NoChange);
            break;
        }
        if (k + 1 < n_samples) {
            x = dm.Ad * x + dm.Bd0 * inputs.row(k).transpose() +
                dm.Bd1 * inputs.row(k + 1).transpose();
        }
    }
    return res;
}

}  // namespace ssdss
