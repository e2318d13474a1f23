#include "ssdss/model_builder.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "ssdss/ss_analysis.hpp"

namespace ssdss {

namespace {

constexpr double kSvdDropTol = 1e-12;

void check_grid_positive(const VectorXd& grid, const char* who) {
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        if (!(grid(f) > 0.0)) {
            throw ValidationError(std::string(who) +
                                  ": grid must be strictly positive (1/w^2 term is singular)");
        }
    }
}

std::string source_tag(RcmSource s) {
    switch (s) {
        case RcmSource::UR: return "UR";
        case RcmSource::LR: return "LR";
        case RcmSource::CB: return "CB";
    }
    return "?";
}

}  // namespace

RcmSet::RcmSet(VectorXcd poles_, MatrixXcd shapes_, MatrixXcd factors_, RcmSource source_)
    : poles(std::move(poles_)),
      shapes(std::move(shapes_)),
      factors(std::move(factors_)),
      source(source_) {
    const Eigen::Index nr = poles.size();
    if (shapes.cols() != nr || factors.rows() != nr) {
        throw ValidationError("rcm set: inconsistent dimensions");
    }
    for (Eigen::Index r = 0; r < nr; ++r) {
        if (!(poles(r).real() < 0.0) || !(poles(r).imag() > 0.0)) {
            throw ValidationError("rcm set: poles must have Re < 0 and Im > 0");
        }
    }
}

FrfSet modal_frf(const ModalModel& model, const VectorXd& grid) {
    check_grid_positive(grid, "modal_frf");
    const Eigen::Index nf = grid.size();
    const Eigen::Index nm = model.n_modes();
    std::vector<MatrixXcd> values(static_cast<std::size_t>(nf));
    const MatrixXcd shapes_conj = model.mode_shapes.conjugate();
    const MatrixXcd factors_conj = model.part_factors.conjugate();
    for (Eigen::Index f = 0; f < nf; ++f) {
        const double w = grid(f);
        const Complex jw(0.0, w);
        MatrixXcd scaled(model.n_outputs(), nm);
        MatrixXcd scaled_conj(model.n_outputs(), nm);
        for (Eigen::Index r = 0; r < nm; ++r) {
            scaled.col(r) = model.mode_shapes.col(r) / (jw - model.poles(r));
            scaled_conj.col(r) = shapes_conj.col(r) / (jw - std::conj(model.poles(r)));
        }
        MatrixXcd h = scaled * model.part_factors + scaled_conj * factors_conj;
        h += model.lower_residual.cast<Complex>() * (-1.0 / (w * w));
        h += model.upper_residual.cast<Complex>();
        values[static_cast<std::size_t>(f)] = std::move(h);
    }
    return FrfSet(grid, std::move(values), Domain::displacement);
}

StateSpaceModel build_inband(const ModalModel& model) {
    const Eigen::Index nm = model.n_modes();
    const Eigen::Index ns = 2 * nm;
    MatrixXcd a = MatrixXcd::Zero(ns, ns);
    MatrixXcd b(ns, model.n_inputs());
    MatrixXcd c(model.n_outputs(), ns);
    for (Eigen::Index r = 0; r < nm; ++r) {
        a(r, r) = model.poles(r);
        a(nm + r, nm + r) = std::conj(model.poles(r));
    }
    b.topRows(nm) = model.part_factors;
    b.bottomRows(nm) = model.part_factors.conjugate();
    c.leftCols(nm) = model.mode_shapes;
    c.rightCols(nm) = model.mode_shapes.conjugate();
    return StateSpaceModel(std::move(a), std::move(b), std::move(c),
                           MatrixXcd::Zero(model.n_outputs(), model.n_inputs()),
                           Domain::displacement, Representation::diagonal_complex, "ib");
}

RcmSet rcm_params(const MatrixXd& m, double omega_r, double xi_r, RcmSource source) {
    if (!(omega_r > 0.0)) throw ValidationError("rcm_params: omega_r must be > 0");
    if (!(xi_r > 0.0 && xi_r < 1.0)) throw ValidationError("rcm_params: xi_r must be in (0, 1)");

    Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;

    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < sigma.size(); ++r) {
        if (sigma(r) > kSvdDropTol * sigma_max && sigma(r) > 0.0) keep.push_back(r);
    }
    const Eigen::Index nr = static_cast<Eigen::Index>(keep.size());

    const double sq = std::sqrt(1.0 - xi_r * xi_r);
    const Complex lambda(-xi_r * omega_r, omega_r * sq);
    VectorXcd poles = VectorXcd::Constant(nr, lambda);
    MatrixXcd shapes(m.rows(), nr);
    MatrixXcd factors(nr, m.cols());
    for (Eigen::Index k = 0; k < nr; ++k) {
        VectorXd u = svd.matrixU().col(keep[static_cast<std::size_t>(k)]);
        VectorXd v = svd.matrixV().col(keep[static_cast<std::size_t>(k)]);
        // Sign convention: largest-magnitude entry of U positive, for
        // reproducible serialization (psi*l is sign-invariant).
        Eigen::Index imax = 0;
        u.cwiseAbs().maxCoeff(&imax);
        if (u(imax) < 0.0) {
            u = -u;
            v = -v;
        }
        const double s = std::sqrt(sigma(keep[static_cast<std::size_t>(k)]));
        shapes.col(k) = (omega_r / sq * s) * u.cast<Complex>();
        factors.row(k) = Complex(0.0, -0.5) * s * v.transpose().cast<Complex>();
    }
    return RcmSet(std::move(poles), std::move(shapes), std::move(factors), source);
}

StateSpaceModel rcm_model(const RcmSet& rcms, Eigen::Index n_outputs, Eigen::Index n_inputs,
                          std::string provenance) {
    if (rcms.n_modes() > 0 && (rcms.shapes.rows() != n_outputs || rcms.factors.cols() != n_inputs)) {
        throw ValidationError("rcm_model: dimension mismatch with requested output/input counts");
    }
    if (provenance.empty()) provenance = source_tag(rcms.source);
    if (rcms.n_modes() == 0) {
        return StateSpaceModel::empty(n_outputs, n_inputs, Domain::displacement, provenance);
    }
    const ModalModel as_modal(rcms.poles, rcms.factors, rcms.shapes,
                              MatrixXd::Zero(n_outputs, n_inputs),
                              MatrixXd::Zero(n_outputs, n_inputs));
    StateSpaceModel m = build_inband(as_modal);
    m.provenance = provenance;
    return m;
}

StateSpaceModel ur_rcm_model(const MatrixXd& ur, const RcmConfig& cfg) {
    return rcm_model(rcm_params(ur, cfg.omega_ur, cfg.xi_ur, RcmSource::UR), ur.rows(), ur.cols(),
                     "UR");
}

StateSpaceModel lr_rcm_model(const MatrixXd& lr, const RcmConfig& cfg) {
    const MatrixXd scaled = lr / (cfg.omega_lr * cfg.omega_lr);
    return rcm_model(rcm_params(scaled, cfg.omega_lr, cfg.xi_lr, RcmSource::LR), lr.rows(),
                     lr.cols(), "LR");
}

StateSpaceModel assemble_full(const StateSpaceModel& inband, const StateSpaceModel& lr_m,
                              const StateSpaceModel& ur_m) {
    for (const StateSpaceModel* m : {&inband, &lr_m, &ur_m}) {
        if (m->domain != Domain::displacement) {
            throw ValidationError("assemble_full: all parts must be displacement models");
        }
        if (m->representation != Representation::diagonal_complex) {
            throw ValidationError("assemble_full: all parts must be diagonal-complex");
        }
    }
    StateSpaceModel full = concat_block({inband, lr_m, ur_m});
    full.provenance = "full";
    return full;
}

MatrixXd velocity_feedthrough(const StateSpaceModel& m) {
    const MatrixXcd cb = m.C * m.B;
    const double re = cb.size() == 0 ? 0.0 : cb.real().cwiseAbs().maxCoeff();
    const double im = cb.size() == 0 ? 0.0 : cb.imag().cwiseAbs().maxCoeff();
    if (im > 1e-10 * re && im > 1e-14) {
        throw NumericalError("velocity_feedthrough: C*B has a non-negligible imaginary part (" +
                             std::to_string(im) + "); conjugate structure is malformed");
    }
    return cb.real();
}

namespace {

bool feedthrough_negligible(const StateSpaceModel& m, const MatrixXd& cb) {
    const double scale = m.C.norm() * m.B.norm();
    return max_abs(cb) <= 1e-10 * std::max(scale, 1e-300);
}

}  // namespace

StateSpaceModel impose_newton(const StateSpaceModel& full, const RcmConfig& cfg, bool* applied) {
    if (full.domain != Domain::displacement) {
        throw ValidationError("impose_newton: model must be a displacement model");
    }
    const MatrixXd cb = velocity_feedthrough(full);
    if (feedthrough_negligible(full, cb)) {
        if (applied) *applied = false;
        return full;
    }

    const RcmSet rcms = rcm_params(cb, cfg.omega_cb, cfg.xi_cb, RcmSource::CB);
    const Eigen::Index nr = rcms.n_modes();
    const Eigen::Index no = full.n_outputs();
    const Eigen::Index ni = full.n_inputs();

    // Velocity-form pair block, then the displacement output matrix
    // C_disp = C_vel * A^-1 (A diagonal).
    MatrixXcd a_cb = MatrixXcd::Zero(2 * nr, 2 * nr);
    MatrixXcd b_cb(2 * nr, ni);
    MatrixXcd c_cb(no, 2 * nr);
    for (Eigen::Index r = 0; r < nr; ++r) {
        const Complex lam = rcms.poles(r);
        a_cb(r, r) = lam;
        a_cb(nr + r, nr + r) = std::conj(lam);
        b_cb.row(r) = rcms.factors.row(r);
        b_cb.row(nr + r) = rcms.factors.row(r).conjugate();
        c_cb.col(r) = rcms.shapes.col(r) / lam;
        c_cb.col(nr + r) = rcms.shapes.col(r).conjugate() / std::conj(lam);
    }

    const Eigen::Index ns = full.n_states();
    MatrixXcd a = MatrixXcd::Zero(ns + 2 * nr, ns + 2 * nr);
    a.topLeftCorner(ns, ns) = full.A;
    a.bottomRightCorner(2 * nr, 2 * nr) = a_cb;
    MatrixXcd b(ns + 2 * nr, ni);
    b.topRows(ns) = full.B;
    b.bottomRows(2 * nr) = b_cb;
    MatrixXcd c(no, ns + 2 * nr);
    c.leftCols(ns) = full.C;
    c.rightCols(2 * nr) = c_cb;

    if (applied) *applied = true;
    return StateSpaceModel(std::move(a), std::move(b), std::move(c), MatrixXcd::Zero(no, ni),
                           Domain::displacement, Representation::diagonal_complex,
                           full.provenance.empty() ? "INL" : full.provenance + "+INL");
}

StateSpaceModel impose_newton_legacy(const StateSpaceModel& full, double omega_cb_al,
                                     bool* applied) {
    if (full.domain != Domain::displacement) {
        throw ValidationError("impose_newton_legacy: model must be a displacement model");
    }
    if (!(omega_cb_al > 0.0)) {
        throw ValidationError("impose_newton_legacy: omega_cb_al must be > 0");
    }
    const MatrixXd cb = velocity_feedthrough(full);
    if (feedthrough_negligible(full, cb)) {
        if (applied) *applied = false;
        return full;
    }

    Eigen::JacobiSVD<MatrixXd> svd(cb, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd sigma = svd.singularValues();
    const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index r = 0; r < sigma.size(); ++r) {
        if (sigma(r) > kSvdDropTol * sigma_max && sigma(r) > 0.0) keep.push_back(r);
    }
    const Eigen::Index nr = static_cast<Eigen::Index>(keep.size());
    const Eigen::Index no = full.n_outputs();
    const Eigen::Index ni = full.n_inputs();

    // One undamped state per singular value, pole at +j*omega.
    const Eigen::Index ns = full.n_states();
    MatrixXcd a = MatrixXcd::Zero(ns + nr, ns + nr);
    a.topLeftCorner(ns, ns) = full.A;
    MatrixXcd b(ns + nr, ni);
    b.topRows(ns) = full.B;
    MatrixXcd c(no, ns + nr);
    c.leftCols(ns) = full.C;
    for (Eigen::Index k = 0; k < nr; ++k) {
        const double s = std::sqrt(sigma(keep[static_cast<std::size_t>(k)]));
        a(ns + k, ns + k) = Complex(0.0, omega_cb_al);
        b.row(ns + k) = (-s * svd.matrixV().col(keep[static_cast<std::size_t>(k)]).transpose())
                            .cast<Complex>();
        c.col(ns + k) = (s * svd.matrixU().col(keep[static_cast<std::size_t>(k)])).cast<Complex>();
    }

    if (applied) *applied = true;
    return StateSpaceModel(std::move(a), std::move(b), std::move(c), MatrixXcd::Zero(no, ni),
                           Domain::displacement, Representation::diagonal_complex,
                           full.provenance.empty() ? "AL" : full.provenance + "+AL");
}

FrfSet newton_rcm_velocity_frf(const MatrixXd& cb, const RcmConfig& cfg, const VectorXd& grid) {
    const double wc = cfg.omega_cb;
    const double xi = cfg.xi_cb;
    std::vector<MatrixXcd> values(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        const double w = grid(f);
        const Complex denom(-w * w + wc * wc, 2.0 * w * xi * wc);
        const Complex gain = wc * wc / denom - 1.0;
        values[static_cast<std::size_t>(f)] = cb.cast<Complex>() * gain;
    }
    return FrfSet(grid, std::move(values), Domain::velocity);
}

StateSpaceModel to_real_form(const StateSpaceModel& m) {
    if (m.representation != Representation::diagonal_complex) {
        throw ValidationError("to_real_form: model must be in diagonal-complex form");
    }
    const PairStructure ps = pair_structure(m);
    const Eigen::Index np = static_cast<Eigen::Index>(ps.representatives.size());
    const Eigen::Index nreal = static_cast<Eigen::Index>(ps.reals.size());
    const Eigen::Index ns = 2 * np + nreal;
    if (ns != m.n_states()) {
        throw NumericalError("to_real_form: pair structure does not cover all states");
    }
    const Eigen::Index no = m.n_outputs();
    const Eigen::Index ni = m.n_inputs();

    MatrixXd a = MatrixXd::Zero(ns, ns);
    MatrixXd b = MatrixXd::Zero(ns, ni);
    MatrixXd c = MatrixXd::Zero(no, ns);

    for (Eigen::Index p = 0; p < np; ++p) {
        const Eigen::Index rep = ps.representatives[static_cast<std::size_t>(p)];
        const Eigen::Index prt = ps.partners[static_cast<std::size_t>(p)];
        const Complex lam = m.A(rep, rep);
        const double row_scale = 1.0 + m.B.row(rep).norm();
        const double col_scale = 1.0 + m.C.col(rep).norm();
        if ((m.B.row(prt) - m.B.row(rep).conjugate()).norm() > 1e-8 * row_scale ||
            (m.C.col(prt) - m.C.col(rep).conjugate()).norm() > 1e-8 * col_scale) {
            throw NumericalError(
                "to_real_form: conjugate pairing of B rows / C columns violated beyond tolerance");
        }
        const Eigen::Index at = 2 * p;
        a(at, at) = lam.real();
        a(at, at + 1) = lam.imag();
        a(at + 1, at) = -lam.imag();
        a(at + 1, at + 1) = lam.real();
        b.row(at) = m.B.row(rep).real();
        b.row(at + 1) = -m.B.row(rep).imag();
        c.col(at) = 2.0 * m.C.col(rep).real();
        c.col(at + 1) = 2.0 * m.C.col(rep).imag();
    }

    for (Eigen::Index k = 0; k < nreal; ++k) {
        const Eigen::Index src = ps.reals[static_cast<std::size_t>(k)];
        const Eigen::Index at = 2 * np + k;
        a(at, at) = m.A(src, src).real();
        // The residue of a real pole must be a real rank-one matrix; refactor
        // it so both B row and C column are real.
        const MatrixXcd residue = m.C.col(src) * m.B.row(src);
        const double scale = max_abs(residue);
        if (scale == 0.0) continue;
        if (residue.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, scale)) {
            throw NumericalError("to_real_form: residue of a real pole is not real");
        }
        Eigen::JacobiSVD<MatrixXd> svd(residue.real(), Eigen::ComputeThinU | Eigen::ComputeThinV);
        if (svd.singularValues().size() > 1 &&
            svd.singularValues()(1) > 1e-8 * svd.singularValues()(0)) {
            throw NumericalError("to_real_form: residue of a real pole is not rank one");
        }
        const double s = std::sqrt(svd.singularValues()(0));
        b.row(at) = s * svd.matrixV().col(0).transpose();
        c.col(at) = s * svd.matrixU().col(0);
    }

    const MatrixXcd d = m.D;
    if (d.size() > 0 && d.imag().cwiseAbs().maxCoeff() > 1e-8 * std::max(1.0, max_abs(d))) {
        throw NumericalError("to_real_form: feed-through is not real");
    }

    return StateSpaceModel(a.cast<Complex>(), b.cast<Complex>(), c.cast<Complex>(),
                           d.real().cast<Complex>(), m.domain, Representation::real_valued,
                           m.provenance);
}

StateSpaceModel build_full_model(const ModalModel& model, const RcmConfig& cfg,
                                 bool enforce_newton, bool* newton_applied) {
    const StateSpaceModel full =
        assemble_full(build_inband(model), lr_rcm_model(model.lower_residual, cfg),
                      ur_rcm_model(model.upper_residual, cfg));
    if (!enforce_newton) {
        if (newton_applied) *newton_applied = false;
        return full;
    }
    return impose_newton(full, cfg, newton_applied);
}

RcmConfig default_rcm_config(double omega_min, double omega_max) {
    if (!(omega_min > 0.0) || !(omega_max >= omega_min)) {
        throw ValidationError("default_rcm_config: need 0 < omega_min <= omega_max");
    }
    // The lower corner sits well below the band: accuracy only improves as
    // it drops, and omega_min/5 would leave a ~6% deviation at the band
    // bottom with xi = 0.1.
    return RcmConfig(omega_min / 50.0, 0.1, 10.0 * omega_max, 0.1, 10.0 * omega_max, 0.1);
}

std::vector<RcmQualityRow> rcm_quality(const MatrixXd& lr, const MatrixXd& ur,
                                       const MatrixXd& cb, const RcmConfig& cfg,
                                       const VectorXd& grid) {
    check_grid_positive(grid, "rcm_quality");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<RcmQualityRow> rows;
    rows.reserve(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        const double w = grid(f);
        RcmQualityRow row{w, nan, nan, nan};
        if (max_abs(ur) > 0.0) {
            const Complex denom(-w * w + cfg.omega_ur * cfg.omega_ur, 2.0 * w * cfg.xi_ur * cfg.omega_ur);
            row.rel_dev_ur = std::abs(cfg.omega_ur * cfg.omega_ur / denom - 1.0);
        }
        if (max_abs(lr) > 0.0) {
            const Complex denom(-w * w + cfg.omega_lr * cfg.omega_lr, 2.0 * w * cfg.xi_lr * cfg.omega_lr);
            // Model response LR/denom vs the exact LR/(jw)^2 = -LR/w^2.
            row.rel_dev_lr = std::abs((-w * w) / denom - 1.0);
        }
        if (max_abs(cb) > 0.0) {
            const Complex denom(-w * w + cfg.omega_cb * cfg.omega_cb, 2.0 * w * cfg.xi_cb * cfg.omega_cb);
            row.rel_dev_cb = std::abs(cfg.omega_cb * cfg.omega_cb / denom - 1.0);
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace ssdss
