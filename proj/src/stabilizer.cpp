#include "ssdss/stabilizer.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <iostream>

#include "ssdss/model_builder.hpp"
#include "ssdss/ss_analysis.hpp"

namespace ssdss {

StateSpaceModel flip_damping(const StateSpaceModel& unstable) {
    if (unstable.representation != Representation::diagonal_complex) {
        throw ValidationError("flip_damping: model must be in diagonal-complex form");
    }
    MatrixXcd a = unstable.A;
    for (Eigen::Index k = 0; k < a.rows(); ++k) {
        const Complex lam = a(k, k);
        if (!(lam.real() > 0.0)) {
            throw ValidationError(
                "flip_damping: stable pole present; partition the model first");
        }
        a(k, k) = Complex(-lam.real(), lam.imag());
    }
    return StateSpaceModel(std::move(a), unstable.B, unstable.C, unstable.D, unstable.domain,
                           Representation::diagonal_complex,
                           unstable.provenance.empty() ? "stbz" : unstable.provenance + "+stbz");
}

LsfdProblem::LsfdProblem(FrfSet target_, VectorXcd poles_, MatrixXcd part_factors_,
                         Domain weighting_)
    : target(std::move(target_)),
      poles(std::move(poles_)),
      part_factors(std::move(part_factors_)),
      weighting(weighting_) {
    if (target.n_freqs() == 0) throw ValidationError("lsfd: target grid is empty");
    for (Eigen::Index r = 0; r < poles.size(); ++r) {
        if (!(poles(r).real() < 0.0) || !(poles(r).imag() > 0.0)) {
            throw ValidationError("lsfd: poles must be stable pair representatives");
        }
    }
    if (part_factors.rows() != poles.size()) {
        throw ValidationError("lsfd: participation factor rows != number of poles");
    }
    if (part_factors.cols() != target.n_inputs()) {
        throw ValidationError("lsfd: participation factor columns != target inputs");
    }
}

namespace {

Complex weight_at(Domain weighting, double w) {
    switch (weighting) {
        case Domain::displacement: return Complex(1.0, 0.0);
        case Domain::velocity: return Complex(0.0, w);
        case Domain::acceleration: return Complex(-w * w, 0.0);
    }
    throw ValidationError("lsfd: unknown weighting");
}

// Complex-valued design block at one frequency, (2 n_m + 2 n_i) x n_i.
// Its real part is the Re column block of the design matrix, its imaginary
// part the Im column block.
MatrixXcd design_block(const LsfdProblem& p, double w) {
    const Eigen::Index nm = p.n_modes();
    const Eigen::Index ni = p.target.n_inputs();
    const Complex jw(0.0, w);
    MatrixXcd block(2 * nm + 2 * ni, ni);
    for (Eigen::Index r = 0; r < nm; ++r) {
        const Eigen::RowVectorXcd pr = p.part_factors.row(r) / (jw - p.poles(r));
        const Eigen::RowVectorXcd qr =
            p.part_factors.row(r).conjugate() / (jw - std::conj(p.poles(r)));
        block.row(r) = pr + qr;
        block.row(nm + r) = Complex(0.0, 1.0) * (pr - qr);
    }
    block.middleRows(2 * nm, ni) =
        MatrixXcd::Identity(ni, ni) * Complex(-1.0 / (w * w), 0.0);
    block.middleRows(2 * nm + ni, ni) = MatrixXcd::Identity(ni, ni);
    block *= weight_at(p.weighting, w);
    return block;
}

}  // namespace

MatrixXd lsfd_design_matrix(const LsfdProblem& p) {
    const Eigen::Index nm = p.n_modes();
    const Eigen::Index ni = p.target.n_inputs();
    const Eigen::Index nf = p.target.n_freqs();
    MatrixXd design(2 * nm + 2 * ni, 2 * ni * nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
        const MatrixXcd block = design_block(p, p.target.grid(f));
        design.middleCols(f * ni, ni) = block.real();
        design.middleCols(ni * nf + f * ni, ni) = block.imag();
    }
    return design;
}

LsfdSolution lsfd_solve(const LsfdProblem& p) {
    const Eigen::Index nm = p.n_modes();
    const Eigen::Index ni = p.target.n_inputs();
    const Eigen::Index no = p.target.n_outputs();
    const Eigen::Index nf = p.target.n_freqs();
    const Eigen::Index nrows = 2 * nm + 2 * ni;

    // Weighted reference FRFs: convert the stored target into the weighting
    // domain (k = 0 when they already agree).
    const int k = static_cast<int>(p.weighting) - static_cast<int>(p.target.domain);
    const FrfSet weighted = k == 0 ? p.target : frf_reweight(p.target, k);

    MatrixXd design = lsfd_design_matrix(p);
    MatrixXd rhs(no, 2 * ni * nf);
    for (Eigen::Index f = 0; f < nf; ++f) {
        rhs.middleCols(f * ni, ni) = weighted.values[static_cast<std::size_t>(f)].real();
        rhs.middleCols(ni * nf + f * ni, ni) = weighted.values[static_cast<std::size_t>(f)].imag();
    }

    // Row equilibration; a pure conditioning transform undone on the way out.
    VectorXd row_scale(nrows);
    for (Eigen::Index i = 0; i < nrows; ++i) {
        const double nrm = design.row(i).norm();
        row_scale(i) = nrm > 0.0 ? nrm : 1.0;
        design.row(i) /= row_scale(i);
    }

    Eigen::BDCSVD<MatrixXd> svd(design.transpose(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const VectorXd sv = svd.singularValues();
    const double tol = 1e-10 * sv(0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) >= tol) ++rank;
    }
    if (rank < nrows) {
        throw NumericalError("lsfd_solve: design matrix is rank-deficient (effective rank " +
                             std::to_string(rank) + " of " + std::to_string(nrows) + ")");
    }
    // X^T = V S^-1 U^T rhs^T.
    MatrixXd xt = svd.matrixV() *
                  sv.head(rank).cwiseInverse().asDiagonal() *
                  (svd.matrixU().leftCols(rank).transpose() * rhs.transpose());
    MatrixXd x = xt.transpose();
    for (Eigen::Index i = 0; i < nrows; ++i) x.col(i) /= row_scale(i);

    LsfdSolution sol;
    sol.mode_shapes = x.middleCols(0, nm).cast<Complex>() +
                      Complex(0.0, 1.0) * x.middleCols(nm, nm).cast<Complex>();
    sol.lower_residual = x.middleCols(2 * nm, ni);
    sol.upper_residual = x.middleCols(2 * nm + ni, ni);
    return sol;
}

FrfSet target_frf(const FrfSet& unstable_frf, const FrfSet& real_pole_model_frf) {
    if (unstable_frf.grid.size() != real_pole_model_frf.grid.size() ||
        (unstable_frf.grid - real_pole_model_frf.grid).cwiseAbs().maxCoeff() != 0.0) {
        throw ValidationError("target_frf: grids differ");
    }
    if (unstable_frf.domain != real_pole_model_frf.domain) {
        throw ValidationError("target_frf: domains differ");
    }
    if (unstable_frf.n_outputs() != real_pole_model_frf.n_outputs() ||
        unstable_frf.n_inputs() != real_pole_model_frf.n_inputs()) {
        throw ValidationError("target_frf: dimensions differ");
    }
    std::vector<MatrixXcd> values(unstable_frf.values.size());
    for (std::size_t f = 0; f < values.size(); ++f) {
        values[f] = unstable_frf.values[f] - real_pole_model_frf.values[f];
    }
    return FrfSet(unstable_frf.grid, std::move(values), unstable_frf.domain);
}

namespace {

// Numerical conjugate-symmetry breakage can leave an unstable pair without
// its mirror state. Complete the model by appending the conjugate of every
// unpaired non-real pole (with conjugated B row and C column) so the
// pair-based rebuild can proceed; this slightly symmetrizes the FRFs.
StateSpaceModel conjugate_complete(const StateSpaceModel& m, bool* completed) {
    const Eigen::Index ns = m.n_states();
    std::vector<bool> used(static_cast<std::size_t>(ns), false);
    std::vector<Eigen::Index> unpaired;
    for (Eigen::Index k = 0; k < ns; ++k) {
        const Complex lam = m.A(k, k);
        if (std::abs(lam.imag()) <= kPoleRealnessTol * std::max(1.0, std::abs(lam))) {
            used[static_cast<std::size_t>(k)] = true;
        }
    }
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (used[static_cast<std::size_t>(k)]) continue;
        Eigen::Index best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < ns; ++j) {
            if (j == k || used[static_cast<std::size_t>(j)]) continue;
            const double dist = std::abs(std::conj(m.A(j, j)) - m.A(k, k));
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best >= 0 && best_dist <= 1e-8 * std::max(1.0, std::abs(m.A(k, k)))) {
            used[static_cast<std::size_t>(k)] = true;
            used[static_cast<std::size_t>(best)] = true;
        } else {
            unpaired.push_back(k);
            used[static_cast<std::size_t>(k)] = true;
        }
    }
    if (unpaired.empty()) {
        if (completed) *completed = false;
        return m;
    }
    if (completed) *completed = true;
    const Eigen::Index extra = static_cast<Eigen::Index>(unpaired.size());
    MatrixXcd a = MatrixXcd::Zero(ns + extra, ns + extra);
    a.topLeftCorner(ns, ns) = m.A;
    MatrixXcd b(ns + extra, m.n_inputs());
    b.topRows(ns) = m.B;
    MatrixXcd c(m.n_outputs(), ns + extra);
    c.leftCols(ns) = m.C;
    for (Eigen::Index e = 0; e < extra; ++e) {
        const Eigen::Index src = unpaired[static_cast<std::size_t>(e)];
        a(ns + e, ns + e) = std::conj(m.A(src, src));
        b.row(ns + e) = m.B.row(src).conjugate();
        c.col(ns + e) = m.C.col(src).conjugate();
    }
    return StateSpaceModel(std::move(a), std::move(b), std::move(c), m.D, m.domain,
                           Representation::diagonal_complex, m.provenance);
}

// Numerically marginal states (the redundant constraint states a dual
// assembly keeps) sit at eigenvalues split around zero with vanishing
// residues. Pin them at a small negative real part so the stabilized model
// is strictly stable; the FRFs are unaffected at any tested tolerance.
StateSpaceModel pin_marginal_states(const StateSpaceModel& diag, double floor_abs) {
    MatrixXcd a = diag.A;
    bool touched = false;
    for (Eigen::Index kk = 0; kk < a.rows(); ++kk) {
        if (std::abs(a(kk, kk)) < floor_abs) {
            a(kk, kk) = Complex(-floor_abs, a(kk, kk).imag());
            touched = true;
        }
    }
    if (!touched) return diag;
    return StateSpaceModel(std::move(a), diag.B, diag.C, diag.D, diag.domain,
                           Representation::diagonal_complex, diag.provenance);
}

double rel_rms_deviation(const FrfSet& test, const FrfSet& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t f = 0; f < ref.values.size(); ++f) {
        num += (test.values[f] - ref.values[f]).squaredNorm();
        den += ref.values[f].squaredNorm();
    }
    return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

}  // namespace

StabilizeResult stabilize(const StateSpaceModel& coupled, const VectorXd& grid,
                          const StabilizeOptions& opts) {
    if (coupled.domain != Domain::displacement) {
        throw ValidationError("stabilize: model must be a displacement model");
    }
    if (grid.size() < 2) throw ValidationError("stabilize: grid too small");

    StabilizeDiagnostics diag_info;
    diag_info.n_states_in = coupled.n_states();

    StateSpaceModel diag = diagonalize(coupled);
    const double scale = pole_scale(diag);
    const double floor_abs = 1e-6 * std::max(1.0, scale);
    diag = pin_marginal_states(diag, floor_abs);
    diag_info.n_poles = diag.n_states();

    const auto unstable_pred = [&](const PoleDescriptor& pd) {
        return is_unstable_pole(pd.value, scale);
    };
    auto [ut, st] = partition(diag, unstable_pred);
    diag_info.n_unstable = ut.n_states();

    if (ut.n_states() == 0) {
        diag_info.no_op = true;
        diag_info.n_states_out = coupled.n_states();
        return {coupled, diag_info};
    }

    StateSpaceModel stbz = flip_damping(ut);
    auto [rp, pcp_raw] = partition(stbz, [](const PoleDescriptor& pd) {
        return pd.cls == PoleClass::stable_real || pd.cls == PoleClass::unstable_real;
    });
    diag_info.n_real_stabilized = rp.n_states();

    bool completed = false;
    const StateSpaceModel pcp = conjugate_complete(pcp_raw, &completed);
    if (completed) {
        std::cerr << "stabilize: conjugate-completed an unpaired stabilized pole\n";
    }

    const FrfSet h_ut = eval_frf(ut, grid);
    const FrfSet h_rp = eval_frf(rp, grid);
    const FrfSet target = target_frf(h_ut, h_rp);

    // Pair representatives of the stabilized pair model carry the fixed
    // poles and participation factors; LSFD re-estimates the rest.
    const PairStructure ps = pair_structure(pcp);
    const Eigen::Index nm = static_cast<Eigen::Index>(ps.representatives.size());
    VectorXcd poles(nm);
    MatrixXcd factors(nm, pcp.n_inputs());
    for (Eigen::Index r = 0; r < nm; ++r) {
        const Eigen::Index src = ps.representatives[static_cast<std::size_t>(r)];
        poles(r) = pcp.A(src, src);
        factors.row(r) = pcp.B.row(src);
    }

    // Rebuild RCM configuration: corners at a multiple of the fastest model
    // content, damping per the options.
    double max_im = 0.0;
    for (const PoleDescriptor& pd : poles_of(diag)) {
        max_im = std::max(max_im, std::abs(pd.value.imag()));
    }
    const double omega_hi = opts.rcm_freq_factor * std::max(max_im, grid(grid.size() - 1));
    const RcmConfig cfg(opts.omega_lr.value_or(grid(0) / 5.0), opts.xi, omega_hi, opts.xi,
                        omega_hi, opts.xi);

    StateSpaceModel rebuilt = StateSpaceModel::empty(coupled.n_outputs(), coupled.n_inputs(),
                                                     Domain::displacement, "op,stbz");
    if (nm > 0) {
        LsfdProblem problem(target, poles, factors, opts.weighting);
        const LsfdSolution sol = lsfd_solve(problem);
        const ModalModel mm(poles, factors, sol.mode_shapes, sol.lower_residual,
                            sol.upper_residual);
        rebuilt = assemble_full(build_inband(mm), lr_rcm_model(sol.lower_residual, cfg),
                                ur_rcm_model(sol.upper_residual, cfg));
        rebuilt.provenance = "op,stbz";
    }

    StateSpaceModel out = concat_block({st, rebuilt, rp});
    out.provenance = "or,stbz";

    const MatrixXd cb = velocity_feedthrough(out);
    if (max_abs(cb) > 1e-10 * std::max(out.C.norm() * out.B.norm(), 1e-300)) {
        out = impose_newton(out, cfg, &diag_info.newton_applied);
    }

    diag_info.n_states_out = out.n_states();
    diag_info.frf_rel_rms_deviation = rel_rms_deviation(eval_frf(out, grid), eval_frf(diag, grid));
    return {std::move(out), diag_info};
}

}  // namespace ssdss
