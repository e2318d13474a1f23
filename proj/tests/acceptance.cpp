// Acceptance suite: every pipeline-level requirement checked at its stated
// tolerance, one pass/fail line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <string>

#include "ssdss/bench.hpp"
#include "ssdss/lm_coupling.hpp"
#include "ssdss/model_builder.hpp"
#include "ssdss/ss_analysis.hpp"
#include "ssdss/stabilizer.hpp"
#include "ssdss/time_sim.hpp"
#include "pipeline_fixture.hpp"
#include "test_util.hpp"

using namespace ssdss;
using namespace ssdss::testutil;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %d. %s: %s\n", pass ? "PASS" : "FAIL", index, name.c_str(),
                detail.c_str());
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Newton enforcement on the 6x6 non-proportional fixture.
void criterion_newton() {
    const auto t0 = std::chrono::steady_clock::now();
    const AssemblyAnalog an = make_assembly_analog();
    const std::vector<Eigen::Index> ifc{0, 1, 2, 3, 4, 5};
    const ModalModel mm =
        truncate_to_band(make_lumped(an.cross_steel_a, ifc), an.band_min, an.band_max);
    const RcmConfig cfg = default_rcm_config(an.band_min, an.band_max);  // w_cb = 10 w_max
    const StateSpaceModel full = build_full_model(mm, cfg, /*enforce_newton=*/false);
    const double before = max_abs(velocity_feedthrough(full));
    const StateSpaceModel inl = impose_newton(full, cfg);
    const double after = max_abs(velocity_feedthrough(inl));
    const double elapsed = seconds_since(t0);
    report(1, "Newton enforcement", after <= 1e-10 && elapsed < 1.0,
           "max|CB| " + fmt(before) + " -> " + fmt(after) + " (<= 1e-10), " + fmt(elapsed) +
               " s");
}

// ---------------------------------------------------------------------------
// 2. Velocity FRF of the CB RCM block equals the closed form at 512 points.
void criterion_appendix_identity() {
    const AssemblyAnalog an = make_assembly_analog();
    const std::vector<Eigen::Index> ifc{0, 1, 2, 3, 4, 5};
    const ModalModel mm =
        truncate_to_band(make_lumped(an.cross_steel_a, ifc), an.band_min, an.band_max);
    const StateSpaceModel inband = build_inband(mm);
    const MatrixXd cb = velocity_feedthrough(inband);
    const RcmConfig cfg = default_rcm_config(an.band_min, an.band_max);

    const StateSpaceModel inl = impose_newton(inband, cfg);
    const Eigen::Index ns0 = inband.n_states();
    const Eigen::Index nr = inl.n_states() - ns0;
    const StateSpaceModel block(inl.A.bottomRightCorner(nr, nr), inl.B.bottomRows(nr),
                                inl.C.rightCols(nr), MatrixXcd::Zero(6, 6),
                                Domain::displacement, Representation::diagonal_complex);

    // The block realizes CB minus the sub-tolerance singular values the SVD
    // drop rule removes; the retained content is the negative of the
    // block's own feed-through product.
    const MatrixXd cb_used = MatrixXd(-(block.C * block.B).real());
    if (max_abs(MatrixXd((cb_used - cb).cwiseAbs())) > 1e-10 * std::max(1.0, max_abs(cb))) {
        report(2, "closed-form velocity FRF identity", false,
               "retained CB deviates from C*B beyond the drop tolerance");
        return;
    }

    const VectorXd grid = VectorXd::LinSpaced(512, an.band_min, an.band_max);
    const FrfSet vel = eval_frf(differentiate(block), grid);
    const FrfSet closed = newton_rcm_velocity_frf(cb_used, cfg, grid);
    // Both sides cancel towards DC by construction, so deviations are
    // measured against the feed-through scale where the closed form is
    // small.
    const double cb_scale = max_abs(cb_used);
    double worst = 0.0;
    for (std::size_t f = 0; f < closed.values.size(); ++f) {
        for (Eigen::Index i = 0; i < 6; ++i) {
            for (Eigen::Index j = 0; j < 6; ++j) {
                worst = std::max(worst, std::abs(vel.values[f](i, j) - closed.values[f](i, j)) /
                                            std::max(std::abs(closed.values[f](i, j)),
                                                     1e-4 * cb_scale));
            }
        }
    }
    report(2, "closed-form velocity FRF identity", worst < 1e-10,
           "max rel deviation " + fmt(worst) + " (<= 1e-10) at 512 points");
}

// ---------------------------------------------------------------------------
// 3. Damped vs legacy error laws at equal corner frequency and xi -> 0.
void criterion_method_comparison() {
    MatrixXd cb(1, 1);
    cb << 1.0;
    const double w = 2.0 * M_PI * 500.0;
    const double wc = 2.0 * M_PI * 1.5e4;
    VectorXd grid(1);
    grid << w;

    VectorXcd pole(1);
    pole << Complex(-0.5, 60.0);
    MatrixXcd l(1, 1), psi(1, 1);
    l << Complex(0.5, 0.0);
    psi << Complex(1.0, 1.0);
    const StateSpaceModel host = build_inband(
        ModalModel(pole, l, psi, MatrixXd::Zero(1, 1), MatrixXd::Zero(1, 1)));

    const auto damped_dev = [&](double corner) {
        const RcmConfig cfg(1.0, 0.1, corner, 1e-8, corner, 1e-8);
        const StateSpaceModel inl = impose_newton(host, cfg);
        const Eigen::Index nr = inl.n_states() - host.n_states();
        const StateSpaceModel block(inl.A.bottomRightCorner(nr, nr), inl.B.bottomRows(nr),
                                    inl.C.rightCols(nr), MatrixXcd::Zero(1, 1),
                                    Domain::displacement, Representation::diagonal_complex);
        return std::abs(eval_frf(differentiate(block), grid).values[0](0, 0));
    };
    const auto legacy_dev = [&](double corner) {
        const StateSpaceModel al = impose_newton_legacy(host, corner);
        const Eigen::Index nr = al.n_states() - host.n_states();
        const StateSpaceModel block(al.A.bottomRightCorner(nr, nr), al.B.bottomRows(nr),
                                    al.C.rightCols(nr), MatrixXcd::Zero(1, 1),
                                    Domain::displacement, Representation::diagonal_complex);
        return std::abs(eval_frf(differentiate(block), grid).values[0](0, 0));
    };

    const double ratio = w / wc;
    const double d1 = damped_dev(wc);
    const double l1 = legacy_dev(wc);
    const double growth_d = damped_dev(wc / 2.0) / d1;
    const double growth_l = legacy_dev(wc / 2.0) / l1;
    const bool pass = d1 <= ratio * ratio * 1.01 && l1 >= ratio * 0.99 &&
                      std::abs(growth_d - 4.0) <= 0.2 && std::abs(growth_l - 2.0) <= 0.1;
    report(3, "second- vs first-order error law", pass,
           "damped " + fmt(d1) + " <= " + fmt(ratio * ratio * 1.01) + ", legacy " + fmt(l1) +
               " >= " + fmt(ratio * 0.99) + "; halving grows x" + fmt(growth_d) + " vs x" +
               fmt(growth_l));
}

// ---------------------------------------------------------------------------
// 4. Coupling against the frequency-domain oracle plus the round trip.
void criterion_coupling_oracle() {
    const AssemblyAnalog an = make_assembly_analog();
    const std::vector<Eigen::Index> ifc{0, 1, 2, 3, 4, 5};
    const StateSpaceModel sa = build_inband(make_lumped(an.cross_steel_a, ifc));
    const StateSpaceModel mo = build_inband(make_lumped(an.mount));
    const StateSpaceModel sb = build_inband(make_lumped(an.cross_steel_b, ifc));
    const StateSpaceModel coupled = lm_couple({sa, mo, sb}, an.couple_map);

    const VectorXd grid = VectorXd::LinSpaced(96, an.band_min, an.band_max);
    const FrfSet hc = eval_frf(coupled, grid);
    const FrfSet oracle = dual_assembly_frf(
        block_frf({eval_frf(sa, grid), eval_frf(mo, grid), eval_frf(sb, grid)}), an.couple_map);
    double worst = 0.0;
    for (std::size_t f = 0; f < oracle.values.size(); ++f) {
        const double scale = max_abs(oracle.values[f]);
        for (Eigen::Index i = 0; i < 24; ++i) {
            for (Eigen::Index j = 0; j < 24; ++j) {
                const double mag = std::abs(oracle.values[f](i, j));
                if (mag < 1e-15) continue;
                worst = std::max(worst, std::abs(hc.values[f](i, j) - oracle.values[f](i, j)) /
                                            std::max(mag, 1e-4 * scale));
            }
        }
    }

    // couple(A, B) then decouple(B) restores A at its own outputs.
    const LumpedSystem chain = chain2(true);
    const LumpedSystem extra = sdof(25.0, 0.03, 0.5);
    const StateSpaceModel s_chain = build_inband(make_lumped(chain));
    const StateSpaceModel s_extra = build_inband(make_lumped(extra));
    const StateSpaceModel cpl = lm_couple({s_chain, s_extra}, InterfaceMap(3, {{1, 2}}));
    const StateSpaceModel back = lm_decouple(cpl, {s_extra}, InterfaceMap(4, {{2, 3}}));
    const VectorXd g2 = VectorXd::LinSpaced(48, 1.0, 100.0);
    const FrfSet ha = eval_frf(s_chain, g2);
    const FrfSet hb = eval_frf(back, g2);
    double rt = 0.0;
    for (std::size_t f = 0; f < ha.values.size(); ++f) {
        for (Eigen::Index i = 0; i < 2; ++i) {
            for (Eigen::Index j = 0; j < 2; ++j) {
                rt = std::max(rt, std::abs(hb.values[f](i, j) - ha.values[f](i, j)) /
                                      std::abs(ha.values[f](i, j)));
            }
        }
    }
    report(4, "coupling oracle and round trip", worst < 1e-8 && rt < 1e-6,
           "contract " + fmt(worst) + " (<= 1e-8), round trip " + fmt(rt) + " (<= 1e-6)");
}

// ---------------------------------------------------------------------------
// 5. LSFD exact recovery under all three weightings.
void criterion_lsfd_recovery() {
    VectorXcd poles(3);
    poles << Complex(-1.5, 90.0), Complex(-4.0, 260.0), Complex(-2.2, 410.0);
    MatrixXcd factors(3, 2);
    factors << Complex(0.8, -0.1), Complex(-0.3, 0.6), Complex(1.1, 0.4), Complex(0.2, -0.9),
        Complex(-0.5, 0.3), Complex(0.9, 0.1);
    MatrixXcd shapes(4, 3);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index r = 0; r < 3; ++r) {
            shapes(i, r) = Complex(0.3 + 0.2 * static_cast<double>(i + r),
                                   -0.4 + 0.15 * static_cast<double>(i - r));
        }
    }
    MatrixXd lr(4, 2), ur(4, 2);
    for (Eigen::Index i = 0; i < 4; ++i) {
        for (Eigen::Index j = 0; j < 2; ++j) {
            lr(i, j) = 10.0 + 3.0 * static_cast<double>(i + 2 * j);
            ur(i, j) = (1.0 + static_cast<double>(i * j)) * 1e-4;
        }
    }
    const VectorXd grid = VectorXd::LinSpaced(80, 30.0, 600.0);
    const FrfSet target = modal_frf(ModalModel(poles, factors, shapes, lr, ur), grid);

    double worst = 0.0;
    for (Domain w : {Domain::displacement, Domain::velocity, Domain::acceleration}) {
        const LsfdSolution sol = lsfd_solve(LsfdProblem(target, poles, factors, w));
        worst = std::max(worst, max_rel_err(sol.mode_shapes, shapes));
        worst = std::max(worst,
                         max_rel_err(sol.lower_residual.cast<Complex>(), lr.cast<Complex>()));
        worst = std::max(worst,
                         max_rel_err(sol.upper_residual.cast<Complex>(), ur.cast<Complex>()));
    }
    report(5, "LSFD exact recovery (3 weightings)", worst < 1e-8,
           "max rel parameter error " + fmt(worst) + " (<= 1e-8)");
}

// ---------------------------------------------------------------------------
// 6. Stabilization end to end on the perturbed assembly fixture.
void criterion_stabilize(const PipelineFixture& fx, const StateSpaceModel& coupled,
                         const StabilizeResult& res) {
    const double scale = pole_scale(coupled);
    Eigen::Index n_unstable = 0;
    for (const PoleDescriptor& pd : poles_of(coupled)) {
        if (is_unstable_pole(pd.value, scale)) ++n_unstable;
    }

    double worst_re = -1e300;
    for (const PoleDescriptor& pd : poles_of(res.model)) {
        worst_re = std::max(worst_re, pd.value.real());
    }
    const Eigen::Index added = res.diagnostics.n_states_out - res.diagnostics.n_states_in;
    const Eigen::Index bound = 6 * std::min(res.model.n_outputs(), res.model.n_inputs());

    const bool pass = n_unstable >= 1 && worst_re < 0.0 &&
                      res.diagnostics.frf_rel_rms_deviation <= 0.05 && added <= bound;
    report(6, "stabilization end-to-end", pass,
           std::to_string(res.diagnostics.n_poles) + " poles, " + std::to_string(n_unstable) +
               " unstable; worst Re " + fmt(worst_re) + " (< 0); FRF rel RMS " +
               fmt(res.diagnostics.frf_rel_rms_deviation) + " (<= 0.05); +" +
               std::to_string(added) + " states (<= " + std::to_string(bound) + ")");
}

// ---------------------------------------------------------------------------
// 7. Time-domain simulation of the stabilized and unstable coupled models.
void criterion_time_domain(const PipelineFixture& fx, const StateSpaceModel& coupled,
                           const StabilizeResult& res) {
    double fastest_hz = 0.0;
    for (const PoleDescriptor& pd : poles_of(res.model)) {
        fastest_hz = std::max(fastest_hz, pd.natural_freq / (2.0 * M_PI));
    }
    const double fs = std::ceil(2.5 * fastest_hz / 1000.0) * 1000.0;

    const DiscreteModel dm_stab = foh_discretize(res.model, fs);
    std::vector<Eigen::Index> asm_io(12);
    for (Eigen::Index i = 0; i < 12; ++i) asm_io[static_cast<std::size_t>(i)] = i;
    const ModalModel reference = make_lumped(fx.analog.assembly_b, asm_io);
    const DiscreteModel dm_ref = foh_discretize(to_real_form(build_inband(reference)), fs);

    const double fade = 0.05;
    const VectorXd sweep = sweep_signal(20.0, 500.0, 1.0, fs, fade);
    const Eigen::Index n = sweep.size();
    MatrixXd u_cpl = MatrixXd::Zero(n, 24);
    u_cpl.col(20) = sweep;  // steel cross B, third interface coordinate
    MatrixXd u_ref = MatrixXd::Zero(n, 12);
    u_ref.col(8) = sweep;   // the same drive point on the reference model

    const SimResult r_stab = simulate(dm_stab, u_cpl);
    const SimResult r_ref = simulate(dm_ref, u_ref);
    const SimResult r_unst = simulate(foh_discretize(coupled, fs), u_cpl);

    double num = 0.0, den = 0.0;
    const Eigen::Index lo = static_cast<Eigen::Index>(fade * static_cast<double>(n));
    const Eigen::Index hi = n - lo;
    bool finite = !r_stab.diverged && r_stab.outputs.rows() == n;
    if (finite) {
        for (Eigen::Index k = lo; k < hi; ++k) {
            num += std::pow(r_stab.outputs(k, 2) - r_ref.outputs(k, 2), 2) +
                   std::pow(r_stab.outputs(k, 20) - r_ref.outputs(k, 8), 2);
            den += std::pow(r_ref.outputs(k, 2), 2) + std::pow(r_ref.outputs(k, 8), 2);
        }
    }
    const double rms = finite && den > 0.0 ? std::sqrt(num / den) : 1e300;

    const bool pass = !r_stab.diverged && rms <= 0.05 && r_unst.diverged;
    report(7, "time-domain simulation", pass,
           "fs " + fmt(fs) + " Hz; stabilized diverged=" + (r_stab.diverged ? "yes" : "no") +
               ", RMS vs reference " + fmt(rms) + " (<= 0.05); unstable diverged=" +
               (r_unst.diverged ? "yes" : "no") + " at t=" +
               fmt(static_cast<double>(r_unst.diverged_at) / fs) + " s");
}

// ---------------------------------------------------------------------------
// 8. DC exactness of UR RCMs and proportional-damping nullity on every
//    generated fixture.
void criterion_dc_and_nullity() {
    const AssemblyAnalog an = make_assembly_analog();
    const std::vector<Eigen::Index> ifc{0, 1, 2, 3, 4, 5};
    std::vector<Eigen::Index> asm_io(12);
    for (Eigen::Index i = 0; i < 12; ++i) asm_io[static_cast<std::size_t>(i)] = i;

    double worst_dc = 0.0;
    const auto check_dc = [&](const LumpedSystem& sys, const std::vector<Eigen::Index>& io) {
        const ModalModel mm = truncate_to_band(make_lumped(sys, io), an.band_min, an.band_max);
        if (max_abs(mm.upper_residual) == 0.0) return;
        const RcmSet rcms =
            rcm_params(mm.upper_residual, 10.0 * an.band_max, 0.1, RcmSource::UR);
        MatrixXcd dc = MatrixXcd::Zero(mm.n_outputs(), mm.n_inputs());
        for (Eigen::Index r = 0; r < rcms.n_modes(); ++r) {
            dc += rcms.shapes.col(r) * rcms.factors.row(r) / (-rcms.poles(r));
        }
        // Relative to the residual-matrix scale: fixture UR matrices are
        // rank-deficient and carry sub-scale numerical noise entries.
        const MatrixXd dc_real = 2.0 * dc.real();
        worst_dc = std::max(worst_dc, max_scaled_err(dc_real.cast<Complex>(),
                                                     mm.upper_residual.cast<Complex>()));
    };
    check_dc(an.cross_alu_a, ifc);
    check_dc(an.cross_alu_b, ifc);
    check_dc(an.cross_steel_a, ifc);
    check_dc(an.cross_steel_b, ifc);
    check_dc(an.assembly_a, asm_io);
    check_dc(an.assembly_b, asm_io);

    // Proportional variants of every fixture: the velocity feed-through of
    // the truncated in-band model vanishes.
    double worst_cb = 0.0;
    const auto check_prop = [&](const LumpedSystem& sys, const std::vector<Eigen::Index>& io) {
        const LumpedSystem prop(sys.mass, 0.4 * sys.mass + 2e-5 * sys.stiffness, sys.stiffness);
        const ModalModel mm =
            truncate_to_band(make_lumped(prop, io), an.band_min, an.band_max);
        worst_cb = std::max(worst_cb, max_abs(velocity_feedthrough(build_inband(mm))));
    };
    check_prop(an.cross_alu_a, ifc);
    check_prop(an.cross_steel_a, ifc);
    check_prop(an.mount, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11});
    check_prop(an.assembly_b, asm_io);

    report(8, "UR DC exactness and proportional nullity", worst_dc < 1e-12 && worst_cb < 1e-12,
           "DC rel error " + fmt(worst_dc) + " (<= 1e-12), proportional max|CB| " +
               fmt(worst_cb) + " (<= 1e-12)");
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    std::printf("acceptance suite\n");

    criterion_newton();
    criterion_appendix_identity();
    criterion_method_comparison();
    criterion_coupling_oracle();
    criterion_lsfd_recovery();

    // Criteria 6 and 7 share one seeded fixture run.
    const PipelineFixture fx;
    const StateSpaceModel coupled = fx.coupled_assembly_b(0.005, 1);
    const VectorXd grid = VectorXd::LinSpaced(256, fx.analog.band_min, fx.analog.band_max);
    StabilizeOptions opts;
    opts.rcm_freq_factor = 1.6;  // keeps the rebuild RCMs discretizable
    const StabilizeResult res = stabilize(coupled, grid, opts);
    criterion_stabilize(fx, coupled, res);
    criterion_time_domain(fx, coupled, res);

    criterion_dc_and_nullity();

    std::printf("%s (%d of 8 criteria failed, %.1f s)\n", g_failures == 0 ? "OK" : "FAILURE",
                g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
