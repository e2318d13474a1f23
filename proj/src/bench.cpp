#include "ssdss/bench.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <array>
#include <cmath>

namespace ssdss {

namespace {

void check_symmetric(const MatrixXd& m, const char* name) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, max_abs(m))) {
        throw ValidationError(std::string("lumped system: ") + name + " must be symmetric");
    }
}

void check_dofs(const std::vector<Eigen::Index>& dofs, Eigen::Index n) {
    for (Eigen::Index d : dofs) {
        if (d < 0 || d >= n) throw ValidationError("lumped system: DOF index out of range");
    }
}

}  // namespace

LumpedSystem::LumpedSystem(MatrixXd mass_, MatrixXd damping_, MatrixXd stiffness_)
    : mass(std::move(mass_)), damping(std::move(damping_)), stiffness(std::move(stiffness_)) {
    const Eigen::Index n = mass.rows();
    if (mass.cols() != n || damping.rows() != n || damping.cols() != n ||
        stiffness.rows() != n || stiffness.cols() != n) {
        throw ValidationError("lumped system: M, C, K must be square and equally sized");
    }
    check_symmetric(mass, "M");
    check_symmetric(damping, "C");
    check_symmetric(stiffness, "K");
    Eigen::LLT<MatrixXd> llt(mass);
    if (llt.info() != Eigen::Success) {
        throw ValidationError("lumped system: M must be positive definite");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(stiffness, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, es.eigenvalues().maxCoeff())) {
        throw ValidationError("lumped system: K must be positive semidefinite");
    }
}

MatrixXcd LumpedSystem::frf_at(double omega) const {
    MatrixXcd dyn = (-omega * omega) * mass.cast<Complex>() +
                    Complex(0.0, omega) * damping.cast<Complex>() + stiffness.cast<Complex>();
    return dyn.partialPivLu().solve(MatrixXcd::Identity(n_dof(), n_dof()));
}

FrfSet LumpedSystem::frf(const VectorXd& grid) const {
    std::vector<MatrixXcd> values(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        values[static_cast<std::size_t>(f)] = frf_at(grid(f));
    }
    return FrfSet(grid, std::move(values), Domain::displacement);
}

FrfSet LumpedSystem::frf(const VectorXd& grid, const std::vector<Eigen::Index>& io_dofs) const {
    check_dofs(io_dofs, n_dof());
    const Eigen::Index ns = static_cast<Eigen::Index>(io_dofs.size());
    std::vector<MatrixXcd> values(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        const MatrixXcd full = frf_at(grid(f));
        MatrixXcd sel(ns, ns);
        for (Eigen::Index i = 0; i < ns; ++i) {
            for (Eigen::Index j = 0; j < ns; ++j) {
                sel(i, j) = full(io_dofs[static_cast<std::size_t>(i)],
                                 io_dofs[static_cast<std::size_t>(j)]);
            }
        }
        values[static_cast<std::size_t>(f)] = std::move(sel);
    }
    return FrfSet(grid, std::move(values), Domain::displacement);
}

VectorXd LumpedSystem::natural_frequencies() const {
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(stiffness, mass);
    if (es.info() != Eigen::Success) {
        throw NumericalError("lumped system: generalized eigenproblem failed");
    }
    return es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
}

ModalModel make_lumped(const LumpedSystem& sys, const std::vector<Eigen::Index>& io_dofs) {
    const Eigen::Index n = sys.n_dof();
    check_dofs(io_dofs, n);
    const Eigen::Index nio = static_cast<Eigen::Index>(io_dofs.size());

    const Eigen::PartialPivLU<MatrixXd> mlu(sys.mass);
    const MatrixXd m_inv_k = mlu.solve(sys.stiffness);
    const MatrixXd m_inv_c = mlu.solve(sys.damping);

    // Balanced first-order form with velocity states divided by a
    // characteristic frequency; keeps the state-matrix norm near the pole
    // scale so closely spaced low modes stay accurate.
    const double s = std::max(1.0, std::sqrt(m_inv_k.cwiseAbs().rowwise().sum().maxCoeff()));
    MatrixXd a = MatrixXd::Zero(2 * n, 2 * n);
    a.topRightCorner(n, n) = s * MatrixXd::Identity(n, n);
    a.bottomLeftCorner(n, n) = -m_inv_k / s;
    a.bottomRightCorner(n, n) = -m_inv_c;

    Eigen::EigenSolver<MatrixXd> es(a);
    if (es.info() != Eigen::Success) {
        throw NumericalError("make_lumped: eigensolver failed");
    }
    VectorXcd lam = es.eigenvalues();
    MatrixXcd t = es.eigenvectors();

    // One Rayleigh-quotient refinement pass per pair; the raw solver loses a
    // couple of digits on closely spaced suspension modes.
    const MatrixXcd ac = a.cast<Complex>();
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (lam(k).imag() <= 0.0) continue;
        VectorXcd v = t.col(k);
        const MatrixXcd shifted = ac - lam(k) * MatrixXcd::Identity(2 * n, 2 * n);
        VectorXcd w = shifted.partialPivLu().solve(v);
        const double nrm = w.norm();
        if (nrm > 0.0 && w.allFinite()) {
            w /= nrm;
            const Complex mu = w.dot(ac * w);  // Rayleigh quotient, w unit-norm
            // Find the conjugate partner and mirror the refinement.
            for (Eigen::Index j = 0; j < lam.size(); ++j) {
                if (j != k && std::abs(lam(j) - std::conj(lam(k))) <
                                  1e-6 * std::max(1.0, std::abs(lam(k)))) {
                    lam(j) = std::conj(mu);
                    t.col(j) = w.conjugate();
                    break;
                }
            }
            lam(k) = mu;
            t.col(k) = w;
        }
    }

    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (std::abs(lam(k).imag()) <= 1e-9 * std::abs(lam(k))) {
            throw ValidationError(
                "make_lumped: critically damped or overdamped mode at lambda = " +
                std::to_string(lam(k).real()) + "; the modal path needs underdamped modes");
        }
    }

    MatrixXd b_force = MatrixXd::Zero(2 * n, nio);
    const MatrixXd m_inv = mlu.solve(MatrixXd::Identity(n, n));
    for (Eigen::Index j = 0; j < nio; ++j) {
        b_force.col(j).tail(n) = m_inv.col(io_dofs[static_cast<std::size_t>(j)]) / s;
    }
    const MatrixXcd t_inv_b = t.partialPivLu().solve(b_force.cast<Complex>());

    std::vector<Eigen::Index> reps;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        if (lam(k).imag() > 0.0) reps.push_back(k);
    }
    if (static_cast<Eigen::Index>(reps.size()) != n) {
        throw NumericalError("make_lumped: conjugate pairing of the spectrum failed");
    }
    std::sort(reps.begin(), reps.end(), [&](Eigen::Index i, Eigen::Index j) {
        return std::abs(lam(i)) < std::abs(lam(j));
    });

    VectorXcd poles(n);
    MatrixXcd shapes(nio, n);
    MatrixXcd factors(n, nio);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index src = reps[static_cast<std::size_t>(r)];
        poles(r) = lam(src);
        for (Eigen::Index i = 0; i < nio; ++i) {
            shapes(i, r) = t(io_dofs[static_cast<std::size_t>(i)], src);
        }
        factors.row(r) = t_inv_b.row(src);
    }
    return ModalModel(std::move(poles), std::move(factors), std::move(shapes),
                      MatrixXd::Zero(nio, nio), MatrixXd::Zero(nio, nio));
}

ModalModel make_lumped(const LumpedSystem& sys) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(sys.n_dof()));
    for (Eigen::Index i = 0; i < sys.n_dof(); ++i) all[static_cast<std::size_t>(i)] = i;
    return make_lumped(sys, all);
}

ModalModel truncate_to_band(const ModalModel& model, double omega_min, double omega_max) {
    if (!(omega_min > 0.0) || !(omega_max > omega_min)) {
        throw ValidationError("truncate_to_band: need 0 < omega_min < omega_max");
    }
    const Eigen::Index nm = model.n_modes();
    std::vector<Eigen::Index> keep;
    MatrixXd lr = model.lower_residual;
    MatrixXd ur = model.upper_residual;
    for (Eigen::Index r = 0; r < nm; ++r) {
        const double wn = std::abs(model.poles(r));
        const MatrixXcd residue = model.mode_shapes.col(r) * model.part_factors.row(r);
        if (wn < omega_min) {
            lr += 2.0 * (residue * model.poles(r)).real();
        } else if (wn > omega_max) {
            ur += -2.0 * (residue / model.poles(r)).real();
        } else {
            keep.push_back(r);
        }
    }
    const Eigen::Index nk = static_cast<Eigen::Index>(keep.size());
    VectorXcd poles(nk);
    MatrixXcd shapes(model.n_outputs(), nk);
    MatrixXcd factors(nk, model.n_inputs());
    for (Eigen::Index r = 0; r < nk; ++r) {
        poles(r) = model.poles(keep[static_cast<std::size_t>(r)]);
        shapes.col(r) = model.mode_shapes.col(keep[static_cast<std::size_t>(r)]);
        factors.row(r) = model.part_factors.row(keep[static_cast<std::size_t>(r)]);
    }
    return ModalModel(std::move(poles), std::move(factors), std::move(shapes), std::move(lr),
                      std::move(ur));
}

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

double uniform_pm1(std::uint64_t& state) {
    const double u = static_cast<double>(splitmix64_next(state) >> 11) / 9007199254740992.0;
    return 2.0 * u - 1.0;
}

}  // namespace

ModalModel perturb(const ModalModel& model, double rel_level, std::uint64_t seed) {
    if (rel_level < 0.0) throw ValidationError("perturb: rel_level must be >= 0");
    std::uint64_t state = seed;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    auto jitter = [&](MatrixXcd m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            for (Eigen::Index j = 0; j < m.cols(); ++j) {
                const double u1 = uniform_pm1(state);
                const double u2 = uniform_pm1(state);
                m(i, j) *= Complex(1.0 + rel_level * u1 * inv_sqrt2,
                                   rel_level * u2 * inv_sqrt2);
            }
        }
        return m;
    };
    MatrixXcd shapes = jitter(model.mode_shapes);
    MatrixXcd factors = jitter(model.part_factors);
    return ModalModel(model.poles, std::move(factors), std::move(shapes), model.lower_residual,
                      model.upper_residual);
}

namespace {

// Cross analog: six interface masses on individually tuned ground
// spring/damper pairs, weak neighbor springs tying the interface DOFs into
// one connected block, and two pendant internal masses on very stiff
// springs (the out-of-band elastic modes). DOF layout: [ifc 0..5, int 0..1].
struct CrossParams {
    double mass_scale;       // interface mass multiplier
    double stiffness_scale;  // internal spring multiplier
    std::array<double, 6> ground_hz;
    std::array<double, 6> ground_xi;
};

LumpedSystem make_cross(const CrossParams& p) {
    constexpr Eigen::Index kIfc = 6;
    constexpr Eigen::Index kDof = 8;
    const double base_mass[kIfc] = {1.0, 1.1, 0.95, 1.05, 0.9, 1.15};
    const double int_mass[2] = {0.3, 0.35};
    const double elastic_hz[2] = {3200.0, 3600.0};

    MatrixXd m = MatrixXd::Zero(kDof, kDof);
    MatrixXd c = MatrixXd::Zero(kDof, kDof);
    MatrixXd k = MatrixXd::Zero(kDof, kDof);
    for (Eigen::Index i = 0; i < kIfc; ++i) {
        const double mi = p.mass_scale * base_mass[i];
        const double wg = 2.0 * M_PI * p.ground_hz[static_cast<std::size_t>(i)];
        const double kg = wg * wg * mi;
        m(i, i) = mi;
        k(i, i) += kg;
        c(i, i) += 2.0 * p.ground_xi[static_cast<std::size_t>(i)] * std::sqrt(kg * mi);
    }
    // Weak springs between every interface pair: strong enough that no FRF
    // entry collapses below the oracle comparison floor, weak enough to keep
    // six distinct suspension modes.
    for (Eigen::Index i = 0; i < kIfc; ++i) {
        for (Eigen::Index j = i + 1; j < kIfc; ++j) {
            const double kw = 0.12 * std::min(k(i, i), k(j, j)) *
                              (1.0 + 0.05 * static_cast<double>(i + j));
            const double cw = 0.08 * p.mass_scale * (1.0 + 0.1 * static_cast<double>(i + 2 * j));
            k(i, i) += kw;
            k(j, j) += kw;
            k(i, j) -= kw;
            k(j, i) -= kw;
            c(i, i) += cw;
            c(j, j) += cw;
            c(i, j) -= cw;
            c(j, i) -= cw;
        }
    }
    // Pendant internal masses hang off interface DOFs 2 and 4; the pendant
    // spring rate is set from the target elastic frequency on the scaled
    // mass, with a small per-cross variation.
    const Eigen::Index anchor[2] = {2, 4};
    for (int j = 0; j < 2; ++j) {
        const Eigen::Index d = kIfc + j;
        const double mj = p.mass_scale * int_mass[j];
        const double we = 2.0 * M_PI * elastic_hz[j] * p.stiffness_scale;
        const double ke = we * we * mj;
        const double ce = 0.002 * 2.0 * std::sqrt(ke * mj);
        m(d, d) = mj;
        k(d, d) += ke;
        k(anchor[j], anchor[j]) += ke;
        k(d, anchor[j]) -= ke;
        k(anchor[j], d) -= ke;
        c(d, d) += ce;
        c(anchor[j], anchor[j]) += ce;
        c(d, anchor[j]) -= ce;
        c(anchor[j], d) -= ce;
        // Skewed dashpot to a neighbor interface DOF: makes the elastic
        // modes distinctly non-proportional, so band truncation leaves a
        // genuine velocity feed-through.
        const Eigen::Index skew = anchor[j] + 1;
        const double cx = 4.0 * p.mass_scale;
        c(d, d) += cx;
        c(skew, skew) += cx;
        c(d, skew) -= cx;
        c(skew, d) -= cx;
    }
    return LumpedSystem(std::move(m), std::move(c), std::move(k));
}

// Mount analog: twelve light masses, soft spring/damper pairs joining left
// DOF i to right DOF i, weak lateral springs along each face, soft
// grounding. DOF layout: [left 0..5, right 0..5].
LumpedSystem make_mount() {
    constexpr Eigen::Index kDof = 12;
    const double node_mass[6] = {0.08, 0.07, 0.09, 0.075, 0.085, 0.065};
    const double cross_hz[6] = {90.0, 110.0, 135.0, 160.0, 190.0, 220.0};
    const double cross_damp[6] = {8.0, 6.0, 14.0, 10.0, 18.0, 12.0};
    const double ground_k[6] = {25.0, 31.0, 28.0, 35.0, 23.0, 33.0};
    const double ground_c = 0.1;

    MatrixXd m = MatrixXd::Zero(kDof, kDof);
    MatrixXd c = MatrixXd::Zero(kDof, kDof);
    MatrixXd k = MatrixXd::Zero(kDof, kDof);
    for (Eigen::Index i = 0; i < 6; ++i) {
        const double w = 2.0 * M_PI * cross_hz[i];
        const double kc = w * w * 1.0;  // rate sized against ~1 kg cross masses
        const double cc = cross_damp[i];
        const Eigen::Index l = i, r = 6 + i;
        m(l, l) = node_mass[i];
        m(r, r) = node_mass[5 - i];
        k(l, l) += kc + ground_k[i];
        k(r, r) += kc + ground_k[5 - i];
        k(l, r) -= kc;
        k(r, l) -= kc;
        c(l, l) += cc + ground_c;
        c(r, r) += cc + ground_c;
        c(l, r) -= cc;
        c(r, l) -= cc;
    }
    // Weak lateral coupling along each face keeps the FRF matrix dense.
    for (Eigen::Index i = 0; i + 1 < 6; ++i) {
        for (Eigen::Index base : {Eigen::Index(0), Eigen::Index(6)}) {
            const double kw = 900.0 + 120.0 * static_cast<double>(i + base);
            const double cw = 0.05 + 0.008 * static_cast<double>(i);
            k(base + i, base + i) += kw;
            k(base + i + 1, base + i + 1) += kw;
            k(base + i, base + i + 1) -= kw;
            k(base + i + 1, base + i) -= kw;
            c(base + i, base + i) += cw;
            c(base + i + 1, base + i + 1) += cw;
            c(base + i, base + i + 1) -= cw;
            c(base + i + 1, base + i) -= cw;
        }
    }
    return LumpedSystem(std::move(m), std::move(c), std::move(k));
}

// Primal assembly of cross + mount + cross with interface DOFs merged.
// Assembled DOF layout: [cross_a ifc 0..5, cross_b ifc 0..5,
// cross_a int 0..1, cross_b int 0..1].
LumpedSystem assemble(const LumpedSystem& cross_a, const LumpedSystem& mount,
                      const LumpedSystem& cross_b) {
    constexpr Eigen::Index kDof = 16;
    auto map_a = [](Eigen::Index d) { return d < 6 ? d : 12 + (d - 6); };
    auto map_b = [](Eigen::Index d) { return d < 6 ? 6 + d : 14 + (d - 6); };
    auto map_m = [](Eigen::Index d) { return d < 6 ? d : 6 + (d - 6); };

    MatrixXd m = MatrixXd::Zero(kDof, kDof);
    MatrixXd c = MatrixXd::Zero(kDof, kDof);
    MatrixXd k = MatrixXd::Zero(kDof, kDof);
    auto add = [&](const LumpedSystem& sys, auto map) {
        for (Eigen::Index i = 0; i < sys.n_dof(); ++i) {
            for (Eigen::Index j = 0; j < sys.n_dof(); ++j) {
                m(map(i), map(j)) += sys.mass(i, j);
                c(map(i), map(j)) += sys.damping(i, j);
                k(map(i), map(j)) += sys.stiffness(i, j);
            }
        }
    };
    add(cross_a, map_a);
    add(cross_b, map_b);
    add(mount, map_m);
    return LumpedSystem(std::move(m), std::move(c), std::move(k));
}

}  // namespace

AssemblyAnalog make_assembly_analog() {
    const CrossParams alu_a{1.0, 1.0, {25.0, 32.0, 41.0, 53.0, 68.0, 87.0},
                            {0.0020, 0.0013, 0.0025, 0.0015, 0.0030, 0.0018}};
    const CrossParams alu_b{1.05, 1.04, {26.5, 33.5, 43.0, 55.0, 70.0, 90.0},
                            {0.0018, 0.0015, 0.0023, 0.0013, 0.0028, 0.0020}};
    const CrossParams steel_a{2.9, 1.08, {28.0, 36.0, 47.0, 60.0, 76.0, 95.0},
                              {0.0015, 0.0010, 0.0020, 0.0013, 0.0023, 0.0015}};
    const CrossParams steel_b{3.05, 1.12, {29.0, 37.5, 49.0, 62.0, 79.0, 98.0},
                              {0.0013, 0.0015, 0.0018, 0.0010, 0.0025, 0.0013}};

    LumpedSystem cross_alu_a = make_cross(alu_a);
    LumpedSystem cross_alu_b = make_cross(alu_b);
    LumpedSystem cross_steel_a = make_cross(steel_a);
    LumpedSystem cross_steel_b = make_cross(steel_b);
    LumpedSystem mount = make_mount();
    LumpedSystem assembly_a = assemble(cross_alu_a, mount, cross_alu_b);
    LumpedSystem assembly_b = assemble(cross_steel_a, mount, cross_steel_b);

    std::vector<InterfaceMap::Row> dec_rows;
    for (Eigen::Index i = 0; i < 6; ++i) dec_rows.push_back({i, 12 + i});
    for (Eigen::Index i = 0; i < 6; ++i) dec_rows.push_back({6 + i, 18 + i});
    InterfaceMap decouple_map(24, std::move(dec_rows));

    std::vector<InterfaceMap::Row> cpl_rows;
    for (Eigen::Index i = 0; i < 6; ++i) cpl_rows.push_back({i, 6 + i});
    for (Eigen::Index i = 0; i < 6; ++i) cpl_rows.push_back({18 + i, 12 + i});
    InterfaceMap couple_map(24, std::move(cpl_rows));

    return AssemblyAnalog{std::move(cross_alu_a),  std::move(cross_alu_b),
                          std::move(cross_steel_a), std::move(cross_steel_b),
                          std::move(mount),         std::move(assembly_a),
                          std::move(assembly_b),    std::move(decouple_map),
                          std::move(couple_map),    2.0 * M_PI * 20.0,
                          2.0 * M_PI * 500.0};
}

}  // namespace ssdss
