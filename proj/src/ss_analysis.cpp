#include "ssdss/ss_analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssdss {

namespace {

VectorXcd diagonal_poles(const StateSpaceModel& m) { return m.A.diagonal(); }

VectorXcd model_eigenvalues(const StateSpaceModel& m) {
    if (m.representation == Representation::diagonal_complex) return diagonal_poles(m);
    if (m.n_states() == 0) return VectorXcd();
    Eigen::ComplexEigenSolver<MatrixXcd> es(m.A, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NumericalError("eigenvalue computation failed");
    }
    return es.eigenvalues();
}

void check_resonance(const VectorXcd& poles, const VectorXd& grid) {
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        const Complex jw(0.0, grid(f));
        for (Eigen::Index k = 0; k < poles.size(); ++k) {
            const double dist = std::abs(jw - poles(k));
            if (dist <= 1e-12 * std::max(1.0, std::abs(poles(k)))) {
                throw NumericalError("eval_frf: grid point w=" + std::to_string(grid(f)) +
                                     " rad/s coincides with a pole of the model");
            }
        }
    }
}

double feedthrough_tolerance(const StateSpaceModel& m) {
    const double cb_scale = m.C.norm() * m.B.norm();
    return 1e-8 * std::max(1.0, cb_scale);
}

}  // namespace

FrfSet eval_frf(const StateSpaceModel& m, const VectorXd& grid) {
    const Eigen::Index nf = grid.size();
    std::vector<MatrixXcd> values(static_cast<std::size_t>(nf));

    if (m.representation == Representation::diagonal_complex) {
        const VectorXcd lam = diagonal_poles(m);
        check_resonance(lam, grid);
        for (Eigen::Index f = 0; f < nf; ++f) {
            const Complex jw(0.0, grid(f));
            MatrixXcd scaled = m.C;
            for (Eigen::Index k = 0; k < lam.size(); ++k) {
                scaled.col(k) *= 1.0 / (jw - lam(k));
            }
            values[static_cast<std::size_t>(f)] = scaled * m.B + m.D;
        }
    } else {
        check_resonance(model_eigenvalues(m), grid);
        const MatrixXcd eye = MatrixXcd::Identity(m.n_states(), m.n_states());
        for (Eigen::Index f = 0; f < nf; ++f) {
            const Complex jw(0.0, grid(f));
            MatrixXcd x = (jw * eye - m.A).partialPivLu().solve(m.B);
            values[static_cast<std::size_t>(f)] = m.C * x + m.D;
        }
    }

    return FrfSet(grid, std::move(values), m.domain);
}

StateSpaceModel differentiate(const StateSpaceModel& m) {
    if (m.domain == Domain::acceleration) {
        throw ValidationError("differentiate: model is already in the acceleration domain");
    }
    if (max_abs(m.D) > feedthrough_tolerance(m)) {
        throw ValidationError(
            "differentiate: model has a nonzero feed-through; enforce Newton's law first");
    }
    return StateSpaceModel(m.A, m.B, m.C * m.A, m.C * m.B,
                           static_cast<Domain>(static_cast<int>(m.domain) + 1),
                           m.representation == Representation::diagonal_complex
                               ? Representation::diagonal_complex
                               : m.representation,
                           m.provenance);
}

StateSpaceModel integrate(const StateSpaceModel& m) {
    if (m.domain == Domain::displacement) {
        throw ValidationError("integrate: model is already in the displacement domain");
    }
    const Eigen::Index ns = m.n_states();
    MatrixXcd c_int;
    if (m.representation == Representation::diagonal_complex) {
        const VectorXcd lam = diagonal_poles(m);
        for (Eigen::Index k = 0; k < ns; ++k) {
            if (std::abs(lam(k)) <= 1e-14 * std::max(1.0, max_abs(MatrixXcd(m.A)))) {
                throw NumericalError("integrate: model has a pole at the origin");
            }
        }
        c_int = m.C;
        for (Eigen::Index k = 0; k < ns; ++k) c_int.col(k) *= 1.0 / lam(k);
    } else {
        Eigen::PartialPivLU<MatrixXcd> lu_t(MatrixXcd(m.A.transpose()));
        const MatrixXcd c_t = lu_t.solve(MatrixXcd(m.C.transpose())).transpose();
        // Residual check guards against a numerically singular A.
        if (!((c_t * m.A - m.C).norm() <= 1e-8 * std::max(1.0, m.C.norm()))) {
            throw NumericalError("integrate: state matrix is singular (pole at origin)");
        }
        c_int = c_t;
    }
    // Consistency: the feed-through of a differentiated model is C A^-1 B.
    const MatrixXcd residual = m.D - c_int * m.B;
    if (max_abs(residual) > feedthrough_tolerance(m)) {
        throw ValidationError(
            "integrate: feed-through is inconsistent with the state dynamics (D != C A^-1 B)");
    }
    return StateSpaceModel(m.A, m.B, std::move(c_int),
                           MatrixXcd::Zero(m.n_outputs(), m.n_inputs()),
                           static_cast<Domain>(static_cast<int>(m.domain) - 1),
                           m.representation == Representation::diagonal_complex
                               ? Representation::diagonal_complex
                               : m.representation,
                           m.provenance);
}

namespace {

struct EigenBasis {
    VectorXcd values;
    MatrixXcd vectors;
};

// Deterministic phase: rotate each column so its largest-magnitude entry is
// real and positive, then normalize to unit 2-norm.
void canonicalize_columns(MatrixXcd& t) {
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
        Eigen::Index imax = 0;
        t.col(c).cwiseAbs().maxCoeff(&imax);
        const Complex pivot = t(imax, c);
        if (std::abs(pivot) > 0.0) t.col(c) *= std::abs(pivot) / pivot;
        const double nrm = t.col(c).norm();
        if (nrm > 0.0) t.col(c) /= nrm;
    }
}

EigenBasis solve_eigenproblem(const StateSpaceModel& m) {
    const double im_scale = m.A.imag().cwiseAbs().maxCoeff();
    const double scale = std::max(1.0, max_abs(m.A));
    EigenBasis basis;
    if (im_scale <= 1e-14 * scale) {
        Eigen::EigenSolver<MatrixXd> es(m.A.real());
        if (es.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
        basis.values = es.eigenvalues();
        basis.vectors = es.eigenvectors();
    } else {
        Eigen::ComplexEigenSolver<MatrixXcd> es(m.A);
        if (es.info() != Eigen::Success) throw NumericalError("diagonalize: eigensolver failed");
        basis.values = es.eigenvalues();
        basis.vectors = es.eigenvectors();
    }
    return basis;
}

}  // namespace

StateSpaceModel diagonalize(const StateSpaceModel& m) {
    if (m.representation == Representation::diagonal_complex) return m;
    if (m.n_states() == 0) {
        return StateSpaceModel(m.A, m.B, m.C, m.D, m.domain, Representation::diagonal_complex,
                               m.provenance);
    }

    EigenBasis basis = solve_eigenproblem(m);
    const Eigen::Index ns = basis.values.size();

    // Classify real poles, then greedily match conjugate pairs.
    std::vector<bool> is_real(static_cast<std::size_t>(ns), false);
    for (Eigen::Index k = 0; k < ns; ++k) {
        is_real[static_cast<std::size_t>(k)] =
            std::abs(basis.values(k).imag()) <=
            kPoleRealnessTol * std::max(1.0, std::abs(basis.values(k)));
    }
    std::vector<Eigen::Index> reps, partners, reals;
    std::vector<bool> used(static_cast<std::size_t>(ns), false);
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (is_real[static_cast<std::size_t>(k)]) {
            reals.push_back(k);
            used[static_cast<std::size_t>(k)] = true;
        }
    }
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (used[static_cast<std::size_t>(k)] || basis.values(k).imag() <= 0.0) continue;
        Eigen::Index best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < ns; ++j) {
            if (used[static_cast<std::size_t>(j)] || j == k || basis.values(j).imag() > 0.0) {
                continue;
            }
            const double dist = std::abs(std::conj(basis.values(j)) - basis.values(k));
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best < 0 || best_dist > 1e-8 * std::max(1.0, std::abs(basis.values(k)))) {
            throw NumericalError("diagonalize: pole " + std::to_string(basis.values(k).real()) +
                                 (basis.values(k).imag() >= 0 ? "+" : "") +
                                 std::to_string(basis.values(k).imag()) +
                                 "j has no conjugate partner");
        }
        reps.push_back(k);
        partners.push_back(best);
        used[static_cast<std::size_t>(k)] = true;
        used[static_cast<std::size_t>(best)] = true;
    }
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (!used[static_cast<std::size_t>(k)]) {
            throw NumericalError("diagonalize: unmatched eigenvalue with negative imaginary part");
        }
    }

    // Deterministic ordering: pairs by ascending natural frequency, reals by value.
    std::vector<std::size_t> pair_order(reps.size());
    std::iota(pair_order.begin(), pair_order.end(), 0u);
    std::sort(pair_order.begin(), pair_order.end(), [&](std::size_t a, std::size_t b) {
        const Complex la = basis.values(reps[a]), lb = basis.values(reps[b]);
        if (std::abs(la) != std::abs(lb)) return std::abs(la) < std::abs(lb);
        return la.real() < lb.real();
    });
    std::sort(reals.begin(), reals.end(), [&](Eigen::Index a, Eigen::Index b) {
        return basis.values(a).real() < basis.values(b).real();
    });

    const Eigen::Index np = static_cast<Eigen::Index>(reps.size());
    VectorXcd lam(ns);
    MatrixXcd t(ns, ns);
    MatrixXcd vec = basis.vectors;
    canonicalize_columns(vec);
    for (Eigen::Index p = 0; p < np; ++p) {
        const Eigen::Index src = reps[pair_order[static_cast<std::size_t>(p)]];
        const Eigen::Index prt = partners[pair_order[static_cast<std::size_t>(p)]];
        // Exact conjugacy: average the pair and mirror the eigenvector.
        const Complex merged = 0.5 * (basis.values(src) + std::conj(basis.values(prt)));
        lam(p) = merged;
        lam(np + p) = std::conj(merged);
        t.col(p) = vec.col(src);
        t.col(np + p) = vec.col(src).conjugate();
    }
    for (std::size_t r = 0; r < reals.size(); ++r) {
        const Eigen::Index dst = 2 * np + static_cast<Eigen::Index>(r);
        lam(dst) = Complex(basis.values(reals[r]).real(), 0.0);
        t.col(dst) = vec.col(reals[r]);
    }

    Eigen::JacobiSVD<MatrixXcd> svd(t);
    const double cond = svd.singularValues()(0) / svd.singularValues()(ns - 1);
    if (!std::isfinite(cond) || cond > 1e12) {
        // Report the tightest eigenvalue cluster; near-defective matrices come
        // from repeated poles.
        double min_gap = std::numeric_limits<double>::infinity();
        Complex at(0, 0);
        for (Eigen::Index i = 0; i < ns; ++i) {
            for (Eigen::Index j = i + 1; j < ns; ++j) {
                const double gap = std::abs(lam(i) - lam(j));
                if (gap < min_gap) {
                    min_gap = gap;
                    at = lam(i);
                }
            }
        }
        throw NumericalError("diagonalize: near-defective state matrix (cond(T)=" +
                             std::to_string(cond) + ", tightest cluster near " +
                             std::to_string(at.real()) + (at.imag() >= 0 ? "+" : "") +
                             std::to_string(at.imag()) + "j)");
    }

    Eigen::PartialPivLU<MatrixXcd> lu(t);
    MatrixXcd b_new = lu.solve(m.B);
    MatrixXcd c_new = m.C * t;
    // For real-content models, enforce the conjugate structure exactly; LU
    // round-off on ill-conditioned eigenbases would otherwise leak into
    // every pairing-sensitive consumer.
    const bool real_content =
        m.A.imag().cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, max_abs(m.A)) &&
        m.B.imag().cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, max_abs(m.B)) &&
        m.C.imag().cwiseAbs().maxCoeff() <= 1e-14 * std::max(1.0, max_abs(m.C));
    if (real_content) {
        for (Eigen::Index p = 0; p < np; ++p) {
            const Eigen::RowVectorXcd bp =
                0.5 * (b_new.row(p) + b_new.row(np + p).conjugate());
            b_new.row(p) = bp;
            b_new.row(np + p) = bp.conjugate();
            const VectorXcd cp = 0.5 * (c_new.col(p) + c_new.col(np + p).conjugate());
            c_new.col(p) = cp;
            c_new.col(np + p) = cp.conjugate();
        }
        for (std::size_t r = 0; r < reals.size(); ++r) {
            const Eigen::Index dst = 2 * np + static_cast<Eigen::Index>(r);
            b_new.row(dst) = b_new.row(dst).real().cast<Complex>();
            c_new.col(dst) = c_new.col(dst).real().cast<Complex>();
        }
    }
    MatrixXcd a_new = MatrixXcd::Zero(ns, ns);
    a_new.diagonal() = lam;
    return StateSpaceModel(std::move(a_new), std::move(b_new), std::move(c_new), m.D, m.domain,
                           Representation::diagonal_complex, m.provenance);
}

std::pair<StateSpaceModel, StateSpaceModel> partition(
    const StateSpaceModel& m, const std::function<bool(const PoleDescriptor&)>& predicate) {
    if (m.representation != Representation::diagonal_complex) {
        throw ValidationError("partition: model must be in diagonal-complex form");
    }
    const VectorXcd lam = diagonal_poles(m);
    std::vector<Eigen::Index> in, out;
    for (Eigen::Index k = 0; k < lam.size(); ++k) {
        (predicate(pole_params(lam(k))) ? in : out).push_back(k);
    }
    auto build = [&](const std::vector<Eigen::Index>& idx, bool with_d) {
        const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
        MatrixXcd a = MatrixXcd::Zero(n, n);
        MatrixXcd b(n, m.n_inputs());
        MatrixXcd c(m.n_outputs(), n);
        for (Eigen::Index k = 0; k < n; ++k) {
            a(k, k) = lam(idx[static_cast<std::size_t>(k)]);
            b.row(k) = m.B.row(idx[static_cast<std::size_t>(k)]);
            c.col(k) = m.C.col(idx[static_cast<std::size_t>(k)]);
        }
        MatrixXcd d = with_d ? m.D : MatrixXcd::Zero(m.n_outputs(), m.n_inputs());
        return StateSpaceModel(std::move(a), std::move(b), std::move(c), std::move(d), m.domain,
                               Representation::diagonal_complex, m.provenance);
    };
    // The feed-through travels with the first model so the FRF sum is exact.
    return {build(in, true), build(out, false)};
}

StateSpaceModel concat_block(const std::vector<StateSpaceModel>& models) {
    if (models.empty()) throw ValidationError("concat_block: no models given");
    const Eigen::Index no = models.front().n_outputs();
    const Eigen::Index ni = models.front().n_inputs();
    const Domain dom = models.front().domain;
    Eigen::Index ns = 0;
    bool all_diag = true;
    bool all_real = true;
    for (const StateSpaceModel& m : models) {
        if (m.n_outputs() != no || m.n_inputs() != ni) {
            throw ValidationError("concat_block: inconsistent output/input dimensions");
        }
        if (m.domain != dom) throw ValidationError("concat_block: inconsistent domains");
        ns += m.n_states();
        all_diag = all_diag && m.representation == Representation::diagonal_complex;
        all_real = all_real && m.representation == Representation::real_valued;
    }
    MatrixXcd a = MatrixXcd::Zero(ns, ns);
    MatrixXcd b = MatrixXcd::Zero(ns, ni);
    MatrixXcd c = MatrixXcd::Zero(no, ns);
    MatrixXcd d = MatrixXcd::Zero(no, ni);
    Eigen::Index at = 0;
    for (const StateSpaceModel& m : models) {
        const Eigen::Index n = m.n_states();
        a.block(at, at, n, n) = m.A;
        b.middleRows(at, n) = m.B;
        c.middleCols(at, n) = m.C;
        d += m.D;
        at += n;
    }
    const Representation rep = all_diag ? Representation::diagonal_complex
                               : all_real ? Representation::real_valued
                                          : Representation::general;
    return StateSpaceModel(std::move(a), std::move(b), std::move(c), std::move(d), dom, rep);
}

std::vector<PoleDescriptor> poles_of(const StateSpaceModel& m) {
    const VectorXcd lam = model_eigenvalues(m);
    std::vector<PoleDescriptor> out;
    out.reserve(static_cast<std::size_t>(lam.size()));
    for (Eigen::Index k = 0; k < lam.size(); ++k) out.push_back(pole_params(lam(k)));
    return out;
}

bool is_unstable_pole(Complex lambda, double scale) {
    return lambda.real() > 1e-6 * std::max(1.0, scale);
}

double pole_scale(const StateSpaceModel& m) {
    const VectorXcd lam = model_eigenvalues(m);
    return lam.size() == 0 ? 0.0 : lam.cwiseAbs().maxCoeff();
}

PairStructure pair_structure(const StateSpaceModel& m) {
    if (m.representation != Representation::diagonal_complex) {
        throw ValidationError("pair_structure: model must be in diagonal-complex form");
    }
    const VectorXcd lam = diagonal_poles(m);
    const Eigen::Index ns = lam.size();
    PairStructure ps;
    std::vector<bool> used(static_cast<std::size_t>(ns), false);
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (std::abs(lam(k).imag()) <= kPoleRealnessTol * std::max(1.0, std::abs(lam(k)))) {
            ps.reals.push_back(k);
            used[static_cast<std::size_t>(k)] = true;
        }
    }
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (used[static_cast<std::size_t>(k)] || lam(k).imag() <= 0.0) continue;
        Eigen::Index best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < ns; ++j) {
            if (used[static_cast<std::size_t>(j)] || lam(j).imag() > 0.0 ||
                std::abs(lam(j).imag()) <= kPoleRealnessTol * std::max(1.0, std::abs(lam(j)))) {
                continue;
            }
            const double dist = std::abs(std::conj(lam(j)) - lam(k));
            if (dist < best_dist) {
                best_dist = dist;
                best = j;
            }
        }
        if (best < 0 || best_dist > 1e-8 * std::max(1.0, std::abs(lam(k)))) {
            throw NumericalError("pair_structure: pole has no conjugate partner within tolerance");
        }
        ps.representatives.push_back(k);
        ps.partners.push_back(best);
        used[static_cast<std::size_t>(k)] = true;
        used[static_cast<std::size_t>(best)] = true;
    }
    for (Eigen::Index k = 0; k < ns; ++k) {
        if (!used[static_cast<std::size_t>(k)]) {
            throw NumericalError("pair_structure: pole has no conjugate partner within tolerance");
        }
    }
    return ps;
}

}  // namespace ssdss
