#include "ssdss/lm_coupling.hpp"

#include <cmath>

#include "ssdss/model_builder.hpp"
#include "ssdss/ss_analysis.hpp"

namespace ssdss {

FrfSet block_frf(const std::vector<FrfSet>& parts) {
    if (parts.empty()) throw ValidationError("block_frf: no FRF sets given");
    const VectorXd& grid = parts.front().grid;
    const Domain dom = parts.front().domain;
    Eigen::Index no = 0, ni = 0;
    for (const FrfSet& p : parts) {
        if (p.grid.size() != grid.size() || (p.grid - grid).cwiseAbs().maxCoeff() != 0.0) {
            throw ValidationError("block_frf: grids differ");
        }
        if (p.domain != dom) throw ValidationError("block_frf: domains differ");
        no += p.n_outputs();
        ni += p.n_inputs();
    }
    std::vector<MatrixXcd> values(static_cast<std::size_t>(grid.size()));
    for (Eigen::Index f = 0; f < grid.size(); ++f) {
        MatrixXcd h = MatrixXcd::Zero(no, ni);
        Eigen::Index ro = 0, co = 0;
        for (const FrfSet& p : parts) {
            h.block(ro, co, p.n_outputs(), p.n_inputs()) = p.values[static_cast<std::size_t>(f)];
            ro += p.n_outputs();
            co += p.n_inputs();
        }
        values[static_cast<std::size_t>(f)] = std::move(h);
    }
    return FrfSet(grid, std::move(values), dom);
}

FrfSet dual_assembly_frf(const FrfSet& frfs, const InterfaceMap& map) {
    if (map.n_outputs != frfs.n_outputs()) {
        throw ValidationError("dual_assembly_frf: interface map size does not match FRF outputs");
    }
    if (frfs.n_outputs() != frfs.n_inputs()) {
        throw ValidationError("dual_assembly_frf: outputs and inputs must be collocated");
    }
    if (map.empty()) return frfs;

    const MatrixXd b = map.matrix();
    std::vector<MatrixXcd> values(frfs.values.size());
    for (Eigen::Index f = 0; f < frfs.grid.size(); ++f) {
        const MatrixXcd& h = frfs.values[static_cast<std::size_t>(f)];
        const MatrixXcd hbt = h * b.transpose().cast<Complex>();
        const MatrixXcd bhbt = b.cast<Complex>() * hbt;
        Eigen::FullPivLU<MatrixXcd> lu(bhbt);
        if (!lu.isInvertible() || lu.rcond() < 1e-12) {
            throw NumericalError("dual_assembly_frf: singular interface matrix at w=" +
                                 std::to_string(frfs.grid(f)) + " rad/s");
        }
        const MatrixXcd bh = b.cast<Complex>() * h;
        values[static_cast<std::size_t>(f)] = h - hbt * lu.solve(bh);
    }
    return FrfSet(frfs.grid, std::move(values), frfs.domain);
}

namespace {

constexpr double kNewtonComplianceTol = 1e-8;

void check_newton_compliance(const StateSpaceModel& m, std::size_t index) {
    const MatrixXd cb = velocity_feedthrough(m);
    if (max_abs(cb) > kNewtonComplianceTol) {
        throw ValidationError("lm_couple: model " + std::to_string(index) +
                              " violates Newton's second law (max |C B| = " +
                              std::to_string(max_abs(cb)) +
                              "); run impose_newton on it first");
    }
}

StateSpaceModel as_real(const StateSpaceModel& m) {
    if (m.representation == Representation::diagonal_complex) return to_real_form(m);
    if (m.is_real()) return m;
    throw ValidationError("lm_couple: models must be real-valued or diagonal-complex");
}

}  // namespace

StateSpaceModel lm_couple(const std::vector<StateSpaceModel>& models, const InterfaceMap& map) {
    if (models.empty()) throw ValidationError("lm_couple: no models given");
    Eigen::Index no_total = 0;
    for (std::size_t k = 0; k < models.size(); ++k) {
        if (models[k].domain != Domain::displacement) {
            throw ValidationError("lm_couple: model " + std::to_string(k) +
                                  " is not a displacement model");
        }
        if (models[k].n_outputs() != models[k].n_inputs()) {
            throw ValidationError("lm_couple: model " + std::to_string(k) +
                                  " must have collocated outputs and inputs");
        }
        check_newton_compliance(models[k], k);
        no_total += models[k].n_outputs();
    }
    if (map.n_outputs != no_total) {
        throw ValidationError("lm_couple: interface map sized for " +
                              std::to_string(map.n_outputs) + " outputs, models expose " +
                              std::to_string(no_total));
    }

    // Concatenate in real form; coupling then stays real and the result can
    // be discretized directly.
    std::vector<StateSpaceModel> real_models;
    real_models.reserve(models.size());
    for (const StateSpaceModel& m : models) real_models.push_back(as_real(m));

    const Eigen::Index ns = [&] {
        Eigen::Index acc = 0;
        for (const StateSpaceModel& m : real_models) acc += m.n_states();
        return acc;
    }();
    MatrixXd a = MatrixXd::Zero(ns, ns);
    MatrixXd b = MatrixXd::Zero(ns, no_total);
    MatrixXd c = MatrixXd::Zero(no_total, ns);
    Eigen::Index sat = 0, oat = 0;
    for (const StateSpaceModel& m : real_models) {
        a.block(sat, sat, m.n_states(), m.n_states()) = m.real_A();
        b.block(sat, oat, m.n_states(), m.n_inputs()) = m.real_B();
        c.block(oat, sat, m.n_outputs(), m.n_states()) = m.real_C();
        sat += m.n_states();
        oat += m.n_outputs();
    }

    if (map.empty()) {
        return StateSpaceModel(a.cast<Complex>(), b.cast<Complex>(), c.cast<Complex>(),
                               MatrixXcd::Zero(no_total, no_total), Domain::displacement,
                               Representation::general, "coupled");
    }

    const MatrixXd bool_map = map.matrix();
    const MatrixXd bc = bool_map * c;           // n_lambda x ns
    const MatrixXd bca = bc * a;                // constraint velocity rows
    const MatrixXd w = bca * b * bool_map.transpose();
    Eigen::FullPivLU<MatrixXd> lu(w);
    if (!lu.isInvertible() || lu.rcond() < 1e-12) {
        throw NumericalError(
            "lm_couple: interface Markov-parameter matrix is singular (rcond < 1e-12)");
    }
    const MatrixXd bbt = b * bool_map.transpose();             // ns x n_lambda
    const MatrixXd a_coupled = a - bbt * lu.solve(bca * a);    // feedback through g-ddot
    const MatrixXd b_coupled = b - bbt * lu.solve(bca * b);

    return StateSpaceModel(a_coupled.cast<Complex>(), b_coupled.cast<Complex>(),
                           c.cast<Complex>(), MatrixXcd::Zero(no_total, no_total),
                           Domain::displacement, Representation::general, "coupled");
}

StateSpaceModel lm_decouple(const StateSpaceModel& assembly,
                            const std::vector<StateSpaceModel>& subtrahends,
                            const InterfaceMap& map) {
    std::vector<StateSpaceModel> stack;
    stack.reserve(subtrahends.size() + 1);
    stack.push_back(assembly);
    for (const StateSpaceModel& s : subtrahends) {
        // Negating B negates the FRF block; the dual assembly then subtracts
        // the subtrahend dynamics.
        stack.emplace_back(s.A, MatrixXcd(-s.B), s.C, s.D, s.domain, s.representation,
                           s.provenance + "-neg");
    }
    StateSpaceModel out = lm_couple(stack, map);
    out.provenance = "decoupled";
    return out;
}

}  // namespace ssdss
