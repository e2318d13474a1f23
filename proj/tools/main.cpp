#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include "ssdss/bench.hpp"
#include "ssdss/json_io.hpp"
#include "ssdss/lm_coupling.hpp"
#include "ssdss/model_builder.hpp"
#include "ssdss/ss_analysis.hpp"
#include "ssdss/stabilizer.hpp"
#include "ssdss/time_sim.hpp"

namespace {

using namespace ssdss;

constexpr double kTwoPi = 2.0 * M_PI;

struct Band {
    double f0_hz = 0.0;
    double f1_hz = 0.0;
};

Band parse_band(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw ValidationError("band must be f0:f1 in Hz, got \"" + spec + "\"");
    }
    Band b;
    b.f0_hz = std::stod(spec.substr(0, colon));
    b.f1_hz = std::stod(spec.substr(colon + 1));
    if (!(b.f0_hz > 0.0 && b.f1_hz > b.f0_hz)) {
        throw ValidationError("band must satisfy 0 < f0 < f1");
    }
    return b;
}

VectorXd band_grid(const Band& b, int points) {
    if (points < 2) throw ValidationError("grid needs at least 2 points");
    return VectorXd::LinSpaced(points, kTwoPi * b.f0_hz, kTwoPi * b.f1_hz);
}

Json provenance(const std::vector<std::string>& inputs) {
    Json j = Json::object();
    for (const std::string& path : inputs) {
        j[std::filesystem::path(path).filename().string()] = file_hash(path);
    }
    return j;
}

void write_with_provenance(Json j, const std::vector<std::string>& inputs,
                           const std::string& path) {
    j["inputs"] = provenance(inputs);
    save_json(j, path);
}

// "N poles, M unstable" line plus the optional CSV report.
void report_poles(const StateSpaceModel& m, const std::string& csv_path) {
    const std::vector<PoleDescriptor> pds = poles_of(m);
    const double scale = pole_scale(m);
    Eigen::Index unstable = 0;
    for (const PoleDescriptor& pd : pds) {
        if (is_unstable_pole(pd.value, scale)) ++unstable;
    }
    std::cout << pds.size() << " poles, " << unstable << " of them unstable\n";
    if (csv_path.empty()) return;
    std::ofstream out(csv_path);
    if (!out) throw ValidationError("cannot write " + csv_path);
    out << "re,im,omega_n_rad_s,xi,class\n";
    out << std::setprecision(17);
    for (const PoleDescriptor& pd : pds) {
        out << pd.value.real() << "," << pd.value.imag() << "," << pd.natural_freq << ","
            << pd.damping_ratio << "," << to_string(pd.cls) << "\n";
    }
}

StateSpaceModel load_model(const std::string& path) {
    return state_space_from_json(load_json(path));
}

int cmd_build(const std::string& modal_path, const std::string& out_path,
              const std::string& cfg_path, const std::string& band_spec, int points,
              bool no_newton, bool real_form, const std::string& report_path) {
    const ModalModel modal = modal_from_json(load_json(modal_path));

    std::optional<Band> band;
    if (!band_spec.empty()) band = parse_band(band_spec);
    RcmConfig cfg = [&] {
        if (!cfg_path.empty()) return rcm_config_from_json(load_json(cfg_path));
        if (!band) {
            throw ValidationError("build: provide --rcm-config or --band to derive defaults");
        }
        return default_rcm_config(kTwoPi * band->f0_hz, kTwoPi * band->f1_hz);
    }();
    std::cout << "rcm config: omega_lr_hz=" << cfg.omega_lr / kTwoPi
              << " omega_ur_hz=" << cfg.omega_ur / kTwoPi
              << " omega_cb_hz=" << cfg.omega_cb / kTwoPi << " xi=" << cfg.xi_lr << "/"
              << cfg.xi_ur << "/" << cfg.xi_cb << "\n";

    bool newton_applied = false;
    StateSpaceModel model = build_full_model(modal, cfg, !no_newton, &newton_applied);
    const MatrixXd cb = velocity_feedthrough(model);
    std::cout << "newton " << (no_newton ? "skipped" : newton_applied ? "applied" : "not needed")
              << ", max |C B| = " << max_abs(cb) << "\n";

    if (band) {
        const VectorXd grid = band_grid(*band, points);
        const MatrixXd cb_inband = velocity_feedthrough(build_inband(modal));
        const auto rows = rcm_quality(modal.lower_residual, modal.upper_residual, cb_inband,
                                      cfg, grid);
        double worst_ur = 0.0, worst_lr = 0.0, worst_cb = 0.0;
        for (const RcmQualityRow& r : rows) {
            if (!std::isnan(r.rel_dev_ur)) worst_ur = std::max(worst_ur, r.rel_dev_ur);
            if (!std::isnan(r.rel_dev_lr)) worst_lr = std::max(worst_lr, r.rel_dev_lr);
            if (!std::isnan(r.rel_dev_cb)) worst_cb = std::max(worst_cb, r.rel_dev_cb);
        }
        std::cout << "rcm quality over band: UR " << worst_ur << ", LR " << worst_lr << ", CB "
                  << worst_cb << "\n";
        if (std::max({worst_ur, worst_lr, worst_cb}) > 0.01) {
            std::cerr << "warning: residual compensation deviates more than 1% in band; "
                         "raise the RCM frequencies\n";
        }
        if (!report_path.empty()) {
            std::ofstream out(report_path);
            if (!out) throw ValidationError("cannot write " + report_path);
            out << "omega_hz,max_rel_dev_ur,max_rel_dev_lr,max_rel_dev_cb\n";
            out << std::setprecision(17);
            for (const RcmQualityRow& r : rows) {
                out << r.omega / kTwoPi << "," << r.rel_dev_ur << "," << r.rel_dev_lr << ","
                    << r.rel_dev_cb << "\n";
            }
        }
    }

    if (real_form) model = to_real_form(model);
    write_with_provenance(to_json(model), {modal_path}, out_path);
    std::cout << "wrote " << out_path << " (" << model.n_states() << " states)\n";
    return 0;
}

int cmd_couple(const std::vector<std::string>& model_paths, const std::string& map_path,
               const std::string& out_path, const std::string& poles_csv, bool decouple,
               Eigen::Index keep) {
    const InterfaceMap map = interface_map_from_json(load_json(map_path));
    std::vector<StateSpaceModel> models;
    models.reserve(model_paths.size());
    for (const std::string& p : model_paths) models.push_back(load_model(p));

    StateSpaceModel out = [&] {
        if (!decouple) return lm_couple(models, map);
        if (models.empty()) throw ValidationError("decouple: no assembly model given");
        const StateSpaceModel assembly = models.front();
        models.erase(models.begin());
        return lm_decouple(assembly, models, map);
    }();

    if (keep > 0) {
        if (keep > out.n_outputs()) throw ValidationError("--keep exceeds output count");
        out = StateSpaceModel(out.A, out.B.leftCols(keep), out.C.topRows(keep),
                              MatrixXcd::Zero(keep, keep), out.domain, out.representation,
                              out.provenance);
    }

    report_poles(out, poles_csv);
    std::vector<std::string> inputs = model_paths;
    inputs.push_back(map_path);
    write_with_provenance(to_json(out), inputs, out_path);
    std::cout << "wrote " << out_path << " (" << out.n_states() << " states)\n";
    return 0;
}

int cmd_stabilize(const std::string& model_path, const std::string& out_path,
                  const std::string& band_spec, int points, const std::string& diag_path,
                  const std::string& weighting, double rcm_factor, double xi) {
    const StateSpaceModel coupled = load_model(model_path);
    const Band band = parse_band(band_spec);
    StabilizeOptions opts;
    opts.weighting = domain_from_string(weighting);
    opts.rcm_freq_factor = rcm_factor;
    opts.xi = xi;
    const StabilizeResult res = stabilize(coupled, band_grid(band, points), opts);

    const Eigen::Index added = res.diagnostics.n_states_out - res.diagnostics.n_states_in;
    const Eigen::Index bound = 6 * std::min(res.model.n_outputs(), res.model.n_inputs());
    if (res.diagnostics.no_op) {
        std::cout << "model already stable; returned unchanged\n";
    }
    std::cout << res.diagnostics.n_poles << " poles, " << res.diagnostics.n_unstable
              << " of them unstable, " << res.diagnostics.n_real_stabilized
              << " stabilized real\n";
    std::cout << "+" << added << " states (<= " << bound << " = 6*min(no,ni)), frf rel RMS "
              << "deviation " << res.diagnostics.frf_rel_rms_deviation << "\n";

    if (!diag_path.empty()) {
        Json d;
        d["schema"] = "ssdss-v1";
        d["kind"] = "stabilize_diagnostics";
        d["n_poles"] = res.diagnostics.n_poles;
        d["n_unstable"] = res.diagnostics.n_unstable;
        d["n_real_stabilized"] = res.diagnostics.n_real_stabilized;
        d["frf_rel_rms_deviation"] = res.diagnostics.frf_rel_rms_deviation;
        d["n_states_in"] = res.diagnostics.n_states_in;
        d["n_states_out"] = res.diagnostics.n_states_out;
        d["no_op"] = res.diagnostics.no_op;
        d["newton_applied"] = res.diagnostics.newton_applied;
        save_json(d, diag_path);
    }
    write_with_provenance(to_json(res.model), {model_path}, out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int cmd_simulate(const std::string& model_path, double fs_hz, const std::string& sweep_spec,
                 double fade, int input_channel, const std::string& out_path) {
    const StateSpaceModel model = load_model(model_path);
    const auto c1 = sweep_spec.find(':');
    const auto c2 = sweep_spec.find(':', c1 == std::string::npos ? 0 : c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw ValidationError("sweep must be f0:f1:duration, got \"" + sweep_spec + "\"");
    }
    const double f0 = std::stod(sweep_spec.substr(0, c1));
    const double f1 = std::stod(sweep_spec.substr(c1 + 1, c2 - c1 - 1));
    const double duration = std::stod(sweep_spec.substr(c2 + 1));
    if (input_channel < 0 || input_channel >= model.n_inputs()) {
        throw ValidationError("input channel out of range");
    }

    const DiscreteModel dm = foh_discretize(model, fs_hz);
    if (dm.rate_warning) {
        std::cerr << "warning: fs below twice the fastest natural frequency\n";
    }
    const VectorXd sweep = sweep_signal(f0, f1, duration, fs_hz, fade);
    MatrixXd u = MatrixXd::Zero(sweep.size(), model.n_inputs());
    u.col(input_channel) = sweep;
    const SimResult res = simulate(dm, u);

    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write " + out_path);
    out << "t,u_" << input_channel;
    for (Eigen::Index k = 0; k < model.n_outputs(); ++k) out << ",y_" << k;
    out << "\n" << std::setprecision(17);
    for (Eigen::Index k = 0; k < res.outputs.rows(); ++k) {
        out << static_cast<double>(k) / fs_hz << "," << u(k, input_channel);
        for (Eigen::Index j = 0; j < res.outputs.cols(); ++j) out << "," << res.outputs(k, j);
        out << "\n";
    }
    std::cout << "wrote " << out_path << " (" << res.outputs.rows() << " samples)\n";
    if (res.diverged) {
        std::cerr << "response diverged at sample " << res.diverged_at << " (t="
                  << static_cast<double>(res.diverged_at) / fs_hz << " s)\n";
        return 4;
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& out_path,
                const std::string& band_spec, int points, const std::string& entry_spec,
                double tol) {
    if (paths.size() < 2) throw ValidationError("compare needs at least two sources");

    // The grid comes from the first FRF-set source, or from --band.
    std::optional<VectorXd> grid;
    std::vector<Json> docs;
    for (const std::string& p : paths) docs.push_back(load_json(p));
    for (const Json& d : docs) {
        if (json_kind(d) == "frf_set") {
            grid = frf_from_json(d).grid;
            break;
        }
    }
    if (!grid) {
        if (band_spec.empty()) {
            throw ValidationError("compare: no FRF source present; provide --band");
        }
        grid = band_grid(parse_band(band_spec), points);
    }

    std::vector<FrfSet> sources;
    for (std::size_t k = 0; k < docs.size(); ++k) {
        const std::string kind = json_kind(docs[k]);
        if (kind == "frf_set") {
            FrfSet f = frf_from_json(docs[k]);
            if (f.grid.size() != grid->size() ||
                (f.grid - *grid).cwiseAbs().maxCoeff() > 1e-9 * grid->maxCoeff()) {
                throw ValidationError(paths[k] + ": grid differs from the comparison grid");
            }
            sources.push_back(std::move(f));
        } else if (kind == "state_space") {
            sources.push_back(eval_frf(state_space_from_json(docs[k]), *grid));
        } else if (kind == "modal_model") {
            sources.push_back(modal_frf(modal_from_json(docs[k]), *grid));
        } else {
            throw ValidationError(paths[k] + ": cannot compare a \"" + kind + "\" document");
        }
    }
    const Eigen::Index no = sources.front().n_outputs();
    const Eigen::Index ni = sources.front().n_inputs();
    for (std::size_t k = 1; k < sources.size(); ++k) {
        if (sources[k].n_outputs() != no || sources[k].n_inputs() != ni) {
            throw ValidationError(paths[k] + ": dimensions differ from the first source");
        }
    }

    const auto comma = entry_spec.find(',');
    if (comma == std::string::npos) throw ValidationError("entry must be row,col");
    const Eigen::Index row = std::stol(entry_spec.substr(0, comma));
    const Eigen::Index col = std::stol(entry_spec.substr(comma + 1));
    if (row < 0 || row >= no || col < 0 || col >= ni) {
        throw ValidationError("entry out of range");
    }

    std::ofstream out(out_path);
    if (!out) throw ValidationError("cannot write " + out_path);
    out << "f_hz";
    for (std::size_t k = 0; k < sources.size(); ++k) {
        out << ",src_" << k << "_mag,src_" << k << "_phase_deg";
    }
    out << ",reldev\n" << std::setprecision(17);
    double worst = 0.0;
    for (Eigen::Index f = 0; f < grid->size(); ++f) {
        out << (*grid)(f) / kTwoPi;
        const Complex ref = sources.front().values[static_cast<std::size_t>(f)](row, col);
        double dev = 0.0;
        for (std::size_t k = 0; k < sources.size(); ++k) {
            const Complex v = sources[k].values[static_cast<std::size_t>(f)](row, col);
            out << "," << std::abs(v) << "," << std::arg(v) * 180.0 / M_PI;
            if (k > 0) dev = std::max(dev, std::abs(v - ref) / std::max(std::abs(ref), 1e-300));
        }
        out << "," << dev << "\n";
        worst = std::max(worst, dev);
    }
    std::cout << "wrote " << out_path << "; max rel deviation " << worst << "\n";
    if (tol > 0.0 && worst > tol) {
        std::cerr << "deviation exceeds --tol " << tol << "\n";
        return 1;
    }
    return 0;
}

int cmd_bench(const std::string& out_dir, int points, double perturb_level,
              std::uint64_t seed) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const AssemblyAnalog an = make_assembly_analog();
    const std::vector<Eigen::Index> ifc{0, 1, 2, 3, 4, 5};
    std::vector<Eigen::Index> asm_io(12);
    for (Eigen::Index i = 0; i < 12; ++i) asm_io[static_cast<std::size_t>(i)] = i;

    const auto identified = [&](const LumpedSystem& sys, const std::vector<Eigen::Index>& io,
                                std::uint64_t stream) {
        ModalModel m = truncate_to_band(make_lumped(sys, io), an.band_min, an.band_max);
        if (perturb_level > 0.0) m = perturb(m, perturb_level, seed * 7 + stream);
        return m;
    };
    const auto save = [&](const Json& j, const std::string& name) {
        save_json(j, (fs::path(out_dir) / name).string());
    };

    save(to_json(identified(an.cross_alu_a, ifc, 1)), "cross_alu_a.modal.json");
    save(to_json(identified(an.cross_alu_b, ifc, 2)), "cross_alu_b.modal.json");
    save(to_json(identified(an.cross_steel_a, ifc, 3)), "cross_steel_a.modal.json");
    save(to_json(identified(an.cross_steel_b, ifc, 4)), "cross_steel_b.modal.json");
    save(to_json(identified(an.assembly_a, asm_io, 5)), "assembly_a.modal.json");
    save(to_json(make_lumped(an.assembly_b, asm_io)), "assembly_b_reference.modal.json");
    save(to_json(an.decouple_map), "decouple_map.json");
    save(to_json(an.couple_map), "couple_map.json");
    // Wide corners (30x the band top, lower corner at band_min/200) keep the
    // residual compensation inside 1% across the band.
    save(to_json(RcmConfig(an.band_min / 200.0, 0.1, 30.0 * an.band_max, 0.1,
                           30.0 * an.band_max, 0.1)),
         "rcm_config.json");

    const VectorXd grid = VectorXd::LinSpaced(points, an.band_min, an.band_max);
    save(to_json(an.assembly_b.frf(grid, asm_io)), "assembly_b_oracle.frf.json");
    save(to_json(an.mount.frf(grid)), "mount_oracle.frf.json");

    std::cout << "wrote fixtures to " << out_dir << " (band "
              << an.band_min / kTwoPi << "-" << an.band_max / kTwoPi << " Hz, perturbation "
              << perturb_level << ", seed " << seed << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ssdss - state-space dynamic substructuring toolkit"};
    app.require_subcommand(1);

    std::string modal_path, out_path, cfg_path, band_spec, report_path, diag_path;
    std::string map_path, weighting = "acceleration", entry_spec = "0,0", sweep_spec;
    std::vector<std::string> model_paths;
    int points = 256, input_channel = 0;
    bool no_newton = false, real_form = false;
    double rcm_factor = 5.0, xi = 0.1, fs_hz = 0.0, fade = 0.05, tol = 0.0;
    double perturb_level = 0.0;
    std::uint64_t seed = 1;
    Eigen::Index keep = 0;

    CLI::App* build = app.add_subcommand("build", "modal parameters -> state-space model");
    build->add_option("modal", modal_path, "modal model JSON")->required();
    build->add_option("-o,--out", out_path, "output model JSON")->required();
    build->add_option("--rcm-config", cfg_path, "RCM configuration JSON");
    build->add_option("--band", band_spec, "band f0:f1 in Hz (derives RCM defaults)");
    build->add_option("--points", points, "grid points for diagnostics");
    build->add_flag("--no-newton", no_newton, "skip Newton's-law enforcement");
    build->add_flag("--real-form", real_form, "emit the real-valued similarity form");
    build->add_option("--rcm-report", report_path, "write RCM quality CSV");

    CLI::App* couple = app.add_subcommand("couple", "couple displacement models");
    couple->add_option("models", model_paths, "component model JSONs")->required();
    couple->add_option("--map", map_path, "interface map JSON")->required();
    couple->add_option("-o,--out", out_path, "output model JSON")->required();
    couple->add_option("--poles-report", report_path, "write pole CSV");
    couple->add_option("--keep", keep, "retain only the first N collocated outputs/inputs");

    CLI::App* decouple = app.add_subcommand("decouple", "subtract substructures from an assembly");
    decouple->add_option("models", model_paths, "assembly then subtrahend JSONs")->required();
    decouple->add_option("--map", map_path, "interface map JSON")->required();
    decouple->add_option("-o,--out", out_path, "output model JSON")->required();
    decouple->add_option("--poles-report", report_path, "write pole CSV");
    decouple->add_option("--keep", keep, "retain only the first N collocated outputs/inputs");

    CLI::App* stab = app.add_subcommand("stabilize", "flip unstable poles and re-estimate");
    stab->add_option("model", modal_path, "coupled model JSON")->required();
    stab->add_option("-o,--out", out_path, "output model JSON")->required();
    stab->add_option("--band", band_spec, "band f0:f1 in Hz")->required();
    stab->add_option("--points", points, "grid points");
    stab->add_option("--diagnostics", diag_path, "write diagnostics JSON");
    stab->add_option("--weighting", weighting, "LSFD weighting domain");
    stab->add_option("--rcm-factor", rcm_factor, "rebuild RCM frequency factor");
    stab->add_option("--xi", xi, "rebuild RCM damping ratio");

    CLI::App* sim = app.add_subcommand("simulate", "FOH discretization + sweep response");
    sim->add_option("--model", modal_path, "model JSON")->required();
    sim->add_option("--fs-hz", fs_hz, "sampling frequency")->required();
    sim->add_option("--sweep", sweep_spec, "sweep f0:f1:duration")->required();
    sim->add_option("--fade", fade, "fade fraction per side");
    sim->add_option("--input", input_channel, "input channel index");
    sim->add_option("--out", out_path, "response CSV")->required();

    CLI::App* cmp = app.add_subcommand("compare", "tabulate FRF sources against each other");
    cmp->add_option("sources", model_paths, "FRF/model/modal JSONs")->required();
    cmp->add_option("-o,--out", out_path, "comparison CSV")->required();
    cmp->add_option("--band", band_spec, "band f0:f1 in Hz when no FRF source is given");
    cmp->add_option("--points", points, "grid points");
    cmp->add_option("--entry", entry_spec, "output,input entry to tabulate");
    cmp->add_option("--tol", tol, "fail when the max relative deviation exceeds this");

    CLI::App* bench = app.add_subcommand("bench", "synthetic fixture export");
    CLI::App* bench_export = bench->add_subcommand("export", "write fixtures as ssdss-v1 JSON");
    bench_export->add_option("-o,--out", out_path, "output directory")->required();
    bench_export->add_option("--points", points, "oracle FRF grid points");
    bench_export->add_option("--perturb", perturb_level, "perturbation level for identifieds");
    bench_export->add_option("--seed", seed, "perturbation seed");

    CLI::App* poles = app.add_subcommand("poles", "pole report for a model");
    poles->add_option("model", modal_path, "model JSON")->required();
    poles->add_option("-o,--out", report_path, "pole CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (build->parsed()) {
            return cmd_build(modal_path, out_path, cfg_path, band_spec, points, no_newton,
                             real_form, report_path);
        }
        if (couple->parsed()) {
            return cmd_couple(model_paths, map_path, out_path, report_path, false, keep);
        }
        if (decouple->parsed()) {
            return cmd_couple(model_paths, map_path, out_path, report_path, true, keep);
        }
        if (stab->parsed()) {
            return cmd_stabilize(modal_path, out_path, band_spec, points, diag_path, weighting,
                                 rcm_factor, xi);
        }
        if (sim->parsed()) {
            return cmd_simulate(modal_path, fs_hz, sweep_spec, fade, input_channel, out_path);
        }
        if (cmp->parsed()) {
            return cmd_compare(model_paths, out_path, band_spec, points, entry_spec, tol);
        }
        if (bench->parsed()) {
            if (!bench_export->parsed()) throw ValidationError("bench: unknown action");
            return cmd_bench(out_path, points, perturb_level, seed);
        }
        if (poles->parsed()) {
            report_poles(load_model(modal_path), report_path);
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
