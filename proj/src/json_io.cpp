#include "ssdss/json_io.hpp"

#include <fstream>
#include <sstream>

namespace ssdss {

namespace {

constexpr const char* kSchema = "ssdss-v1";
constexpr double kTwoPi = 2.0 * M_PI;

Json complex_matrix_to_json(const MatrixXcd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            row.push_back(Json::array({m(i, j).real(), m(i, j).imag()}));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json real_matrix_to_json(const MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Complex complex_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw ValidationError("expected a complex number as [re, im]");
    }
    return Complex(j[0].get<double>(), j[1].get<double>());
}

MatrixXcd complex_matrix_from_json(const Json& j, const char* field) {
    if (!j.is_array()) throw ValidationError(std::string(field) + ": expected an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = 0;
    if (rows > 0) {
        if (!j[0].is_array()) throw ValidationError(std::string(field) + ": rows must be arrays");
        cols = static_cast<Eigen::Index>(j[0].size());
    }
    MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) {
            throw ValidationError(std::string(field) + ": ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = complex_from_json(j[i][c]);
    }
    return m;
}

MatrixXd real_matrix_from_json(const Json& j, const char* field) {
    if (!j.is_array()) throw ValidationError(std::string(field) + ": expected an array of rows");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = 0;
    if (rows > 0) {
        if (!j[0].is_array()) throw ValidationError(std::string(field) + ": rows must be arrays");
        cols = static_cast<Eigen::Index>(j[0].size());
    }
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) {
            throw ValidationError(std::string(field) + ": ragged rows");
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!j[i][c].is_number()) {
                throw ValidationError(std::string(field) + ": expected real entries");
            }
            m(i, c) = j[i][c].get<double>();
        }
    }
    return m;
}

const Json& require(const Json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw ValidationError(std::string("missing field \"") + field + "\"");
    return *it;
}

void check_kind(const Json& j, const char* kind) {
    if (require(j, "schema").get<std::string>() != kSchema) {
        throw ValidationError("unsupported schema (expected ssdss-v1)");
    }
    if (require(j, "kind").get<std::string>() != kind) {
        throw ValidationError(std::string("expected kind \"") + kind + "\", got \"" +
                              require(j, "kind").get<std::string>() + "\"");
    }
}

}  // namespace

Json to_json(const ModalModel& m) {
    Json j;
    j["schema"] = kSchema;
    j["kind"] = "modal_model";
    j["n_outputs"] = m.n_outputs();
    j["n_inputs"] = m.n_inputs();
    j["n_modes"] = m.n_modes();
    Json poles = Json::array();
    for (Eigen::Index r = 0; r < m.poles.size(); ++r) {
        poles.push_back(Json::array({m.poles(r).real(), m.poles(r).imag()}));
    }
    j["poles_rad_s"] = std::move(poles);
    j["participation_factors"] = complex_matrix_to_json(m.part_factors);
    j["mode_shapes"] = complex_matrix_to_json(m.mode_shapes);
    j["lower_residual"] = real_matrix_to_json(m.lower_residual);
    j["upper_residual"] = real_matrix_to_json(m.upper_residual);
    return j;
}

ModalModel modal_from_json(const Json& j) {
    check_kind(j, "modal_model");
    const Json& jp = require(j, "poles_rad_s");
    VectorXcd poles(static_cast<Eigen::Index>(jp.size()));
    for (Eigen::Index r = 0; r < poles.size(); ++r) poles(r) = complex_from_json(jp[r]);
    return ModalModel(std::move(poles),
                      complex_matrix_from_json(require(j, "participation_factors"),
                                               "participation_factors"),
                      complex_matrix_from_json(require(j, "mode_shapes"), "mode_shapes"),
                      real_matrix_from_json(require(j, "lower_residual"), "lower_residual"),
                      real_matrix_from_json(require(j, "upper_residual"), "upper_residual"));
}

Json to_json(const StateSpaceModel& m) {
    Json j;
    j["schema"] = kSchema;
    j["kind"] = "state_space";
    j["domain"] = to_string(m.domain);
    j["representation"] = to_string(m.representation);
    j["provenance"] = m.provenance;
    j["n_states"] = m.n_states();
    j["n_outputs"] = m.n_outputs();
    j["n_inputs"] = m.n_inputs();
    j["a"] = complex_matrix_to_json(m.A);
    j["b"] = complex_matrix_to_json(m.B);
    j["c"] = complex_matrix_to_json(m.C);
    j["d"] = complex_matrix_to_json(m.D);
    return j;
}

StateSpaceModel state_space_from_json(const Json& j) {
    check_kind(j, "state_space");
    StateSpaceModel m(complex_matrix_from_json(require(j, "a"), "a"),
                      complex_matrix_from_json(require(j, "b"), "b"),
                      complex_matrix_from_json(require(j, "c"), "c"),
                      complex_matrix_from_json(require(j, "d"), "d"),
                      domain_from_string(require(j, "domain").get<std::string>()),
                      representation_from_string(require(j, "representation").get<std::string>()),
                      j.value("provenance", std::string()));
    return m;
}

Json to_json(const FrfSet& f) {
    Json j;
    j["schema"] = kSchema;
    j["kind"] = "frf_set";
    j["domain"] = to_string(f.domain);
    j["n_outputs"] = f.n_outputs();
    j["n_inputs"] = f.n_inputs();
    Json grid = Json::array();
    for (Eigen::Index k = 0; k < f.grid.size(); ++k) grid.push_back(f.grid(k) / kTwoPi);
    j["grid_hz"] = std::move(grid);
    Json values = Json::array();
    for (const MatrixXcd& h : f.values) values.push_back(complex_matrix_to_json(h));
    j["values"] = std::move(values);
    return j;
}

FrfSet frf_from_json(const Json& j) {
    check_kind(j, "frf_set");
    const Json& jg = require(j, "grid_hz");
    VectorXd grid(static_cast<Eigen::Index>(jg.size()));
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
        if (!jg[k].is_number()) throw ValidationError("grid_hz: expected numbers");
        grid(k) = jg[k].get<double>() * kTwoPi;
    }
    const Json& jv = require(j, "values");
    std::vector<MatrixXcd> values;
    values.reserve(jv.size());
    for (const Json& h : jv) values.push_back(complex_matrix_from_json(h, "values"));
    return FrfSet(std::move(grid), std::move(values),
                  domain_from_string(require(j, "domain").get<std::string>()));
}

Json to_json(const InterfaceMap& m) {
    Json j;
    j["schema"] = kSchema;
    j["kind"] = "interface_map";
    j["n_outputs"] = m.n_outputs;
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        Json row;
        row["row"] = r;
        row["plus_output"] = m.rows[r].plus_output;
        row["minus_output"] = m.rows[r].minus_output;
        rows.push_back(std::move(row));
    }
    j["rows"] = std::move(rows);
    return j;
}

InterfaceMap interface_map_from_json(const Json& j) {
    check_kind(j, "interface_map");
    std::vector<InterfaceMap::Row> rows;
    for (const Json& row : require(j, "rows")) {
        rows.push_back({require(row, "plus_output").get<Eigen::Index>(),
                        require(row, "minus_output").get<Eigen::Index>()});
    }
    return InterfaceMap(require(j, "n_outputs").get<Eigen::Index>(), std::move(rows));
}

Json to_json(const RcmConfig& c) {
    Json j;
    j["schema"] = kSchema;
    j["kind"] = "rcm_config";
    j["omega_lr_hz"] = c.omega_lr / kTwoPi;
    j["xi_lr"] = c.xi_lr;
    j["omega_ur_hz"] = c.omega_ur / kTwoPi;
    j["xi_ur"] = c.xi_ur;
    j["omega_cb_hz"] = c.omega_cb / kTwoPi;
    j["xi_cb"] = c.xi_cb;
    return j;
}

RcmConfig rcm_config_from_json(const Json& j) {
    check_kind(j, "rcm_config");
    return RcmConfig(require(j, "omega_lr_hz").get<double>() * kTwoPi,
                     require(j, "xi_lr").get<double>(),
                     require(j, "omega_ur_hz").get<double>() * kTwoPi,
                     require(j, "xi_ur").get<double>(),
                     require(j, "omega_cb_hz").get<double>() * kTwoPi,
                     require(j, "xi_cb").get<double>());
}

Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    Json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("schema")) {
        throw ValidationError(path + ": not an ssdss-v1 document");
    }
    return j;
}

void save_json(const Json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write " + path);
    out << j.dump(2) << "\n";
}

std::string json_kind(const Json& j) { return require(j, "kind").get<std::string>(); }

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << h;
    return os.str();
}

std::string file_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

}  // namespace ssdss
