#include <doctest.h>

#include "ssdss/bench.hpp"
#include "ssdss/json_io.hpp"
#include "ssdss/model_builder.hpp"
#include "test_util.hpp"

using namespace ssdss;
using namespace ssdss::testutil;

TEST_SUITE_BEGIN("json-io");

TEST_CASE("modal model survives a JSON round trip bit-exactly") {
    const ModalModel mm = make_lumped(chain2(false));
    const Json j = to_json(mm);
    CHECK(j.at("schema") == "ssdss-v1");
    CHECK(j.at("kind") == "modal_model");
    const ModalModel back = modal_from_json(j);
    CHECK((back.poles - mm.poles).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.part_factors - mm.part_factors).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.mode_shapes - mm.mode_shapes).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("state-space model survives a JSON round trip") {
    const ModalModel mm = truncate_to_band(make_lumped(chain2(false)), 1.0, 100.0);
    const StateSpaceModel m = build_full_model(mm, default_rcm_config(1.0, 100.0));
    const Json j = to_json(m);
    const StateSpaceModel back = state_space_from_json(j);
    CHECK(back.domain == m.domain);
    CHECK(back.representation == m.representation);
    CHECK(back.provenance == m.provenance);
    CHECK((back.A - m.A).norm() == 0.0);
    CHECK((back.B - m.B).norm() == 0.0);
    CHECK((back.C - m.C).norm() == 0.0);
}

TEST_CASE("frf set stores a Hz grid") {
    const LumpedSystem sys = chain2(true);
    const VectorXd grid = linspace(2.0 * M_PI * 5.0, 2.0 * M_PI * 50.0, 8);
    const FrfSet h = sys.frf(grid);
    const Json j = to_json(h);
    CHECK(j.at("grid_hz")[0].get<double>() == doctest::Approx(5.0).epsilon(1e-14));
    const FrfSet back = frf_from_json(j);
    CHECK(back.domain == h.domain);
    CHECK((back.grid - h.grid).cwiseAbs().maxCoeff() <= 1e-12 * h.grid.maxCoeff());
    CHECK(max_rel_err(back, h) < 1e-14);
}

TEST_CASE("interface map and rcm config round trip") {
    const InterfaceMap map(6, {{0, 3}, {2, 5}});
    const InterfaceMap back = interface_map_from_json(to_json(map));
    CHECK(back.n_outputs == 6);
    REQUIRE(back.rows.size() == 2);
    CHECK(back.rows[1].plus_output == 2);
    CHECK(back.rows[1].minus_output == 5);

    const RcmConfig cfg(2.0 * M_PI * 0.1, 0.1, 2.0 * M_PI * 1.5e4, 0.1, 2.0 * M_PI * 1.5e4, 0.12);
    const Json j = to_json(cfg);
    CHECK(j.at("omega_ur_hz").get<double>() == doctest::Approx(1.5e4).epsilon(1e-14));
    const RcmConfig back_cfg = rcm_config_from_json(j);
    CHECK(back_cfg.omega_cb == doctest::Approx(cfg.omega_cb).epsilon(1e-14));
    CHECK(back_cfg.xi_cb == 0.12);
}

TEST_CASE("schema violations are rejected with context") {
    Json j = to_json(InterfaceMap(2, {{0, 1}}));
    j["kind"] = "modal_model";
    CHECK_THROWS_AS(modal_from_json(j), ValidationError);  // missing fields
    j["kind"] = "interface_map";
    j["schema"] = "other";
    CHECK_THROWS_AS(interface_map_from_json(j), ValidationError);

    Json ss = to_json(StateSpaceModel::empty(1, 1, Domain::displacement));
    ss["domain"] = "position";
    CHECK_THROWS_AS(state_space_from_json(ss), ValidationError);

    Json mm = to_json(make_lumped(sdof(10.0, 0.05)));
    mm["mode_shapes"][0] = Json::array({1.0});  // not an [re, im] pair row
    CHECK_THROWS_AS(modal_from_json(mm), ValidationError);
}

TEST_CASE("dumping is deterministic") {
    const ModalModel mm = make_lumped(chain2(false));
    CHECK(to_json(mm).dump(2) == to_json(mm).dump(2));
}

TEST_CASE("fnv1a hash is pinned") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(fnv1a_hex("hello") == fnv1a_hex("hello"));
    CHECK(fnv1a_hex("hello") != fnv1a_hex("hellp"));
}

TEST_SUITE_END();
