#include <doctest.h>

#include "ssdss/bench.hpp"
#include "ssdss/lm_coupling.hpp"
#include "ssdss/model_builder.hpp"
#include "ssdss/ss_analysis.hpp"
#include "pipeline_fixture.hpp"
#include "test_util.hpp"

using namespace ssdss;
using namespace ssdss::testutil;

TEST_SUITE_BEGIN("bench");

TEST_CASE("make_lumped reproduces the textbook SDOF pole") {
    const double wn = 2.0 * M_PI * 10.0;
    const double xi = 0.05;
    const ModalModel mm = make_lumped(sdof(10.0, xi));
    REQUIRE(mm.n_modes() == 1);
    const Complex expected(-xi * wn, wn * std::sqrt(1.0 - xi * xi));
    CHECK(std::abs(mm.poles(0) - expected) < 1e-9 * wn);
}

TEST_CASE("make_lumped rejects overdamped systems on the modal path") {
    MatrixXd m(1, 1), c(1, 1), k(1, 1);
    m << 1.0;
    k << 100.0;
    c << 25.0;  // xi = 1.25
    CHECK_THROWS_AS(make_lumped(LumpedSystem(m, c, k)), ValidationError);
}

TEST_CASE("proportional damping gives a zero velocity feed-through") {
    const ModalModel mm = make_lumped(chain2(true));
    CHECK(max_abs(velocity_feedthrough(build_inband(mm))) < 1e-12);
}

TEST_CASE("every generated modal model matches its inversion oracle") {
    const AssemblyAnalog analog = make_assembly_analog();
    const VectorXd grid = linspace(analog.band_min, analog.band_max, 128);
    // Fixture FRF entries span many decades; measure against the matrix scale.

    const std::vector<Eigen::Index> ifc{0, 1, 2, 3, 4, 5};
    const ModalModel cross = make_lumped(analog.cross_steel_a, ifc);
    CHECK(max_scaled_err(modal_frf(cross, grid), analog.cross_steel_a.frf(grid, ifc)) < 1e-10);

    const ModalModel mount = make_lumped(analog.mount);
    CHECK(max_scaled_err(modal_frf(mount, grid), analog.mount.frf(grid)) < 1e-10);

    std::vector<Eigen::Index> asm_io(12);
    for (Eigen::Index i = 0; i < 12; ++i) asm_io[static_cast<std::size_t>(i)] = i;
    const ModalModel asm_b = make_lumped(analog.assembly_b, asm_io);
    CHECK(max_scaled_err(modal_frf(asm_b, grid), analog.assembly_b.frf(grid, asm_io)) < 1e-10);
}

TEST_CASE("assembly analog FRFs are reciprocal") {
    const AssemblyAnalog analog = make_assembly_analog();
    const VectorXd grid = linspace(analog.band_min, analog.band_max, 32);
    const FrfSet h = analog.assembly_a.frf(grid);
    for (const MatrixXcd& v : h.values) {
        CHECK(max_scaled_err(v.transpose(), v) < 1e-12);
    }
}

TEST_CASE("cross analogs are rigid in band: first elastic mode above 5x band top") {
    const AssemblyAnalog analog = make_assembly_analog();
    for (const LumpedSystem* cross : {&analog.cross_alu_a, &analog.cross_alu_b,
                                      &analog.cross_steel_a, &analog.cross_steel_b}) {
        const VectorXd wn = cross->natural_frequencies();
        REQUIRE(wn.size() == 8);
        // Six suspension modes inside or near the band, then the elastic pair.
        CHECK(wn(5) < 2.0 * analog.band_max);
        CHECK(wn(6) > 5.0 * analog.band_max);
    }
}

TEST_CASE("assembly analog equals the primal assembly of its parts") {
    const AssemblyAnalog analog = make_assembly_analog();
    // Interface DOFs of assembly B carry the summed masses of cross + mount.
    CHECK(analog.assembly_b.mass(0, 0) ==
          doctest::Approx(analog.cross_steel_a.mass(0, 0) + analog.mount.mass(0, 0)));
    // Mount coupling stiffness appears between the two interface sides.
    CHECK(analog.assembly_b.stiffness(0, 6) == doctest::Approx(analog.mount.stiffness(0, 6)));
}

TEST_CASE("perturb at level zero is the exact identity") {
    const ModalModel mm = make_lumped(chain2(false));
    const ModalModel p = perturb(mm, 0.0, 1234);
    CHECK((p.mode_shapes - mm.mode_shapes).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.part_factors - mm.part_factors).cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.poles - mm.poles).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("perturb is seed-deterministic and seed-sensitive") {
    const ModalModel mm = make_lumped(chain2(false));
    const ModalModel a = perturb(mm, 0.01, 42);
    const ModalModel b = perturb(mm, 0.01, 42);
    const ModalModel c = perturb(mm, 0.01, 43);
    CHECK((a.mode_shapes - b.mode_shapes).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.part_factors - b.part_factors).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.mode_shapes - c.mode_shapes).cwiseAbs().maxCoeff() > 0.0);
    CHECK((a.poles - mm.poles).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("1% perturbation reliably destabilizes the coupled assembly") {
    // The seed-sweep experiment behind the stabilizer fixture: decoupling
    // and re-coupling identified models carrying 1% parameter inconsistency
    // yields at least one unstable pole in nearly every draw.
    const PipelineFixture fx;
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const StateSpaceModel coupled = fx.coupled_assembly_b(0.01, seed);
        const double scale = pole_scale(coupled);
        for (const PoleDescriptor& pd : poles_of(coupled)) {
            if (is_unstable_pole(pd.value, scale)) {
                ++hits;
                break;
            }
        }
    }
    CHECK(hits >= 45);
}

TEST_CASE("splitmix64 stream is pinned") {
    std::uint64_t state = 0;
    CHECK(splitmix64_next(state) == 0xE220A8397B1DCDAFULL);
    CHECK(splitmix64_next(state) == 0x6E789E6AA1B965F4ULL);
}

TEST_SUITE_END();
