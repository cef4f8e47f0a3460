#include "doctest.h"
#include "support.hpp"

#include "optocool/error.hpp"
#include "optocool/params.hpp"

using namespace optocool;

TEST_CASE("mode quantities match extended-precision values") {
  const auto q = derive_mode_quantities(test::membrane());
  CHECK_REL(q.x_zpf, 5.6812836699679546e-15, 1e-12);
  CHECK_REL(q.q_factor, 144444444.44444444, 1e-12);
  CHECK_REL(q.n_th, 4808450.5698679776, 1e-12);
  CHECK_REL(hertz(q.gamma_decoherence), 43276.055128811798, 1e-12);
}

TEST_CASE("bath occupancy round trip through temperature") {
  const auto m = test::membrane().with_bath_occupancy(1e4);
  CHECK_REL(bath_occupancy(m), 1e4, 1e-13);
  CHECK(m.omega_m == test::membrane().omega_m);
}

TEST_CASE("thermal force noise is 4 m gamma kT") {
  const auto m = test::membrane();
  CHECK_REL(thermal_force_psd(m), 4.0 * m.m_eff * m.gamma_m * constants::k_boltzmann * m.temperature, 1e-15);
}

TEST_CASE("invalid modes are rejected") {
  auto m = test::membrane();
  m.omega_m = -1.0;
  CHECK_THROWS_AS(m.validate(), DomainError);
  m = test::membrane();
  m.m_eff = 0.0;
  CHECK_THROWS_AS(derive_mode_quantities(m), DomainError);
  m = test::membrane();
  m.temperature = std::nan("");
  CHECK_THROWS_AS(m.validate(), DomainError);
}

TEST_CASE("intracavity photons of the detuned cooling beam") {
  const OpticalBeam b{780e-6, angular(-80e6), 0.0, BeamRole::cooling};
  CHECK_REL(intracavity_photons(test::cavity(), b), 8353511.9274356389, 1e-12);
}

TEST_CASE("optimal vacuum coupling") {
  // Mass chosen so that x_zpf is exactly 5.7 fm.
  auto m = test::membrane();
  m.m_eff = constants::hbar / (2.0 * m.omega_m * 5.7e-15 * 5.7e-15);
  const CouplingConfig c{angular(2.3e3), 1.0, 1.0};
  CHECK_REL(hertz(g0_max(test::cavity(), m, c)), 23330.152373540856, 1e-12);
}

TEST_CASE("cavity finesse and free spectral range") {
  const auto c = test::cavity();
  CHECK_REL(c.finesse(), 4640.7501238390093, 1e-12);
  CHECK_REL(c.free_spectral_range(), constants::speed_of_light / (2.0 * 95e-6), 1e-15);
}

TEST_CASE("overcoupling must agree with the mirror transmissivities") {
  auto c = test::cavity();
  c.t_f = 0.9e-3;
  c.t_e = 0.1e-3;
  CHECK_NOTHROW(c.validate());
  c.t_e = 0.3e-3;
  CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("detection efficiency under both fiber conventions") {
  const DetectionChain d{0.04, 0.9, 0.42, 0.9, 0.8};
  CHECK_REL(detection_efficiency(d), 0.0108864, 1e-14);
  CHECK_REL(detection_efficiency(d, FiberLossConvention::amplitude), 0.0108864 / 0.42 * std::sqrt(0.42), 1e-14);
  DetectionChain bad = d;
  bad.visibility = 1.2;
  CHECK_THROWS_AS(detection_efficiency(bad), DomainError);
}

TEST_CASE("mode matching from resonant transmission") {
  const double eps = mode_matching_from_transmission(4.0 * 0.7 * 0.9 * 0.1, 0.9);
  CHECK_REL(eps, 0.7, 1e-14);
}

TEST_CASE("quantum cooperativity") {
  CHECK_REL(quantum_cooperativity(2.0, 4.0, 0.5), 4.0 * 4.0 / (4.0 * 0.5), 1e-15);
  CHECK_THROWS_AS(quantum_cooperativity(1.0, -1.0, 1.0), DomainError);
}
