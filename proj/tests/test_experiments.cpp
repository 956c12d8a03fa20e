#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "sandlab/experiments.hpp"
#include "sandlab/parallel.hpp"

using namespace sandlab;

TEST_CASE("phi and psi closed forms") {
  CHECK(phi_d(3, 16) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(phi_d(1, 4) == doctest::Approx(8.0));
  CHECK(phi_d(2, 7) == 7.0);
  CHECK(phi_d(4, std::exp(2.0)) == doctest::Approx(2.0));
  CHECK(phi_d(6, std::exp(4.0)) == doctest::Approx(2.0));
  CHECK(psi_d(1, 10, 2) == 40.0);
  CHECK(psi_d(2, 8, 2) == doctest::Approx(4.0 * std::log(4.0)));
  CHECK(psi_d(3, 8, 5) == 5.0);
  CHECK(psi_d(4, 8, 3) == doctest::Approx(std::log(4.0)));
  CHECK(psi_d(5, 8, 3) == 1.0);
  for (int d = 1; d <= 6; ++d) CHECK(psi_d(d, 16, 0) == 0.0);

  const auto pp = phi_psi_eval(3, 16, 2);
  CHECK(pp.phi == doctest::Approx(4.0));
  CHECK(pp.psi == 2.0);
  CHECK_THROWS_AS(phi_psi_eval(0, 16, 1), std::invalid_argument);
  CHECK_THROWS_AS(phi_psi_eval(2, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(phi_psi_eval(2, 16, 17), std::invalid_argument);
  CHECK_THROWS_AS(phi_psi_eval(2, 16, -1), std::invalid_argument);
}

TEST_CASE("check bounds") {
  CHECK(Check{"a", 1.0, 1.0, std::nullopt, false}.passed());
  CHECK_FALSE(Check{"a", 1.0, 1.0, std::nullopt, true}.passed());
  CHECK(Check{"a", 0.5, 0.0, 1.0, true}.passed());
  CHECK_FALSE(Check{"a", NAN, std::nullopt, std::nullopt, false}.passed());
  const auto j = Check{"a", 2.0, std::nullopt, 1.0, false}.to_json();
  CHECK(j["pass"] == false);
  CHECK(j["lower"].is_null());
}

TEST_CASE("mass laws") {
  const auto g = MassLaw::parse("gaussian:0.9,0.25");
  CHECK(g.kind == MassLaw::Kind::Gaussian);
  CHECK(g.mean() == 0.9);
  CHECK(g.variance() == doctest::Approx(0.0625));
  const auto t = MassLaw::parse("two_point:1,0.5");
  CHECK(t.variance() == doctest::Approx(0.25));
  const auto u = MassLaw::parse("uniform:0,2");
  CHECK(u.mean() == 1.0);
  CHECK(u.variance() == doctest::Approx(1.0 / 3.0));
  CHECK(MassLaw::parse(u.to_string()).b == 2.0);

  CHECK_THROWS_AS(MassLaw::parse("gaussian:1"), std::invalid_argument);
  CHECK_THROWS_AS(MassLaw::parse("cauchy:1,1"), std::invalid_argument);
  CHECK_THROWS_AS(MassLaw::parse("gaussian:1,-1"), std::invalid_argument);
  CHECK_THROWS_AS(MassLaw::parse("uniform:2,1"), std::invalid_argument);
  CHECK_THROWS_AS(MassLaw::parse("gaussian:1,x"), std::invalid_argument);

  const CounterRng rng(11, Stream::Cli);
  for (const auto& law : {g, t, u}) {
    std::vector<double> xs(20000);
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = law.draw(rng, 0, i);
    const auto est = mean_with_error(xs);
    CHECK(std::abs(est.mean - law.mean()) < 5 * est.std_error);
    CHECK(sample_variance(xs) == doctest::Approx(law.variance()).epsilon(0.05));
  }
  for (std::size_t i = 0; i < 100; ++i) {
    const double v = t.draw(rng, 3, i);
    CHECK((v == 0.5 || v == 1.5));
  }
}

TEST_CASE("slope parsing") {
  const auto a = Slope::parse("1/2");
  CHECK(a.num == 1);
  CHECK(a.den == 2);
  CHECK(Slope::parse("2/4").to_string() == "1/2");
  CHECK(Slope::parse("0.5").to_string() == "1/2");
  CHECK(Slope::parse("3").value() == 3.0);
  CHECK(Slope::parse("0.125").den == 8);
  CHECK_THROWS_AS(Slope::parse("0"), std::invalid_argument);
  CHECK_THROWS_AS(Slope::parse("-1/2"), std::invalid_argument);
  CHECK_THROWS_AS(Slope::parse("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(Slope::parse("half"), std::invalid_argument);
}

TEST_CASE("closed-form laplacian of u_1") {
  CHECK(laplacian_u1_formula(0, 0) == 0.25);
  CHECK(laplacian_u1_formula(3, 0) == -2.0);
  CHECK(laplacian_u1_formula(1, 0) == 0.0);
  CHECK(laplacian_u1_formula(4, 2) == 1.0);
  CHECK(laplacian_u1_formula(3, -3) == 0.5);
  CHECK(laplacian_u1_formula(-2, 0) == 0.0);
  CHECK(laplacian_u1_formula(2, 5) == 0.0);
}

TEST_CASE("s0 line and cone certificate") {
  const auto line = exp_s0_line(20);
  CHECK(line.passed());
  CHECK(line.data["max_sigma"].get<double>() == doctest::Approx(1.0));

  const auto cert = cone_certificate(Slope{1, 2}, 1.25, 30);
  CHECK_FALSE(cert.exploratory);
  CHECK(cert.passed());
  CHECK(cert.checks.size() == 4);
  CHECK(cert.data["ceil_inverse_a"] == 2);
  CHECK(cert.data["condition_2ma_over_1_plus_a2"].get<double>() == doctest::Approx(1.0));

  // 2ma/(1+a²) = 1.25 > 1: recorded, nothing asserted.
  const auto wide = cone_certificate(Slope{1, 1}, 1.25, 20);
  CHECK(wide.exploratory);
  CHECK(wide.checks.empty());

  CHECK_THROWS_AS(cone_certificate(Slope{3, 2}, 1.0, 20), std::invalid_argument);
  CHECK_THROWS_AS(cone_certificate(Slope{1, 2}, -1.0, 20), std::invalid_argument);
  CHECK_THROWS_AS(cone_certificate(Slope{1, 2}, 1.0, 3), std::invalid_argument);
}

TEST_CASE("cone explosion growth") {
  const std::array radii{4, 8, 16};
  const auto r = cone_explode(1.0, radii);
  CHECK(r.passed());
  CHECK(r.data["increments"].size() == 2);
  CHECK(r.data["verdict"] == "divergence-consistent");
  const std::array bad{8, 4};
  CHECK_THROWS_AS(cone_explode(1.0, bad), std::invalid_argument);
  CHECK_THROWS_AS(cone_explode(0.0, radii), std::invalid_argument);
}

TEST_CASE("dirac identity") {
  const auto r = exp_dirac_identity(9, 1, 1.0, 50);
  CHECK(r.passed());
  CHECK(r.find("max_odometer_error")->value <= 1e-10);
  CHECK(exp_dirac_identity(5, 2, 0.5, 20).passed());
  CHECK(exp_dirac_identity(5, 2, 0.0, 5).passed());
  CHECK_THROWS_AS(exp_dirac_identity(9, 1, -1.0, 5), std::invalid_argument);
  CHECK_THROWS_AS(exp_dirac_identity(100, 2, 1.0, 5), std::invalid_argument);
}

TEST_CASE("density conservation") {
  auto torus = std::make_shared<const Graph>(make_torus(8, 2));
  const auto sub = exp_density_conservation(torus, MassLaw::gaussian(0.9, 0.1), 60, 5);
  CHECK(sub.passed());
  CHECK(sub.data["trials_skipped"] == 0);

  const auto crit = exp_density_conservation(torus, MassLaw::gaussian(1.0, 0.3), 20, 5, true);
  CHECK(crit.passed());
  CHECK(crit.find("max_final_deviation_from_one") != nullptr);

  // Mean 1 without recentring: roughly half the draws exceed |V| and are skipped.
  const auto edge = exp_density_conservation(torus, MassLaw::gaussian(1.0, 0.2), 40, 9);
  CHECK(edge.data["trials_skipped"].get<std::size_t>() > 0);

  std::vector<std::vector<Vertex>> cycle(7);
  for (Vertex v = 0; v < 7; ++v) cycle[v] = {(v + 1) % 7, (v + 6) % 7};
  auto general = std::make_shared<const Graph>(make_general(cycle));
  CHECK(exp_density_conservation(general, MassLaw::uniform(0.5, 1.2), 40, 1).passed());
}

TEST_CASE("equality in law on a small torus") {
  const auto r = exp_equality_in_law(4, 2, 400, 21, 40);
  CHECK(r.passed());
  CHECK(r.data["ks_p_values"].size() == 16);
  CHECK(r.find("max_exact_residual")->value <= 1e-8);
  CHECK_THROWS_AS(exp_equality_in_law(80, 2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(exp_equality_in_law(4, 2, 1, 1), std::invalid_argument);
}

TEST_CASE("scaling table") {
  const std::array<long, 3> ns{8, 16, 32};
  const std::array<std::size_t, 1> trials{100};
  ScalingTable tab;
  const auto r = exp_scaling(2, ns, trials, 3, &tab);
  CHECK(tab.rows.size() == 3);
  CHECK(tab.rows[0].phi == 8.0);
  for (const auto& row : tab.rows) {
    CHECK(row.mean > 0.0);
    // The origin and the site average estimate the same expectation.
    CHECK(std::abs(row.mean - row.site_average_mean) < 6 * row.std_error);
  }
  CHECK(r.find("expected_max_gap_over_se") != nullptr);
  CHECK(r.find("expected_max_gap_over_se")->passed());
  CHECK(r.find("slope") != nullptr);

  const std::array<long, 3> high{4, 5, 6};
  const auto r5 = exp_scaling(5, high, trials, 3);
  CHECK(r5.find("ratio_spread") != nullptr);
  CHECK(r5.find("slope") == nullptr);

  const std::array<long, 2> two{8, 16};
  CHECK_THROWS_AS(exp_scaling(2, two, trials, 1), std::invalid_argument);
  const std::array<long, 3> unsorted{16, 8, 32};
  CHECK_THROWS_AS(exp_scaling(2, unsorted, trials, 1), std::invalid_argument);
  const std::array<std::size_t, 2> mismatched{10, 10};
  CHECK_THROWS_AS(exp_scaling(2, ns, mismatched, 1), std::invalid_argument);
}

TEST_CASE("critical CLT statistic") {
  const std::array radii{4, 8};
  const auto r = exp_critical_clt(2, radii, 300, MassLaw::two_point(1.0, 1.0), 2);
  CHECK(r.passed());
  CHECK(r.data["per_radius"].size() == 2);
  const double var = r.data["per_radius"][1]["sample_variance"];
  CHECK(var == doctest::Approx(1.0).epsilon(0.25));
  CHECK_THROWS_AS(exp_critical_clt(2, radii, 10, MassLaw::gaussian(0.9, 1.0), 1), std::invalid_argument);
  CHECK_THROWS_AS(exp_critical_clt(2, radii, 10, MassLaw::two_point(1.0, 0.0), 1), std::invalid_argument);
}

TEST_CASE("results do not depend on the thread count") {
  const std::array<long, 3> ns{4, 8, 16};
  const std::array<std::size_t, 1> trials{20};
  auto torus = std::make_shared<const Graph>(make_torus(6, 2));
  auto run = [&] {
    nlohmann::json j;
    j.push_back(exp_scaling(2, ns, trials, 4).results_json());
    j.push_back(exp_density_conservation(torus, MassLaw::uniform(0.5, 1.2), 16, 4).results_json());
    j.push_back(exp_equality_in_law(3, 2, 40, 4, 10).results_json());
    return j;
  };
  set_thread_count(1);
  const auto one = run();
  set_thread_count(3);
  const auto three = run();
  set_thread_count(0);
  CHECK(one == three);
}
