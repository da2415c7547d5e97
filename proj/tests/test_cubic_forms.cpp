#include <doctest.h>

#include <cmath>
#include <random>

#include "kgd/cubic_forms.hpp"
#include "kgd/errors.hpp"

using namespace kgd;

TEST_CASE("single term spec encodes F = -(u_t)^3") {
  const CubicSystem s = parse_system(R"(
    n = 1
    term { component = 1 coeff = -1 monomial { var = ut index = 1 power = 3 } }
  )");
  CHECK(s.n() == 1);
  REQUIRE(s.terms().size() == 1);
  CHECK(s.terms()[0].coefficient == -1.0);
  const double xi[] = {0.3}, eta[] = {2.0}, zeta[] = {-1.0};
  CHECK(eval_fcub(s, xi, eta, zeta)[0] == doctest::Approx(-8.0));
  CHECK_FALSE(s == builtin_system("single_ut3_dissipative"));  // labels differ
  CHECK(s.terms() == builtin_system("single_ut3_dissipative").terms());
}

TEST_CASE("empty term list is the zero nonlinearity") {
  const CubicSystem s = parse_system("n = 2");
  CHECK(s.terms().empty());
  const double xi[] = {1, 2}, eta[] = {3, 4}, zeta[] = {5, 6};
  const auto f = eval_fcub(s, xi, eta, zeta);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
}

TEST_CASE("invalid systems are rejected") {
  CHECK_THROWS_AS(parse_system("n = 1 term { component = 1 coeff = 1 monomial { var = u index = 1 power = 2 } }"),
                  InputError);
  CHECK_THROWS_AS(parse_system("n = 1 term { component = 2 coeff = 1 monomial { var = u index = 1 power = 3 } }"),
                  InputError);
  CHECK_THROWS_AS(parse_system("n = 1 term { component = 1 coeff = 1 monomial { var = u index = 3 power = 3 } }"),
                  InputError);
  CHECK_THROWS_AS(parse_system("n = 0"), InputError);
  CHECK_THROWS_AS(parse_system("n = 1 term { component = 1 coeff = 1 monomial { var = uxx index = 1 power = 3 } }"),
                  InputError);
  CHECK_THROWS_AS(parse_system("n = = 1"), ParseError);
}

TEST_CASE("canonical form merges duplicates and drops zeros") {
  const CubicSystem s = parse_system(R"(
    n = 1
    term { component = 1 coeff = 2 monomial { var = u index = 1 power = 1 } monomial { var = u index = 1 power = 2 } }
    term { component = 1 coeff = -2 monomial { var = u index = 1 power = 3 } }
    term { component = 1 coeff = 1.5 monomial { var = ut index = 1 power = 3 } }
  )");
  REQUIRE(s.terms().size() == 1);
  CHECK(s.terms()[0].coefficient == 1.5);
}

TEST_CASE("serialization round-trips byte-identically") {
  for (const auto& name : builtin_names()) {
    const std::vector<double> params =
        name == "complex_cubic_dissipative" ? std::vector<double>{0.7, -1.25} : std::vector<double>{};
    const CubicSystem s = builtin_system(name, params);
    const std::string text = serialize_system(s);
    const CubicSystem back = parse_system(text);
    CHECK(back == s);
    CHECK(serialize_system(back) == text);
    CHECK(system_from_json(system_to_json(s)) == s);
  }
}

TEST_CASE("eval_fcub on the complex cubic example") {
  const double p[] = {1.0, 0.0};
  const CubicSystem s = builtin_system("complex_cubic_dissipative", p);
  const double xi[] = {1, 1}, zero[] = {0, 0};
  const auto f = eval_fcub(s, xi, zero, zero);
  CHECK(f[0] == 2.0);
  CHECK(f[1] == 2.0);
  CHECK_THROWS_AS(eval_fcub(s, std::span<const double>(xi, 1), zero, zero), InputError);
}

TEST_CASE("cubic homogeneity and vanishing at the origin") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double p[] = {0.4, 1.3};
  for (const auto& s : {builtin_system("complex_cubic_dissipative", p), builtin_system("remark1"),
                        builtin_system("triangular_feed")}) {
    double xi[2], eta[2], zeta[2], xi2[2], eta2[2], zeta2[2];
    for (int k = 0; k < 2; ++k) {
      xi[k] = u(rng);
      eta[k] = u(rng);
      zeta[k] = u(rng);
      xi2[k] = 2 * xi[k];
      eta2[k] = 2 * eta[k];
      zeta2[k] = 2 * zeta[k];
    }
    const auto f1 = eval_fcub(s, xi, eta, zeta);
    const auto f2 = eval_fcub(s, xi2, eta2, zeta2);
    for (int j = 0; j < 2; ++j) CHECK(f2[j] == doctest::Approx(8 * f1[j]).epsilon(1e-14));
    const double zero[] = {0, 0};
    const auto f0 = eval_fcub(s, zero, zero, zero);
    CHECK(f0[0] == 0.0);
    CHECK(f0[1] == 0.0);
  }
}

TEST_CASE("compiled evaluation matches eval_fcub") {
  const double p[] = {0.4, 1.3};
  const CubicSystem s = builtin_system("complex_cubic_dissipative", p);
  const CompiledCubic c(s);
  CHECK(c.depends_on(SlotKind::u));
  CHECK(c.depends_on(SlotKind::ut));
  CHECK_FALSE(c.depends_on(SlotKind::ux));
  const double args[] = {0.1, -0.4, 0.7, 0.2, 0.9, -0.3};
  double out[2];
  c.eval(args, out);
  const auto ref = eval_fcub(s, std::span<const double>(args, 2), std::span<const double>(args + 2, 2),
                             std::span<const double>(args + 4, 2));
  CHECK(out[0] == doctest::Approx(ref[0]).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(ref[1]).epsilon(1e-15));
}

TEST_CASE("hyperbola points") {
  for (double z : {-30.0, -2.5, 0.0, 0.3, 7.0, 30.0}) {
    const HyperbolaPoint w = HyperbolaPoint::at(z);
    CHECK(w.omega0 > 0.0);
    CHECK(w.omega0 == std::cosh(z));
    CHECK(w.omega1 == std::sinh(z));
    CHECK(std::abs(w.omega0 * w.omega0 - w.omega1 * w.omega1 - 1.0) <= 1e-12 * w.omega0 * w.omega0);
  }
}

TEST_CASE("builtin parameter checks") {
  CHECK_THROWS_AS(builtin_system("complex_cubic_dissipative"), InputError);
  const double one[] = {1.0};
  CHECK_THROWS_AS(builtin_system("remark1", one), InputError);
  CHECK_THROWS_AS(builtin_system("nope"), InputError);
}
