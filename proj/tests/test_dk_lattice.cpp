#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpolar/dk_lattice.hpp"
#include "gpolar/errors.hpp"

#include <cmath>
#include <sstream>

using namespace gpolar;
using namespace gpolar::dk;

TEST_CASE("parameter families")
{
	for (double p : {0.0, 0.1, 0.6447, 0.9, 1.0}) {
		const auto b = DKParams::bond(p);
		CHECK(b.p1 == p);
		CHECK(b.p2 == 2.0 * p - p * p);
		const auto s = DKParams::site(p);
		CHECK(s.p1 == s.p2);
		CHECK(DKParams::compact(p).p2 == 1.0);
		CHECK(DKParams::w18(p).p2 == 0.0);
	}
	CHECK_THROWS_AS(DKParams(-0.1, 0.5), DomainError);
	CHECK_THROWS_AS(DKParams(0.5, 1.1), DomainError);
	CHECK_THROWS_AS(DKParams(std::nan(""), 0.5), DomainError);
}

TEST_CASE("lattice row bookkeeping")
{
	auto r = LatticeRow::empty(130);
	CHECK(r.is_empty());
	r.set(0, true);
	r.set(64, true);
	r.set(129, true);
	CHECK(r.count() == 3);
	CHECK(r.get(129));
	r.set(64, false);
	CHECK(r.count() == 2);
	CHECK(LatticeRow::full(130).count() == 130);
	CHECK(r.subset_of(LatticeRow::full(130)));
	CHECK_FALSE(LatticeRow::full(130).subset_of(r));
	CHECK(LatticeRow::single(10, 3).count() == 1);
	CHECK_THROWS_AS(LatticeRow::empty(1), DomainError);
	CHECK_THROWS_AS(LatticeRow::single(10, 10), DomainError);

	r.set_time(7);
	CHECK(r.time() == 7);
	CHECK(r.parity() == Parity::odd);
}

TEST_CASE("deterministic step examples")
{
	for (std::size_t L : {2u, 63u, 64u, 100u, 1000u}) {
		const auto z = dk_step(LatticeRow::empty(L), DKParams(0.9, 0.9), {1});
		CHECK(z.is_empty());
		CHECK(z.time() == 1);
		CHECK(z.parity() == Parity::odd);
		const auto f = dk_step(LatticeRow::full(L), DKParams(0.3, 1.0), {2});
		CHECK(f.count() == L);
	}
	// single site, p1=1: both children active, at i-1 and i on even parity
	const auto one = dk_step(LatticeRow::single(100, 50), DKParams(1.0, 0.0), {3});
	CHECK(one.count() == 2);
	CHECK(one.get(49));
	CHECK(one.get(50));
	// then on odd parity at i and i+1
	const auto two = dk_step(one, DKParams(1.0, 1.0), {3});
	CHECK(two.count() == 3);
	CHECK(two.get(49));
	CHECK(two.get(50));
	CHECK(two.get(51));

	// wrap-around: site 0 on even parity has parent L-1 through its left child
	const auto w = dk_step(LatticeRow::single(70, 0), DKParams(1.0, 0.0), {4});
	CHECK(w.get(69));
	CHECK(w.get(0));
	CHECK(w.count() == 2);
}

TEST_CASE("transition frequencies follow p1 and p2")
{
	// repeating 1100 gives, on even parity, parents (i,i+1): counts 2,1,0,1
	// and on odd parity, parents (i-1,i): counts 1,2,1,0
	const std::size_t L = 4096;
	auto row = LatticeRow::empty(L);
	for (std::size_t i = 0; i < L; i += 4) {
		row.set(i, true);
		row.set(i + 1, true);
	}
	const DKParams par(0.3, 0.8);
	for (int parity = 0; parity < 2; ++parity) {
		row.set_time(parity);
		const int expect_count[2][4] = {{2, 1, 0, 1}, {1, 2, 1, 0}};
		double hits[3] = {0, 0, 0}, tries[3] = {0, 0, 0};
		for (std::uint64_t key = 0; key < 40; ++key) {
			const auto next = dk_step(row, par, {key});
			for (std::size_t i = 0; i < L; ++i) {
				const int c = expect_count[parity][i % 4];
				tries[c] += 1;
				hits[c] += next.get(i);
			}
		}
		CHECK(hits[0] == 0);
		const double f1 = hits[1] / tries[1], f2 = hits[2] / tries[2];
		CHECK(std::abs(f1 - 0.3) < 4 * std::sqrt(0.3 * 0.7 / tries[1]));
		CHECK(std::abs(f2 - 0.8) < 4 * std::sqrt(0.8 * 0.2 / tries[2]));
	}
}

TEST_CASE("extreme probabilities are exact")
{
	auto row = LatticeRow::empty(300);
	for (std::size_t i = 0; i < 300; i += 3)
		row.set(i, true);
	for (std::uint64_t key = 0; key < 20; ++key) {
		CHECK(dk_step(row, DKParams(0.0, 0.0), {key}).is_empty());
		const auto all = dk_step(row, DKParams(1.0, 1.0), {key});
		// every site with an active parent fires
		const auto base = dk_step(row, DKParams(0.999, 0.999), {key});
		CHECK(base.subset_of(all));
		CHECK(all.count() == 200);
	}
}

TEST_CASE("coupling: monotone in p1 with shared uniforms")
{
	const std::size_t L = 500;
	auto start = LatticeRow::empty(L);
	for (std::size_t i = 0; i < L; ++i)
		start.set(i, (i * 7919) % 3 != 0);

	// one step from a common row, any p2
	for (double p2 : {0.0, 0.4, 1.0}) {
		for (std::uint64_t key = 0; key < 50; ++key) {
			const auto lo = dk_step(start, DKParams(0.3, p2), {key});
			const auto hi = dk_step(start, DKParams(0.6, p2), {key});
			CHECK(lo.subset_of(hi));
		}
	}
	// whole trajectories stay nested when p2 >= p1'
	auto a = start, b = start;
	for (int t = 0; t < 300; ++t) {
		a = dk_step(a, DKParams(0.55, 0.8), {99});
		b = dk_step(b, DKParams(0.65, 0.8), {99});
		REQUIRE(a.subset_of(b));
	}
	CHECK(a.count() <= b.count());
}

TEST_CASE("empty state is absorbing")
{
	auto r = LatticeRow::single(128, 5);
	int t = 0;
	while (!r.is_empty() && t < 1000) {
		r = dk_step(r, DKParams::bond(0.4), {17});
		++t;
	}
	REQUIRE(r.is_empty());
	for (int k = 0; k < 50; ++k) {
		r = dk_step(r, DKParams(1.0, 1.0), {static_cast<std::uint64_t>(k)});
		CHECK(r.is_empty());
	}
}

TEST_CASE("density run examples")
{
	for (double v : density_run(DKParams::bond(1.0), 128, 200, 1))
		CHECK(v == 1.0);
	const auto zero = density_run(DKParams::bond(0.0), 128, 10, 1);
	CHECK(zero[0] == 1.0);
	CHECK(zero[1] == 0.0);
	CHECK(zero.size() == 11);
	for (double p1 : {0.0, 0.2, 0.77})
		for (double v : density_run(DKParams::compact(p1), 200, 300, 5))
			CHECK(v == 1.0);
	CHECK_THROWS_AS(density_run(DKParams::bond(0.5), 63, 10, 1), ConfigurationError);

	const auto a = density_run(DKParams::bond(0.7), 256, 500, 42);
	const auto b = density_run(DKParams::bond(0.7), 256, 500, 42);
	CHECK(a == b);
	CHECK(a != density_run(DKParams::bond(0.7), 256, 500, 43));
}

TEST_CASE("bond density decays on average from a full start")
{
	const std::int64_t T = 200;
	const int seeds = 200;
	const int probe[] = {1, 5, 20, 80, 200};
	std::vector<double> sum(std::size(probe), 0.0), sq(std::size(probe), 0.0);
	for (int s = 0; s < seeds; ++s) {
		const auto rho = density_run(DKParams::bond(0.68), 128, T, static_cast<std::uint64_t>(s));
		for (std::size_t j = 0; j < std::size(probe); ++j) {
			sum[j] += rho[probe[j]];
			sq[j] += rho[probe[j]] * rho[probe[j]];
		}
	}
	for (std::size_t j = 1; j < std::size(probe); ++j) {
		const auto stat = [&](std::size_t k) {
			const double m = sum[k] / seeds;
			return std::pair{m, std::sqrt((sq[k] / seeds - m * m) / seeds)};
		};
		const auto [m0, s0] = stat(j - 1);
		const auto [m1, s1] = stat(j);
		CHECK(m1 <= m0 + 2.0 * std::hypot(s0, s1));
	}
}

TEST_CASE("percolation examples")
{
	for (double p2 : {0.0, 0.5, 1.0}) {
		const auto o = percolation_run(DKParams(0.0, p2), 101, 50, 3);
		CHECK_FALSE(o.survived);
		REQUIRE(o.extinction_time);
		CHECK(*o.extinction_time == 1);
		CHECK_FALSE(o.alive_at(1));
		CHECK(o.alive_at(0));
	}
	const auto full = percolation_run(DKParams::bond(1.0), 201, 100, 1);
	CHECK(full.survived);
	CHECK_FALSE(full.extinction_time);

	// the cluster under p1=p2=1 widens by one site per step
	auto row = LatticeRow::single(201, 100);
	for (int t = 1; t <= 60; ++t) {
		row = dk_step(row, DKParams::bond(1.0), {0});
		CHECK(row.count() == static_cast<std::size_t>(t + 1));
	}

	CHECK_THROWS_AS(percolation_run(DKParams::bond(0.7), 200, 100, 1), ConfigurationError);
	CHECK_THROWS_AS(percolation_trials(DKParams::bond(0.7), 200, 100, 10, 1), ConfigurationError);
}

TEST_CASE("windowed spreading matches full-ring stepping")
{
	// the window optimisation must not change the trajectory
	const DKParams par = DKParams::bond(0.66);
	for (std::uint64_t seed = 0; seed < 30; ++seed) {
		const std::size_t L = 1001;
		const std::int64_t T = 400;
		const auto o = percolation_run(par, L, T, seed);
		auto row = LatticeRow::single(L, L / 2);
		std::optional<std::int64_t> died;
		for (std::int64_t t = 0; t < T; ++t) {
			row = dk_step(row, par, {seed});
			if (row.is_empty()) {
				died = t + 1;
				break;
			}
		}
		CHECK(o.extinction_time == died);
		CHECK(o.survived == !died);
	}
}

TEST_CASE("survival probability")
{
	const auto deep = survival_probability(DKParams::bond(0.9), 2001, 1000, 400, 7);
	CHECK(deep.estimate > 0.5);
	const auto dead = survival_probability(DKParams::bond(0.3), 2001, 1000, 400, 7);
	CHECK(dead.estimate == 0.0);
	CHECK(dead.std_error == 0.0);
	CHECK(survival_probability(DKParams(0.0, 1.0), 2001, 1000, 100, 7).estimate == 0.0);

	const auto crit = survival_probability(DKParams::bond(0.6447), 2001, 1000, 10000, 11);
	MESSAGE("survival at p=0.6447, t=1000: " << crit.estimate << " +- " << crit.std_error);
	CHECK(crit.estimate > 0.05);
	CHECK(crit.estimate < 0.95);

	CHECK_THROWS_AS(survival_probability(DKParams::bond(0.6), 2001, 1000, 99, 7), ConfigurationError);
}

TEST_CASE("active cap stops runs early")
{
	const auto capped = percolation_run(DKParams::bond(0.95), 4001, 2000, 5, {50});
	CHECK(capped.capped);
	CHECK(capped.survived);
	const auto free_run = percolation_run(DKParams::bond(0.95), 4001, 2000, 5);
	CHECK_FALSE(free_run.capped);
}

TEST_CASE("results do not depend on the thread count")
{
	const auto a = percolation_trials(DKParams::bond(0.65), 801, 400, 300, 21, 1);
	const auto b = percolation_trials(DKParams::bond(0.65), 801, 400, 300, 21, 4);
	REQUIRE(a.size() == b.size());
	for (std::size_t i = 0; i < a.size(); ++i) {
		CHECK(a[i].survived == b[i].survived);
		CHECK(a[i].extinction_time == b[i].extinction_time);
	}

	DensityMeasurement m;
	m.L = 256;
	m.t_max = 400;
	const std::vector<double> ps = {0.7, 0.75, 0.8, 0.85};
	const auto c1 = density_curve(DKParams::bond, ps, m, 3, 1);
	const auto c3 = density_curve(DKParams::bond, ps, m, 3, 3);
	for (std::size_t i = 0; i < ps.size(); ++i) {
		CHECK(c1.points[i].value == c3.points[i].value);
		CHECK(c1.points[i].std_error == c3.points[i].std_error);
	}
}

TEST_CASE("density curve rises with p above threshold")
{
	DensityMeasurement m;
	m.L = 2000;
	m.t_max = 2000;
	const std::vector<double> ps = {0.70, 0.75, 0.80, 0.90};
	const auto c = density_curve(DKParams::bond, ps, m, 8);
	CHECK(c.kind == OrderParameter::density);
	for (std::size_t i = 1; i < ps.size(); ++i)
		CHECK(c.points[i].value > c.points[i - 1].value);
	for (const auto &pt : c.points) {
		CHECK(pt.std_error > 0.0);
		CHECK(pt.std_error < 0.01);
	}
	// the mean-field curve overestimates the density
	CHECK(c.points[3].value < (2 * 0.9 - 1) / (0.81));

	DensityMeasurement bad = m;
	bad.measure_from = 1.0;
	CHECK_THROWS_AS(density_curve(DKParams::bond, ps, bad, 8), ConfigurationError);
}

TEST_CASE("survival curve")
{
	const std::vector<double> ps = {0.6, 0.7, 0.8};
	const auto c = survival_curve(DKParams::bond, ps, 601, 300, 500, 4);
	CHECK(c.kind == OrderParameter::percolation);
	CHECK(c.points[0].value < c.points[1].value);
	CHECK(c.points[1].value < c.points[2].value);
}

TEST_CASE("pair correlation")
{
	const auto one = pair_correlation(DKParams::bond(1.0), 500, 100, 100, 1);
	CHECK(one.e_pair == 1.0);
	CHECK(one.e_single_sq == 1.0);

	const auto far = pair_correlation(DKParams::bond(0.95), 1000, 10000, 5000, 2);
	MESSAGE("bond 0.95: pair " << far.e_pair << ", single^2 " << far.e_single_sq);
	CHECK(std::abs(far.e_pair - far.e_single_sq) < 0.05 * far.e_single_sq);

	const auto near = pair_correlation(DKParams::bond(0.66), 1000, 10000, 5000, 3);
	MESSAGE("bond 0.66: pair " << near.e_pair << ", single^2 " << near.e_single_sq);
	CHECK(near.e_pair > near.e_single_sq);

	CHECK_THROWS_AS(pair_correlation(DKParams::bond(0.3), 200, 2000, 10, 1), ExtinctionError);
	CHECK_THROWS_AS(pair_correlation(DKParams::bond(0.9), 200, 10, 0, 1), ConfigurationError);
}

TEST_CASE("mean-field probability evolution")
{
	for (double p : {0.55, 0.6447, 0.8, 1.0}) {
		const double star = (2 * p - 1) / (p * p);
		CHECK(std::abs(star - (2 * p * star - p * p * star * star)) < 1e-15);
		const std::vector<double> init(16, star);
		for (double v : bond_probability_evolution(p, init, 50))
			CHECK(v == doctest::Approx(star).epsilon(1e-12));
	}
	const std::vector<double> ones(10, 1.0);
	for (double v : bond_probability_evolution(1.0, ones, 20))
		CHECK(v == 1.0);
	for (double v : bond_probability_evolution(0.0, ones, 1))
		CHECK(v == 0.0);

	// a non-uniform start relaxes to the fixed point in the active phase
	std::vector<double> ramp(32);
	for (std::size_t i = 0; i < ramp.size(); ++i)
		ramp[i] = 0.05 + 0.9 * static_cast<double>(i) / 31.0;
	const double star = (2 * 0.8 - 1) / 0.64;
	for (double v : bond_probability_evolution(0.8, ramp, 2000))
		CHECK(v == doctest::Approx(star).epsilon(1e-9));

	CHECK_THROWS_AS(bond_probability_evolution(1.2, ones, 1), DomainError);
	CHECK_THROWS_AS(bond_probability_evolution(0.5, std::vector<double>{0.5, 1.5}, 1), DomainError);
}

TEST_CASE("RLE round trip")
{
	auto row = LatticeRow::empty(150);
	for (std::size_t i : {0u, 1u, 2u, 10u, 63u, 64u, 65u, 149u})
		row.set(i, true);
	row.set_time(13);
	const auto line = encode_rle(row);
	CHECK(line == "13 0:3 10:1 63:3 149:1");
	const auto back = decode_rle(line, 150);
	CHECK(back == row);
	CHECK(back.parity() == Parity::odd);
	CHECK(encode_rle(LatticeRow::empty(10)) == "0");

	CHECK_THROWS_AS(decode_rle("", 10), DomainError);
	CHECK_THROWS_AS(decode_rle("3 4", 10), DomainError);
	CHECK_THROWS_AS(decode_rle("3 8:5", 10), DomainError);
}

TEST_CASE("curve CSV round trip")
{
	OrderParameterCurve c;
	c.kind = OrderParameter::percolation;
	c.points = {{0.65, 0.123456789012345678, 1e-3}, {0.7, 0.5, 0.0}, {0.9, 1.0 / 3.0, 2.5e-17}};
	std::stringstream ss;
	write_curve_csv(ss, c);
	CHECK(ss.str().rfind("p,value,stderr,kind\n", 0) == 0);
	const auto back = read_curve_csv(ss);
	CHECK(back.kind == c.kind);
	REQUIRE(back.points.size() == 3);
	for (std::size_t i = 0; i < 3; ++i) {
		CHECK(back.points[i].p == c.points[i].p);
		CHECK(back.points[i].value == c.points[i].value);
		CHECK(back.points[i].std_error == c.points[i].std_error);
	}

	std::stringstream bad_header("p,value\n");
	CHECK_THROWS_AS(read_curve_csv(bad_header), DomainError);
	std::stringstream unordered("p,value,stderr,kind\n0.7,0.5,0,density\n0.6,0.4,0,density\n");
	CHECK_THROWS_AS(read_curve_csv(unordered), DomainError);
	std::stringstream mixed("p,value,stderr,kind\n0.6,0.5,0,density\n0.7,0.4,0,percolation\n");
	CHECK_THROWS_AS(read_curve_csv(mixed), DomainError);
	std::stringstream out_of_range("p,value,stderr,kind\n0.6,1.5,0,density\n");
	CHECK_THROWS_AS(read_curve_csv(out_of_range), DomainError);
}
