#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpolar/critical_fit.hpp"
#include "gpolar/errors.hpp"
#include "gpolar/polarization.hpp"

#include <cmath>
#include <random>

using namespace gpolar;
using namespace gpolar::fit;

namespace {

dk::OrderParameterCurve power_curve(double A, double beta, double pc, int n, bool with_errors)
{
	dk::OrderParameterCurve c;
	for (int i = 0; i < n; ++i) {
		const double p = pc + 0.005 * std::pow(12.0, i / double(n - 1));
		const double v = A * std::pow(p - pc, beta);
		c.points.push_back({p, v, with_errors ? 0.01 * v * (1 + i % 3) : 0.0});
	}
	return c;
}

} // namespace

TEST_CASE("least squares basics")
{
	const std::vector<double> x = {0, 1, 2, 3, 4};
	const std::vector<double> y = {1, 3, 5, 7, 9};
	const auto f = least_squares(x, y);
	CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
	CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
	CHECK(f.slope_std_error < 1e-12);

	// textbook example with noise: slope error from the residuals
	const std::vector<double> yn = {1.1, 2.9, 5.2, 6.8, 9.0};
	const auto g = least_squares(x, yn);
	double sxx = 10.0, ssr = 0.0;
	for (std::size_t i = 0; i < 5; ++i) {
		const double r = yn[i] - (g.intercept + g.slope * x[i]);
		ssr += r * r;
	}
	CHECK(g.slope_std_error == doctest::Approx(std::sqrt(ssr / 3.0 / sxx)).epsilon(1e-12));

	CHECK_THROWS_AS(least_squares(std::vector<double>{1, 2}, std::vector<double>{1, 2}), FitError);
	CHECK_THROWS_AS(least_squares(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), FitError);
	CHECK_THROWS_AS(least_squares(x, y, std::vector<double>{1, 1, 0, 1, 1}), FitError);
}

TEST_CASE("fit_beta on an exact power law")
{
	const double pc = 0.6447;
	const auto c = power_curve(1.0, 0.5, pc, 12, false);
	const auto f = fit_beta(c, pc, {pc + 0.005, pc + 0.06});
	CHECK(std::abs(f.value - 0.5) < 1e-12);
	CHECK(f.n_points == 12);
	CHECK(f.std_error >= 0.0);
	CHECK(f.window.first < f.window.second);
}

TEST_CASE("fit_beta is scale invariant")
{
	std::mt19937_64 gen(11);
	std::uniform_real_distribution<double> ua(0.01, 100.0), ub(0.1, 1.0);
	for (int k = 0; k < 50; ++k) {
		const double A = ua(gen), b0 = ub(gen);
		const auto f = fit_beta(power_curve(A, b0, 0.5, 10, k % 2 == 0), 0.5, {0.5, 0.6});
		CHECK(std::abs(f.value - b0) < 1e-10);
	}
}

TEST_CASE("fit_beta window handling and errors")
{
	const double pc = 0.6447;
	auto c = power_curve(1.0, 0.3, pc, 12, true);
	// points outside the window are ignored
	const auto narrow = fit_beta(c, pc, {pc + 0.01, pc + 0.04});
	CHECK(narrow.n_points < 12);
	CHECK(narrow.n_points >= 3);

	auto zero = c;
	zero.points[4].value = 0.0;
	CHECK_THROWS_AS(fit_beta(zero, pc, {pc + 0.005, pc + 0.06}), FitError);
	CHECK_THROWS_AS(fit_beta(c, pc, {pc + 0.0591, pc + 0.06}), FitError);
	CHECK_THROWS_AS(fit_beta(c, pc, {pc + 0.06, pc + 0.005}), FitError);
	CHECK_THROWS_AS(fit_beta(c, pc + 0.01, {pc, pc + 0.06}), FitError);
}

TEST_CASE("decay_rate examples")
{
	std::vector<SeriesPoint> s;
	for (int n = 0; n < 20; ++n)
		s.push_back({double(n), std::exp2(-n / 4.0)});
	CHECK(decay_rate(s).value == doctest::Approx(0.25).epsilon(1e-14));

	std::vector<SeriesPoint> flat(10, {0.0, 0.3});
	for (int n = 0; n < 10; ++n)
		flat[n].index = n;
	CHECK(decay_rate(flat).value == 0.0);

	// only the tail half is used
	std::vector<SeriesPoint> kink;
	for (int n = 0; n < 20; ++n)
		kink.push_back({double(n), n < 10 ? std::exp2(-n) : std::exp2(-10.0 - 0.5 * (n - 10))});
	const auto k = decay_rate(kink);
	CHECK(k.value == doctest::Approx(0.5).epsilon(1e-13));
	CHECK(k.window.first == 10.0);
	CHECK(k.n_points == 10);

	auto bad = s;
	bad[3].value = 0.0;
	CHECK_THROWS_AS(decay_rate(bad), DomainError);
	bad[3].value = -1.0;
	CHECK_THROWS_AS(decay_rate(bad), DomainError);
}

TEST_CASE("decay_rate ignores uniform scaling")
{
	std::vector<SeriesPoint> s, t;
	std::mt19937_64 gen(5);
	std::normal_distribution<double> noise(0.0, 0.05);
	for (int n = 0; n < 30; ++n) {
		const double v = std::exp2(-0.3 * n + noise(gen));
		s.push_back({double(n), v});
		t.push_back({double(n), 37.5 * v});
	}
	CHECK(decay_rate(s).value == doctest::Approx(decay_rate(t).value).epsilon(1e-12));
}

TEST_CASE("decay of Monte Carlo unpolarized fraction matches the operator")
{
	using namespace polarization;
	const Interval iv(0.1, 0.9);
	const auto mc = mc_unpolarized_series(0.5, iv, 30, 1000000, 2024, 1);
	std::vector<SeriesPoint> s;
	for (int n = 8; n <= 30; ++n)
		s.push_back({double(n), mc[n].probability});
	const auto rate = decay_rate(s);

	auto g = Grid::uniform(std::size_t{1} << 15);
	const auto dd = dominant_decay(GridFunction::indicator(g, iv), 2000, 1e-12);
	REQUIRE(dd.mu);
	MESSAGE("MC 1/rate " << 1.0 / rate.value << ", operator mu " << *dd.mu);
	CHECK(std::abs(1.0 / rate.value - *dd.mu) < 0.1);
}

TEST_CASE("threshold bisection at small scale")
{
	ThresholdOptions o;
	o.t_max = 256;
	o.trials = 2000;
	o.tol = 0.01;
	o.seed = 3;
	o.active_cap = 200;
	const auto est = find_threshold(dk::DKParams::bond, o);
	MESSAGE("small-scale bond p_c " << est.p_c);
	CHECK(est.bracket.first < est.p_c);
	CHECK(est.p_c < est.bracket.second);
	CHECK(est.bracket.second - est.bracket.first <= o.tol);
	CHECK(est.p_c > 0.62);
	CHECK(est.p_c < 0.67);
	CHECK(est.trials_per_probe == o.trials);
	CHECK(est.probes.size() >= 2);
	CHECK_FALSE(est.probes[0].above);
	CHECK(est.probes[1].above);

	o.threads = 3;
	const auto again = find_threshold(dk::DKParams::bond, o);
	CHECK(again.p_c == est.p_c);
	CHECK(again.probes.size() == est.probes.size());
}

TEST_CASE("threshold errors")
{
	ThresholdOptions o;
	o.t_max = 64;
	o.trials = 200;
	o.tol = 0.05;
	const dk::Family dead = [](double) { return dk::DKParams(0.0, 0.0); };
	CHECK_THROWS_AS(find_threshold(dead, o), BracketError);
	o.tol = 1e-5;
	CHECK_THROWS_AS(find_threshold(dk::DKParams::bond, o), ConfigurationError);
}

TEST_CASE("probe classification")
{
	ThresholdOptions o;
	o.t_max = 512;
	o.trials = 2000;
	const auto low = probe_threshold(dk::DKParams::bond(0.55), 0.55, o, 1);
	CHECK_FALSE(low.above);
	const auto high = probe_threshold(dk::DKParams::bond(0.75), 0.75, o, 1);
	CHECK(high.above);
	CHECK(high.alive_late <= high.alive_mid);
	CHECK(high.alive_mid <= high.alive_early);
}

TEST_CASE("site and compact thresholds at moderate scale")
{
	ThresholdOptions o;
	o.t_max = 2000;
	o.trials = 4000;
	o.tol = 0.004;
	const auto site = find_threshold(dk::DKParams::site, o);
	MESSAGE("site p_c " << site.p_c);
	CHECK(std::abs(site.p_c - 0.705) <= 0.01);

	o.t_max = 1000;
	const auto compact = find_threshold(dk::DKParams::compact, o);
	MESSAGE("compact p_c " << compact.p_c);
	CHECK(std::abs(compact.p_c - 0.5) <= 0.01);
}

TEST_CASE("W18 never sustains activity")
{
	// p2 = 0: two active parents always kill the child, so a full row dies at once
	for (double p1 : {0.3, 0.9, 1.0})
		CHECK(dk::density_run(dk::DKParams::w18(p1), 128, 1, 1)[1] == 0.0);
}
