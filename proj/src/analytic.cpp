#include "gpolar/analytic.hpp"

#include "gpolar/errors.hpp"

#include <cmath>
#include <string>

namespace gpolar::analytic {

namespace {

GoldenConstants make_golden() noexcept
{
	const long double phi = (1.0L + std::sqrt(5.0L)) / 2.0L;
	GoldenConstants g{};
	g.phi = static_cast<double>(phi);
	g.phi_conj = static_cast<double>(phi - 1.0L);
	g.beta_analytic = static_cast<double>(1.0L / (2.0L + phi));
	g.mu_analytic = static_cast<double>(2.0L + phi);
	return g;
}

void require_probability(double p, const char *op)
{
	if (!(p > 0.0 && p <= 1.0))
		throw DomainError(std::string(op) + ": p must lie in (0,1], got " + std::to_string(p));
}

void require_upper_half(double p, const char *op)
{
	if (!(p > 0.5 && p <= 1.0))
		throw DomainError(std::string(op) + ": p must lie in (1/2,1], got " + std::to_string(p));
}

} // namespace

const GoldenConstants &golden() noexcept
{
	static const GoldenConstants g = make_golden();
	return g;
}

const ReferenceConstants &reference() noexcept
{
	static const ReferenceConstants r{};
	return r;
}

double mu_closed_lower_computed() noexcept
{
	return 1.0 / (1.0 - 1.0 / (2.0 * std::log(2.0)));
}

double rho_mf(double p)
{
	require_probability(p, "rho_mf");
	return (2.0 * p - 1.0) / (p * p);
}

double rho_mf_deriv(double p)
{
	require_probability(p, "rho_mf_deriv");
	return 2.0 * (1.0 - p) / (p * p * p);
}

double g_func(double p)
{
	require_upper_half(p, "g_func");
	const double q = 1.0 - p;
	return q * q / (2.0 * p - 1.0);
}

double g_deriv(double p)
{
	require_upper_half(p, "g_deriv");
	const double s = 2.0 * p - 1.0;
	return -2.0 * p * (1.0 - p) / (s * s);
}

double beta_residue(double p_c)
{
	if (!(p_c > 0.5 && p_c < 1.0))
		throw DomainError("beta_residue: p_c must lie in (1/2,1), got " + std::to_string(p_c));
	const double num = rho_mf_deriv(p_c);
	const double den = num - g_deriv(p_c);
	if (den == 0.0 || !std::isfinite(den))
		throw SingularityError("beta_residue: vanishing denominator at p_c=" + std::to_string(p_c));
	return num / den;
}

ComplementaryBeta beta_complementary()
{
	const double b2 = 1.0 - beta_residue(golden().phi_conj);
	return {b2, 1.0 / b2 >= 2.0};
}

std::pair<double, double> mf_critical_coincidence()
{
	const double x = golden().phi_conj;
	return {rho_mf(x), g_func(x)};
}

} // namespace gpolar::analytic
