#pragma once

#include <utility>

// Closed-form layer: golden-ratio constants, the mean-field bond-DP density
// and its derivative, the nearest-neighbour conditional g(p), and the residue
// formula for the order-parameter exponent.
namespace gpolar::analytic {

struct GoldenConstants
{
	double phi;           // (1+sqrt 5)/2
	double phi_conj;      // 1/phi = phi - 1
	double beta_analytic; // 1/(2+phi)
	double mu_analytic;   // 2+phi
};

// Computed once in long double and rounded to double.
const GoldenConstants &golden() noexcept;

// Published reference values the toolkit compares against.
struct ReferenceConstants
{
	double mu_num = 3.627;          // eigen-analysis of the polarization operator
	double beta_num = 0.276486;     // best series estimate of the DP exponent
	double beta_num_err = 0.000008;
	double mu_lower = 3.579;
	double mu_upper = 3.639;
	double mu_closed_lower = 3.589; // (1 - 1/(2 ln 2))^-1, stored as quoted
	double mu_bmsc_upper = 4.714;   // any binary memoryless symmetric channel
	double mu_optimal = 2.0;        // random coding
	double pc_bond = 0.6447;
};

const ReferenceConstants &reference() noexcept;

// (1 - 1/(2 ln 2))^-1 evaluated, for cross-checking the stored literal.
double mu_closed_lower_computed() noexcept;

// (2p-1)/p^2. Negative below p=1/2; callers decide what that means.
double rho_mf(double p);

// d/dp rho_mf = 2(1-p)/p^3.
double rho_mf_deriv(double p);

// (1-p)^2/(2p-1) on (1/2, 1].
double g_func(double p);

// d/dp g = -2p(1-p)/(2p-1)^2 on (1/2, 1].
double g_deriv(double p);

// rho_mf'(pc) / (rho_mf'(pc) - g'(pc)); equals 1/(2+phi) at pc = 1/phi.
double beta_residue(double p_c);

struct ComplementaryBeta
{
	double value;
	bool valid_for_mu; // 1/value must be >= 2 to be a scaling exponent
};

// 1 - beta_residue(1/phi), the rejected second root.
ComplementaryBeta beta_complementary();

// (rho_mf(1/phi), g_func(1/phi)).
std::pair<double, double> mf_critical_coincidence();

} // namespace gpolar::analytic
