#pragma once

#include "gpolar/dk_lattice.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Exponent extraction shared by the percolation and polarization pipelines:
// least squares on log scales, threshold bisection, and decay-rate
// regression.
namespace gpolar::fit {

struct ExponentFit
{
	double value = 0.0;
	double std_error = 0.0;
	std::pair<double, double> window{0.0, 0.0}; // in the fit's abscissa
	int n_points = 0;
	double residual_rms = 0.0;
	std::string method;
};

struct LinearFit
{
	double slope;
	double intercept;
	double slope_std_error;
	double residual_rms;
};

// Weighted least squares y = intercept + slope * x. Empty weights means
// unweighted. The slope error is scaled by the reduced chi-square.
LinearFit least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

// Slope of ln(value) against ln(p - p_c) over the points with p inside
// window (absolute p values), weighted by (value/stderr)^2 when every point
// carries an error bar.
ExponentFit fit_beta(const dk::OrderParameterCurve &curve, double p_c, std::pair<double, double> window);

struct SeriesPoint
{
	double index;
	double value;
};

// Negated slope of log2(value) against index over the tail half of the
// series (at least three points).
ExponentFit decay_rate(std::span<const SeriesPoint> series);

struct ThresholdOptions
{
	std::int64_t t_max = 10000;
	std::uint64_t trials = 10000;
	double tol = 1e-3;
	std::uint64_t seed = 1;
	unsigned threads = 1;
	// runs reaching this many active sites count as surviving
	std::size_t active_cap = 1000;
};

// Survival counts of one bisection probe at t_max/16, t_max/4 and t_max.
struct ThresholdProbe
{
	double p = 0.0;
	std::uint64_t alive_early = 0;
	std::uint64_t alive_mid = 0;
	std::uint64_t alive_late = 0;
	bool above = false;
};

struct ThresholdEstimate
{
	double p_c = 0.0;
	std::pair<double, double> bracket{0.0, 1.0};
	std::uint64_t trials_per_probe = 0;
	std::int64_t t_max = 0;
	std::vector<ThresholdProbe> probes;
};

// At the critical point survival decays as a pure power of t, so log
// survival at three geometrically spaced times lies on a straight line.
// The probe is "above" when late survival beats that straight-line
// extrapolation (alive_late * alive_early > alive_mid^2), i.e. the survival
// curve bends toward a positive plateau.
ThresholdProbe probe_threshold(const dk::DKParams &params, double p, const ThresholdOptions &opts,
                               std::uint64_t probe_seed);

// Bisection on [0,1] until the bracket is no wider than tol.
ThresholdEstimate find_threshold(const dk::Family &family, const ThresholdOptions &opts);

} // namespace gpolar::fit
