#include "gpolar/critical_fit.hpp"

#include "gpolar/errors.hpp"
#include "gpolar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gpolar::fit {

LinearFit least_squares(std::span<const double> x, std::span<const double> y, std::span<const double> w)
{
	const std::size_t n = x.size();
	if (y.size() != n || (!w.empty() && w.size() != n))
		throw FitError("least_squares: mismatched input lengths");
	if (n < 3)
		throw FitError("least_squares: need at least 3 points, got " + std::to_string(n));

	auto weight = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
	double s = 0.0, sx = 0.0, sy = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double wi = weight(i);
		if (!(wi > 0.0) || !std::isfinite(wi))
			throw FitError("least_squares: weights must be positive and finite");
		s += wi;
		sx += wi * x[i];
		sy += wi * y[i];
	}
	const double xm = sx / s, ym = sy / s;
	double sxx = 0.0, sxy = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double dx = x[i] - xm;
		sxx += weight(i) * dx * dx;
		sxy += weight(i) * dx * (y[i] - ym);
	}
	if (!(sxx > 0.0))
		throw FitError("least_squares: degenerate abscissa");

	LinearFit f{};
	f.slope = sxy / sxx;
	f.intercept = ym - f.slope * xm;
	double chi2 = 0.0, rss = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		const double r = y[i] - (f.intercept + f.slope * x[i]);
		chi2 += weight(i) * r * r;
		rss += r * r;
	}
	f.slope_std_error = std::sqrt(chi2 / static_cast<double>(n - 2) / sxx);
	f.residual_rms = std::sqrt(rss / static_cast<double>(n));
	return f;
}

ExponentFit fit_beta(const dk::OrderParameterCurve &curve, double p_c, std::pair<double, double> window)
{
	if (!(window.first < window.second))
		throw FitError("fit_beta: window must satisfy low < high");
	std::vector<double> x, y, w;
	bool weighted = true;
	for (const auto &pt : curve.points) {
		if (pt.p < window.first || pt.p > window.second)
			continue;
		if (!(pt.p > p_c))
			throw FitError("fit_beta: window point p=" + std::to_string(pt.p) + " is not above p_c");
		if (!(pt.value > 0.0))
			throw FitError("fit_beta: non-positive order parameter at p=" + std::to_string(pt.p));
		x.push_back(std::log(pt.p - p_c));
		y.push_back(std::log(pt.value));
		if (pt.std_error > 0.0) {
			const double sigma = pt.std_error / pt.value;
			w.push_back(1.0 / (sigma * sigma));
		} else {
			weighted = false;
		}
	}
	if (x.size() < 3)
		throw FitError("fit_beta: fewer than 3 points in window");
	if (!weighted)
		w.clear();

	const auto lf = least_squares(x, y, w);
	ExponentFit out;
	out.value = lf.slope;
	out.std_error = lf.slope_std_error;
	out.window = window;
	out.n_points = static_cast<int>(x.size());
	out.residual_rms = lf.residual_rms;
	out.method = weighted ? "weighted log-log least squares" : "log-log least squares";
	return out;
}

ExponentFit decay_rate(std::span<const SeriesPoint> series)
{
	if (series.size() < 3)
		throw FitError("decay_rate: need at least 3 points");
	for (const auto &pt : series)
		if (!(pt.value > 0.0))
			throw DomainError("decay_rate: values must be positive");

	const std::size_t n = series.size();
	const std::size_t tail = std::max<std::size_t>(3, (n + 1) / 2);
	const auto tail_points = series.subspan(n - tail);
	std::vector<double> x, y;
	for (const auto &pt : tail_points) {
		x.push_back(pt.index);
		y.push_back(std::log2(pt.value));
	}
	const auto lf = least_squares(x, y);
	ExponentFit out;
	out.value = lf.slope == 0.0 ? 0.0 : -lf.slope;
	out.std_error = lf.slope_std_error;
	out.window = {tail_points.front().index, tail_points.back().index};
	out.n_points = static_cast<int>(tail);
	out.residual_rms = lf.residual_rms;
	out.method = "tail log2 decay regression";
	return out;
}

ThresholdProbe probe_threshold(const dk::DKParams &params, double p, const ThresholdOptions &opts,
                               std::uint64_t probe_seed)
{
	if (opts.t_max < 16)
		throw ConfigurationError("find_threshold: t_max must be >= 16");
	const std::size_t L = 2 * static_cast<std::size_t>(opts.t_max) + 2;
	const auto outcomes = dk::percolation_trials(params, L, opts.t_max, opts.trials, probe_seed, opts.threads,
	                                             {opts.active_cap});
	ThresholdProbe probe;
	probe.p = p;
	const std::int64_t t_early = opts.t_max / 16, t_mid = opts.t_max / 4;
	for (const auto &o : outcomes) {
		probe.alive_early += o.alive_at(t_early);
		probe.alive_mid += o.alive_at(t_mid);
		probe.alive_late += o.alive_at(opts.t_max);
	}
	if (probe.alive_early == 0) {
		probe.above = false;
	} else if (probe.alive_late == probe.alive_early) {
		probe.above = true; // nothing died after the first checkpoint
	} else {
		const long double late = static_cast<long double>(probe.alive_late) * probe.alive_early;
		const long double mid = static_cast<long double>(probe.alive_mid) * probe.alive_mid;
		probe.above = late > mid;
	}
	return probe;
}

ThresholdEstimate find_threshold(const dk::Family &family, const ThresholdOptions &opts)
{
	if (!(opts.tol >= 1e-4))
		throw ConfigurationError("find_threshold: tol must be >= 1e-4");
	if (opts.trials < 1)
		throw ConfigurationError("find_threshold: trials must be >= 1");

	ThresholdEstimate est;
	est.trials_per_probe = opts.trials;
	est.t_max = opts.t_max;
	std::uint64_t index = 0;
	auto probe = [&](double p) {
		const auto pr = probe_threshold(family(p), p, opts, rng::hash(opts.seed, index++));
		est.probes.push_back(pr);
		return pr.above;
	};

	double lo = 0.0, hi = 1.0;
	if (probe(lo) || !probe(hi))
		throw BracketError("find_threshold: survival criterion does not change sign on [0,1]");
	while (hi - lo > opts.tol) {
		const double mid = 0.5 * (lo + hi);
		if (probe(mid))
			hi = mid;
		else
			lo = mid;
	}
	est.bracket = {lo, hi};
	est.p_c = 0.5 * (lo + hi);
	return est;
}

} // namespace gpolar::fit
