#include "gpolar/polar_scaling.hpp"

#include "gpolar/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <set>
#include <string>

namespace gpolar::scaling {

namespace {

void check_arguments(double z0, int n)
{
	if (!(z0 > 0.0 && z0 < 1.0))
		throw DomainError("spectrum: z0 must lie in (0,1), got " + std::to_string(z0));
	if (n < 0)
		throw DomainError("spectrum: n must be non-negative");
	if (n > max_spectrum_stages)
		throw ResourceError("spectrum: n=" + std::to_string(n) + " exceeds the limit of " +
		                    std::to_string(max_spectrum_stages));
}

void double_in_place(std::vector<double> &a)
{
	const std::size_t half = a.size();
	a.resize(2 * half);
	for (std::size_t i = half; i-- > 0;) {
		const double v = a[i];
		a[2 * i + 1] = v * (2.0 - v);
		a[2 * i] = v * v;
	}
}

ScalingPoint select_rate(std::span<const double> sorted, int n, double z0, double pe_target)
{
	if (sorted.empty())
		throw DomainError("max_rate: empty spectrum");
	if (!(pe_target > 0.0 && pe_target < 1.0))
		throw DomainError("max_rate: pe_target must lie in (0,1)");
	ScalingPoint pt;
	pt.n = n;
	pt.N = sorted.size();
	pt.pe_target = pe_target;
	double sum = 0.0;
	std::uint64_t k = 0;
	for (double v : sorted) {
		if (sum + v > pe_target)
			break;
		sum += v;
		++k;
	}
	pt.k = k;
	pt.rate = static_cast<double>(k) / static_cast<double>(pt.N);
	pt.gap = (1.0 - z0) - pt.rate;
	pt.degenerate = !(pt.gap > 0.0);
	return pt;
}

template <typename T>
void put(std::ostream &os, T v)
{
	static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
	unsigned char b[sizeof(T)];
	std::memcpy(b, &v, sizeof(T));
	if constexpr (std::endian::native == std::endian::big)
		std::reverse(b, b + sizeof(T));
	os.write(reinterpret_cast<const char *>(b), sizeof(T));
}

template <typename T>
T get(std::istream &is)
{
	unsigned char b[sizeof(T)];
	if (!is.read(reinterpret_cast<char *>(b), sizeof(T)))
		throw DomainError("spectrum file: truncated");
	if constexpr (std::endian::native == std::endian::big)
		std::reverse(b, b + sizeof(T));
	T v;
	std::memcpy(&v, b, sizeof(T));
	return v;
}

} // namespace

double Spectrum::mean() const noexcept
{
	double s = 0.0;
	for (double v : values)
		s += v;
	return values.empty() ? 0.0 : s / static_cast<double>(values.size());
}

std::vector<double> spectrum_leaves(double z0, int n)
{
	check_arguments(z0, n);
	std::vector<double> a;
	a.reserve(std::size_t{1} << n);
	a.push_back(z0);
	for (int level = 0; level < n; ++level)
		double_in_place(a);
	return a;
}

Spectrum synthetic_spectrum(double z0, int n)
{
	Spectrum s;
	s.n = n;
	s.z0 = z0;
	s.values = spectrum_leaves(z0, n);
	std::sort(s.values.begin(), s.values.end());
	return s;
}

ScalingPoint max_rate(const Spectrum &spec, double pe_target)
{
	return select_rate(spec.values, spec.n, spec.z0, pe_target);
}

fit::ExponentFit fit_scaling_exponent(std::span<const ScalingPoint> points)
{
	std::vector<double> x, y;
	std::set<int> stages;
	std::set<double> gaps;
	for (const auto &pt : points) {
		if (pt.degenerate || !(pt.gap > 0.0))
			continue;
		if (!stages.insert(pt.n).second)
			throw FitError("fit_scaling_exponent: repeated n=" + std::to_string(pt.n));
		if (!gaps.insert(pt.gap).second)
			throw FitError("fit_scaling_exponent: identical gaps at different block lengths");
		x.push_back(std::log2(pt.gap));
		y.push_back(std::log2(static_cast<double>(pt.N)));
	}
	if (x.size() < 3)
		throw FitError("fit_scaling_exponent: need at least 3 usable points, got " + std::to_string(x.size()));

	const auto lf = fit::least_squares(x, y);
	fit::ExponentFit out;
	out.value = -lf.slope;
	out.std_error = lf.slope_std_error;
	const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
	out.window = {*mn, *mx};
	out.n_points = static_cast<int>(x.size());
	out.residual_rms = lf.residual_rms;
	out.method = "log2 N vs log2 gap least squares";
	return out;
}

std::vector<ScalingPoint> scaling_points(double z0, double pe_target, int n_lo, int n_hi)
{
	if (n_lo < 0 || n_lo > n_hi)
		throw DomainError("scaling_points: need 0 <= n_lo <= n_hi");
	check_arguments(z0, n_hi);
	std::vector<double> leaves{z0};
	leaves.reserve(std::size_t{1} << n_hi);
	std::vector<double> sorted;
	std::vector<ScalingPoint> out;
	for (int n = 0; n <= n_hi; ++n) {
		if (n > 0)
			double_in_place(leaves);
		if (n < n_lo)
			continue;
		sorted.assign(leaves.begin(), leaves.end());
		std::sort(sorted.begin(), sorted.end());
		out.push_back(select_rate(sorted, n, z0, pe_target));
	}
	return out;
}

void write_spectrum(std::ostream &os, const Spectrum &spec)
{
	os.write("PSPC", 4);
	put<std::uint32_t>(os, spectrum_format_version);
	put<std::uint32_t>(os, static_cast<std::uint32_t>(spec.n));
	put<std::uint32_t>(os, 0);
	put<double>(os, spec.z0);
	for (double v : spec.values)
		put<double>(os, v);
	if (!os)
		throw Error("spectrum file: write failed");
}

Spectrum read_spectrum(std::istream &is)
{
	char magic[4];
	if (!is.read(magic, 4) || std::memcmp(magic, "PSPC", 4) != 0)
		throw DomainError("spectrum file: bad magic");
	const auto version = get<std::uint32_t>(is);
	if (version != spectrum_format_version)
		throw DomainError("spectrum file: unsupported version " + std::to_string(version));
	Spectrum s;
	const auto n = get<std::uint32_t>(is);
	if (n > static_cast<std::uint32_t>(max_spectrum_stages))
		throw ResourceError("spectrum file: n=" + std::to_string(n) + " too large");
	s.n = static_cast<int>(n);
	(void)get<std::uint32_t>(is);
	s.z0 = get<double>(is);
	s.values.resize(std::size_t{1} << n);
	for (auto &v : s.values)
		v = get<double>(is);
	return s;
}

} // namespace gpolar::scaling
