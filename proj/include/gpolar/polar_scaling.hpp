#pragma once

#include "gpolar/critical_fit.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

// Empirical blocklength scaling N ~ (C - R)^-mu from exact synthetic-channel
// erasure spectra of the BEC and a union-bound rate selection.
namespace gpolar::scaling {

inline constexpr int max_spectrum_stages = 24;

struct Spectrum
{
	int n = 0;
	double z0 = 0.0;
	std::vector<double> values; // 2^n erasure probabilities, ascending

	double mean() const noexcept;
};

// All 2^n leaves of the polarization tree rooted at z0, sorted.
Spectrum synthetic_spectrum(double z0, int n);

// Leaves in doubling order (children of entry i at 2i and 2i+1), unsorted.
std::vector<double> spectrum_leaves(double z0, int n);

struct ScalingPoint
{
	int n = 0;
	std::uint64_t N = 0;
	std::uint64_t k = 0; // information set size
	double rate = 0.0;
	double gap = 0.0; // (1 - z0) - rate
	double pe_target = 0.0;
	bool degenerate = false; // gap <= 0, excluded from fits
};

// Largest k whose k smallest erasure probabilities sum to at most pe_target.
ScalingPoint max_rate(const Spectrum &spec, double pe_target);

// mu = -slope of log2 N against log2 gap over the non-degenerate points.
fit::ExponentFit fit_scaling_exponent(std::span<const ScalingPoint> points);

// max_rate at every n in [n_lo, n_hi], sharing one doubling pass.
std::vector<ScalingPoint> scaling_points(double z0, double pe_target, int n_lo, int n_hi);

// Little-endian dump: "PSPC", u32 version, u32 n, u32 reserved (16-byte
// header), then f64 z0, then 2^n f64 values.
inline constexpr std::uint32_t spectrum_format_version = 1;
void write_spectrum(std::ostream &os, const Spectrum &spec);
Spectrum read_spectrum(std::istream &is);

} // namespace gpolar::scaling
