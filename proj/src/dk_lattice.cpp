#include "gpolar/dk_lattice.hpp"

#include "gpolar/errors.hpp"
#include "gpolar/parallel.hpp"
#include "gpolar/rng.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace gpolar::dk {

DKParams::DKParams(double p1_, double p2_) : p1(p1_), p2(p2_)
{
	if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
		throw DomainError("DK parameters must lie in [0,1], got (" + std::to_string(p1) + ", " +
		                  std::to_string(p2) + ")");
}

LatticeRow::LatticeRow(std::size_t width) : width_(width), words_((width + 63) / 64, 0)
{
	if (width < 2)
		throw DomainError("lattice width must be >= 2");
}

LatticeRow LatticeRow::empty(std::size_t width) { return LatticeRow(width); }

LatticeRow LatticeRow::full(std::size_t width)
{
	LatticeRow r(width);
	std::fill(r.words_.begin(), r.words_.end(), ~std::uint64_t{0});
	if (width % 64)
		r.words_.back() = (std::uint64_t{1} << (width % 64)) - 1;
	return r;
}

LatticeRow LatticeRow::single(std::size_t width, std::size_t site)
{
	LatticeRow r(width);
	if (site >= width)
		throw DomainError("seed site outside the lattice");
	r.set(site, true);
	return r;
}

void LatticeRow::set(std::size_t i, bool v) noexcept
{
	const std::uint64_t bit = std::uint64_t{1} << (i & 63);
	if (v)
		words_[i >> 6] |= bit;
	else
		words_[i >> 6] &= ~bit;
}

void LatticeRow::set_time(std::int64_t t) noexcept
{
	time_ = t;
	parity_ = (t % 2) == 0 ? Parity::even : Parity::odd;
}

std::size_t LatticeRow::count() const noexcept
{
	std::size_t n = 0;
	for (auto w : words_)
		n += static_cast<std::size_t>(std::popcount(w));
	return n;
}

bool LatticeRow::is_empty() const noexcept
{
	return std::all_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w == 0; });
}

bool LatticeRow::subset_of(const LatticeRow &other) const noexcept
{
	if (other.width_ != width_)
		return false;
	for (std::size_t w = 0; w < words_.size(); ++w)
		if (words_[w] & ~other.words_[w])
			return false;
	return true;
}

namespace {

// p in [0,1] as a 64-bit fixed-point threshold: u < p  <=>  u64 < threshold.
struct Threshold
{
	std::uint64_t bits = 0;
	bool all = false;  // p == 1
	bool none = false; // p == 0

	explicit Threshold(double p)
	{
		if (p >= 1.0)
			all = true;
		else if (p <= 0.0)
			none = true;
		else
			bits = static_cast<std::uint64_t>(std::ldexp(p, 64));
	}
};

} // namespace

// Word-parallel DK update. For each word the candidate sites (one or two
// active parents) compare their 64-bit uniform against p1 or p2 one bit plane
// at a time, most significant first; the loop ends once every candidate's
// comparison is decided.
class Stepper
{
public:
	Stepper(const DKParams &params, RandomStream stream) : t1_(params.p1), t2_(params.p2), key_(stream.key) {}

	// Computes words [wlo, whi] of `out` from `in`. Words of `in` outside
	// [wlo+1, whi-1] must be zero unless the range is the whole ring.
	void step(const LatticeRow &in, LatticeRow &out, std::size_t wlo, std::size_t whi) const
	{
		const auto src = std::span<const std::uint64_t>(in.words_);
		auto dst = std::span<std::uint64_t>(out.words_);
		const std::size_t nw = src.size();
		const std::size_t L = in.width_;
		const std::size_t tail = L % 64;
		const std::uint64_t tail_mask = tail ? (std::uint64_t{1} << tail) - 1 : ~std::uint64_t{0};
		const bool even = in.parity_ == Parity::even;
		const std::uint64_t t = static_cast<std::uint64_t>(in.time_);

		for (std::size_t w = wlo; w <= whi; ++w) {
			const std::uint64_t a = src[w];
			std::uint64_t b;
			if (even) {
				// b_i = s_{i+1}
				b = a >> 1;
				if (w + 1 < nw)
					b |= src[w + 1] << 63;
				else
					b |= (src[0] & 1u) << ((L - 1) & 63);
			} else {
				// b_i = s_{i-1}
				b = a << 1;
				if (w > 0)
					b |= src[w - 1] >> 63;
				else
					b |= (src[nw - 1] >> ((L - 1) & 63)) & 1u;
				if (w + 1 == nw)
					b &= tail_mask;
			}
			dst[w] = draw(a ^ b, a & b, t, w);
		}
		out.width_ = L;
		out.time_ = in.time_ + 1;
		out.parity_ = even ? Parity::odd : Parity::even;
	}

	void step_full(const LatticeRow &in, LatticeRow &out) const { step(in, out, 0, in.words_.size() - 1); }

private:
	std::uint64_t draw(std::uint64_t one, std::uint64_t two, std::uint64_t t, std::uint64_t w) const noexcept
	{
		std::uint64_t result = 0;
		std::uint64_t open1 = resolve(t1_, one, result);
		std::uint64_t open2 = resolve(t2_, two, result);
		if (!(open1 | open2))
			return result;
		const std::uint64_t base = rng::hash(key_, t, w);
		for (int j = 63; j >= 0 && (open1 | open2); --j) {
			const std::uint64_t plane = rng::mix64(base + static_cast<std::uint64_t>(j) * rng::golden_gamma);
			const std::uint64_t bit1 = ((t1_.bits >> j) & 1u) ? ~std::uint64_t{0} : 0;
			const std::uint64_t bit2 = ((t2_.bits >> j) & 1u) ? ~std::uint64_t{0} : 0;
			result |= open1 & ~plane & bit1;
			result |= open2 & ~plane & bit2;
			open1 &= ~(plane ^ bit1);
			open2 &= ~(plane ^ bit2);
		}
		return result;
	}

	// Handles p in {0,1} without drawing; returns the still-open candidates.
	static std::uint64_t resolve(const Threshold &th, std::uint64_t candidates, std::uint64_t &result) noexcept
	{
		if (th.all) {
			result |= candidates;
			return 0;
		}
		if (th.none)
			return 0;
		return candidates;
	}

	Threshold t1_;
	Threshold t2_;
	std::uint64_t key_;
};

LatticeRow dk_step(const LatticeRow &row, const DKParams &params, RandomStream stream)
{
	LatticeRow out = LatticeRow::empty(row.width());
	Stepper(params, stream).step_full(row, out);
	return out;
}

namespace {

constexpr std::uint64_t density_tag = 0x64656E73697479ull;
constexpr std::uint64_t pair_tag = 0x70616972ull;

void require_steps(std::int64_t t, const char *name)
{
	if (t < 0)
		throw ConfigurationError(std::string(name) + " must be non-negative");
}

} // namespace

std::vector<double> density_run(const DKParams &params, std::size_t L, std::int64_t t_max, std::uint64_t seed)
{
	if (L < 64)
		throw ConfigurationError("density_run: L must be >= 64, got " + std::to_string(L));
	require_steps(t_max, "density_run: t_max");

	const Stepper stepper(params, {rng::hash(seed, density_tag)});
	LatticeRow cur = LatticeRow::full(L);
	LatticeRow next = LatticeRow::empty(L);
	std::vector<double> rho;
	rho.reserve(static_cast<std::size_t>(t_max) + 1);
	const double inv = 1.0 / static_cast<double>(L);
	rho.push_back(static_cast<double>(cur.count()) * inv);
	for (std::int64_t t = 0; t < t_max; ++t) {
		if (rho.back() == 0.0) {
			rho.push_back(0.0);
			continue;
		}
		stepper.step_full(cur, next);
		std::swap(cur, next);
		rho.push_back(static_cast<double>(cur.count()) * inv);
	}
	return rho;
}

PercolationOutcome percolation_run(const DKParams &params, std::size_t L, std::int64_t t_max, std::uint64_t seed,
                                   SpreadOptions opts)
{
	require_steps(t_max, "percolation_run: t_max");
	if (L <= 2 * static_cast<std::size_t>(t_max))
		throw ConfigurationError("percolation_run: L=" + std::to_string(L) + " must exceed 2*t_max=" +
		                         std::to_string(2 * t_max));

	const Stepper stepper(params, {seed});
	LatticeRow cur = LatticeRow::single(L, L / 2);
	LatticeRow next = LatticeRow::empty(L);
	const std::size_t nw = cur.words().size();
	std::size_t lo = (L / 2) >> 6;
	std::size_t hi = lo;

	PercolationOutcome out;
	for (std::int64_t t = 0; t < t_max; ++t) {
		const std::size_t wlo = lo > 0 ? lo - 1 : 0;
		const std::size_t whi = std::min(hi + 1, nw - 1);
		stepper.step(cur, next, wlo, whi);
		// clear the previous row so the buffer is all-zero outside its window
		auto old = cur.words();
		std::fill(old.begin() + static_cast<std::ptrdiff_t>(lo), old.begin() + static_cast<std::ptrdiff_t>(hi) + 1, 0);
		std::swap(cur, next);

		const auto words = cur.words();
		std::size_t first = whi + 1, last = 0, active = 0;
		for (std::size_t w = wlo; w <= whi; ++w) {
			if (words[w]) {
				first = std::min(first, w);
				last = w;
				active += static_cast<std::size_t>(std::popcount(words[w]));
			}
		}
		if (active == 0) {
			out.extinction_time = t + 1;
			return out;
		}
		lo = first;
		hi = last;
		if (opts.active_cap && active >= opts.active_cap) {
			out.capped = true;
			break;
		}
	}
	out.survived = true;
	return out;
}

std::vector<PercolationOutcome> percolation_trials(const DKParams &params, std::size_t L, std::int64_t t_max,
                                                   std::uint64_t trials, std::uint64_t seed, unsigned threads,
                                                   SpreadOptions opts)
{
	if (L <= 2 * static_cast<std::size_t>(std::max<std::int64_t>(t_max, 0)))
		throw ConfigurationError("percolation_trials: L=" + std::to_string(L) + " must exceed 2*t_max=" +
		                         std::to_string(2 * t_max));
	std::vector<PercolationOutcome> out(trials);
	parallel_for(trials, threads, [&](std::size_t b, std::size_t e) {
		for (std::size_t k = b; k < e; ++k)
			out[k] = percolation_run(params, L, t_max, rng::hash(seed, k), opts);
	});
	return out;
}

SurvivalEstimate survival_probability(const DKParams &params, std::size_t L, std::int64_t t_max,
                                      std::uint64_t trials, std::uint64_t seed, unsigned threads, SpreadOptions opts)
{
	if (trials < 100)
		throw ConfigurationError("survival_probability: trials must be >= 100");
	const auto outcomes = percolation_trials(params, L, t_max, trials, seed, threads, opts);
	const auto alive = std::count_if(outcomes.begin(), outcomes.end(), [](const auto &o) { return o.survived; });
	const double n = static_cast<double>(trials);
	const double p = static_cast<double>(alive) / n;
	return {p, std::sqrt(p * (1.0 - p) / n)};
}

PairCorrelation pair_correlation(const DKParams &params, std::size_t L, std::int64_t t_burn, std::int64_t t_sample,
                                 std::uint64_t seed)
{
	if (L < 2)
		throw ConfigurationError("pair_correlation: L must be >= 2");
	require_steps(t_burn, "pair_correlation: t_burn");
	if (t_sample < 1)
		throw ConfigurationError("pair_correlation: t_sample must be >= 1");

	const Stepper stepper(params, {rng::hash(seed, pair_tag)});
	LatticeRow cur = LatticeRow::full(L);
	LatticeRow next = LatticeRow::empty(L);
	for (std::int64_t t = 0; t < t_burn; ++t) {
		stepper.step_full(cur, next);
		std::swap(cur, next);
	}

	// Adjacent ring cells (i, i+1) are the two parents of a common child.
	double pairs = 0.0, singles = 0.0;
	for (std::int64_t t = 0; t < t_sample; ++t) {
		if (cur.is_empty())
			throw ExtinctionError("pair_correlation: process died at t=" + std::to_string(cur.time()));
		const auto w = cur.words();
		const std::size_t nw = w.size();
		std::size_t pc = 0, sc = 0;
		for (std::size_t k = 0; k < nw; ++k) {
			std::uint64_t right = w[k] >> 1;
			if (k + 1 < nw)
				right |= w[k + 1] << 63;
			else
				right |= (w[0] & 1u) << ((L - 1) & 63);
			pc += static_cast<std::size_t>(std::popcount(w[k] & right));
			sc += static_cast<std::size_t>(std::popcount(w[k]));
		}
		pairs += static_cast<double>(pc);
		singles += static_cast<double>(sc);
		stepper.step_full(cur, next);
		std::swap(cur, next);
	}
	const double norm = static_cast<double>(L) * static_cast<double>(t_sample);
	const double mean = singles / norm;
	return {pairs / norm, mean * mean};
}

std::vector<double> bond_probability_evolution(double p, std::span<const double> init, int steps)
{
	if (!(p >= 0.0 && p <= 1.0))
		throw DomainError("bond_probability_evolution: p must lie in [0,1]");
	if (init.size() < 2)
		throw DomainError("bond_probability_evolution: need at least two sites");
	if (steps < 0)
		throw DomainError("bond_probability_evolution: steps must be non-negative");
	for (double x : init)
		if (!(x >= 0.0 && x <= 1.0))
			throw DomainError("bond_probability_evolution: initial values must lie in [0,1]");

	const std::size_t L = init.size();
	std::vector<double> cur(init.begin(), init.end()), next(L);
	const double pp = p * p;
	for (int t = 0; t < steps; ++t) {
		const bool even = (t % 2) == 0;
		for (std::size_t i = 0; i < L; ++i) {
			const double a = cur[i];
			const double b = even ? cur[(i + 1) % L] : cur[(i + L - 1) % L];
			next[i] = p * a + p * b - pp * a * b;
		}
		std::swap(cur, next);
	}
	return cur;
}

void OrderParameterCurve::validate() const
{
	for (std::size_t i = 0; i < points.size(); ++i) {
		const auto &pt = points[i];
		if (!(pt.value >= 0.0 && pt.value <= 1.0))
			throw DomainError("order parameter values must lie in [0,1]");
		if (i > 0 && !(pt.p > points[i - 1].p))
			throw DomainError("order parameter curve must be strictly increasing in p");
	}
}

OrderParameterCurve density_curve(const Family &family, std::span<const double> ps, const DensityMeasurement &m,
                                  std::uint64_t seed, unsigned threads)
{
	if (!(m.measure_from >= 0.0 && m.measure_from < 1.0) || m.batches < 2)
		throw ConfigurationError("density_curve: invalid measurement window");
	OrderParameterCurve curve;
	curve.kind = OrderParameter::density;
	curve.points.resize(ps.size());
	parallel_for(ps.size(), threads, [&](std::size_t b, std::size_t e) {
		for (std::size_t k = b; k < e; ++k) {
			const auto rho = density_run(family(ps[k]), m.L, m.t_max, rng::hash(seed, k));
			const auto first = static_cast<std::size_t>(std::ceil(m.measure_from * static_cast<double>(m.t_max)));
			const std::size_t count = rho.size() - first;
			const std::size_t batches = std::min<std::size_t>(static_cast<std::size_t>(m.batches), count);
			// batch means give the error bar for the time average
			std::vector<double> means(batches, 0.0);
			for (std::size_t j = 0; j < batches; ++j) {
				const std::size_t bb = first + count * j / batches;
				const std::size_t be = first + count * (j + 1) / batches;
				double s = 0.0;
				for (std::size_t t = bb; t < be; ++t)
					s += rho[t];
				means[j] = s / static_cast<double>(be - bb);
			}
			double mean = 0.0;
			for (double x : means)
				mean += x;
			mean /= static_cast<double>(batches);
			double var = 0.0;
			for (double x : means)
				var += (x - mean) * (x - mean);
			const double se = batches > 1 ? std::sqrt(var / static_cast<double>(batches - 1) / static_cast<double>(batches)) : 0.0;
			curve.points[k] = {ps[k], mean, se};
		}
	});
	curve.validate();
	return curve;
}

OrderParameterCurve survival_curve(const Family &family, std::span<const double> ps, std::size_t L,
                                   std::int64_t t_max, std::uint64_t trials, std::uint64_t seed, unsigned threads,
                                   SpreadOptions opts)
{
	OrderParameterCurve curve;
	curve.kind = OrderParameter::percolation;
	for (std::size_t k = 0; k < ps.size(); ++k) {
		const auto s = survival_probability(family(ps[k]), L, t_max, trials, rng::hash(seed, k), threads, opts);
		curve.points.push_back({ps[k], s.estimate, s.std_error});
	}
	curve.validate();
	return curve;
}

namespace {

std::string format_real(double x)
{
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", x);
	return buf;
}

const char *kind_name(OrderParameter k) { return k == OrderParameter::density ? "density" : "percolation"; }

} // namespace

void write_curve_csv(std::ostream &os, const OrderParameterCurve &curve)
{
	os << "p,value,stderr,kind\n";
	for (const auto &pt : curve.points)
		os << format_real(pt.p) << ',' << format_real(pt.value) << ',' << format_real(pt.std_error) << ','
		   << kind_name(curve.kind) << '\n';
}

OrderParameterCurve read_curve_csv(std::istream &is)
{
	std::string line;
	if (!std::getline(is, line) || line != "p,value,stderr,kind")
		throw DomainError("curve CSV: missing or unexpected header");
	OrderParameterCurve curve;
	bool have_kind = false;
	while (std::getline(is, line)) {
		if (line.empty())
			continue;
		std::istringstream ss(line);
		std::string f[4];
		for (auto &field : f)
			if (!std::getline(ss, field, ','))
				throw DomainError("curve CSV: short row '" + line + "'");
		OrderParameter kind;
		if (f[3] == "density")
			kind = OrderParameter::density;
		else if (f[3] == "percolation")
			kind = OrderParameter::percolation;
		else
			throw DomainError("curve CSV: unknown kind '" + f[3] + "'");
		if (have_kind && kind != curve.kind)
			throw DomainError("curve CSV: mixed kinds");
		curve.kind = kind;
		have_kind = true;
		try {
			curve.points.push_back({std::stod(f[0]), std::stod(f[1]), std::stod(f[2])});
		} catch (const std::exception &) {
			throw DomainError("curve CSV: bad number in '" + line + "'");
		}
	}
	curve.validate();
	return curve;
}

std::string encode_rle(const LatticeRow &row)
{
	std::string out = std::to_string(row.time());
	const std::size_t L = row.width();
	std::size_t i = 0;
	while (i < L) {
		if (!row.get(i)) {
			++i;
			continue;
		}
		const std::size_t start = i;
		while (i < L && row.get(i))
			++i;
		out += ' ';
		out += std::to_string(start);
		out += ':';
		out += std::to_string(i - start);
	}
	return out;
}

LatticeRow decode_rle(const std::string &line, std::size_t width)
{
	std::istringstream ss(line);
	long long t;
	if (!(ss >> t) || t < 0)
		throw DomainError("RLE row: missing time");
	LatticeRow row = LatticeRow::empty(width);
	std::string run;
	while (ss >> run) {
		const auto colon = run.find(':');
		if (colon == std::string::npos)
			throw DomainError("RLE row: malformed run '" + run + "'");
		const std::size_t start = std::stoull(run.substr(0, colon));
		const std::size_t len = std::stoull(run.substr(colon + 1));
		if (start + len > width)
			throw DomainError("RLE row: run exceeds width");
		for (std::size_t i = start; i < start + len; ++i)
			row.set(i, true);
	}
	row.set_time(t);
	return row;
}

} // namespace gpolar::dk
