#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

// 1+1 dimensional Domany-Kinzel automaton on a tilted square lattice.
//
// The diagonal lattice is stored as a ring of L sites. On even parity the
// parents of new site i are (i, i+1); on odd parity they are (i-1, i), all
// indices mod L. A site with one active parent activates with probability
// p1, with two active parents with probability p2, with none never.
namespace gpolar::dk {

struct DKParams
{
	double p1;
	double p2;

	DKParams(double p1, double p2);

	static DKParams bond(double p) { return {p, 2.0 * p - p * p}; }
	static DKParams site(double p) { return {p, p}; }
	static DKParams compact(double p1) { return {p1, 1.0}; }
	static DKParams w18(double p1) { return {p1, 0.0}; }
};

using Family = std::function<DKParams(double)>;

enum class Parity { even, odd };

class LatticeRow
{
public:
	static LatticeRow empty(std::size_t width);
	static LatticeRow full(std::size_t width);
	static LatticeRow single(std::size_t width, std::size_t site);

	std::size_t width() const noexcept { return width_; }
	Parity parity() const noexcept { return parity_; }
	std::int64_t time() const noexcept { return time_; }

	bool get(std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }
	void set(std::size_t i, bool v) noexcept;
	// Rows start at t=0 with even parity, so parity is t mod 2.
	void set_time(std::int64_t t) noexcept;
	std::size_t count() const noexcept;
	bool is_empty() const noexcept;
	// Every active site of *this is also active in other.
	bool subset_of(const LatticeRow &other) const noexcept;

	std::span<const std::uint64_t> words() const noexcept { return words_; }
	std::span<std::uint64_t> words() noexcept { return words_; }

	bool operator==(const LatticeRow &) const = default;

private:
	friend class Stepper;
	explicit LatticeRow(std::size_t width);

	std::size_t width_;
	std::vector<std::uint64_t> words_;
	Parity parity_ = Parity::even;
	std::int64_t time_ = 0;
};

// Source of per-site uniforms u(t, i), a pure function of (key, t, i).
struct RandomStream
{
	std::uint64_t key;
};

LatticeRow dk_step(const LatticeRow &row, const DKParams &params, RandomStream stream);

// Density of active sites rho_t for t = 0..t_max, starting from a fully
// active ring of width L.
std::vector<double> density_run(const DKParams &params, std::size_t L, std::int64_t t_max, std::uint64_t seed);

struct PercolationOutcome
{
	bool survived = false;
	std::optional<std::int64_t> extinction_time; // first t with no active site
	bool capped = false;                          // stopped early at active_cap

	bool alive_at(std::int64_t t) const noexcept { return !extinction_time || *extinction_time > t; }
};

struct SpreadOptions
{
	// Stop a run once this many sites are active and count it as surviving.
	// 0 disables the cap.
	std::size_t active_cap = 0;
};

// Spreading from one active site in an empty ring. Requires L > 2 t_max so
// the cluster can never meet itself around the ring.
PercolationOutcome percolation_run(const DKParams &params, std::size_t L, std::int64_t t_max, std::uint64_t seed,
                                   SpreadOptions opts = {});

// Trial k runs percolation_run with seed hash(seed, k).
std::vector<PercolationOutcome> percolation_trials(const DKParams &params, std::size_t L, std::int64_t t_max,
                                                   std::uint64_t trials, std::uint64_t seed, unsigned threads = 1,
                                                   SpreadOptions opts = {});

struct SurvivalEstimate
{
	double estimate;
	double std_error;
};

SurvivalEstimate survival_probability(const DKParams &params, std::size_t L, std::int64_t t_max,
                                      std::uint64_t trials, std::uint64_t seed, unsigned threads = 1,
                                      SpreadOptions opts = {});

struct PairCorrelation
{
	double e_pair;      // <s_a s_b> over the two parents of a site
	double e_single_sq; // <s>^2
};

PairCorrelation pair_correlation(const DKParams &params, std::size_t L, std::int64_t t_burn, std::int64_t t_sample,
                                 std::uint64_t seed);

// Deterministic iteration of x'_i = p x_a + p x_b - p^2 x_a x_b over the same
// alternating-parent ring, treating sites as independent.
std::vector<double> bond_probability_evolution(double p, std::span<const double> init, int steps);

enum class OrderParameter { density, percolation };

struct CurvePoint
{
	double p;
	double value;
	double std_error;
};

struct OrderParameterCurve
{
	std::vector<CurvePoint> points;
	OrderParameter kind = OrderParameter::density;

	void validate() const;
};

struct DensityMeasurement
{
	std::size_t L = 20000;
	std::int64_t t_max = 20000;
	// stationary average over t in [t_max * measure_from, t_max]
	double measure_from = 0.5;
	int batches = 20;
};

// Stationary density at each p of the family, one independent run per point.
OrderParameterCurve density_curve(const Family &family, std::span<const double> ps, const DensityMeasurement &m,
                                  std::uint64_t seed, unsigned threads = 1);

OrderParameterCurve survival_curve(const Family &family, std::span<const double> ps, std::size_t L,
                                   std::int64_t t_max, std::uint64_t trials, std::uint64_t seed,
                                   unsigned threads = 1, SpreadOptions opts = {});

// CSV with header "p,value,stderr,kind".
void write_curve_csv(std::ostream &os, const OrderParameterCurve &curve);
OrderParameterCurve read_curve_csv(std::istream &is);

// One line per row: the time, then each run of active sites as start:length.
std::string encode_rle(const LatticeRow &row);
// Reconstructs occupancy and time; parity follows from the time.
LatticeRow decode_rle(const std::string &line, std::size_t width);

} // namespace gpolar::dk
