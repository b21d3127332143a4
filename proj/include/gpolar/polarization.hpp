#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

// The BEC polarization process Z -> {Z^2, 2Z-Z^2}: exhaustive enumeration,
// Monte Carlo sampling, the simplified recursion Z -> {Z^2, Z}, and power
// iteration of the discretized polarization operator.
namespace gpolar::polarization {

enum class Branch { minus, plus };

struct ErasureState
{
	double z = 0.0;
	unsigned stage = 0;
};

// Closed interval [c, d] with 0 < c < d < 1.
class Interval
{
public:
	Interval(double c, double d);
	double c() const noexcept { return c_; }
	double d() const noexcept { return d_; }
	bool contains(double z) const noexcept { return z >= c_ && z <= d_; }
	// Image under z -> 1-z.
	Interval mirrored() const { return Interval(1.0 - d_, 1.0 - c_); }

private:
	double c_;
	double d_;
};

ErasureState polar_step(ErasureState s, Branch b) noexcept;
ErasureState simplified_step(ErasureState s, Branch b) noexcept;

struct WeightedValue
{
	double value;
	double probability;
};

// Law of Z_n under the simplified recursion: z0^(2^k) with weight C(n,k)/2^n,
// ordered by k = 0..n.
std::vector<WeightedValue> simplified_distribution(double z0, int n);

inline constexpr int max_exact_stages = 24;

// Pr(Z_n in iv | Z_0 = z0) by visiting all 2^n branch sequences.
double exact_unpolarized_prob(double z0, const Interval &iv, int n);

struct McEstimate
{
	double probability;
	double std_error;
};

McEstimate mc_unpolarized_prob(double z0, const Interval &iv, int n, std::uint64_t trials,
                               std::uint64_t seed, unsigned threads = 1);

// One sampling pass that records the estimate at every stage 0..n_max.
// Trial t uses the same branch bits as in mc_unpolarized_prob.
std::vector<McEstimate> mc_unpolarized_series(double z0, const Interval &iv, int n_max,
                                              std::uint64_t trials, std::uint64_t seed,
                                              unsigned threads = 1);

// Strictly increasing nodes inside [0,1].
class Grid
{
public:
	explicit Grid(std::vector<double> nodes);
	// intervals+1 equally spaced nodes from 0 to 1.
	static std::shared_ptr<const Grid> uniform(std::size_t intervals);

	std::span<const double> nodes() const noexcept { return nodes_; }
	std::size_t size() const noexcept { return nodes_.size(); }
	bool is_uniform() const noexcept { return uniform_; }

	// Index i with nodes[i] <= x <= nodes[i+1] and the linear weight of
	// nodes[i+1]; nullopt outside the node range.
	struct Cell
	{
		std::size_t index;
		double weight;
	};
	std::optional<Cell> locate(double x) const noexcept;

private:
	std::vector<double> nodes_;
	bool uniform_ = false;
};

enum class Interpolation { piecewise_linear };

// Samples of p(z) on a grid. Evaluation interpolates between nodes and
// returns 0 outside the node range.
class GridFunction
{
public:
	GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values);

	static GridFunction constant(std::shared_ptr<const Grid> grid, double v);
	static GridFunction indicator(std::shared_ptr<const Grid> grid, const Interval &iv);

	const Grid &grid() const noexcept { return *grid_; }
	const std::shared_ptr<const Grid> &grid_ptr() const noexcept { return grid_; }
	std::span<const double> values() const noexcept { return values_; }
	std::span<double> values() noexcept { return values_; }
	Interpolation interpolation() const noexcept { return Interpolation::piecewise_linear; }

	double operator()(double z) const noexcept;
	// Trapezoidal integral over the node range.
	double mass() const noexcept;

private:
	std::shared_ptr<const Grid> grid_;
	std::vector<double> values_;
};

// v'(z) = (f(z^2) + f(2z - z^2)) / 2
GridFunction operator_apply(const GridFunction &f);
// v'(z) = (f(z^2) + f(z)) / 2
GridFunction simplified_operator_apply(const GridFunction &f);

enum class PolarOperator { exact, simplified };

struct DecayEstimate
{
	double lambda = 1.0;      // per-stage mass ratio
	std::optional<double> mu; // -1/log2(lambda), absent when lambda is not in (0,1)
	int iterations = 0;
	double convergence_residual = 0.0;
};

// Renormalized power iteration: lambda_n = mass(A f_n) / mass(f_n), f_{n+1}
// rescaled to unit mass, stopping once |lambda_{n+1} - lambda_n| < tol.
DecayEstimate dominant_decay(const GridFunction &f0, int max_iters, double tol,
                             PolarOperator op = PolarOperator::exact);

} // namespace gpolar::polarization
