#include "gpolar/polarization.hpp"

#include "gpolar/errors.hpp"
#include "gpolar/parallel.hpp"
#include "gpolar/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace gpolar::polarization {

Interval::Interval(double c, double d) : c_(c), d_(d)
{
	if (!(0.0 < c && c < d && d < 1.0))
		throw DomainError("interval must satisfy 0 < c < d < 1, got [" + std::to_string(c) + ", " +
		                  std::to_string(d) + "]");
}

namespace {

inline double square(double z) noexcept { return z * z; }
inline double complement_square(double z) noexcept { return z * (2.0 - z); }

void require_open_unit(double z0, const char *op)
{
	if (!(z0 > 0.0 && z0 < 1.0))
		throw DomainError(std::string(op) + ": z0 must lie in (0,1), got " + std::to_string(z0));
}

McEstimate binomial(std::uint64_t hits, std::uint64_t trials)
{
	const double p = static_cast<double>(hits) / static_cast<double>(trials);
	return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(trials))};
}

// Hit counts per stage 0..n_max for trials [begin, end).
void sample_trials(double z0, const Interval &iv, int n_max, std::uint64_t seed, std::uint64_t begin,
                   std::uint64_t end, std::span<std::uint64_t> hits)
{
	for (std::uint64_t trial = begin; trial < end; ++trial) {
		double z = z0;
		std::uint64_t bits = 0;
		hits[0] += iv.contains(z);
		for (int n = 0; n < n_max; ++n) {
			if (n % 64 == 0)
				bits = rng::hash(seed, trial, static_cast<std::uint64_t>(n / 64));
			z = (bits & 1u) ? complement_square(z) : square(z);
			bits >>= 1;
			hits[n + 1] += iv.contains(z);
		}
	}
}

std::vector<std::uint64_t> sample_hits(double z0, const Interval &iv, int n_max, std::uint64_t trials,
                                       std::uint64_t seed, unsigned threads)
{
	require_open_unit(z0, "mc_unpolarized_prob");
	if (n_max < 0)
		throw DomainError("mc_unpolarized_prob: n must be non-negative");
	if (trials == 0)
		throw DomainError("mc_unpolarized_prob: trials must be >= 1");

	const std::size_t stages = static_cast<std::size_t>(n_max) + 1;
	const std::size_t workers = std::max(1u, threads);
	std::vector<std::vector<std::uint64_t>> partial(workers, std::vector<std::uint64_t>(stages, 0));
	parallel_for(workers, threads, [&](std::size_t wb, std::size_t we) {
		for (std::size_t w = wb; w < we; ++w) {
			const std::uint64_t begin = trials * w / workers;
			const std::uint64_t end = trials * (w + 1) / workers;
			sample_trials(z0, iv, n_max, seed, begin, end, partial[w]);
		}
	});
	std::vector<std::uint64_t> hits(stages, 0);
	for (const auto &p : partial)
		for (std::size_t i = 0; i < stages; ++i)
			hits[i] += p[i];
	return hits;
}

} // namespace

ErasureState polar_step(ErasureState s, Branch b) noexcept
{
	return {b == Branch::minus ? square(s.z) : complement_square(s.z), s.stage + 1};
}

ErasureState simplified_step(ErasureState s, Branch b) noexcept
{
	return {b == Branch::minus ? square(s.z) : s.z, s.stage + 1};
}

std::vector<WeightedValue> simplified_distribution(double z0, int n)
{
	require_open_unit(z0, "simplified_distribution");
	if (n < 0 || n > 60)
		throw DomainError("simplified_distribution: n must lie in [0,60], got " + std::to_string(n));

	std::vector<WeightedValue> out;
	out.reserve(static_cast<std::size_t>(n) + 1);
	double value = z0;
	double weight = std::ldexp(1.0, -n);
	for (int k = 0; k <= n; ++k) {
		out.push_back({value, weight});
		value *= value;
		weight = weight * (n - k) / (k + 1);
	}
	return out;
}

double exact_unpolarized_prob(double z0, const Interval &iv, int n)
{
	require_open_unit(z0, "exact_unpolarized_prob");
	if (n < 0)
		throw DomainError("exact_unpolarized_prob: n must be non-negative");
	if (n > max_exact_stages)
		throw ResourceError("exact_unpolarized_prob: n=" + std::to_string(n) + " exceeds the enumeration limit of " +
		                    std::to_string(max_exact_stages));

	struct Node
	{
		double z;
		int depth;
	};
	std::vector<Node> stack;
	stack.reserve(static_cast<std::size_t>(n) + 2);
	stack.push_back({z0, 0});
	std::uint64_t inside = 0;
	while (!stack.empty()) {
		const Node node = stack.back();
		stack.pop_back();
		if (node.depth == n) {
			inside += iv.contains(node.z);
			continue;
		}
		stack.push_back({complement_square(node.z), node.depth + 1});
		stack.push_back({square(node.z), node.depth + 1});
	}
	return std::ldexp(static_cast<double>(inside), -n);
}

McEstimate mc_unpolarized_prob(double z0, const Interval &iv, int n, std::uint64_t trials, std::uint64_t seed,
                               unsigned threads)
{
	const auto hits = sample_hits(z0, iv, n, trials, seed, threads);
	return binomial(hits.back(), trials);
}

std::vector<McEstimate> mc_unpolarized_series(double z0, const Interval &iv, int n_max, std::uint64_t trials,
                                              std::uint64_t seed, unsigned threads)
{
	const auto hits = sample_hits(z0, iv, n_max, trials, seed, threads);
	std::vector<McEstimate> out;
	out.reserve(hits.size());
	for (auto h : hits)
		out.push_back(binomial(h, trials));
	return out;
}

Grid::Grid(std::vector<double> nodes) : nodes_(std::move(nodes))
{
	if (nodes_.size() < 2)
		throw DomainError("grid needs at least two nodes");
	for (std::size_t i = 0; i < nodes_.size(); ++i) {
		if (!(nodes_[i] >= 0.0 && nodes_[i] <= 1.0))
			throw DomainError("grid nodes must lie in [0,1]");
		if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
			throw DomainError("grid nodes must be strictly increasing");
	}
}

std::shared_ptr<const Grid> Grid::uniform(std::size_t intervals)
{
	if (intervals < 1)
		throw DomainError("uniform grid needs at least one interval");
	std::vector<double> nodes(intervals + 1);
	for (std::size_t i = 0; i <= intervals; ++i)
		nodes[i] = static_cast<double>(i) / static_cast<double>(intervals);
	auto g = std::make_shared<Grid>(std::move(nodes));
	g->uniform_ = true;
	return g;
}

std::optional<Grid::Cell> Grid::locate(double x) const noexcept
{
	const double lo = nodes_.front();
	const double hi = nodes_.back();
	if (!(x >= lo && x <= hi))
		return std::nullopt;
	const std::size_t last = nodes_.size() - 1;
	std::size_t i;
	if (uniform_) {
		const double pos = (x - lo) / (hi - lo) * static_cast<double>(last);
		i = std::min(static_cast<std::size_t>(pos), last - 1);
		// one-node correction for rounding in pos
		if (x < nodes_[i] && i > 0)
			--i;
		else if (x > nodes_[i + 1] && i + 1 < last)
			++i;
	} else {
		auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
		i = std::min(static_cast<std::size_t>(it - nodes_.begin()), last) - 1;
	}
	const double w = (x - nodes_[i]) / (nodes_[i + 1] - nodes_[i]);
	return Cell{i, std::clamp(w, 0.0, 1.0)};
}

GridFunction::GridFunction(std::shared_ptr<const Grid> grid, std::vector<double> values)
	: grid_(std::move(grid)), values_(std::move(values))
{
	if (!grid_)
		throw DomainError("grid function needs a grid");
	if (values_.size() != grid_->size())
		throw DomainError("grid function value count does not match the grid");
}

GridFunction GridFunction::constant(std::shared_ptr<const Grid> grid, double v)
{
	const auto n = grid->size();
	return GridFunction(std::move(grid), std::vector<double>(n, v));
}

GridFunction GridFunction::indicator(std::shared_ptr<const Grid> grid, const Interval &iv)
{
	std::vector<double> v;
	v.reserve(grid->size());
	for (double z : grid->nodes())
		v.push_back(iv.contains(z) ? 1.0 : 0.0);
	return GridFunction(std::move(grid), std::move(v));
}

double GridFunction::operator()(double z) const noexcept
{
	const auto cell = grid_->locate(z);
	if (!cell)
		return 0.0;
	const double a = values_[cell->index];
	if (cell->weight == 0.0)
		return a;
	return a + cell->weight * (values_[cell->index + 1] - a);
}

double GridFunction::mass() const noexcept
{
	const auto z = grid_->nodes();
	double sum = 0.0;
	for (std::size_t i = 0; i + 1 < z.size(); ++i)
		sum += 0.5 * (values_[i] + values_[i + 1]) * (z[i + 1] - z[i]);
	return sum;
}

namespace {

template <typename Map>
GridFunction apply_averaging(const GridFunction &f, Map &&second_argument)
{
	const auto z = f.grid().nodes();
	std::vector<double> out(z.size());
	for (std::size_t i = 0; i < z.size(); ++i)
		out[i] = 0.5 * (f(square(z[i])) + f(second_argument(z[i])));
	return GridFunction(f.grid_ptr(), std::move(out));
}

} // namespace

GridFunction operator_apply(const GridFunction &f)
{
	return apply_averaging(f, [](double z) { return complement_square(z); });
}

GridFunction simplified_operator_apply(const GridFunction &f)
{
	return apply_averaging(f, [](double z) { return z; });
}

DecayEstimate dominant_decay(const GridFunction &f0, int max_iters, double tol, PolarOperator op)
{
	if (max_iters < 1)
		throw DomainError("dominant_decay: max_iters must be >= 1");
	if (!(tol > 0.0))
		throw DomainError("dominant_decay: tol must be positive");
	const double m0 = f0.mass();
	if (!(m0 > 0.0))
		throw DomainError("dominant_decay: initial function has no mass");

	std::vector<double> scaled(f0.values().begin(), f0.values().end());
	for (auto &v : scaled)
		v /= m0;
	GridFunction f(f0.grid_ptr(), std::move(scaled));

	DecayEstimate est;
	double previous = 0.0;
	for (int it = 1; it <= max_iters; ++it) {
		GridFunction next = op == PolarOperator::exact ? operator_apply(f) : simplified_operator_apply(f);
		const double lambda = next.mass();
		if (!(lambda > 0.0))
			throw ConvergenceError("dominant_decay: iterate lost all mass", est.convergence_residual);
		for (auto &v : next.values())
			v /= lambda;
		f = std::move(next);
		est.lambda = lambda;
		est.iterations = it;
		if (it > 1) {
			est.convergence_residual = std::abs(lambda - previous);
			if (est.convergence_residual < tol) {
				if (lambda > 0.0 && lambda < 1.0)
					est.mu = -1.0 / std::log2(lambda);
				return est;
			}
		} else {
			est.convergence_residual = std::abs(lambda - 1.0);
		}
		previous = lambda;
	}
	throw ConvergenceError("dominant_decay: no convergence within " + std::to_string(max_iters) +
	                           " iterations (residual " + std::to_string(est.convergence_residual) + ")",
	                       est.convergence_residual);
}

} // namespace gpolar::polarization
