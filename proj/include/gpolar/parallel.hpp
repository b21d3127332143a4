#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace gpolar {

// Splits [0, count) into contiguous blocks and runs body(begin, end) on up to
// `threads` workers. Callers write results per index (or reduce integers), so
// the outcome is identical for every thread count.
template <typename Body>
void parallel_for(std::size_t count, unsigned threads, Body &&body)
{
	if (count == 0)
		return;
	const std::size_t workers = std::clamp<std::size_t>(threads, 1, count);
	if (workers == 1) {
		body(std::size_t{0}, count);
		return;
	}
	std::vector<std::exception_ptr> errors(workers);
	{
		std::vector<std::jthread> pool;
		pool.reserve(workers);
		for (std::size_t w = 0; w < workers; ++w) {
			const std::size_t begin = count * w / workers;
			const std::size_t end = count * (w + 1) / workers;
			pool.emplace_back([&, w, begin, end] {
				try {
					body(begin, end);
				} catch (...) {
					errors[w] = std::current_exception();
				}
			});
		}
	}
	for (auto &e : errors)
		if (e)
			std::rethrow_exception(e);
}

} // namespace gpolar
