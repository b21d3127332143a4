#pragma once

#include <cstdint>

// Counter-based random streams. Every draw is a pure function of its key
// tuple, so results do not depend on evaluation order or thread count.
namespace gpolar::rng {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ull;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
	x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
	x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
	return x ^ (x >> 31);
}

constexpr std::uint64_t hash(std::uint64_t key, std::uint64_t a) noexcept
{
	return mix64(mix64(key + golden_gamma) ^ (a * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
}

constexpr std::uint64_t hash(std::uint64_t key, std::uint64_t a, std::uint64_t b) noexcept
{
	return hash(hash(key, a), b);
}

constexpr std::uint64_t hash(std::uint64_t key, std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept
{
	return hash(hash(hash(key, a), b), c);
}

// Uniform double in [0,1) from the top 53 bits.
constexpr double to_unit(std::uint64_t x) noexcept
{
	return static_cast<double>(x >> 11) * 0x1.0p-53;
}

} // namespace gpolar::rng
