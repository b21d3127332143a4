#pragma once

#include <stdexcept>
#include <string>

namespace gpolar {

// Base for every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes.
class Error : public std::runtime_error
{
public:
	using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
	using Error::Error;
};

// Formula hits a pole.
class SingularityError : public Error
{
public:
	using Error::Error;
};

class ConvergenceError : public Error
{
public:
	ConvergenceError(const std::string &what, double last_residual)
		: Error(what), residual_(last_residual) {}
	double last_residual() const noexcept { return residual_; }

private:
	double residual_;
};

// Request would exceed the memory/time envelope of an exhaustive method.
class ResourceError : public Error
{
public:
	using Error::Error;
};

class FitError : public Error
{
public:
	using Error::Error;
};

class BracketError : public Error
{
public:
	using Error::Error;
};

// Simulation parameters that cannot produce a meaningful run.
class ConfigurationError : public Error
{
public:
	using Error::Error;
};

class ExtinctionError : public Error
{
public:
	using Error::Error;
};

// Two report fragments disagree on a row with the same label.
class MergeError : public Error
{
public:
	using Error::Error;
};

} // namespace gpolar
