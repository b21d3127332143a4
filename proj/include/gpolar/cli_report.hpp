#pragma once

#include "gpolar/dk_lattice.hpp"

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

// Command layer behind the gpolar executable: INI configuration, the seven
// subcommands, artifact writing and the comparison report.
namespace gpolar::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int {
	exit_ok = 0,
	exit_unexpected = 1,
	exit_config = 2,
	exit_numerical = 3,
	exit_resource = 4,
};

struct PolarizeConfig
{
	double c = 0.1;
	double d = 0.9;
	int grid_log2 = 15;
	int max_iters = 2000;
	double tol = 1e-12;
	std::string op = "exact"; // exact | simplified
	bool grid_doubling = false;
	double z0 = 0.5;
	std::uint64_t mc_trials = 0; // 0 skips the Monte Carlo sweep
	int mc_n_min = 8;
	int mc_n_max = 30;
};

struct DkConfig
{
	std::string family = "bond";
	std::string order = "density"; // density | percolation
	double p_min = 0.65;
	double p_max = 0.9;
	int points = 6;
	std::size_t L = 4000;
	std::int64_t t_max = 4000;
	double measure_from = 0.5;
	int batches = 20;
	std::uint64_t trials = 1000;
	int snapshot_steps = 0; // RLE rows of one density run at p_min
};

struct PcConfig
{
	std::string family = "bond";
	std::vector<std::int64_t> t_max = {1000, 10000};
	std::uint64_t trials = 10000;
	double tol = 1e-3;
	std::size_t active_cap = 1000;
};

struct BetaConfig
{
	std::string family = "bond";
	double p_c = 0.6447;
	double window_low = 0.005; // offsets above p_c
	double window_high = 0.06;
	int points = 12;
	std::size_t L = 20000;
	std::int64_t t_max = 20000;
	double measure_from = 0.5;
	int batches = 20;
};

struct ScalingConfig
{
	double z0 = 0.5;
	double pe_target = 1e-3;
	int n_lo = 10;
	int n_hi = 22;
	std::string spectrum_dump; // empty: no dump
};

struct Config
{
	std::uint64_t seed = 1;
	unsigned threads = 1;
	PolarizeConfig polarize;
	DkConfig dk;
	PcConfig pc;
	BetaConfig beta;
	ScalingConfig scaling;

	// Every setting that can influence results, one section.key=value per
	// line in a fixed order. Threads are left out: they never change output.
	std::string canonical() const;
	std::uint64_t hash() const;
	json to_json() const;
};

// Errors name the offending section.key and raise ConfigurationError.
Config parse_config(std::istream &is);
Config load_config(const std::filesystem::path &path);

dk::Family family_by_name(const std::string &name);

// points values p_c + lo * (hi/lo)^(i/(points-1)), i = 0..points-1.
std::vector<double> log_spaced_window(double p_c, double lo, double hi, int points);

// doc is written as <command>.json; files are extra artifacts (CSV, RLE,
// binary spectra) keyed by file name. Every computed report row records
// seed and config hash, and doc carries the full config for replay.
struct CommandResult
{
	json doc;
	std::vector<std::pair<std::string, std::string>> files;
};

CommandResult cmd_analytic(const Config &cfg);
CommandResult cmd_polarize(const Config &cfg);
CommandResult cmd_dk(const Config &cfg);
CommandResult cmd_pc(const Config &cfg);
CommandResult cmd_beta(const Config &cfg);
CommandResult cmd_scaling(const Config &cfg);

struct ReportRow
{
	std::string label;
	double mu;
	std::string source;
	json provenance;

	bool operator==(const ReportRow &) const = default;
};

inline const std::vector<std::string> &report_sources()
{
	static const std::vector<std::string> s = {
		"analytic",        "percolation_numeric", "polarization_iteration", "polarization_mc", "blocklength_fit",
		"bound_lower",     "bound_upper",         "bound_closed_form",      "optimal"};
	return s;
}

// Constant rows plus the analytic row, always present in a report.
std::vector<ReportRow> constant_rows();

// Merges fragments (each a json with "report_rows") into one sorted list.
// Rows with equal labels must be identical, otherwise MergeError.
std::vector<ReportRow> merge_rows(const std::vector<json> &fragments);

json build_report(const std::vector<json> &fragments);
void write_report_csv(std::ostream &os, const json &report);

struct Invocation
{
	std::string command;
	std::optional<std::filesystem::path> config_path;
	std::optional<std::uint64_t> seed;
	std::optional<unsigned> threads;
	std::filesystem::path out_dir = ".";
	bool grid_doubling = false;
	std::vector<std::filesystem::path> inputs; // report only
};

// Runs one subcommand end to end, writes its artifacts into out_dir and
// returns the process exit code. Never throws.
int run(const Invocation &inv, std::ostream &out, std::ostream &err);

int exit_code_for(const std::exception &e) noexcept;

std::string format_real(double x);

} // namespace gpolar::cli
