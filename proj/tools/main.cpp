#include "gpolar/cli_report.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv)
{
	using namespace gpolar::cli;

	CLI::App app{"Polar-code scaling exponents via directed percolation"};
	app.require_subcommand(1);
	app.fallthrough();

	Invocation inv;
	std::string config, out_dir = ".";
	std::uint64_t seed = 0;
	unsigned threads = 1;
	auto *opt_config = app.add_option("--config", config, "INI configuration file")->check(CLI::ExistingFile);
	auto *opt_seed = app.add_option("--seed", seed, "Seed, overrides run.seed");
	auto *opt_threads = app.add_option("--threads", threads, "Worker threads, overrides run.threads");
	app.add_option("--out", out_dir, "Output directory")->capture_default_str();

	app.add_subcommand("analytic", "Closed-form constants and identities");
	auto *pol = app.add_subcommand("polarize", "Operator iteration and Monte Carlo decay of unpolarized mass");
	pol->add_flag("--grid-doubling", inv.grid_doubling, "Repeat the iteration on a grid twice as fine");
	app.add_subcommand("dk", "Domany-Kinzel order-parameter curve");
	app.add_subcommand("pc", "Percolation threshold by bisection");
	app.add_subcommand("beta", "Density exponent fit near threshold");
	app.add_subcommand("scaling", "Blocklength scaling fit from exact spectra");
	auto *rep = app.add_subcommand("report", "Merge JSON outputs into the comparison report");
	std::vector<std::string> inputs;
	rep->add_option("inputs", inputs, "JSON files written by other subcommands")->check(CLI::ExistingFile);

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int rc = app.exit(e);
		return rc == 0 ? 0 : exit_config;
	}

	inv.command = app.get_subcommands().front()->get_name();
	if (*opt_config)
		inv.config_path = config;
	if (*opt_seed)
		inv.seed = seed;
	if (*opt_threads)
		inv.threads = threads;
	inv.out_dir = out_dir;
	for (const auto &p : inputs)
		inv.inputs.emplace_back(p);
	return run(inv, std::cout, std::cerr);
}
