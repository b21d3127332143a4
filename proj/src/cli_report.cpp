#include "gpolar/cli_report.hpp"

#include "gpolar/analytic.hpp"
#include "gpolar/critical_fit.hpp"
#include "gpolar/errors.hpp"
#include "gpolar/polar_scaling.hpp"
#include "gpolar/polarization.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <new>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace gpolar::cli {

std::string format_real(double x)
{
	char buf[40];
	std::snprintf(buf, sizeof buf, "%.17g", x);
	return buf;
}

namespace {

std::string hex64(std::uint64_t v)
{
	char buf[24];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
	return buf;
}

// ---- config parsing ------------------------------------------------------

[[noreturn]] void bad_value(const std::string &key, const std::string &raw, const char *expect)
{
	throw ConfigurationError("config key '" + key + "': expected " + expect + ", got '" + raw + "'");
}

[[noreturn]] void bad_range(const std::string &key, const std::string &why)
{
	throw ConfigurationError("config key '" + key + "': " + why);
}

template <typename T>
T parse_number(const std::string &key, const std::string &raw, const char *expect)
{
	T v{};
	const char *b = raw.data(), *e = raw.data() + raw.size();
	const auto [ptr, ec] = std::from_chars(b, e, v);
	if (ec != std::errc() || ptr != e || raw.empty())
		bad_value(key, raw, expect);
	if constexpr (std::is_floating_point_v<T>)
		if (!std::isfinite(v))
			bad_value(key, raw, expect);
	return v;
}

bool parse_bool(const std::string &key, const std::string &raw)
{
	if (raw == "true" || raw == "1" || raw == "yes" || raw == "on")
		return true;
	if (raw == "false" || raw == "0" || raw == "no" || raw == "off")
		return false;
	bad_value(key, raw, "a boolean");
}

class KeyTable
{
public:
	void real(const std::string &k, double &dst)
	{
		parsers_[k] = [&dst, k](const std::string &raw) { dst = parse_number<double>(k, raw, "a real number"); };
	}
	template <typename I>
	void integer(const std::string &k, I &dst)
	{
		parsers_[k] = [&dst, k](const std::string &raw) { dst = parse_number<I>(k, raw, "an integer"); };
	}
	void flag(const std::string &k, bool &dst)
	{
		parsers_[k] = [&dst, k](const std::string &raw) { dst = parse_bool(k, raw); };
	}
	void text(const std::string &k, std::string &dst)
	{
		parsers_[k] = [&dst](const std::string &raw) { dst = raw; };
	}
	void int_list(const std::string &k, std::vector<std::int64_t> &dst)
	{
		parsers_[k] = [&dst, k](const std::string &raw) {
			dst.clear();
			std::istringstream ss(raw);
			std::string item;
			while (std::getline(ss, item, ',')) {
				const auto b = item.find_first_not_of(" \t");
				const auto e = item.find_last_not_of(" \t");
				if (b == std::string::npos)
					bad_value(k, raw, "a comma-separated list of integers");
				dst.push_back(parse_number<std::int64_t>(k, item.substr(b, e - b + 1), "a comma-separated list of integers"));
			}
			if (dst.empty())
				bad_value(k, raw, "a comma-separated list of integers");
		};
	}

	void apply(const std::string &key, const std::string &raw) const
	{
		const auto it = parsers_.find(key);
		if (it == parsers_.end())
			throw ConfigurationError("unknown config key '" + key + "'");
		it->second(raw);
	}

private:
	std::map<std::string, std::function<void(const std::string &)>> parsers_;
};

KeyTable make_table(Config &c)
{
	KeyTable t;
	t.integer("run.seed", c.seed);
	t.integer("run.threads", c.threads);

	auto &po = c.polarize;
	t.real("polarize.c", po.c);
	t.real("polarize.d", po.d);
	t.integer("polarize.grid_log2", po.grid_log2);
	t.integer("polarize.max_iters", po.max_iters);
	t.real("polarize.tol", po.tol);
	t.text("polarize.operator", po.op);
	t.flag("polarize.grid_doubling", po.grid_doubling);
	t.real("polarize.z0", po.z0);
	t.integer("polarize.mc_trials", po.mc_trials);
	t.integer("polarize.mc_n_min", po.mc_n_min);
	t.integer("polarize.mc_n_max", po.mc_n_max);

	auto &d = c.dk;
	t.text("dk.family", d.family);
	t.text("dk.order", d.order);
	t.real("dk.p_min", d.p_min);
	t.real("dk.p_max", d.p_max);
	t.integer("dk.points", d.points);
	t.integer("dk.L", d.L);
	t.integer("dk.t_max", d.t_max);
	t.real("dk.measure_from", d.measure_from);
	t.integer("dk.batches", d.batches);
	t.integer("dk.trials", d.trials);
	t.integer("dk.snapshot_steps", d.snapshot_steps);

	auto &p = c.pc;
	t.text("pc.family", p.family);
	t.int_list("pc.t_max", p.t_max);
	t.integer("pc.trials", p.trials);
	t.real("pc.tol", p.tol);
	t.integer("pc.active_cap", p.active_cap);

	auto &b = c.beta;
	t.text("beta.family", b.family);
	t.real("beta.p_c", b.p_c);
	t.real("beta.window_low", b.window_low);
	t.real("beta.window_high", b.window_high);
	t.integer("beta.points", b.points);
	t.integer("beta.L", b.L);
	t.integer("beta.t_max", b.t_max);
	t.real("beta.measure_from", b.measure_from);
	t.integer("beta.batches", b.batches);

	auto &s = c.scaling;
	t.real("scaling.z0", s.z0);
	t.real("scaling.pe_target", s.pe_target);
	t.integer("scaling.n_lo", s.n_lo);
	t.integer("scaling.n_hi", s.n_hi);
	t.text("scaling.spectrum_dump", s.spectrum_dump);
	return t;
}

bool is_family(const std::string &f) { return f == "bond" || f == "site" || f == "compact" || f == "w18"; }

void validate(const Config &c)
{
	if (c.threads < 1 || c.threads > 1024)
		bad_range("run.threads", "must lie in [1, 1024]");

	const auto &po = c.polarize;
	if (!(po.c > 0.0 && po.c < po.d && po.d < 1.0))
		bad_range("polarize.c", "need 0 < polarize.c < polarize.d < 1");
	if (po.grid_log2 < 4 || po.grid_log2 > 24)
		bad_range("polarize.grid_log2", "must lie in [4, 24]");
	if (po.max_iters < 1)
		bad_range("polarize.max_iters", "must be positive");
	if (!(po.tol > 0.0))
		bad_range("polarize.tol", "must be positive");
	if (po.op != "exact" && po.op != "simplified")
		bad_range("polarize.operator", "must be 'exact' or 'simplified'");
	if (!(po.z0 > 0.0 && po.z0 < 1.0))
		bad_range("polarize.z0", "must lie in (0,1)");
	if (po.mc_n_min < 0 || po.mc_n_max < po.mc_n_min + 2)
		bad_range("polarize.mc_n_max", "need 0 <= mc_n_min and mc_n_max >= mc_n_min + 2");

	const auto &d = c.dk;
	if (!is_family(d.family))
		bad_range("dk.family", "must be one of bond, site, compact, w18");
	if (d.order != "density" && d.order != "percolation")
		bad_range("dk.order", "must be 'density' or 'percolation'");
	if (!(d.p_min >= 0.0 && d.p_min <= d.p_max && d.p_max <= 1.0))
		bad_range("dk.p_min", "need 0 <= dk.p_min <= dk.p_max <= 1");
	if (d.points < 1 || (d.points > 1 && d.p_min == d.p_max))
		bad_range("dk.points", "must be positive, and 1 when p_min == p_max");
	if (d.t_max < 1)
		bad_range("dk.t_max", "must be positive");
	if (d.order == "density") {
		if (d.L < 64)
			bad_range("dk.L", "must be at least 64");
		if (!(d.measure_from >= 0.0 && d.measure_from < 1.0))
			bad_range("dk.measure_from", "must lie in [0,1)");
		if (d.batches < 2)
			bad_range("dk.batches", "must be at least 2");
	} else {
		if (d.L <= 2 * static_cast<std::size_t>(d.t_max))
			bad_range("dk.L", "must exceed 2*dk.t_max for percolation runs");
		if (d.trials < 100)
			bad_range("dk.trials", "must be at least 100");
	}
	if (d.snapshot_steps < 0)
		bad_range("dk.snapshot_steps", "must be non-negative");

	const auto &p = c.pc;
	if (!is_family(p.family))
		bad_range("pc.family", "must be one of bond, site, compact, w18");
	for (auto t : p.t_max)
		if (t < 16)
			bad_range("pc.t_max", "every entry must be at least 16");
	if (p.trials < 1)
		bad_range("pc.trials", "must be positive");
	if (!(p.tol >= 1e-4 && p.tol < 1.0))
		bad_range("pc.tol", "must lie in [1e-4, 1)");

	const auto &b = c.beta;
	if (!is_family(b.family))
		bad_range("beta.family", "must be one of bond, site, compact, w18");
	if (!(b.p_c > 0.0 && b.p_c < 1.0))
		bad_range("beta.p_c", "must lie in (0,1)");
	if (!(b.window_low > 0.0 && b.window_low < b.window_high && b.p_c + b.window_high <= 1.0))
		bad_range("beta.window_low", "need 0 < window_low < window_high and p_c + window_high <= 1");
	if (b.points < 3)
		bad_range("beta.points", "must be at least 3");
	if (b.L < 64)
		bad_range("beta.L", "must be at least 64");
	if (b.t_max < 1)
		bad_range("beta.t_max", "must be positive");
	if (!(b.measure_from >= 0.0 && b.measure_from < 1.0))
		bad_range("beta.measure_from", "must lie in [0,1)");
	if (b.batches < 2)
		bad_range("beta.batches", "must be at least 2");

	const auto &s = c.scaling;
	if (!(s.z0 > 0.0 && s.z0 < 1.0))
		bad_range("scaling.z0", "must lie in (0,1)");
	if (!(s.pe_target > 0.0 && s.pe_target < 1.0))
		bad_range("scaling.pe_target", "must lie in (0,1)");
	if (s.n_lo < 0 || s.n_hi < s.n_lo + 2)
		bad_range("scaling.n_hi", "need 0 <= n_lo and n_hi >= n_lo + 2");
	if (s.n_hi > scaling::max_spectrum_stages)
		throw ResourceError("config key 'scaling.n_hi': exceeds the exhaustive limit of " +
		                    std::to_string(scaling::max_spectrum_stages));
}

// ---- artifacts -----------------------------------------------------------

json provenance_of(const Config &cfg)
{
	return json{{"seed", cfg.seed}, {"config_hash", hex64(cfg.hash())}};
}

json row_json(const ReportRow &r)
{
	return json{{"label", r.label}, {"mu", r.mu}, {"source", r.source}, {"provenance", r.provenance}};
}

json computed_row(const std::string &label, double mu, const std::string &source, const Config &cfg)
{
	return row_json({label, mu, source, provenance_of(cfg)});
}

json envelope(const std::string &command, const Config &cfg)
{
	json doc;
	doc["command"] = command;
	doc["seed"] = cfg.seed;
	doc["config_hash"] = hex64(cfg.hash());
	doc["config"] = cfg.to_json();
	return doc;
}

json fit_json(const fit::ExponentFit &f)
{
	return json{{"value", f.value},
	            {"stderr", f.std_error},
	            {"window", {f.window.first, f.window.second}},
	            {"n_points", f.n_points},
	            {"residual_rms", f.residual_rms},
	            {"method", f.method}};
}

json decay_json(const polarization::DecayEstimate &e, std::size_t intervals)
{
	json j{{"grid_intervals", intervals},
	       {"lambda", e.lambda},
	       {"iterations", e.iterations},
	       {"convergence_residual", e.convergence_residual}};
	j["mu"] = e.mu ? json(*e.mu) : json(nullptr);
	return j;
}

std::string curve_csv(const dk::OrderParameterCurve &c)
{
	std::ostringstream os;
	dk::write_curve_csv(os, c);
	return os.str();
}

json curve_json(const dk::OrderParameterCurve &c)
{
	json pts = json::array();
	for (const auto &p : c.points)
		pts.push_back({{"p", p.p}, {"value", p.value}, {"stderr", p.std_error}});
	return pts;
}

void write_file(const std::filesystem::path &path, const std::string &content)
{
	std::ofstream f(path, std::ios::binary);
	if (!f)
		throw ResourceError("cannot open '" + path.string() + "' for writing");
	f << content;
	f.flush();
	if (!f)
		throw ResourceError("write to '" + path.string() + "' failed");
}

std::string read_file(const std::filesystem::path &path)
{
	std::ifstream f(path, std::ios::binary);
	if (!f)
		throw ConfigurationError("cannot read '" + path.string() + "'");
	std::ostringstream ss;
	ss << f.rdbuf();
	return ss.str();
}

void print_scalars(std::ostream &out, const json &obj, const std::string &prefix = "")
{
	for (const auto &[k, v] : obj.items()) {
		const std::string name = prefix + k;
		if (v.is_object())
			print_scalars(out, v, name + ".");
		else if (v.is_number_float())
			out << name << " = " << format_real(v.get<double>()) << '\n';
		else if (v.is_primitive())
			out << name << " = " << v.dump() << '\n';
	}
}

} // namespace

// ---- Config --------------------------------------------------------------

std::string Config::canonical() const
{
	std::ostringstream os;
	const auto r = [&](const char *k, double v) { os << k << '=' << format_real(v) << '\n'; };
	const auto i = [&](const char *k, auto v) { os << k << '=' << v << '\n'; };
	i("run.seed", seed);
	r("polarize.c", polarize.c);
	r("polarize.d", polarize.d);
	i("polarize.grid_log2", polarize.grid_log2);
	i("polarize.max_iters", polarize.max_iters);
	r("polarize.tol", polarize.tol);
	i("polarize.operator", polarize.op);
	i("polarize.grid_doubling", polarize.grid_doubling ? "true" : "false");
	r("polarize.z0", polarize.z0);
	i("polarize.mc_trials", polarize.mc_trials);
	i("polarize.mc_n_min", polarize.mc_n_min);
	i("polarize.mc_n_max", polarize.mc_n_max);
	i("dk.family", dk.family);
	i("dk.order", dk.order);
	r("dk.p_min", dk.p_min);
	r("dk.p_max", dk.p_max);
	i("dk.points", dk.points);
	i("dk.L", dk.L);
	i("dk.t_max", dk.t_max);
	r("dk.measure_from", dk.measure_from);
	i("dk.batches", dk.batches);
	i("dk.trials", dk.trials);
	i("dk.snapshot_steps", dk.snapshot_steps);
	i("pc.family", pc.family);
	os << "pc.t_max=";
	for (std::size_t k = 0; k < pc.t_max.size(); ++k)
		os << (k ? "," : "") << pc.t_max[k];
	os << '\n';
	i("pc.trials", pc.trials);
	r("pc.tol", pc.tol);
	i("pc.active_cap", pc.active_cap);
	i("beta.family", beta.family);
	r("beta.p_c", beta.p_c);
	r("beta.window_low", beta.window_low);
	r("beta.window_high", beta.window_high);
	i("beta.points", beta.points);
	i("beta.L", beta.L);
	i("beta.t_max", beta.t_max);
	r("beta.measure_from", beta.measure_from);
	i("beta.batches", beta.batches);
	r("scaling.z0", scaling.z0);
	r("scaling.pe_target", scaling.pe_target);
	i("scaling.n_lo", scaling.n_lo);
	i("scaling.n_hi", scaling.n_hi);
	i("scaling.spectrum_dump", scaling.spectrum_dump);
	return os.str();
}

std::uint64_t Config::hash() const
{
	// FNV-1a
	std::uint64_t h = 0xcbf29ce484222325ull;
	for (unsigned char ch : canonical()) {
		h ^= ch;
		h *= 0x100000001b3ull;
	}
	return h;
}

json Config::to_json() const
{
	json j = json::object();
	std::istringstream ss(canonical());
	std::string line;
	while (std::getline(ss, line)) {
		const auto dot = line.find('.');
		const auto eq = line.find('=');
		j[line.substr(0, dot)][line.substr(dot + 1, eq - dot - 1)] = line.substr(eq + 1);
	}
	return j;
}

Config parse_config(std::istream &is)
{
	namespace pt = boost::property_tree;
	pt::ptree tree;
	try {
		pt::read_ini(is, tree);
	} catch (const pt::ini_parser_error &e) {
		throw ConfigurationError(std::string("config syntax error: ") + e.message() + " at line " +
		                         std::to_string(e.line()));
	}
	Config cfg;
	const KeyTable table = make_table(cfg);
	for (const auto &[section, body] : tree) {
		if (body.empty() && !body.data().empty())
			throw ConfigurationError("config key '" + section + "' must live inside a [section]");
		for (const auto &[key, value] : body)
			table.apply(section + "." + key, value.data());
	}
	validate(cfg);
	return cfg;
}

Config load_config(const std::filesystem::path &path)
{
	std::ifstream f(path);
	if (!f)
		throw ConfigurationError("cannot read config file '" + path.string() + "'");
	return parse_config(f);
}

dk::Family family_by_name(const std::string &name)
{
	if (name == "bond")
		return dk::DKParams::bond;
	if (name == "site")
		return dk::DKParams::site;
	if (name == "compact")
		return dk::DKParams::compact;
	if (name == "w18")
		return dk::DKParams::w18;
	throw ConfigurationError("unknown DK family '" + name + "'");
}

std::vector<double> log_spaced_window(double p_c, double lo, double hi, int points)
{
	if (points < 2 || !(lo > 0.0 && lo < hi))
		throw ConfigurationError("log_spaced_window: need points >= 2 and 0 < lo < hi");
	std::vector<double> ps;
	for (int i = 0; i < points; ++i)
		ps.push_back(p_c + lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
	return ps;
}

// ---- commands ------------------------------------------------------------

CommandResult cmd_analytic(const Config &cfg)
{
	const auto g = analytic::golden();
	const auto ref = analytic::reference();
	const auto comp = analytic::beta_complementary();
	const auto [rho_at, g_at] = analytic::mf_critical_coincidence();

	json r;
	r["phi"] = g.phi;
	r["phi_conj"] = g.phi_conj;
	r["beta_analytic"] = g.beta_analytic;
	r["mu_analytic"] = g.mu_analytic;
	r["penalty"] = g.mu_analytic - ref.mu_optimal;
	r["beta_residue_at_phi_conj"] = analytic::beta_residue(g.phi_conj);
	r["beta_residue_at_pc_bond"] = analytic::beta_residue(ref.pc_bond);
	r["beta_num"] = ref.beta_num;
	r["beta_num_err"] = ref.beta_num_err;
	r["beta_num_inverse"] = 1.0 / ref.beta_num;
	r["mu_num"] = ref.mu_num;
	r["beta_relative_gap"] = std::abs(g.beta_analytic - ref.beta_num) / ref.beta_num;
	r["mu_relative_gap"] = std::abs(g.mu_analytic - ref.mu_num) / ref.mu_num;
	r["mu_lower"] = ref.mu_lower;
	r["mu_upper"] = ref.mu_upper;
	r["mu_closed_lower"] = ref.mu_closed_lower;
	r["mu_closed_lower_computed"] = analytic::mu_closed_lower_computed();
	r["mu_bmsc_upper"] = ref.mu_bmsc_upper;
	r["mu_optimal"] = ref.mu_optimal;
	r["pc_bond"] = ref.pc_bond;
	r["beta_complementary"] = comp.value;
	r["beta_complementary_valid_for_mu"] = comp.valid_for_mu;
	r["rho_mf_at_phi_conj"] = rho_at;
	r["g_at_phi_conj"] = g_at;

	CommandResult out;
	out.doc = envelope("analytic", cfg);
	out.doc["result"] = r;
	out.doc["report_rows"] = json::array();
	return out;
}

CommandResult cmd_polarize(const Config &cfg)
{
	using namespace polarization;
	const auto &pc = cfg.polarize;
	const Interval iv(pc.c, pc.d);
	const PolarOperator op = pc.op == "exact" ? PolarOperator::exact : PolarOperator::simplified;

	const auto run_grid = [&](int log2) {
		const std::size_t intervals = std::size_t{1} << log2;
		auto grid = Grid::uniform(intervals);
		return decay_json(dominant_decay(GridFunction::indicator(grid, iv), pc.max_iters, pc.tol, op), intervals);
	};

	CommandResult out;
	out.doc = envelope("polarize", cfg);
	json r;
	r["iteration"] = run_grid(pc.grid_log2);
	if (r["iteration"]["mu"].is_null())
		throw ConvergenceError("polarize: dominant decay factor is not in (0,1), no finite mu", 0.0);
	const double mu = r["iteration"]["mu"].get<double>();
	json rows = json::array({computed_row("mu_iteration", mu, "polarization_iteration", cfg)});

	if (pc.grid_doubling) {
		r["iteration_doubled"] = run_grid(pc.grid_log2 + 1);
		const auto &m2 = r["iteration_doubled"]["mu"];
		if (m2.is_null())
			throw ConvergenceError("polarize: doubled grid gives no finite mu", 0.0);
		r["mu_doubling_difference"] = m2.get<double>() - mu;
	}

	if (pc.mc_trials > 0) {
		const auto series = mc_unpolarized_series(pc.z0, iv, pc.mc_n_max, pc.mc_trials, cfg.seed, cfg.threads);
		std::string csv = "n,probability,stderr\n";
		std::vector<fit::SeriesPoint> tail;
		for (std::size_t n = 0; n < series.size(); ++n) {
			csv += std::to_string(n) + ',' + format_real(series[n].probability) + ',' +
			       format_real(series[n].std_error) + '\n';
			if (static_cast<int>(n) >= pc.mc_n_min)
				tail.push_back({static_cast<double>(n), series[n].probability});
		}
		out.files.emplace_back("polarize_mc.csv", csv);
		const auto rate = fit::decay_rate(tail);
		json mc = fit_json(rate);
		mc["trials"] = pc.mc_trials;
		mc["mu"] = 1.0 / rate.value;
		r["monte_carlo"] = mc;
		rows.push_back(computed_row("mu_mc_decay", 1.0 / rate.value, "polarization_mc", cfg));
	}
	out.doc["result"] = r;
	out.doc["report_rows"] = rows;
	return out;
}

CommandResult cmd_dk(const Config &cfg)
{
	const auto &d = cfg.dk;
	const auto family = family_by_name(d.family);
	std::vector<double> ps;
	for (int i = 0; i < d.points; ++i)
		ps.push_back(d.points == 1 ? d.p_min : d.p_min + (d.p_max - d.p_min) * i / (d.points - 1));

	dk::OrderParameterCurve curve;
	if (d.order == "density") {
		dk::DensityMeasurement m;
		m.L = d.L;
		m.t_max = d.t_max;
		m.measure_from = d.measure_from;
		m.batches = d.batches;
		curve = dk::density_curve(family, ps, m, cfg.seed, cfg.threads);
	} else {
		curve = dk::survival_curve(family, ps, d.L, d.t_max, d.trials, cfg.seed, cfg.threads);
	}

	CommandResult out;
	out.doc = envelope("dk", cfg);
	out.doc["result"] = json{{"family", d.family}, {"order", d.order}, {"points", curve_json(curve)}};
	out.doc["report_rows"] = json::array();
	out.files.emplace_back("dk_curve.csv", curve_csv(curve));

	if (d.snapshot_steps > 0) {
		const dk::DKParams par = family(d.p_min);
		dk::LatticeRow row = dk::LatticeRow::full(d.L);
		std::string rle = dk::encode_rle(row) + '\n';
		for (int t = 0; t < d.snapshot_steps; ++t) {
			row = dk::dk_step(row, par, {cfg.seed});
			rle += dk::encode_rle(row) + '\n';
		}
		out.files.emplace_back("dk_trajectory.rle", rle);
	}
	return out;
}

CommandResult cmd_pc(const Config &cfg)
{
	const auto &p = cfg.pc;
	const auto family = family_by_name(p.family);
	json runs = json::array();
	for (auto t : p.t_max) {
		fit::ThresholdOptions o;
		o.t_max = t;
		o.trials = p.trials;
		o.tol = p.tol;
		o.seed = cfg.seed;
		o.threads = cfg.threads;
		o.active_cap = p.active_cap;
		const auto est = fit::find_threshold(family, o);
		json probes = json::array();
		for (const auto &pr : est.probes)
			probes.push_back({{"p", pr.p},
			                  {"alive_early", pr.alive_early},
			                  {"alive_mid", pr.alive_mid},
			                  {"alive_late", pr.alive_late},
			                  {"above", pr.above}});
		runs.push_back({{"t_max", t},
		                {"p_c", est.p_c},
		                {"bracket", {est.bracket.first, est.bracket.second}},
		                {"trials_per_probe", est.trials_per_probe},
		                {"probes", probes}});
	}
	CommandResult out;
	out.doc = envelope("pc", cfg);
	out.doc["result"] = json{{"family", p.family}, {"estimates", runs}};
	out.doc["report_rows"] = json::array();
	return out;
}

CommandResult cmd_beta(const Config &cfg)
{
	const auto &b = cfg.beta;
	const auto ps = log_spaced_window(b.p_c, b.window_low, b.window_high, b.points);
	dk::DensityMeasurement m;
	m.L = b.L;
	m.t_max = b.t_max;
	m.measure_from = b.measure_from;
	m.batches = b.batches;
	const auto curve = dk::density_curve(family_by_name(b.family), ps, m, cfg.seed, cfg.threads);
	// widen by a hair so rounding in p_c + offset never drops an endpoint
	const double eps = 1e-12;
	const auto f = fit::fit_beta(curve, b.p_c, {b.p_c + b.window_low - eps, b.p_c + b.window_high + eps});

	CommandResult out;
	out.doc = envelope("beta", cfg);
	json r = fit_json(f);
	r["p_c"] = b.p_c;
	r["mu_inverse_beta"] = 1.0 / f.value;
	r["curve"] = curve_json(curve);
	out.doc["result"] = r;
	out.doc["report_rows"] = json::array({computed_row("mu_from_beta_fit", 1.0 / f.value, "percolation_numeric", cfg)});
	out.files.emplace_back("beta_curve.csv", curve_csv(curve));
	return out;
}

CommandResult cmd_scaling(const Config &cfg)
{
	const auto &s = cfg.scaling;
	const auto pts = scaling::scaling_points(s.z0, s.pe_target, s.n_lo, s.n_hi);
	const auto f = scaling::fit_scaling_exponent(pts);

	std::string csv = "n,N,k,rate,gap,pe_target,degenerate\n";
	json jp = json::array();
	for (const auto &p : pts) {
		csv += std::to_string(p.n) + ',' + std::to_string(p.N) + ',' + std::to_string(p.k) + ',' +
		       format_real(p.rate) + ',' + format_real(p.gap) + ',' + format_real(p.pe_target) + ',' +
		       (p.degenerate ? "true" : "false") + '\n';
		jp.push_back({{"n", p.n}, {"N", p.N}, {"k", p.k}, {"rate", p.rate}, {"gap", p.gap}, {"degenerate", p.degenerate}});
	}

	CommandResult out;
	out.doc = envelope("scaling", cfg);
	json r = fit_json(f);
	r["points"] = jp;
	r["warning"] = "finite-size fit: convergence in n is slow and the fitted exponent is biased at these block lengths";
	out.doc["result"] = r;
	out.doc["report_rows"] = json::array({computed_row("mu_blocklength_fit", f.value, "blocklength_fit", cfg)});
	out.files.emplace_back("scaling_points.csv", csv);

	if (!s.spectrum_dump.empty()) {
		std::ostringstream bin(std::ios::binary);
		scaling::write_spectrum(bin, scaling::synthetic_spectrum(s.z0, s.n_hi));
		out.files.emplace_back(s.spectrum_dump, bin.str());
	}
	return out;
}

// ---- report --------------------------------------------------------------

std::vector<ReportRow> constant_rows()
{
	const auto g = analytic::golden();
	const auto ref = analytic::reference();
	const auto cite = [](const char *tag) { return json{{"citation", tag}}; };
	return {
		{"mu_analytic", g.mu_analytic, "analytic", cite("closed form 2 + golden ratio")},
		{"mu_beta_num_inverse", 1.0 / ref.beta_num, "percolation_numeric", cite("inverse of series-expansion DP beta")},
		{"mu_num", ref.mu_num, "polarization_iteration", cite("published numerical exponent")},
		{"bound_lower", ref.mu_lower, "bound_lower", cite("published lower bound")},
		{"bound_upper", ref.mu_upper, "bound_upper", cite("published upper bound")},
		{"bound_bmsc_upper", ref.mu_bmsc_upper, "bound_upper", cite("published BMSC upper bound")},
		{"bound_closed_form", ref.mu_closed_lower, "bound_closed_form", cite("closed-form lower bound")},
		{"optimal", ref.mu_optimal, "optimal", cite("optimal exponent of random codes")},
	};
}

std::vector<ReportRow> merge_rows(const std::vector<json> &fragments)
{
	std::map<std::string, ReportRow> by_label;
	const auto add = [&](ReportRow r) {
		const auto [it, fresh] = by_label.emplace(r.label, r);
		if (!fresh && !(it->second == r))
			throw MergeError("report: conflicting rows for label '" + r.label + "'");
	};
	for (auto &r : constant_rows())
		add(std::move(r));

	const auto &sources = report_sources();
	for (const auto &frag : fragments) {
		if (!frag.is_object() || !frag.contains("report_rows") || !frag["report_rows"].is_array())
			throw ConfigurationError("report: input lacks a report_rows array");
		for (const auto &jr : frag["report_rows"]) {
			ReportRow r;
			try {
				r.label = jr.at("label").get<std::string>();
				r.mu = jr.at("mu").get<double>();
				r.source = jr.at("source").get<std::string>();
				r.provenance = jr.at("provenance");
			} catch (const json::exception &e) {
				throw ConfigurationError(std::string("report: malformed row: ") + e.what());
			}
			if (std::find(sources.begin(), sources.end(), r.source) == sources.end())
				throw ConfigurationError("report: unknown source '" + r.source + "'");
			add(std::move(r));
		}
	}

	std::vector<ReportRow> rows;
	for (auto &[_, r] : by_label)
		rows.push_back(std::move(r));
	const auto rank = [&](const std::string &s) { return std::find(sources.begin(), sources.end(), s) - sources.begin(); };
	std::stable_sort(rows.begin(), rows.end(), [&](const ReportRow &a, const ReportRow &b) {
		return rank(a.source) < rank(b.source);
	});
	return rows;
}

json build_report(const std::vector<json> &fragments)
{
	const auto rows = merge_rows(fragments);
	double mu_a = 0.0, mu_opt = 0.0;
	json jrows = json::array();
	for (const auto &r : rows) {
		if (r.label == "mu_analytic")
			mu_a = r.mu;
		if (r.label == "optimal")
			mu_opt = r.mu;
		jrows.push_back(row_json(r));
	}
	json doc;
	doc["command"] = "report";
	doc["headline"] = json{{"mu_analytic", mu_a},
	                       {"mu_optimal", mu_opt},
	                       {"penalty", mu_a - mu_opt},
	                       {"golden_ratio", analytic::golden().phi}};
	doc["report_rows"] = jrows;
	return doc;
}

void write_report_csv(std::ostream &os, const json &report)
{
	os << "label,mu,source,provenance\n";
	for (const auto &r : report.at("report_rows")) {
		std::string prov;
		for (const auto &[k, v] : r.at("provenance").items()) {
			if (!prov.empty())
				prov += ';';
			prov += k + '=' + (v.is_string() ? v.get<std::string>() : v.dump());
		}
		os << r.at("label").get<std::string>() << ',' << format_real(r.at("mu").get<double>()) << ','
		   << r.at("source").get<std::string>() << ',' << prov << '\n';
	}
}

// ---- driver --------------------------------------------------------------

int exit_code_for(const std::exception &e) noexcept
{
	if (dynamic_cast<const ConfigurationError *>(&e) || dynamic_cast<const MergeError *>(&e))
		return exit_config;
	if (dynamic_cast<const ResourceError *>(&e) || dynamic_cast<const std::bad_alloc *>(&e) ||
	    dynamic_cast<const std::filesystem::filesystem_error *>(&e))
		return exit_resource;
	if (dynamic_cast<const Error *>(&e))
		return exit_numerical;
	return exit_unexpected;
}

int run(const Invocation &inv, std::ostream &out, std::ostream &err)
{
	try {
		Config cfg = inv.config_path ? load_config(*inv.config_path) : Config{};
		if (inv.seed)
			cfg.seed = *inv.seed;
		if (inv.threads) {
			if (*inv.threads < 1 || *inv.threads > 1024)
				throw ConfigurationError("--threads must lie in [1, 1024]");
			cfg.threads = *inv.threads;
		}
		if (inv.grid_doubling)
			cfg.polarize.grid_doubling = true;

		std::error_code ec;
		std::filesystem::create_directories(inv.out_dir, ec);
		if (ec)
			throw ResourceError("cannot create output directory '" + inv.out_dir.string() + "': " + ec.message());

		if (inv.command == "report") {
			std::vector<json> frags;
			for (const auto &p : inv.inputs) {
				try {
					frags.push_back(json::parse(read_file(p)));
				} catch (const json::parse_error &e) {
					throw ConfigurationError("report: '" + p.string() + "' is not valid JSON: " + e.what());
				}
			}
			const json rep = build_report(frags);
			write_file(inv.out_dir / "report.json", rep.dump(2) + "\n");
			std::ostringstream csv;
			write_report_csv(csv, rep);
			write_file(inv.out_dir / "report.csv", csv.str());
			out << csv.str();
			out << "penalty = " << format_real(rep["headline"]["penalty"].get<double>()) << '\n';
			return exit_ok;
		}

		CommandResult res;
		if (inv.command == "analytic")
			res = cmd_analytic(cfg);
		else if (inv.command == "polarize")
			res = cmd_polarize(cfg);
		else if (inv.command == "dk")
			res = cmd_dk(cfg);
		else if (inv.command == "pc")
			res = cmd_pc(cfg);
		else if (inv.command == "beta")
			res = cmd_beta(cfg);
		else if (inv.command == "scaling")
			res = cmd_scaling(cfg);
		else
			throw ConfigurationError("unknown command '" + inv.command + "'");

		write_file(inv.out_dir / (inv.command + ".json"), res.doc.dump(2) + "\n");
		for (const auto &[name, content] : res.files)
			write_file(inv.out_dir / name, content);

		if (inv.command == "analytic") {
			print_scalars(out, res.doc["result"]);
			out << "beta_num^-1 ~ " << std::setprecision(4) << res.doc["result"]["beta_num_inverse"].get<double>()
			    << '\n';
		} else {
			json brief = res.doc["result"];
			brief.erase("curve");
			brief.erase("points");
			brief.erase("estimates");
			print_scalars(out, brief);
			if (inv.command == "pc")
				for (const auto &e : res.doc["result"]["estimates"])
					out << "p_c(t_max=" << e["t_max"].get<std::int64_t>()
					    << ") = " << format_real(e["p_c"].get<double>()) << '\n';
			if (inv.command == "scaling")
				err << "warning: " << res.doc["result"]["warning"].get<std::string>() << '\n';
		}
		return exit_ok;
	} catch (const std::exception &e) {
		err << "error: " << e.what() << '\n';
		return exit_code_for(e);
	}
}

} // namespace gpolar::cli
