// Command-line front end: solve, surrogate, sweep, rolling and tco.
// Exit codes: 0 success, 1 hard error, 2 partial sweep failure.

#include "vscuc/vscuc.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

using namespace vscuc;
namespace fs = std::filesystem;

namespace
{

struct CommonArgs
{
    std::string case_path;
    std::string modes = "BASE_SI,VSC_SI,VSC_Q_SI";
    std::string out   = "results";
    double      gap   = 0.02;
    int         threads = 1;
    bool        single_thread = false;
    bool        dry_run = false;
    bool        trace   = false;
    double      time_limit = 0.0;
    int         start_hour = 0;
    int         horizon    = 6;
    std::string branching;
    std::string quantiles;
    bool        no_statcom = false;
    bool        no_freq    = false;
};

void add_common(CLI::App* app, CommonArgs& a, bool modes)
{
    app->add_option("--case", a.case_path, "case file (JSON)")->required()->check(CLI::ExistingFile);
    if (modes)
        app->add_option("--mode", a.modes, "comma-separated modes: BASE_SI, VSC_SI, VSC_Q_SI")
            ->capture_default_str();
    app->add_option("--out", a.out, "output directory")->capture_default_str();
    app->add_option("--gap", a.gap, "relative MIP gap")->capture_default_str()->check(CLI::NonNegativeNumber);
    app->add_option("--threads", a.threads, "branch-and-bound worker threads")->capture_default_str()
        ->check(CLI::PositiveNumber);
    app->add_flag("--single-thread", a.single_thread, "force one thread for bit-reproducible node order");
    app->add_flag("--dry-run", a.dry_run, "build the programs, print their sizes, write the solve IR and stop");
    app->add_flag("--trace", a.trace, "one line per branch-and-bound node on stderr");
    app->add_option("--time-limit", a.time_limit, "seconds per solve, 0 = none")->check(CLI::NonNegativeNumber);
    app->add_option("--start-hour", a.start_hour, "first hour of the case profile")->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    app->add_option("--horizon", a.horizon, "look-ahead hours")->capture_default_str()->check(CLI::PositiveNumber);
    app->add_option("--branching", a.branching, "comma-separated branching hours, e.g. 1,2");
    app->add_option("--quantiles", a.quantiles, "bins mass:wind_dev[:load_dev], comma-separated");
    app->add_flag("--no-statcom", a.no_statcom, "drop STATCOM dispatch");
    app->add_flag("--no-freq", a.no_freq, "drop the nadir and RoCoF constraints");
}

std::vector< std::string > split(const std::string& s, char sep)
{
    std::vector< std::string > out;
    std::string                cur;
    std::istringstream         is(s);
    while (std::getline(is, cur, sep))
        if (!cur.empty())
            out.push_back(cur);
    return out;
}

double to_double(const std::string& s)
{
    std::size_t pos = 0;
    double      v   = 0.0;
    try
    {
        v = std::stod(s, &pos);
    }
    catch (const std::exception&)
    {
        pos = 0;
    }
    if (pos != s.size() || s.empty())
        throw Error(ErrorCode::InvalidArgument, "not a number: '" + s + "'");
    return v;
}

std::vector< Mode > parse_modes(const std::string& s)
{
    std::vector< Mode > out;
    for (const auto& m : split(s, ','))
        out.push_back(parse_mode(m));
    if (out.empty())
        throw Error(ErrorCode::InvalidArgument, "no mode given");
    return out;
}

std::vector< QuantileBin > parse_quantiles(const std::string& s)
{
    std::vector< QuantileBin > out;
    for (const auto& bin : split(s, ','))
    {
        const auto f = split(bin, ':');
        if (f.size() < 2 || f.size() > 3)
            throw Error(ErrorCode::InvalidArgument, "quantile bin '" + bin + "' is not mass:wind_dev[:load_dev]");
        QuantileBin q;
        q.mass     = to_double(f[0]);
        q.wind_dev = to_double(f[1]);
        q.load_dev = f.size() == 3 ? to_double(f[2]) : 0.0;
        out.push_back(q);
    }
    return out;
}

TreeConfig tree_config(const CommonArgs& a)
{
    TreeConfig t;
    t.start_hour = a.start_hour;
    t.horizon    = a.horizon;
    if (!a.branching.empty())
    {
        std::vector< int > b;
        for (const auto& h : split(a.branching, ','))
            b.push_back(static_cast< int >(std::lround(to_double(h))));
        t.branching_hours = b;
    }
    if (!a.quantiles.empty())
        t.quantiles = parse_quantiles(a.quantiles);
    return t;
}

BnbOptions solver_options(const CommonArgs& a)
{
    BnbOptions o;
    o.rel_gap = a.gap;
    o.threads = a.single_thread ? 1 : a.threads;
    o.trace   = a.trace;
    if (a.time_limit > 0.0)
        o.time_limit_s = a.time_limit;
    return o;
}

BuildOptions build_options(const CommonArgs& a)
{
    BuildOptions b;
    b.statcom_enabled = !a.no_statcom;
    b.freq_enabled    = !a.no_freq;
    b.rocof_enabled   = !a.no_freq;
    return b;
}

std::string read_text(const std::string& path)
{
    std::ifstream      f(path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

std::vector< int > ibg_buses(const GridCase& gc)
{
    std::vector< int > b;
    for (const auto& c : gc.gfl_ibgs)
        b.push_back(c.bus);
    return b;
}

void print_counts(const GridCase& gc, const ScenarioTree& tree, Mode mode, const SurrogateModel* sur,
                  BuildOptions bo, const std::string& ir_dir = {})
{
    bo.mode     = mode;
    const auto bp = build(gc, tree, is_vsc(mode) ? sur : nullptr, bo);
    const auto c  = count(bp.program);
    const int  nv = sur ? sur->n_v : surrogate_levels(gc);
    std::cout << to_string(mode) << ": nodes=" << tree.size() << " variables=" << c.variables
              << " (structural=" << structural_variable_count(gc, tree, bp.options, nv)
              << " products=" << bp.vars.n_products << ") binaries=" << c.binaries << " linear_rows=" << c.linear_rows
              << " equalities=" << c.equalities << " socs=" << c.socs << " rotated=" << c.rotated << '\n';
    for (const auto& d : bp.diagnostics)
        std::cerr << "warning: " << d.message << '\n';
    if (!ir_dir.empty())
    {
        fs::create_directories(ir_dir);
        std::ostringstream os;
        write_ir(os, bp.program);
        write_file((fs::path(ir_dir) / ("program_" + std::string(to_string(mode)) + ".ir")).string(), os.str());
    }
}

ExperimentSpec make_spec(const CommonArgs& a, const std::string& name)
{
    ExperimentSpec s;
    s.name      = name;
    s.case_path = a.case_path;
    s.modes     = parse_modes(a.modes);
    s.tree      = tree_config(a);
    s.solver    = solver_options(a);
    s.build     = build_options(a);
    return s;
}

void write_outputs(const ExperimentSpec& spec, const std::string& out, const GridCase& gc,
                   const std::vector< MetricsReport >& rows, const std::string& file)
{
    fs::create_directories(out);
    write_file((fs::path(out) / file).string(), table_csv(rows, ibg_buses(gc)));
    for (const auto& fig : figures_for(spec.axis))
        write_file((fs::path(out) / (fig + ".csv")).string(), emit_plotdata(rows, fig, spec.modes));
    write_file((fs::path(out) / "manifest.json").string(), run_manifest(spec, read_text(spec.case_path)).dump(2) + "\n");
}

int cmd_solve(const CommonArgs& a)
{
    const auto gc   = load_case(a.case_path);
    const auto spec = make_spec(a, "solve");
    const auto tree = make_tree(gc, spec.tree);
    std::optional< SurrogateModel > sur;
    if (std::any_of(spec.modes.begin(), spec.modes.end(), is_vsc))
        sur = fit_case(gc, surrogate_levels(gc));
    if (a.dry_run)
    {
        for (Mode m : spec.modes)
            print_counts(gc, tree, m, sur ? &*sur : nullptr, spec.build, a.out);
        return 0;
    }
    std::cout << csv_header(ibg_buses(gc)) << '\n';
    std::vector< MetricsReport > rows;
    int                          bad = 0;
    for (Mode m : spec.modes)
    {
        auto r              = solve_case(gc, tree, m, sur ? &*sur : nullptr, spec.build, spec.solver);
        r.metrics.experiment = "NONE";
        std::cout << csv_row(r.metrics) << std::endl;
        bad += r.schedule ? 0 : 1;
        rows.push_back(r.metrics);
    }
    write_outputs(spec, a.out, gc, rows, "solve.csv");
    return bad == 0 ? 0 : (bad == static_cast< int >(rows.size()) ? 1 : 2);
}

int cmd_surrogate(const CommonArgs& a, int levels, bool write_dataset)
{
    const auto gc = load_case(a.case_path);
    const int  nv = levels > 0 ? levels : surrogate_levels(gc);
    const auto ds = enumerate_dataset(gc, nv);
    std::cerr << "dataset: " << ds.candidates << " candidates, " << ds.samples.size() << " samples, " << ds.excluded
              << " excluded\n";
    if (a.dry_run)
        return 0;
    const auto m = fit(ds, kDefaultPruneThresh, feature_names(gc));
    fs::create_directories(a.out);
    write_file((fs::path(a.out) / "surrogate.json").string(), serialize_model(m).dump(2) + "\n");
    write_file((fs::path(a.out) / "surrogate_metrics.csv").string(), metrics_csv(m));
    if (write_dataset)
        write_file((fs::path(a.out) / "dataset.csv").string(), dataset_csv(ds));
    std::cout << metrics_csv(m);
    return 0;
}

int cmd_sweep(const CommonArgs& a, const std::string& axis, const std::string& values)
{
    const auto gc = load_case(a.case_path);
    auto       spec = make_spec(a, "sweep");
    spec.axis       = parse_axis(axis);
    for (const auto& v : split(values, ','))
        spec.values.push_back(to_double(v));
    spec.validate();
    if (a.dry_run)
    {
        const std::vector< double > vals = spec.axis == SweepAxis::None ? std::vector< double >{0.0} : spec.values;
        for (double v : vals)
        {
            const auto pc   = patch_case(gc, spec, v);
            const auto tree = make_tree(pc, spec.tree);
            std::optional< SurrogateModel > sur;
            if (std::any_of(spec.modes.begin(), spec.modes.end(), is_vsc))
                sur = fit_case(pc, surrogate_levels(pc));
            std::cout << to_string(spec.axis) << " = " << v << '\n';
            for (Mode m : spec.modes)
                print_counts(pc, tree, m, sur ? &*sur : nullptr, spec.build);
        }
        return 0;
    }
    std::cout << csv_header(ibg_buses(gc)) << '\n';
    const auto res = run_sweep(gc, spec, [](const MetricsReport& m) { std::cout << csv_row(m) << std::endl; });
    for (const auto& d : res.diagnostics)
        std::cerr << "warning: " << d << '\n';
    write_outputs(spec, a.out, gc, res.rows, "sweep.csv");
    if (res.failures == 0)
        return 0;
    return res.failures == res.rows.size() ? 1 : 2;
}

int cmd_rolling(const CommonArgs& a, int steps)
{
    const auto gc   = load_case(a.case_path);
    const auto spec = make_spec(a, "rolling");
    if (spec.modes.size() != 1)
        throw Error(ErrorCode::InvalidArgument, "rolling takes exactly one --mode");
    RollingOptions o;
    o.mode            = spec.modes[0];
    o.start_hour      = a.start_hour;
    o.steps           = steps;
    o.lookahead       = a.horizon;
    o.branching_hours = spec.tree.branching_hours;
    o.quantiles       = spec.tree.quantiles;
    o.solver          = spec.solver;
    o.build           = spec.build;
    std::optional< SurrogateModel > sur;
    if (is_vsc(o.mode))
        sur = fit_case(gc, surrogate_levels(gc));
    if (a.dry_run)
    {
        TreeConfig t = spec.tree;
        print_counts(gc, make_tree(gc, t), o.mode, sur ? &*sur : nullptr, o.build);
        return 0;
    }
    const auto r = run_rolling(gc, o, sur ? &*sur : nullptr, [](const RollingStep& s) {
        std::cerr << "hour " << s.hour << ": " << s.status << " cost " << s.hour_cost << '\n';
    });
    const auto bad = check_commitment_sequence(gc, r.steps);
    for (const auto& b : bad)
        std::cerr << "error: " << b << '\n';
    fs::create_directories(a.out);
    write_file((fs::path(a.out) / "rolling.csv").string(), rolling_csv(r));
    write_file((fs::path(a.out) / "manifest.json").string(), run_manifest(spec, read_text(a.case_path)).dump(2) + "\n");
    std::cout << std::setprecision(10) << "total_cost," << r.total_cost << "\ncurtailment_mwh," << r.curtailment_mwh
              << "\nshed_mwh," << r.shed_mwh << "\nmax_viol_pct," << r.max_violation_pct << '\n';
    return bad.empty() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Voltage-stability-constrained stochastic unit commitment"};
    app.require_subcommand(1);

    CommonArgs solve_a, sur_a, sweep_a, roll_a;
    auto*      solve = app.add_subcommand("solve", "solve one case in one or more modes");
    add_common(solve, solve_a, true);

    auto*       surrogate = app.add_subcommand("surrogate", "fit the impedance-ratio surrogate of a case");
    std::string action    = "fit";
    int         levels    = 0;
    bool        dataset   = false;
    surrogate->add_option("action", action, "fit")->check(CLI::IsMember({"fit"}));
    surrogate->add_option("--levels", levels, "alpha grid levels, 0 = case value")->check(CLI::NonNegativeNumber);
    surrogate->add_flag("--dataset", dataset, "also write the training dataset");
    add_common(surrogate, sur_a, false);

    auto*       sweep = app.add_subcommand("sweep", "run a parameter sweep");
    std::string axis  = "NONE", values;
    sweep->add_option("--sweep", axis, "NONE, WIND_CAPACITY, STATCOM_RATING, STATCOM_SITE or SC_RATING")
        ->capture_default_str();
    sweep->add_option("--values", values, "comma-separated sorted sweep values (MW, MVAr or bus id)");
    add_common(sweep, sweep_a, true);

    auto* rolling = app.add_subcommand("rolling", "rolling-horizon day simulation");
    int   steps   = 24;
    rolling->add_option("--steps", steps, "implemented hours")->capture_default_str()->check(CLI::PositiveNumber);
    roll_a.modes = "VSC_SI";
    add_common(rolling, roll_a, true);

    auto*  tco_cmd = app.add_subcommand("tco", "STATCOM loss and O&M cost");
    double rating = 0.0, loss = 0.0, price = 0.0, capex = 0.0;
    tco_cmd->add_option("--rating", rating, "MVAr")->required();
    tco_cmd->add_option("--loss", loss, "loss fraction of rating")->required();
    tco_cmd->add_option("--price", price, "$/MWh")->capture_default_str();
    tco_cmd->add_option("--capex", capex, "$")->capture_default_str();

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try
    {
        if (*solve)
            return cmd_solve(solve_a);
        if (*surrogate)
            return cmd_surrogate(sur_a, levels, dataset);
        if (*sweep)
            return cmd_sweep(sweep_a, axis, values);
        if (*rolling)
            return cmd_rolling(roll_a, steps);
        if (*tco_cmd)
        {
            const auto r = tco(rating, loss, price, capex);
            std::cout << std::setprecision(10) << "p_loss_mw," << r.p_loss << "\ne_loss_mwh_per_yr," << r.e_loss
                      << "\nc_loss_per_yr," << r.c_loss << "\nc_oandm_per_yr," << r.c_oandm << '\n';
            return 0;
        }
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
