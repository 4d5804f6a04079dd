// Command line front end: simulate, eta-range, fit, experiment, rate-probe.

#include "haarreg/car.hpp"
#include "haarreg/design.hpp"
#include "haarreg/error.hpp"
#include "haarreg/estimator.hpp"
#include "haarreg/harness.hpp"
#include "haarreg/lattice.hpp"
#include "haarreg/model_io.hpp"
#include "haarreg/results_io.hpp"
#include "haarreg/schedule.hpp"
#include "haarreg/snapshot.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace haarreg;

struct Options {
    ExperimentConfig config;
    std::string beta = "max";
    std::string out;
    OutputFormat format = OutputFormat::Csv;
    bool table1 = false;

    // simulate
    bool raw = false;

    // fit
    std::string sample_path;
    double lambda = 0.08;
    double holdout = 0.0;

    // rate-probe
    std::vector<std::size_t> ladder{10, 20, 40};
    bool schedule = false;
    ScheduleParams schedule_params;
};

BetaPolicy parse_beta(const std::string& text) {
    if (text == "max") return {};
    if (text == "inf" || text == "none") return {BetaPolicy::Kind::Unbounded, 0.0};
    try {
        std::size_t used = 0;
        const double value = std::stod(text, &used);
        if (used == text.size() && value > 0.0) return {BetaPolicy::Kind::Fixed, value};
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::InvalidConfig, "beta must be 'max', 'inf' or a positive number, got '" + text + "'");
}

/// Writes to --out when given, stdout otherwise.
void emit(const std::string& text, const std::string& out) {
    if (out.empty() || out == "-") {
        std::cout << text;
        return;
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) throw Error(ErrorCode::IoError, "cannot open '" + out + "' for writing");
    file << text;
    if (!file.flush()) throw Error(ErrorCode::IoError, "failed writing '" + out + "'");
}

std::string render_rows(const std::vector<ResultRow>& rows, OutputFormat format) {
    return format == OutputFormat::Csv ? format_csv(rows) : rows_to_json(rows).dump(2) + "\n";
}

int run_simulate(Options& o) {
    const LatticeGraph graph(o.config.size, o.config.size, o.config.boundary);
    std::ostringstream text;
    if (o.raw) {
        const auto spec = regression_car_spec(o.config.eta);
        const auto state = gibbs_run(graph, conclique_cover(graph), spec, o.config.iterations, o.config.seed);
        write_field_snapshot(text, graph, state);
    } else {
        const auto sample = make_regression_sample(graph, regression_car_spec(o.config.eta), o.config.design,
                                                   o.config.regression, o.config.iterations, o.config.seed);
        write_sample_snapshot(text, sample);
    }
    emit(text.str(), o.out);
    return 0;
}

int run_eta_range(Options& o) {
    const LatticeGraph graph(o.config.size, o.config.size, o.config.boundary);
    const auto range = admissible_eta_range(graph);
    char buf[160];
    std::string text;
    if (o.format == OutputFormat::Json) {
        text = nlohmann::json{{"size", o.config.size},
                              {"boundary", to_string(o.config.boundary)},
                              {"lower", range.lower},
                              {"upper", range.upper},
                              {"h_min", range.h_min},
                              {"h_max", range.h_max}}
                   .dump(2) +
               "\n";
    } else {
        std::snprintf(buf, sizeof buf, "lower,upper,h_min,h_max\n%.17g,%.17g,%.17g,%.17g\n", range.lower, range.upper,
                      range.h_min, range.h_max);
        text = buf;
    }
    emit(text, o.out);
    return 0;
}

/// Splits a sample into learning and holdout parts with a shuffle keyed by the seed.
std::pair<LabeledSample, LabeledSample> split_sample(const LabeledSample& sample, double holdout, std::uint64_t seed) {
    std::vector<std::size_t> order(sample.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng::Stream stream(rng::derive(seed, {0x5b1175eedULL}));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[stream.below(i)]);
    const auto held = static_cast<std::size_t>(std::floor(holdout * static_cast<double>(sample.size())));
    std::vector<char> is_held(sample.size(), 0);
    for (std::size_t i = 0; i < held; ++i) is_held[order[i]] = 1;
    LabeledSample learn(sample.dim(), sample.site_dim());
    LabeledSample test(sample.dim(), sample.site_dim());
    for (std::size_t i = 0; i < sample.size(); ++i)
        (is_held[i] ? test : learn).add(sample.point(i), sample.response(i), sample.site(i));
    return {std::move(learn), std::move(test)};
}

int run_fit(Options& o) {
    const auto sample = read_sample_snapshot(o.sample_path);
    const auto domain = o.config.domain();
    domain.validate();
    LabeledSample learn = sample;
    std::optional<LabeledSample> test;
    if (o.holdout > 0.0) {
        auto [l, t] = split_sample(sample, o.holdout, o.config.seed);
        learn = std::move(l);
        test = std::move(t);
    }
    const auto beta = parse_beta(o.beta).resolve(learn);
    const auto model = fit_model(learn, domain, o.lambda, beta);
    if (o.out.empty()) {
        std::cout << model_to_json(model).dump(2) << '\n';
    } else {
        write_model(model, o.out);
    }
    std::cerr << "fitted " << model.selected().size() << " of " << model.basis().size() << " coefficients on "
              << learn.size() << " observations\n";
    if (test && !test->empty()) {
        CompensatedSum sse;
        for (std::size_t i = 0; i < test->size(); ++i) {
            const double r = model.predict(test->point(i)) - test->response(i);
            sse.add(r * r);
        }
        std::cerr << "holdout mean squared prediction error " << sse.value() / static_cast<double>(test->size()) << " on "
                  << test->size() << " observations\n";
    }
    return 0;
}

int run_experiment_cmd(Options& o) {
    std::vector<ResultRow> rows;
    if (o.table1) {
        for (auto regression : {Regression::M1, Regression::M2})
            for (auto design : {Design::A, Design::B})
                for (auto mode : {Mode::Dependent, Mode::Independent}) {
                    ExperimentConfig config = o.config;
                    config.design = design;
                    config.regression = regression;
                    config.mode = mode;
                    const auto part = run_experiment(config);
                    rows.insert(rows.end(), part.begin(), part.end());
                }
    } else {
        rows = run_experiment(o.config);
    }
    if (o.out.empty() || o.out == "-")
        std::cout << render_rows(rows, o.format);
    else
        export_rows(rows, o.out, o.format);
    return 0;
}

int run_rate_probe(Options& o) {
    const auto result = rate_probe(o.config, o.ladder, o.schedule ? std::optional(o.schedule_params) : std::nullopt);
    std::string text;
    if (o.format == OutputFormat::Json) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : result.rows)
            rows.push_back({{"size", row.side},
                            {"n", row.n},
                            {"lambda", row.lambda},
                            {"resolution", row.resolution},
                            {"mean_l2", row.mean_l2},
                            {"sd_l2", row.sd_l2}});
        text = nlohmann::json{{"rows", rows}, {"slope", result.slope}}.dump(2) + "\n";
    } else {
        text = "size,n,lambda,resolution,mean_l2,sd_l2\n";
        char buf[160];
        for (const auto& row : result.rows) {
            std::snprintf(buf, sizeof buf, "%zu,%zu,%.6g,%d,%#.6g,%#.6g\n", row.side, row.n, row.lambda, row.resolution,
                          row.mean_l2, row.sd_l2);
            text += buf;
        }
        std::snprintf(buf, sizeof buf, "# log-log slope %.6g\n", result.slope);
        text += buf;
    }
    emit(text, o.out);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    auto& c = o.config;
    CLI::App app{"Design-adapted Haar wavelet regression on lattice data"};
    app.set_config("--config", "", "Key-value config file; command line flags override it");
    app.require_subcommand(1);

    const std::map<std::string, Boundary> boundaries{{"free", Boundary::Free}, {"torus", Boundary::Torus}};
    const std::map<std::string, Design> designs{{"a", Design::A}, {"b", Design::B}};
    const std::map<std::string, Regression> regressions{{"m1", Regression::M1}, {"m2", Regression::M2}};
    const std::map<std::string, Mode> modes{{"dependent", Mode::Dependent}, {"independent", Mode::Independent}};
    const std::map<std::string, OutputFormat> formats{{"csv", OutputFormat::Csv}, {"json", OutputFormat::Json}};

    app.add_option("--size", c.size, "Lattice side length")->capture_default_str();
    app.add_option("--boundary", c.boundary, "free or torus")->transform(CLI::CheckedTransformer(boundaries, CLI::ignore_case));
    app.add_option("--eta", c.eta, "CAR interaction parameter")->capture_default_str();
    app.add_option("--iterations", c.iterations, "Gibbs sweeps per chain")->capture_default_str();
    app.add_option("--replications", c.replications, "Monte Carlo replications")->capture_default_str();
    app.add_option("--design", c.design, "a or b")->transform(CLI::CheckedTransformer(designs, CLI::ignore_case));
    app.add_option("--regression", c.regression, "m1 or m2")->transform(CLI::CheckedTransformer(regressions, CLI::ignore_case));
    app.add_option("--mode", c.mode, "dependent or independent")->transform(CLI::CheckedTransformer(modes, CLI::ignore_case));
    app.add_option("--lambda-grid", c.lambda_grid, "Comma separated thresholds")->delimiter(',');
    app.add_option("--resolution", c.resolution, "Finest level j1")->capture_default_str();
    app.add_option("--j0", c.j0, "Coarsest level j0")->capture_default_str();
    app.add_option("--w", c.w, "Domain half-width in level-j0 cubes")->capture_default_str();
    app.add_option("--beta", o.beta, "Truncation bound: max, inf or a number")->capture_default_str();
    app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
    app.add_option("--workers", c.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "Output path (stdout when omitted)");
    app.add_option("--format", o.format, "csv or json")->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));

    auto* simulate = app.add_subcommand("simulate", "Simulate one lattice sample and write a snapshot");
    simulate->add_flag("--raw", o.raw, "Write the raw CAR field instead of the regression sample");

    app.add_subcommand("eta-range", "Print the admissible interval for eta");

    auto* fit = app.add_subcommand("fit", "Fit a thresholded model to a sample snapshot");
    fit->add_option("--sample", o.sample_path, "Sample snapshot (s1,s2,x1,x2,y)")->required()->check(CLI::ExistingFile);
    fit->add_option("--lambda", o.lambda, "Hard threshold")->capture_default_str()->check(CLI::NonNegativeNumber);
    fit->add_option("--holdout", o.holdout, "Fraction held out for a prediction check")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.95));

    auto* experiment = app.add_subcommand("experiment", "Run a lambda sweep");
    experiment->add_flag("--table1", o.table1, "Run every design, regression and mode");

    auto* probe = app.add_subcommand("rate-probe", "Best error along a ladder of lattice sizes");
    probe->add_option("--ladder", o.ladder, "Comma separated lattice sides")->delimiter(',');
    probe->add_flag("--schedule", o.schedule, "Take lambda and j1 from the asymptotic schedule");
    probe->add_option("--smoothness", o.schedule_params.r, "Hoelder exponent r")->capture_default_str();
    probe->add_option("--tau", o.schedule_params.tau, "Error tail exponent")->capture_default_str();
    probe->add_option("--c1", o.schedule_params.c1, "Threshold constant")->capture_default_str();
    probe->add_option("--c2", o.schedule_params.c2, "Resolution constant")->capture_default_str();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        c.beta = parse_beta(o.beta);
        if (simulate->parsed()) return run_simulate(o);
        if (app.got_subcommand("eta-range")) return run_eta_range(o);
        if (fit->parsed()) return run_fit(o);
        c.validate();
        if (experiment->parsed()) return run_experiment_cmd(o);
        if (probe->parsed()) return run_rate_probe(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
