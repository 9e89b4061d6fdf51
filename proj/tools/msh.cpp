// msh - multi-scale diffusion laboratory command line.
//
// Every subcommand writes one JSON-lines RunRecord to --out (or stdout) and
// logs wall time to stderr, so output files are byte-stable for a fixed seed
// regardless of --threads.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "msh/analysis.hpp"
#include "msh/config.hpp"
#include "msh/green.hpp"
#include "msh/homogenization.hpp"
#include "msh/kernel.hpp"
#include "msh/martingale.hpp"
#include "msh/plot.hpp"
#include "msh/potential.hpp"
#include "msh/pressure.hpp"
#include "msh/records.hpp"
#include "msh/sde.hpp"
#include "msh/version.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
    std::uint64_t seed = 0;
    int threads = 0; // 0 = resolve from MSH_THREADS, default 1
    std::string out;
    std::string format = "json";
    bool strict = false;

    int resolved_threads() const {
        if (threads > 0) return threads;
        if (const char* env = std::getenv("MSH_THREADS")) {
            const int t = std::atoi(env);
            if (t > 0) return t;
        }
        return 1;
    }
};

void add_global_opts(CLI::App* cmd, GlobalOpts& g) {
    cmd->add_option("--seed", g.seed, "master RNG seed");
    cmd->add_option("--threads", g.threads, "worker threads (default: MSH_THREADS or 1)");
    cmd->add_option("--out", g.out, "output file (JSON lines); default stdout");
    cmd->add_option("--format", g.format, "json|csv payload rendering")
        ->check(CLI::IsMember({"json", "csv"}));
    cmd->add_flag("--strict", g.strict, "exit 3 on statistical-validity warnings");
}

json potential_config_json(const msh::Config& cfg) {
    json j = json::object();
    for (const auto& [k, v] : cfg.entries()) j[k] = v;
    return j;
}

/// CSV rendering is a derived view of the JSON payload: one row per entry of
/// the payload's primary array, columns from its flat numeric fields.
std::string payload_csv(const json& payload) {
    // find the first array-of-objects member
    for (const auto& [key, value] : payload.items()) {
        if (value.is_array() && !value.empty() && value.front().is_object()) {
            std::vector<std::string> cols;
            for (const auto& [ck, cv] : value.front().items())
                if (cv.is_number()) cols.push_back(ck);
            std::string out;
            for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
            out += "\n";
            for (const auto& row : value) {
                for (std::size_t i = 0; i < cols.size(); ++i)
                    out += (i ? "," : "") +
                           msh::CsvWriter::format_shortest(row.value(cols[i], std::nan("")));
                out += "\n";
            }
            return out;
        }
    }
    return payload.dump() + "\n";
}

int emit(const GlobalOpts& g, const msh::RunRecord& record) {
    const std::string text =
        g.format == "csv" ? payload_csv(record.payload) : record.to_line() + "\n";
    if (g.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(g.out);
        if (!out) {
            std::cerr << "msh: cannot write " << g.out << "\n";
            return 2;
        }
        out << text;
    }
    return 0;
}

json summarize_exit(const std::vector<msh::ExitTimeSummary>& summaries) {
    json rows = json::array();
    for (const auto& s : summaries) {
        rows.push_back({{"radius", s.radius},
                        {"mean", s.mean},
                        {"std_error", s.std_error},
                        {"n_exited", s.n_exited},
                        {"n_truncated", s.n_truncated},
                        {"validity_warning", s.validity_warning}});
    }
    return {{"exit_times", rows}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"msh - multi-scale diffusion laboratory"};
    app.set_version_flag("--version", MSH_VERSION);
    app.require_subcommand(1);

    GlobalOpts g;
    bool statistical_warning = false;
    msh::RunRecord record;

    // ---- diffusivity ----
    auto* cmd_diff = app.add_subcommand("diffusivity", "effective diffusivity D(V_0^n) with brackets");
    std::string diff_potential;
    int diff_n = 0;
    cmd_diff->add_option("--potential", diff_potential, "potential config file")->required();
    cmd_diff->add_option("--n", diff_n, "scale index n");
    add_global_opts(cmd_diff, g);
    cmd_diff->callback([&] {
        const msh::Config cfg = msh::Config::load(diff_potential);
        const msh::MultiScalePotential msp = msh::load_potential(cfg);
        const msh::Diffusivity d = msh::multiscale_diffusivity(msp, diff_n);
        json payload = {{"n", diff_n}, {"value", d.value}, {"error_estimate", d.error_estimate}};
        if (diff_n >= 0) {
            const msh::ModelConstants c = msh::model_constants(msp);
            const auto [lo, hi] = msh::diffusivity_bounds(diff_n + 1, c, msp.schedule());
            payload["lower_bound"] = lo;
            payload["upper_bound"] = hi;
        }
        record = {"diffusivity", potential_config_json(cfg), g.seed, payload};
    });

    // ---- exit-time ----
    auto* cmd_exit = app.add_subcommand("exit-time", "Monte Carlo mean exit times E[tau(0,r)]");
    std::string exit_potential;
    std::vector<double> exit_radii;
    std::int64_t exit_paths = 10000;
    double exit_dt = 1e-3;
    bool exit_no_bridge = false;
    bool exit_predict = false;
    cmd_exit->add_option("--potential", exit_potential)->required();
    cmd_exit->add_option("--radii", exit_radii, "exit radii")->required()->expected(-1);
    cmd_exit->add_option("--paths", exit_paths);
    cmd_exit->add_option("--dt", exit_dt);
    cmd_exit->add_flag("--no-bridge", exit_no_bridge, "disable Brownian-bridge exit correction");
    cmd_exit->add_flag("--predict", exit_predict, "attach r^2/D(V_0^{n_ef}) predictions");
    add_global_opts(cmd_exit, g);
    cmd_exit->callback([&] {
        const msh::Config cfg = msh::Config::load(exit_potential);
        const msh::MultiScalePotential msp = msh::load_potential(cfg);
        msh::SimulationPlan plan;
        plan.dt = exit_dt;
        plan.n_paths = exit_paths;
        plan.master_seed = g.seed;
        plan.bridge_correction = !exit_no_bridge;
        plan.threads = g.resolved_threads();
        const auto summaries = msh::sample_exit_times(msp, plan, exit_radii);
        json payload = summarize_exit(summaries);
        for (const auto& s : summaries) statistical_warning |= s.validity_warning;
        if (exit_predict) {
            json preds = json::array();
            for (double r : exit_radii) {
                const msh::ExitPrediction p = msh::predict_exit(msp, r);
                preds.push_back({{"radius", r},
                                 {"prediction", p.prediction},
                                 {"factor", p.factor},
                                 {"n_ef", p.n_ef}});
            }
            payload["predictions"] = preds;
        }
        record = {"exit-time", potential_config_json(cfg), g.seed, payload};
    });

    // ---- msd ----
    auto* cmd_msd = app.add_subcommand("msd", "Monte Carlo mean squared displacement E[y_t^2]");
    std::string msd_potential;
    std::vector<double> msd_checkpoints;
    std::int64_t msd_paths = 10000;
    double msd_dt = 1e-3, msd_horizon = 0.0;
    bool msd_envelope_flag = false;
    cmd_msd->add_option("--potential", msd_potential)->required();
    cmd_msd->add_option("--checkpoints", msd_checkpoints)->required()->expected(-1);
    cmd_msd->add_option("--paths", msd_paths);
    cmd_msd->add_option("--dt", msd_dt);
    cmd_msd->add_option("--horizon", msd_horizon, "default: last checkpoint");
    cmd_msd->add_flag("--envelope", msd_envelope_flag, "attach the MSD envelope bounds");
    add_global_opts(cmd_msd, g);
    cmd_msd->callback([&] {
        const msh::Config cfg = msh::Config::load(msd_potential);
        const msh::MultiScalePotential msp = msh::load_potential(cfg);
        msh::SimulationPlan plan;
        plan.dt = msd_dt;
        plan.n_paths = msd_paths;
        plan.master_seed = g.seed;
        plan.horizon = msd_horizon > 0.0 ? msd_horizon : msd_checkpoints.back();
        plan.threads = g.resolved_threads();
        const msh::MsdSeries series = msh::simulate_msd(msp, plan, msd_checkpoints);
        json rows = json::array();
        for (const auto& p : series.points) {
            json row = {{"t", p.t},
                        {"msd", p.msd},
                        {"std_error", p.std_error},
                        {"mean", p.mean},
                        {"mean_std_error", p.mean_std_error}};
            if (msd_envelope_flag && p.t >= msp.schedule().radius(1) * msp.schedule().radius(1)) {
                const msh::MsdEnvelope env = msh::msd_envelope(msp, p.t);
                row["envelope_lower"] = env.lower;
                row["envelope_upper"] = env.upper;
                row["n_flu"] = env.scales.n_flu;
                row["n_per"] = env.scales.n_per;
                row["n_per_degenerate"] = env.scales.n_per_degenerate;
            }
            rows.push_back(row);
        }
        record = {"msd", potential_config_json(cfg), g.seed, json{{"msd", rows}}};
    });

    // ---- tail ----
    auto* cmd_tail = app.add_subcommand("tail", "empirical tail P(|y_t| >= h)");
    std::string tail_potential;
    std::vector<double> tail_h;
    double tail_t = 1.0, tail_dt = 1e-3;
    std::int64_t tail_paths = 10000;
    cmd_tail->add_option("--potential", tail_potential)->required();
    cmd_tail->add_option("--t", tail_t)->required();
    cmd_tail->add_option("--h-grid", tail_h)->required()->expected(-1);
    cmd_tail->add_option("--paths", tail_paths);
    cmd_tail->add_option("--dt", tail_dt);
    add_global_opts(cmd_tail, g);
    cmd_tail->callback([&] {
        const msh::Config cfg = msh::Config::load(tail_potential);
        const msh::MultiScalePotential msp = msh::load_potential(cfg);
        msh::SimulationPlan plan;
        plan.dt = tail_dt;
        plan.n_paths = tail_paths;
        plan.master_seed = g.seed;
        plan.horizon = tail_t;
        plan.threads = g.resolved_threads();
        const msh::TailEstimate est = msh::estimate_tail(msp, plan, tail_t, tail_h);
        json rows = json::array();
        for (const auto& p : est.points) {
            rows.push_back({{"h", p.h},
                            {"p", p.p},
                            {"lo", p.lo},
                            {"hi", p.hi},
                            {"exceedances", p.exceedances},
                            {"widened", p.widened}});
            statistical_warning |= p.widened;
        }
        record = {"tail", potential_config_json(cfg), g.seed, json{{"t", est.t}, {"tail", rows}}};
    });

    // ---- pressure ----
    auto* cmd_pressure = app.add_subcommand("pressure", "topological-pressure anomaly classification");
    std::string pressure_potential;
    int pressure_ratio = 2, pressure_nmax = 6;
    cmd_pressure->add_option("--potential", pressure_potential)->required();
    cmd_pressure->add_option("--ratio", pressure_ratio)->required();
    cmd_pressure->add_option("--n-max", pressure_nmax);
    add_global_opts(cmd_pressure, g);
    cmd_pressure->callback([&] {
        const msh::Config cfg = msh::Config::load(pressure_potential);
        const msh::PeriodicPotential u(
            cfg.has("harmonics") ? msh::parse_harmonics(cfg.get_list("harmonics"))
                                 : std::vector<msh::Harmonic>{});
        const msh::AnomalyReport rep = msh::anomaly_index(u, pressure_ratio, pressure_nmax);
        json points = json::array();
        for (const auto& p : rep.index_points)
            points.push_back({{"n", p.n},
                              {"index", p.p},
                              {"std_error", p.std_error},
                              {"monte_carlo", p.monte_carlo}});
        record = {"pressure",
                  potential_config_json(cfg),
                  g.seed,
                  json{{"ratio", rep.ratio},
                       {"index", rep.index},
                       {"residual", rep.residual},
                       {"index_points", points},
                       {"sup_defects", rep.sup_defects},
                       {"defects_resolved", rep.defects_resolved},
                       {"classification", msh::to_string(rep.classification)}}};
        statistical_warning |= rep.classification == msh::Anomaly::Inconclusive;
    });

    // ---- green-check ----
    auto* cmd_green = app.add_subcommand("green-check", "sub-harmonic inequality and Green stability");
    std::string green_lambda, green_mu;
    std::int64_t green_pairs = 1000;
    cmd_green->add_option("--lambda", green_lambda, "coefficient config file")->required();
    cmd_green->add_option("--mu", green_mu, "second coefficient (stability check)");
    cmd_green->add_option("--pairs", green_pairs);
    add_global_opts(cmd_green, g);
    cmd_green->callback([&] {
        const msh::Config cfg = msh::Config::load(green_lambda);
        const msh::Coefficient lam = msh::load_coefficient(cfg);
        msh::CounterRng rng(g.seed, 0);
        double max_ratio = 0.0, ax = 0.0, ay = 0.0;
        std::vector<std::pair<double, double>> pairs;
        for (std::int64_t i = 0; i < green_pairs; ++i) {
            double x = 0.002 + 0.996 * rng.next_uniform();
            double y = 0.002 + 0.996 * rng.next_uniform();
            if (x == y) y = 0.5 * (x + 1.0);
            pairs.emplace_back(x, y);
            const double r = msh::tiger_ratio(lam, x, y);
            if (r > max_ratio) {
                max_ratio = r;
                ax = x;
                ay = y;
            }
        }
        json payload = {{"max_ratio", max_ratio}, {"argmax", {ax, ay}},
                        {"reduction_error", lam.reduction_error()}};
        if (!green_mu.empty()) {
            const msh::Coefficient mu = msh::load_coefficient_file(green_mu);
            const msh::StabilityReport rep = msh::stability_ratio(lam, mu, pairs);
            payload["stability"] = {{"s", rep.s},
                                    {"worst_margin", rep.worst_margin},
                                    {"violated", rep.violated},
                                    {"worst_ratio", rep.worst_ratio}};
        }
        record = {"green-check", potential_config_json(cfg), g.seed, payload};
    });

    // ---- martingale-check ----
    auto* cmd_mart = app.add_subcommand("martingale-check", "Laplace bound vs exact envelope transform");
    double mart_f1 = 2.0, mart_f2 = 1.0, mart_t0 = 1.0, mart_t = 10.0;
    std::vector<double> mart_grid;
    cmd_mart->add_option("--f1", mart_f1)->required();
    cmd_mart->add_option("--f2", mart_f2)->required();
    cmd_mart->add_option("--t0", mart_t0)->required();
    cmd_mart->add_option("--t", mart_t)->required();
    cmd_mart->add_option("--lambda-grid", mart_grid, "explicit lambda values; default 50-point grid")
        ->expected(-1);
    add_global_opts(cmd_mart, g);
    cmd_mart->callback([&] {
        const msh::BracketEnvelope env(mart_f1, mart_f2, mart_t0);
        std::vector<double> grid = mart_grid;
        if (grid.empty()) {
            const double sup = env.degenerate ? 1.0 : env.lambda_sup();
            for (int i = 1; i <= 50; ++i) grid.push_back(0.95 * sup * i / 50.0);
        }
        json rows = json::array();
        for (double l : grid) {
            // exact transform of the envelope-saturating martingale
            const double var = env.f1 * std::min(mart_t, env.t0) + env.f2 * std::max(0.0, mart_t - env.t0);
            const double exact = std::exp(0.5 * l * l * var);
            const double bound = msh::laplace_bound(env, l, mart_t);
            rows.push_back({{"lambda", l}, {"exact", exact}, {"bound", bound},
                            {"margin", bound - exact}});
        }
        record = {"martingale-check",
                  json{{"f1", mart_f1}, {"f2", mart_f2}, {"t0", mart_t0}, {"t", mart_t}},
                  g.seed,
                  json{{"rows", rows}}};
    });

    // ---- kernel ----
    auto* cmd_kernel = app.add_subcommand("kernel", "Fokker-Planck Davies-envelope verification");
    std::string kernel_potential, kernel_schedule = "16:8,64:24,256:64", kernel_profile_csv;
    double kernel_cwindow = 1.0;
    cmd_kernel->add_option("--potential", kernel_potential)->required();
    cmd_kernel->add_option("--schedule", kernel_schedule, "comma list of t:offset pairs");
    cmd_kernel->add_option("--c-window", kernel_cwindow);
    cmd_kernel->add_option("--profile-csv", kernel_profile_csv, "dump the last profile as CSV");
    add_global_opts(cmd_kernel, g);
    cmd_kernel->callback([&] {
        const msh::Config cfg = msh::Config::load(kernel_potential);
        const msh::PeriodicPotential u(
            cfg.has("harmonics") ? msh::parse_harmonics(cfg.get_list("harmonics"))
                                 : std::vector<msh::Harmonic>{});
        std::vector<std::pair<double, double>> sched;
        std::stringstream ss(kernel_schedule);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto colon = item.find(':');
            if (colon == std::string::npos)
                throw msh::argument_error("kernel: schedule entries must be t:offset");
            sched.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
        }
        const msh::DaviesReport rep = msh::davies_check(u, sched, kernel_cwindow);
        json points = json::array();
        for (const auto& p : rep.points)
            points.push_back({{"t", p.t},
                              {"offset", p.offset},
                              {"p", p.p_fd},
                              {"ratio", p.ratio},
                              {"exponent_gap", p.exponent_gap},
                              {"c2_needed", p.c2_needed},
                              {"regime", msh::to_string(p.regime)},
                              {"in_window", p.in_window}});
        record = {"kernel",
                  potential_config_json(cfg),
                  g.seed,
                  json{{"points", points},
                       {"fitted_c2", rep.fitted_c2},
                       {"diffusivity", rep.diffusivity},
                       {"ratios_converging", rep.ratios_converging}}};
        if (!kernel_profile_csv.empty()) {
            const auto& last = sched.back();
            const msh::KernelProfile prof = msh::solve_forward(u, 0.0, last.first);
            msh::CsvWriter csv({"y", "p", "q"});
            for (std::size_t i = 0; i < prof.y.size(); ++i)
                csv.add_row({prof.y[i], prof.p[i], prof.q[i]});
            csv.write(kernel_profile_csv);
        }
    });

    // ---- analyze ----
    auto* cmd_analyze = app.add_subcommand("analyze", "compare sde run records with predictions");
    std::string analyze_in, analyze_csv, analyze_svg;
    cmd_analyze->add_option("--in", analyze_in, "JSON-lines records from exit-time/msd runs")->required();
    cmd_analyze->add_option("--csv", analyze_csv, "write the comparison table as CSV");
    cmd_analyze->add_option("--svg", analyze_svg, "write a log-log plot");
    add_global_opts(cmd_analyze, g);
    cmd_analyze->callback([&] {
        const auto records = msh::read_records(analyze_in);
        json report = json::array();
        std::vector<msh::PlotSeries> plots;
        msh::CsvWriter csv({"x", "value", "pointwise_exponent"});
        for (const auto& rec : records) {
            if (rec.subcommand == "exit-time" && rec.payload.contains("exit_times")) {
                std::vector<double> rs, means;
                for (const auto& row : rec.payload["exit_times"]) {
                    rs.push_back(row["radius"].get<double>());
                    means.push_back(row["mean"].get<double>());
                }
                if (rs.size() >= 2) {
                    const msh::ExponentFit fit = msh::fit_exponents(rs, means, 2.0);
                    json nu1 = json::array();
                    for (std::size_t i = 0; i < rs.size(); ++i) {
                        nu1.push_back({{"r", rs[i]}, {"nu1", fit.pointwise[i]}});
                        csv.add_row({rs[i], means[i], fit.pointwise[i]});
                    }
                    report.push_back({{"observable", "exit-time"},
                                      {"nu1_pointwise", nu1},
                                      {"slope", fit.slope},
                                      {"slope_std_error", fit.slope_std_error}});
                    plots.push_back({"E[tau]", rs, means});
                }
            } else if (rec.subcommand == "msd" && rec.payload.contains("msd")) {
                std::vector<double> ts, msds;
                for (const auto& row : rec.payload["msd"]) {
                    ts.push_back(row["t"].get<double>());
                    msds.push_back(row["msd"].get<double>());
                }
                if (ts.size() >= 2) {
                    const msh::ExponentFit fit = msh::fit_exponents(ts, msds, 0.0);
                    json nu2 = json::array();
                    for (std::size_t i = 0; i < ts.size(); ++i) {
                        const double nu = 2.0 * (1.0 - fit.pointwise[i]); // E[y_t^2]=t^{1-nu2/2}
                        nu2.push_back({{"t", ts[i]}, {"nu2", nu}});
                        csv.add_row({ts[i], msds[i], nu});
                    }
                    report.push_back({{"observable", "msd"},
                                      {"nu2_pointwise", nu2},
                                      {"slope", fit.slope},
                                      {"slope_std_error", fit.slope_std_error}});
                    plots.push_back({"E[y_t^2]", ts, msds});
                }
            }
        }
        if (!analyze_csv.empty()) csv.write(analyze_csv);
        if (!analyze_svg.empty() && !plots.empty()) msh::emit_plot(plots, analyze_svg, true, "msh analyze");
        record = {"analyze", json{{"in", analyze_in}}, g.seed, json{{"report", report}}};
    });

    const auto start = std::chrono::steady_clock::now();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const msh::resource_error& e) {
        std::cerr << "msh: resource error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "msh: " << e.what() << "\n";
        return 1;
    }

    if (!record.subcommand.empty()) {
        const int rc = emit(g, record);
        if (rc != 0) return rc;
    }
    const auto wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cerr << "msh: wall_time_s=" << wall << "\n";
    if (g.strict && statistical_warning) return 3;
    return 0;
}
