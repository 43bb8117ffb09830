// Command-line front end: simulation, fitting, dimension curves, latent
// scores, the simulation-study harness and the asymptotic-variance check.
//
// Exit codes: 0 ok, 2 parse error, 3 estimation/sampling error,
// 4 validation error. Failures emit a one-line error JSON on stderr.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ppca/ppca.hpp"

namespace {

using namespace ppca;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw parse_error(path + ": cannot open file for writing");
    out << content;
}

void emit_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
        std::cout << content;
    else
        write_text_file(path, content);
}

IidDist parse_iid_spec(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos)
        throw parse_error("--iid: expected NAME:ARGS, e.g. poisson:1.0");
    const std::string name = spec.substr(0, colon);
    std::vector<double> args;
    std::size_t start = colon + 1;
    while (start <= spec.size()) {
        const auto comma = spec.find(',', start);
        const std::string field =
            spec.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        try {
            std::size_t used = 0;
            args.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw parse_error("--iid: bad numeric argument '" + field + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (name == "poisson" && args.size() == 1) return IidDist::poisson(args[0]);
    if (name == "negbin" && args.size() == 2) return IidDist::negbin(args[0], args[1]);
    if (name == "binomial" && args.size() == 2)
        return IidDist::binomial(static_cast<std::int64_t>(args[0]), args[1]);
    throw parse_error("--iid: expected poisson:LAMBDA, negbin:R,P or binomial:M,Q");
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
    std::string params_file;
    std::string iid_spec;
    std::size_t n = 0;
    std::size_t p1 = 0;
    std::size_t p2 = 0;
    bool zero_inflated = false;
    std::uint64_t seed = 0;
    std::string out;
    std::string latent_out;
};

void run_simulate(const SimulateArgs& args) {
    const SeededStream stream(args.seed);
    if (!args.iid_spec.empty()) {
        if (args.p1 < 1 || args.p2 < 1)
            throw validation_error("simulate: --iid requires --p1 and --p2");
        const CountTensor data = sample_iid(parse_iid_spec(args.iid_spec), args.n, args.p1,
                                            args.p2, stream);
        emit_long_csv_file(data, args.out);
        return;
    }
    const ParsedParams parsed = parse_params_json_file(args.params_file);
    require_valid(parsed.params, "simulate");
    if (args.zero_inflated) {
        if (!parsed.pi)
            throw validation_error("simulate: --zero-inflated needs a 'pi' entry in the params");
        if (!args.latent_out.empty())
            throw validation_error("simulate: --latent-out is not available with --zero-inflated");
        const CountTensor data =
            sample_zipln(parsed.params, ZeroInflationMask{*parsed.pi}, args.n, stream);
        emit_long_csv_file(data, args.out);
        return;
    }
    const PlnSample sample = sample_pln(parsed.params, args.n, stream);
    emit_long_csv_file(sample.counts, args.out);
    if (!args.latent_out.empty()) {
        std::string csv = "obs,row,col,value\n";
        for (std::size_t i = 0; i < sample.latent.size(); ++i)
            for (std::size_t a = 0; a < parsed.params.d1(); ++a)
                for (std::size_t b = 0; b < parsed.params.d2(); ++b)
                    csv += std::to_string(i) + "," + std::to_string(a) + "," + std::to_string(b) +
                           "," + fmt_g17(sample.latent[i](a, b)) + "\n";
        write_text_file(args.latent_out, csv);
    }
}

// --------------------------------------------------------------------- fit

struct FitArgs {
    std::string data_file;
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    bool zero_inflated = false;
    std::vector<double> pi_clamp = {0.05, 1.0};
    std::string out = "-";
};

void run_fit(const FitArgs& args) {
    const CountTensor data = ingest_long_csv_file(args.data_file);
    if (args.pi_clamp.size() != 2 || !(args.pi_clamp[0] > 0.0) ||
        !(args.pi_clamp[0] <= args.pi_clamp[1]))
        throw validation_error("fit: --pi-clamp needs 0 < LO <= HI");

    std::optional<PiEstimate> pi_est;
    std::optional<Matrix> pi_for_s;
    if (args.zero_inflated) {
        pi_est = estimate_pi(data, std::make_pair(args.pi_clamp[0], args.pi_clamp[1]));
        pi_for_s = pi_est->clamped;
    }
    const SPair spair = estimate_spair(data, pi_for_s);
    const LoadingExtract loadings = extract_loadings(spair, args.d1, args.d2);
    const MuEstimate mu = estimate_mu(data, args.zero_inflated);
    const PlnParams params = make_estimated_params(loadings, mu.mu, spair.tau2);

    const auto skipped_json = [](const std::vector<SkippedTerm>& terms) {
        std::string body = "[";
        for (std::size_t i = 0; i < terms.size(); ++i) {
            if (i) body += ",";
            body += "[" + std::to_string(terms[i].j) + "," + std::to_string(terms[i].k) + "," +
                    std::to_string(terms[i].ell) + "]";
        }
        return body + "]";
    };
    const auto index_json = [](const std::vector<std::uint8_t>& flags, bool when) {
        std::string body = "[";
        bool first = true;
        for (std::size_t i = 0; i < flags.size(); ++i) {
            if ((flags[i] != 0) == when) continue;
            if (!first) body += ",";
            body += std::to_string(i);
            first = false;
        }
        return body + "]";
    };
    const auto cells_json = [&](const std::vector<std::uint8_t>& valid) {
        std::string body = "[";
        bool first = true;
        for (std::size_t j = 0; j < data.p1(); ++j)
            for (std::size_t k = 0; k < data.p2(); ++k) {
                if (valid[j * data.p2() + k]) continue;
                if (!first) body += ",";
                body += "[" + std::to_string(j) + "," + std::to_string(k) + "]";
                first = false;
            }
        return body + "]";
    };

    const Matrix s1_fit =
        params.tau2 * (params.u1 * Matrix::diag(params.lambda1) * params.u1.transposed());
    const Matrix s2_fit =
        params.tau2 * (params.u2 * Matrix::diag(params.lambda2) * params.u2.transposed());

    JsonObject diagnostics;
    diagnostics.integer("n", static_cast<long long>(data.n()))
        .raw("s1_skipped_terms", skipped_json(spair.skipped1))
        .raw("s2_skipped_terms", skipped_json(spair.skipped2))
        .raw("lambda1_floored", index_json(loadings.floored1, true))
        .raw("lambda2_floored", index_json(loadings.floored2, true))
        .raw("mu_invalid_cells", cells_json(mu.valid))
        .number("s1_residual", (spair.s1 - s1_fit).frobenius_norm())
        .number("s2_residual", (spair.s2 - s2_fit).frobenius_norm())
        .vector("s1_spectrum", loadings.spectrum1)
        .vector("s2_spectrum", loadings.spectrum2);
    if (pi_est) diagnostics.raw("pi_invalid_cells", cells_json(pi_est->valid));

    JsonObject body = params_json_body(
        params, std::nullopt,
        pi_est ? std::optional<Matrix>(pi_est->clamped) : std::nullopt);
    if (pi_est) body.matrix("pi_raw", pi_est->raw);
    body.object("diagnostics", diagnostics);
    emit_output(args.out, body.str() + "\n");
}

// -------------------------------------------------------------------- dims

struct DimsArgs {
    std::string data_file;
    std::string side = "both";
    std::size_t r = 1;
    std::size_t s = 5;
    std::string estimator = "poisson";
    std::uint64_t seed = 0;
    std::string out;
};

std::string curve_csv(const AugmentationCurve& curve) {
    std::string csv = "k,phi,mean_beta_sq,mean_eigenvalue\n";
    for (std::size_t k = 0; k < curve.phi.size(); ++k) {
        csv += std::to_string(k) + "," + fmt_g17(curve.phi[k]) + ",";
        csv += (k == 0 ? std::string("0") : fmt_g17(curve.mean_beta_sq[k - 1])) + ",";
        csv += (k == 0 ? std::string("0") : fmt_g17(curve.mean_eigenvalues[k - 1])) + "\n";
    }
    return csv;
}

void run_dims(const DimsArgs& args) {
    const CountTensor data = ingest_long_csv_file(args.data_file);
    const DimEstimator estimator =
        args.estimator == "gaussian" ? DimEstimator::gaussian : DimEstimator::poisson;
    const SeededStream stream(args.seed);
    const auto run_side = [&](Side side, const std::string& path) {
        const AugmentationCurve curve = estimate_dim(data, side, args.r, args.s, estimator, stream);
        write_text_file(path, curve_csv(curve));
        std::cout << to_string(side) << ": selected d = " << curve.selected
                  << " (r=" << curve.r << ", s=" << curve.s
                  << ", dropped=" << curve.dropped_replicates << ")\n";
    };
    if (args.side == "both") {
        run_side(Side::left, args.out + ".left.csv");
        run_side(Side::right, args.out + ".right.csv");
    } else if (args.side == "left") {
        run_side(Side::left, args.out);
    } else if (args.side == "right") {
        run_side(Side::right, args.out);
    } else {
        throw validation_error("dims: --side must be left, right or both");
    }
}

// ------------------------------------------------------------------ scores

struct ScoresArgs {
    std::string data_file;
    std::string params_file;
    bool zero_inflated = false;
    std::string out;
    std::string svg;
    std::size_t svg_x = 1;
    std::size_t svg_y = 2;
};

void run_scores(const ScoresArgs& args) {
    const CountTensor data = ingest_long_csv_file(args.data_file);
    const ParsedParams parsed = parse_params_json_file(args.params_file);
    const PlnParams& params = parsed.params;
    if (data.p1() != params.p1() || data.p2() != params.p2())
        throw validation_error("scores: data shape does not match the parameter file");
    require_valid(params, "scores");

    ScoreSet scores;
    if (args.zero_inflated) {
        if (!parsed.pi)
            throw validation_error("scores: --zero-inflated needs a 'pi' entry in the params");
        scores = zi_score_sample(data, params, *parsed.pi);
    } else {
        scores = score_sample(data, params);
    }

    const std::size_t d = params.d1() * params.d2();
    std::string csv = "obs";
    for (std::size_t a = 1; a <= d; ++a) csv += ",score_" + std::to_string(a);
    csv += ",converged\n";
    for (std::size_t i = 0; i < data.n(); ++i) {
        csv += std::to_string(i);
        for (std::size_t a = 0; a < d; ++a) csv += "," + fmt_g17(scores.scores(i, a));
        csv += "," + std::to_string(static_cast<int>(scores.converged[i])) + "\n";
    }
    write_text_file(args.out, csv);

    if (!args.svg.empty()) {
        if (args.svg_x < 1 || args.svg_x > d || args.svg_y < 1 || args.svg_y > d ||
            args.svg_x == args.svg_y)
            throw validation_error("scores: --svg-x/--svg-y must be distinct columns in 1..d");
        const std::size_t cx = args.svg_x - 1, cy = args.svg_y - 1;
        // Score column t corresponds to the factor pair
        // (a = t mod d1, b = t div d1) of the column-major vec(Z).
        const std::size_t ax = cx % params.d1(), bx = cx / params.d1();
        const std::size_t ay = cy % params.d1(), by = cy / params.d1();

        BiplotSpec spec;
        spec.scores = &scores.scores;
        spec.converged = &scores.converged;
        spec.col_x = cx;
        spec.col_y = cy;
        // Rays come from whichever loading matrix distinguishes the two
        // columns; row loadings when they share the column factor.
        if (bx == by || ax != ay) {
            spec.rays = Matrix(params.p1(), 2);
            for (std::size_t i = 0; i < params.p1(); ++i) {
                spec.rays(i, 0) = params.u1(i, ax);
                spec.rays(i, 1) = params.u1(i, ay);
            }
            for (std::size_t i = 0; i < params.p1(); ++i)
                spec.ray_labels.push_back(std::to_string(i + 1));
        } else {
            spec.rays = Matrix(params.p2(), 2);
            for (std::size_t i = 0; i < params.p2(); ++i) {
                spec.rays(i, 0) = params.u2(i, bx);
                spec.rays(i, 1) = params.u2(i, by);
            }
            for (std::size_t i = 0; i < params.p2(); ++i)
                spec.ray_labels.push_back(std::to_string(i + 1));
        }
        // Explained-variance shares: eigenvalue of the score column's row
        // factor relative to the retained spectrum sum.
        double lambda_sum = 0.0;
        for (double v : params.lambda1) lambda_sum += v;
        const auto pct = [&](std::size_t a) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.1f", 100.0 * params.lambda1[a] / lambda_sum);
            return std::string(buf);
        };
        spec.x_label = "score " + std::to_string(args.svg_x) + " (" + pct(ax) + "%)";
        spec.y_label = "score " + std::to_string(args.svg_y) + " (" + pct(ay) + "%)";

        std::ofstream svg_out(args.svg, std::ios::binary);
        if (!svg_out) throw parse_error(args.svg + ": cannot open file for writing");
        write_biplot_svg(spec, svg_out);
    }
}

// ------------------------------------------------------------------- bench

struct BenchArgs {
    std::string suite;
    std::size_t reps = 0;
    std::vector<std::size_t> n_list;
    std::uint64_t seed = 0;
    std::string scale = "desk";
    std::string dims = "low";
    std::string out;
};

void run_bench(const BenchArgs& args) {
    const bool paper = args.scale == "paper";
    BenchTable table;
    if (args.suite == "table1") {
        Table1Options opts;
        opts.reps = args.reps ? args.reps : (paper ? 200 : 100);
        if (!args.n_list.empty()) opts.n_list = args.n_list;
        opts.low_dimension = args.dims == "low" || args.dims == "both";
        opts.high_dimension = args.dims == "high" || args.dims == "both";
        opts.seed = args.seed;
        table = bench_table1(opts);
    } else if (args.suite == "table2" || args.suite == "table3") {
        Table23Options opts;
        opts.reps = args.reps ? args.reps : (paper ? 1000 : 100);
        if (!args.n_list.empty()) opts.n_list = args.n_list;
        opts.seed = args.seed;
        table = args.suite == "table2" ? bench_table2(opts) : bench_table3(opts);
    } else {
        throw validation_error("bench: suite must be table1, table2 or table3");
    }
    const std::string base = args.out.empty() ? "bench_" + args.suite : args.out;
    write_text_file(base + ".csv", table.to_csv());
    write_text_file(base + ".md", table.to_markdown());
    std::cout << table.to_markdown();
}

// -------------------------------------------------------- check-asymptotics

struct AsympArgs {
    double mu = 0.0;
    double sigma2 = 0.0;
    std::size_t n = 5000;
    std::size_t reps = 2000;
    std::uint64_t seed = 0;
};

void run_check_asymptotics(const AsympArgs& args) {
    const McVerifyResult res = mc_verify(args.mu, args.sigma2, args.n, args.reps,
                                         SeededStream(args.seed));
    std::cout << "mu,sigma2,n,reps,formula,empirical,ratio,dropped\n";
    std::cout << fmt_g17(args.mu) << "," << fmt_g17(args.sigma2) << "," << args.n << ","
              << args.reps << "," << fmt_g17(res.formula_var) << ","
              << fmt_g17(res.empirical_var) << "," << fmt_g17(res.ratio) << "," << res.dropped
              << "\n";
}

void print_error_json(const std::string& type, const std::string& message) {
    JsonObject inner;
    inner.text("type", type).text("message", message);
    JsonObject outer;
    outer.object("error", inner);
    std::cerr << outer.str() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson PCA for matrix count data"};
    app.require_subcommand(1);
    app.fallthrough();
    int threads = 1;
    app.add_option("--threads", threads, "worker threads (results are thread-count invariant)");

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate data from the model");
    simulate->add_option("--params", sim.params_file, "parameter JSON file");
    simulate->add_option("--iid", sim.iid_spec, "iid baseline: poisson:L | negbin:R,P | binomial:M,Q");
    simulate->add_option("--n", sim.n, "observations")->required();
    simulate->add_option("--p1", sim.p1, "rows (iid only)");
    simulate->add_option("--p2", sim.p2, "columns (iid only)");
    simulate->add_flag("--zero-inflated", sim.zero_inflated, "apply the pi mask from the params");
    simulate->add_option("--seed", sim.seed, "rng seed");
    simulate->add_option("--out", sim.out, "output counts CSV")->required();
    simulate->add_option("--latent-out", sim.latent_out, "also write the true latent scores");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "method-of-moments parameter estimation");
    fit_cmd->add_option("--data", fit.data_file, "counts CSV")->required();
    fit_cmd->add_option("--d1", fit.d1, "left latent dimension")->required();
    fit_cmd->add_option("--d2", fit.d2, "right latent dimension")->required();
    fit_cmd->add_flag("--zero-inflated", fit.zero_inflated, "use the zero-inflated estimators");
    fit_cmd->add_option("--pi-clamp", fit.pi_clamp, "clamp interval for pi estimates")
        ->expected(2);
    fit_cmd->add_option("--out", fit.out, "output JSON ('-' = stdout)");

    DimsArgs dims;
    auto* dims_cmd = app.add_subcommand("dims", "latent dimension by predictor augmentation");
    dims_cmd->add_option("--data", dims.data_file, "counts CSV")->required();
    dims_cmd->add_option("--side", dims.side, "left | right | both");
    dims_cmd->add_option("--r", dims.r, "augmentation rows");
    dims_cmd->add_option("--s", dims.s, "augmentation replicates");
    dims_cmd->add_option("--estimator", dims.estimator, "poisson | gaussian");
    dims_cmd->add_option("--seed", dims.seed, "rng seed");
    dims_cmd->add_option("--out", dims.out, "output CSV (basename for --side both)")->required();

    ScoresArgs scores;
    auto* scores_cmd = app.add_subcommand("scores", "latent score estimation");
    scores_cmd->add_option("--data", scores.data_file, "counts CSV")->required();
    scores_cmd->add_option("--params", scores.params_file, "parameter JSON")->required();
    scores_cmd->add_flag("--zero-inflated", scores.zero_inflated, "zero-inflated scoring");
    scores_cmd->add_option("--out", scores.out, "output scores CSV")->required();
    scores_cmd->add_option("--svg", scores.svg, "also write a biplot SVG");
    scores_cmd->add_option("--svg-x", scores.svg_x, "x score column (1-based)");
    scores_cmd->add_option("--svg-y", scores.svg_y, "y score column (1-based)");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "simulation-study harness");
    bench_cmd->add_option("suite", bench.suite, "table1 | table2 | table3")->required();
    bench_cmd->add_option("--reps", bench.reps, "replicates (0 = scale default)");
    bench_cmd->add_option("--n-list", bench.n_list, "sample sizes");
    bench_cmd->add_option("--seed", bench.seed, "rng seed");
    bench_cmd->add_option("--scale", bench.scale, "desk | paper");
    bench_cmd->add_option("--dims", bench.dims, "table1 designs: low | high | both");
    bench_cmd->add_option("--out", bench.out, "output basename");

    AsympArgs asymp;
    auto* asymp_cmd = app.add_subcommand("check-asymptotics", "Monte-Carlo variance check");
    asymp_cmd->add_option("--mu", asymp.mu, "scalar model mean");
    asymp_cmd->add_option("--sigma2", asymp.sigma2, "scalar model latent variance");
    asymp_cmd->add_option("--n", asymp.n, "sample size per replicate");
    asymp_cmd->add_option("--reps", asymp.reps, "replicates");
    asymp_cmd->add_option("--seed", asymp.seed, "rng seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error_json("parse", e.what());
        return 2;
    }

    try {
        set_thread_count(threads);
        if (simulate->parsed()) {
            if (sim.params_file.empty() == sim.iid_spec.empty())
                throw validation_error("simulate: pass exactly one of --params / --iid");
            run_simulate(sim);
        } else if (fit_cmd->parsed()) {
            run_fit(fit);
        } else if (dims_cmd->parsed()) {
            run_dims(dims);
        } else if (scores_cmd->parsed()) {
            run_scores(scores);
        } else if (bench_cmd->parsed()) {
            run_bench(bench);
        } else if (asymp_cmd->parsed()) {
            run_check_asymptotics(asymp);
        }
    } catch (const parse_error& e) {
        print_error_json("parse", e.what());
        return 2;
    } catch (const validation_error& e) {
        print_error_json("validation", e.what());
        return 4;
    } catch (const sampling_error& e) {
        print_error_json("sampling", e.what());
        return 3;
    } catch (const estimation_error& e) {
        print_error_json("estimation", e.what());
        return 3;
    }
    return 0;
}
