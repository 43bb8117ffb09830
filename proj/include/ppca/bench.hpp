#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ppca/dimension.hpp"
#include "ppca/matrix.hpp"
#include "ppca/moments.hpp"
#include "ppca/parallel.hpp"
#include "ppca/rng.hpp"
#include "ppca/sampler.hpp"
#include "ppca/types.hpp"

namespace ppca {

struct BenchTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    std::string to_csv() const {
        std::string out;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ",";
            out += columns[c];
        }
        out += "\n";
        for (const auto& row : rows) {
            for (std::size_t c = 0; c < row.size(); ++c) {
                if (c) out += ",";
                out += row[c];
            }
            out += "\n";
        }
        return out;
    }

    std::string to_markdown() const {
        std::string out = "|";
        for (const auto& c : columns) out += " " + c + " |";
        out += "\n|";
        for (std::size_t c = 0; c < columns.size(); ++c) out += " --- |";
        out += "\n";
        for (const auto& row : rows) {
            out += "|";
            for (const auto& cell : row) out += " " + cell + " |";
            out += "\n";
        }
        return out;
    }
};

namespace detail {

inline std::string pct_text(std::size_t hits, std::size_t total) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f",
                  100.0 * static_cast<double>(hits) / static_cast<double>(total));
    return buf;
}

inline std::string mean_text(double sum, std::size_t count) {
    if (count == 0) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", sum / static_cast<double>(count));
    return buf;
}

inline double frob_dist(const Matrix& a, const Matrix& b) { return (a - b).frobenius_norm(); }

}  // namespace detail

/// Rank-one left side S1 = 1 1' paired with a rank-five right side
/// S2 = W E5 W' (model 1), or rank five on both sides (model 2). W is a
/// fresh Haar orthogonal matrix per call; the trace constraint holds only
/// when the rank-five side has exactly five coordinates.
inline PlnParams table1_params(int model, std::size_t p1, std::size_t p2, Rng& g) {
    auto rank5_side = [&](std::size_t p, Matrix& u, Vector& lambda) {
        const Matrix w = haar_orthogonal(p, g);
        u = Matrix(p, 5);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t a = 0; a < 5; ++a) u(i, a) = w(i, a);
        lambda.assign(5, 1.0);
    };
    PlnParams params;
    params.mu = Matrix(p1, p2, 0.0);
    params.tau2 = 1.0;
    if (model == 1) {
        params.u1 = Matrix(p1, 1, 1.0 / std::sqrt(static_cast<double>(p1)));
        params.lambda1 = {static_cast<double>(p1)};
    } else {
        rank5_side(p1, params.u1, params.lambda1);
    }
    rank5_side(p2, params.u2, params.lambda2);
    double sum1 = 0.0, sum2 = 0.0;
    for (double v : params.lambda1) sum1 += v;
    for (double v : params.lambda2) sum2 += v;
    params.canonical = std::abs(sum1 - static_cast<double>(p1)) < 1e-9 &&
                       std::abs(sum2 - static_cast<double>(p2)) < 1e-9;
    return params;
}

/// 4 x 3 designs of the zero-inflation study: S1 = I4, S2 = I3 (full rank)
/// or S1 = 1 1', S2 = 1 1' (low rank), both with mu = 0 and tau2 = 1.
inline PlnParams zero_inflation_design(bool full_rank) {
    PlnParams params;
    params.mu = Matrix(4, 3, 0.0);
    params.tau2 = 1.0;
    if (full_rank) {
        params.u1 = Matrix::identity(4);
        params.u2 = Matrix::identity(3);
        params.lambda1.assign(4, 1.0);
        params.lambda2.assign(3, 1.0);
    } else {
        params.u1 = Matrix(4, 1, 0.5);
        params.u2 = Matrix(3, 1, 1.0 / std::sqrt(3.0));
        params.lambda1 = {4.0};
        params.lambda2 = {3.0};
    }
    params.canonical = true;
    return params;
}

struct Table1Options {
    std::size_t reps = 100;
    std::vector<std::size_t> n_list = {100, 500};
    bool low_dimension = true;   // (p1, p2) = (10, 5)
    bool high_dimension = false; // (p1, p2) = (50, 25)
    std::uint64_t seed = 0;
};

/// Percentage of correctly estimated dimensions per model, sample size and
/// method: Gaussian augmentation G1/G2 (r = 1, 5) and Poisson augmentation
/// A1..A5 with r = p, p/2, p/5, p/10, 1 (ceil), all with s = 5 replicates.
inline BenchTable bench_table1(const Table1Options& opts) {
    struct Method {
        std::string name;
        DimEstimator estimator;
        std::size_t r1, r2;
    };
    const auto ceil_div = [](std::size_t p, std::size_t q) { return (p + q - 1) / q; };

    BenchTable table;
    table.columns = {"dimension", "model", "n",        "method",
                     "left_pct",  "right_pct", "joint_pct", "failed"};

    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    if (opts.low_dimension) shapes.push_back({10, 5});
    if (opts.high_dimension) shapes.push_back({50, 25});

    for (const auto& [p1, p2] : shapes) {
        const std::vector<Method> methods = {
            {"G1", DimEstimator::gaussian, 1, 1},
            {"G2", DimEstimator::gaussian, 5, 5},
            {"A1", DimEstimator::poisson, p1, p2},
            {"A2", DimEstimator::poisson, ceil_div(p1, 2), ceil_div(p2, 2)},
            {"A3", DimEstimator::poisson, ceil_div(p1, 5), ceil_div(p2, 5)},
            {"A4", DimEstimator::poisson, ceil_div(p1, 10), ceil_div(p2, 10)},
            {"A5", DimEstimator::poisson, 1, 1},
        };
        for (int model : {1, 2}) {
            const std::size_t true_d1 = model == 1 ? 1 : 5;
            const std::size_t true_d2 = 5;
            for (std::size_t n : opts.n_list) {
                struct RepResult {
                    std::vector<std::uint8_t> left_ok, right_ok, failed;
                };
                std::vector<RepResult> results(opts.reps);
                const SeededStream master =
                    SeededStream(opts.seed).fork(1000 * model + 10 * p1 + (n % 7919));

                parallel_for(opts.reps, [&](std::size_t rep) {
                    RepResult& res = results[rep];
                    res.left_ok.assign(methods.size(), 0);
                    res.right_ok.assign(methods.size(), 0);
                    res.failed.assign(methods.size(), 0);
                    const SeededStream rep_stream = master.fork(rep);
                    Rng design = rep_stream.substream(0, StreamKind::design);
                    const PlnParams params = table1_params(model, p1, p2, design);
                    const CountTensor data = sample_pln(params, n, rep_stream).counts;
                    for (std::size_t m = 0; m < methods.size(); ++m) {
                        try {
                            const auto left = estimate_dim(data, Side::left, methods[m].r1, 5,
                                                           methods[m].estimator,
                                                           rep_stream.fork(2 * m));
                            const auto right = estimate_dim(data, Side::right, methods[m].r2, 5,
                                                            methods[m].estimator,
                                                            rep_stream.fork(2 * m + 1));
                            res.left_ok[m] = left.selected == true_d1 ? 1 : 0;
                            res.right_ok[m] = right.selected == true_d2 ? 1 : 0;
                        } catch (const estimation_error&) {
                            res.failed[m] = 1;
                        }
                    }
                });

                for (std::size_t m = 0; m < methods.size(); ++m) {
                    std::size_t left = 0, right = 0, joint = 0, failed = 0;
                    for (const auto& res : results) {
                        left += res.left_ok[m];
                        right += res.right_ok[m];
                        joint += (res.left_ok[m] && res.right_ok[m]) ? 1 : 0;
                        failed += res.failed[m];
                    }
                    table.rows.push_back({p1 == 10 ? "low" : "high", std::to_string(model),
                                          std::to_string(n), methods[m].name,
                                          detail::pct_text(left, opts.reps),
                                          detail::pct_text(right, opts.reps),
                                          detail::pct_text(joint, opts.reps),
                                          std::to_string(failed)});
                }
            }
        }
    }
    return table;
}

struct Table23Options {
    std::size_t reps = 100;
    std::vector<std::size_t> n_list = {500, 1000};
    std::uint64_t seed = 0;
};

/// Mean parameter-estimation errors (Frobenius) of the regular (R) and
/// zero-inflated (Z) estimators under zero inflation pi in {1, .75, .5,
/// .25}. Z's pi estimates enter unthresholded, as in the original study.
inline BenchTable bench_zero_inflation(bool full_rank, const Table23Options& opts) {
    const PlnParams params = zero_inflation_design(full_rank);
    const Matrix s1_true =
        params.tau2 * (params.u1 * Matrix::diag(params.lambda1) * params.u1.transposed());
    const Matrix s2_true =
        params.tau2 * (params.u2 * Matrix::diag(params.lambda2) * params.u2.transposed());
    const Matrix mu_true = params.mu;

    BenchTable table;
    table.columns = {"pi", "est", "n", "mu", "S1", "S2", "Pi", "dropped"};
    const double pis[] = {1.0, 0.75, 0.5, 0.25};

    for (std::size_t pi_idx = 0; pi_idx < 4; ++pi_idx) {
        const double pi = pis[pi_idx];
        const Matrix pi_true(4, 3, pi);
        const ZeroInflationMask mask{pi_true};
        for (std::size_t n_idx = 0; n_idx < opts.n_list.size(); ++n_idx) {
            const std::size_t n = opts.n_list[n_idx];
            const SeededStream cell_stream = SeededStream(opts.seed).fork(pi_idx).fork(n_idx);

            struct RepResult {
                double r_mu = 0, r_s1 = 0, r_s2 = 0;
                double z_mu = 0, z_s1 = 0, z_s2 = 0, z_pi = 0;
                bool r_ok = false, z_ok = false;
            };
            std::vector<RepResult> results(opts.reps);

            parallel_for(opts.reps, [&](std::size_t rep) {
                RepResult& res = results[rep];
                const SeededStream rep_stream = cell_stream.fork(rep);
                const CountTensor data = sample_zipln(params, mask, n, rep_stream);

                try {
                    const MuEstimate mu_r = estimate_mu(data, false);
                    const Matrix s1_r = estimate_s(data, Side::left).s;
                    const Matrix s2_r = estimate_s(data, Side::right).s;
                    bool valid = true;
                    for (auto f : mu_r.valid) valid = valid && f;
                    if (valid) {
                        res.r_mu = detail::frob_dist(mu_r.mu, mu_true);
                        res.r_s1 = detail::frob_dist(s1_r, s1_true);
                        res.r_s2 = detail::frob_dist(s2_r, s2_true);
                        res.r_ok = true;
                    }
                } catch (const estimation_error&) {
                }
                try {
                    const PiEstimate pi_est = estimate_pi(data);
                    const MuEstimate mu_z = estimate_mu(data, true);
                    bool valid = true;
                    for (auto f : pi_est.valid) valid = valid && f;
                    for (auto f : mu_z.valid) valid = valid && f;
                    if (valid) {
                        const Matrix s1_z = estimate_s(data, Side::left, pi_est.raw).s;
                        const Matrix s2_z = estimate_s(data, Side::right, pi_est.raw).s;
                        res.z_mu = detail::frob_dist(mu_z.mu, mu_true);
                        res.z_s1 = detail::frob_dist(s1_z, s1_true);
                        res.z_s2 = detail::frob_dist(s2_z, s2_true);
                        res.z_pi = detail::frob_dist(pi_est.raw, pi_true);
                        res.z_ok = true;
                    }
                } catch (const estimation_error&) {
                }
            });

            CompensatedSum r_mu, r_s1, r_s2, z_mu, z_s1, z_s2, z_pi;
            std::size_t r_kept = 0, z_kept = 0;
            for (const auto& res : results) {
                if (res.r_ok) {
                    ++r_kept;
                    r_mu.add(res.r_mu);
                    r_s1.add(res.r_s1);
                    r_s2.add(res.r_s2);
                }
                if (res.z_ok) {
                    ++z_kept;
                    z_mu.add(res.z_mu);
                    z_s1.add(res.z_s1);
                    z_s2.add(res.z_s2);
                    z_pi.add(res.z_pi);
                }
            }
            char pi_text[16];
            std::snprintf(pi_text, sizeof(pi_text), "%.2f", pi);
            table.rows.push_back({pi_text, "R", std::to_string(n),
                                  detail::mean_text(r_mu.value(), r_kept),
                                  detail::mean_text(r_s1.value(), r_kept),
                                  detail::mean_text(r_s2.value(), r_kept), "-",
                                  std::to_string(opts.reps - r_kept)});
            table.rows.push_back({pi_text, "Z", std::to_string(n),
                                  detail::mean_text(z_mu.value(), z_kept),
                                  detail::mean_text(z_s1.value(), z_kept),
                                  detail::mean_text(z_s2.value(), z_kept),
                                  detail::mean_text(z_pi.value(), z_kept),
                                  std::to_string(opts.reps - z_kept)});
        }
    }
    return table;
}

inline BenchTable bench_table2(const Table23Options& opts) {
    return bench_zero_inflation(/*full_rank=*/true, opts);
}

inline BenchTable bench_table3(const Table23Options& opts) {
    return bench_zero_inflation(/*full_rank=*/false, opts);
}

}  // namespace ppca
