#include <catch2/catch.hpp>

#include <cmath>
#include <sstream>

#include "ppca/csv.hpp"
#include "ppca/params_json.hpp"
#include "ppca/rng.hpp"
#include "ppca/sampler.hpp"
#include "ppca/svg.hpp"

using namespace ppca;

namespace {

CountTensor ingest_text(const std::string& text) {
    std::istringstream in(text);
    return ingest_long_csv(in, "test");
}

std::string emit_text(const CountTensor& x) {
    std::ostringstream out;
    emit_long_csv(x, out);
    return out.str();
}

}  // namespace

TEST_CASE("ingest parses a minimal file", "[io]") {
    const CountTensor x = ingest_text("obs,row,col,count\n0,0,0,1\n1,0,0,3\n");
    CHECK(x.n() == 2);
    CHECK(x.p1() == 1);
    CHECK(x.p2() == 1);
    CHECK(x(0, 0, 0) == 1);
    CHECK(x(1, 0, 0) == 3);
}

TEST_CASE("ingest rejects malformed input", "[io]") {
    // Wrong header.
    CHECK_THROWS_AS(ingest_text("obs,row,col,value\n0,0,0,1\n"), parse_error);
    // CRLF newlines.
    CHECK_THROWS_AS(ingest_text("obs,row,col,count\r\n0,0,0,1\r\n"), parse_error);
    // Missing cell.
    CHECK_THROWS_WITH(
        ingest_text("obs,row,col,count\n0,0,0,1\n0,1,1,1\n1,0,0,1\n1,0,1,1\n1,1,0,1\n1,1,1,1\n"),
        Catch::Contains("missing cell (obs=0, row=0, col=1)"));
    // Duplicate cell.
    CHECK_THROWS_WITH(ingest_text("obs,row,col,count\n0,0,0,1\n0,0,0,2\n1,0,0,1\n"),
                      Catch::Contains("duplicate cell (obs=0, row=0, col=0)"));
    // Negative / non-integer counts carry the line number.
    CHECK_THROWS_WITH(ingest_text("obs,row,col,count\n0,0,0,-1\n1,0,0,1\n"),
                      Catch::Contains("line 2"));
    CHECK_THROWS_WITH(ingest_text("obs,row,col,count\n0,0,0,1\n1,0,0,1.5\n"),
                      Catch::Contains("line 3"));
    // Wrong field count and empty files.
    CHECK_THROWS_AS(ingest_text("obs,row,col,count\n0,0,0\n"), parse_error);
    CHECK_THROWS_AS(ingest_text("obs,row,col,count\n"), parse_error);
    // A stray huge index cannot force a huge allocation.
    CHECK_THROWS_WITH(ingest_text("obs,row,col,count\n0,0,0,1\n999999999,0,0,1\n"),
                      Catch::Contains("larger than the file"));
    // A single observation cannot support second-order moments.
    CHECK_THROWS_AS(ingest_text("obs,row,col,count\n0,0,0,1\n"), validation_error);
}

TEST_CASE("emit-ingest round trip is byte identical", "[io]") {
    const auto data = sample_iid(IidDist::poisson(2.0), 5, 3, 2, SeededStream(1));
    const std::string first = emit_text(data);
    const std::string second = emit_text(ingest_text(first));
    CHECK(first == second);
}

TEST_CASE("fmt_g17 round-trips doubles", "[io]") {
    Rng g(2);
    for (int trial = 0; trial < 200; ++trial) {
        const double v = std::exp(6.0 * g.normal());
        CHECK(std::stod(fmt_g17(v)) == v);
        CHECK(std::stod(fmt_g17(-v)) == -v);
    }
}

TEST_CASE("params JSON round trip preserves every field", "[io]") {
    PlnParams params;
    params.mu = Matrix(2, 3);
    Rng g(3);
    for (auto& v : params.mu.data()) v = g.normal();
    const Matrix w1 = haar_orthogonal(2, g);
    params.u1 = Matrix(2, 1);
    params.u1(0, 0) = w1(0, 0);
    params.u1(1, 0) = w1(1, 0);
    const Matrix w2 = haar_orthogonal(3, g);
    params.u2 = Matrix(3, 2);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t a = 0; a < 2; ++a) params.u2(i, a) = w2(i, a);
    params.lambda1 = {1.7};
    params.lambda2 = {0.9, 0.4};
    params.tau2 = 0.37;
    params.canonical = false;

    Matrix pi(2, 3, 0.5);
    const std::string text = params_json_body(params, 0.25, pi).str();
    const ParsedParams parsed = parse_params_json(text);

    CHECK(parsed.params.mu == params.mu);
    CHECK(parsed.params.u1 == params.u1);
    CHECK(parsed.params.u2 == params.u2);
    CHECK(parsed.params.lambda1 == params.lambda1);
    CHECK(parsed.params.lambda2 == params.lambda2);
    CHECK(parsed.params.tau2 == params.tau2);
    CHECK(parsed.params.canonical == false);
    REQUIRE(parsed.sigma2.has_value());
    CHECK(*parsed.sigma2 == 0.25);
    REQUIRE(parsed.pi.has_value());
    CHECK(*parsed.pi == pi);
}

TEST_CASE("params JSON surfaces schema problems", "[io]") {
    CHECK_THROWS_AS(parse_params_json("not json"), parse_error);
    CHECK_THROWS_AS(parse_params_json("{\"p1\":1}"), parse_error);
    // Shape disagreement between the declared and actual dimensions.
    const std::string bad =
        "{\"p1\":2,\"p2\":1,\"d1\":1,\"d2\":1,\"mu\":[[0.0]],\"U1\":[[1.0]],\"U2\":[[1.0]],"
        "\"lambda1\":[1.0],\"lambda2\":[1.0],\"tau2\":1.0}";
    CHECK_THROWS_AS(parse_params_json(bad), parse_error);
}

TEST_CASE("params JSON maps null cells to NaN", "[io]") {
    const std::string text =
        "{\"p1\":1,\"p2\":1,\"d1\":1,\"d2\":1,\"mu\":[[null]],\"U1\":[[1.0]],\"U2\":[[1.0]],"
        "\"lambda1\":[1.0],\"lambda2\":[1.0],\"tau2\":1.0}";
    const ParsedParams parsed = parse_params_json(text);
    CHECK(std::isnan(parsed.params.mu(0, 0)));
}

TEST_CASE("biplot SVG is balanced XML", "[io]") {
    Matrix scores(4, 2);
    Rng g(5);
    for (auto& v : scores.data()) v = g.normal();
    std::vector<std::uint8_t> converged = {1, 1, 0, 1};
    Matrix rays(3, 2);
    for (auto& v : rays.data()) v = g.normal();

    BiplotSpec spec;
    spec.scores = &scores;
    spec.converged = &converged;
    spec.rays = rays;
    spec.ray_labels = {"1", "2", "3"};
    spec.x_label = "score 1 (60.0%)";
    spec.y_label = "score 2 (40.0%)";

    std::ostringstream out;
    write_biplot_svg(spec, out);
    const std::string svg = out.str();
    CHECK(svg.rfind("<?xml", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    // Every opened element is either self-closing or has a closing tag.
    std::size_t opens = 0, self_closing = 0, closes = 0;
    for (std::size_t i = 0; i + 1 < svg.size(); ++i) {
        if (svg[i] == '<' && svg[i + 1] != '/' && svg[i + 1] != '?') ++opens;
        if (svg[i] == '/' && svg[i + 1] == '>') ++self_closing;
        if (svg[i] == '<' && svg[i + 1] == '/') ++closes;
    }
    CHECK(opens == self_closing + closes);
}
