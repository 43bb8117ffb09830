#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "ppca/csv.hpp"
#include "ppca/errors.hpp"
#include "ppca/matrix.hpp"
#include "ppca/types.hpp"

namespace ppca {

/// Insertion-ordered JSON object writer. Numbers are rendered with 17
/// significant digits and non-finite values as null, which keeps emitted
/// parameter files byte-stable across runs.
class JsonObject {
public:
    JsonObject& number(const std::string& key, double v) { return raw(key, number_text(v)); }

    JsonObject& integer(const std::string& key, long long v) {
        return raw(key, std::to_string(v));
    }

    JsonObject& boolean(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }

    JsonObject& text(const std::string& key, const std::string& v) {
        return raw(key, quote(v));
    }

    JsonObject& vector(const std::string& key, const Vector& v) {
        std::string body = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) body += ",";
            body += number_text(v[i]);
        }
        return raw(key, body + "]");
    }

    /// Row-major nested arrays.
    JsonObject& matrix(const std::string& key, const Matrix& m) {
        std::string body = "[";
        for (std::size_t i = 0; i < m.rows(); ++i) {
            if (i) body += ",";
            body += "[";
            for (std::size_t j = 0; j < m.cols(); ++j) {
                if (j) body += ",";
                body += number_text(m(i, j));
            }
            body += "]";
        }
        return raw(key, body + "]");
    }

    JsonObject& object(const std::string& key, const JsonObject& nested) {
        return raw(key, nested.str());
    }

    JsonObject& raw(const std::string& key, const std::string& rendered) {
        if (!body_.empty()) body_ += ",";
        body_ += quote(key) + ":" + rendered;
        return *this;
    }

    std::string str() const { return "{" + body_ + "}"; }

    static std::string number_text(double v) { return std::isfinite(v) ? fmt_g17(v) : "null"; }

    static std::string quote(const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            switch (c) {
                case '"': out += "\\\""; break;
                case '\\': out += "\\\\"; break;
                case '\n': out += "\\n"; break;
                case '\t': out += "\\t"; break;
                default: out += c;
            }
        }
        return out + "\"";
    }

private:
    std::string body_;
};

/// Core parameter fields in schema order (p1..tau2, sigma2?, pi?,
/// canonical); callers append extras such as diagnostics before closing.
inline JsonObject params_json_body(const PlnParams& params,
                                   std::optional<double> sigma2 = std::nullopt,
                                   const std::optional<Matrix>& pi = std::nullopt) {
    JsonObject obj;
    obj.integer("p1", static_cast<long long>(params.p1()))
        .integer("p2", static_cast<long long>(params.p2()))
        .integer("d1", static_cast<long long>(params.d1()))
        .integer("d2", static_cast<long long>(params.d2()))
        .matrix("mu", params.mu)
        .matrix("U1", params.u1)
        .matrix("U2", params.u2)
        .vector("lambda1", params.lambda1)
        .vector("lambda2", params.lambda2)
        .number("tau2", params.tau2);
    if (sigma2) obj.number("sigma2", *sigma2);
    if (pi) obj.matrix("pi", *pi);
    obj.boolean("canonical", params.canonical);
    return obj;
}

struct ParsedParams {
    PlnParams params;
    std::optional<double> sigma2;
    std::optional<Matrix> pi;
};

namespace detail {

inline Matrix matrix_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array() || j.empty())
        throw parse_error("params JSON: '" + key + "' must be a non-empty nested array");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    if (cols == 0) throw parse_error("params JSON: '" + key + "' must be a nested array");
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw parse_error("params JSON: '" + key + "' rows have inconsistent lengths");
        for (std::size_t c = 0; c < cols; ++c) {
            const auto& cell = j[i][c];
            if (cell.is_null())
                m(i, c) = std::numeric_limits<double>::quiet_NaN();
            else if (cell.is_number())
                m(i, c) = cell.get<double>();
            else
                throw parse_error("params JSON: '" + key + "' has a non-numeric cell");
        }
    }
    return m;
}

inline Vector vector_from_json(const nlohmann::json& j, const std::string& key) {
    if (!j.is_array()) throw parse_error("params JSON: '" + key + "' must be an array");
    Vector v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw parse_error("params JSON: '" + key + "' has a non-number");
        v[i] = j[i].get<double>();
    }
    return v;
}

}  // namespace detail

inline ParsedParams parse_params_json(const std::string& text, const std::string& name = "<json>") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(name + ": " + e.what());
    }
    for (const char* key : {"p1", "p2", "d1", "d2", "mu", "U1", "U2", "lambda1", "lambda2", "tau2"})
        if (!j.contains(key)) throw parse_error(name + ": missing key '" + std::string(key) + "'");

    ParsedParams out;
    out.params.mu = detail::matrix_from_json(j["mu"], "mu");
    out.params.u1 = detail::matrix_from_json(j["U1"], "U1");
    out.params.u2 = detail::matrix_from_json(j["U2"], "U2");
    out.params.lambda1 = detail::vector_from_json(j["lambda1"], "lambda1");
    out.params.lambda2 = detail::vector_from_json(j["lambda2"], "lambda2");
    if (!j["tau2"].is_number()) throw parse_error(name + ": 'tau2' must be a number");
    out.params.tau2 = j["tau2"].get<double>();
    out.params.canonical = j.value("canonical", true);

    const auto expect = [&](const char* key, std::size_t actual) {
        if (!j[key].is_number_unsigned() || j[key].get<std::size_t>() != actual)
            throw parse_error(name + ": '" + std::string(key) +
                              "' disagrees with the matrix shapes");
    };
    expect("p1", out.params.p1());
    expect("p2", out.params.p2());
    expect("d1", out.params.d1());
    expect("d2", out.params.d2());

    if (j.contains("sigma2") && !j["sigma2"].is_null())
        out.sigma2 = j["sigma2"].get<double>();
    if (j.contains("pi") && !j["pi"].is_null()) {
        Matrix pi = detail::matrix_from_json(j["pi"], "pi");
        if (pi.rows() != out.params.p1() || pi.cols() != out.params.p2())
            throw parse_error(name + ": 'pi' shape does not match p1 x p2");
        out.pi = std::move(pi);
    }
    return out;
}

inline ParsedParams parse_params_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw parse_error(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_params_json(text, path);
}

}  // namespace ppca
