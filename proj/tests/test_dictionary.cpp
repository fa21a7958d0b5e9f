#include "ddeid/dictionary.hpp"
#include "ddeid/error.hpp"
#include "ddeid/reconstruct.hpp"

#include "doctest.h"

#include <cmath>
#include <random>

using namespace ddeid;

namespace {

TimeSeries builtin_data(int id)
{
    const auto s = builtin_system(id);
    return integrate(s, 0.01, s.burn_in, s.duration, {});
}

TimeSeries random_series(std::size_t rows, std::size_t cols, std::uint64_t seed, double lo = 0.2, double hi = 1.8)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    TimeSeries ts(0.0, 0.01, rows, cols);
    for (double& v : ts.values)
        v = u(rng);
    return ts;
}

std::vector<double> random_params(const DictionarySpec& spec, std::mt19937_64& rng)
{
    std::vector<double> p;
    for (const auto& d : spec.domains) {
        std::uniform_real_distribution<double> u(d.lower, d.upper);
        p.push_back(d.quantize(u(rng)));
    }
    return p;
}

DictionarySpec small_delay_spec(int id)
{
    auto spec = builtin_dictionary(id, 0.01);
    for (auto& d : spec.domains)
        if (d.role == ParamRole::delay)
            d = ParamDomain{0.0, 0.3, ParamKind::grid_real, 0.01, ParamRole::delay};
    if (id == 5) {
        spec.domains[4].lower = 0.0;
        spec.domains[4].upper = 0.3;
    }
    return spec;
}

} // namespace

TEST_CASE("delayed_index")
{
    CHECK(delayed_index(0.0, 0.01) == 0);
    CHECK(delayed_index(1.59, 0.01) == 159);
    CHECK(delayed_index(20.0, 0.01) == 2000);
    CHECK_THROWS_AS(delayed_index(-0.5, 0.01), Error);
    CHECK_THROWS_AS(delayed_index(1.0, 0.0), Error);
}

TEST_CASE("row windows")
{
    SUBCASE("Mackey-Glass")
    {
        const auto w = valid_row_range(builtin_dictionary(5, 0.01), builtin_data(5));
        CHECK(w.first + 1 == 3002);
        CHECK(w.last + 1 == 8000);
        CHECK(w.count() == 4999);
    }
    SUBCASE("linear system")
    {
        const auto w = valid_row_range(builtin_dictionary(1, 0.01), builtin_data(1));
        CHECK(w.first + 1 == 2);
        CHECK(w.last + 1 == 2000);
    }
    SUBCASE("delayed Rossler")
    {
        const auto w = valid_row_range(builtin_dictionary(3, 0.01), builtin_data(3));
        CHECK(w.first + 1 == 502);
        CHECK(w.last + 1 == 2000);
    }
    SUBCASE("too short")
    {
        const auto ts = random_series(400, 3, 1);
        try {
            valid_row_range(builtin_dictionary(3, 0.01), ts);
            FAIL("expected insufficient data");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::insufficient_data);
            CHECK(std::string(e.what()).find("503") != std::string::npos);
        }
    }
}

TEST_CASE("quantization")
{
    const ParamDomain integer{0.0, 5.0, ParamKind::integer, 0.0, ParamRole::exponent};
    CHECK(integer.quantize(2.4) == 2.0);
    CHECK(integer.quantize(2.6) == 3.0);
    CHECK(integer.quantize(-3.0) == 0.0);
    CHECK(integer.quantize(7.2) == 5.0);
    const ParamDomain grid{0.0, 5.0, ParamKind::grid_real, 0.01, ParamRole::delay};
    CHECK(grid.quantize(1.5912) == doctest::Approx(1.59).epsilon(1e-14));
    CHECK(grid.quantize(9.0) == 5.0);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 7.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng);
        for (const auto& d : {integer, grid}) {
            const double q = d.quantize(v);
            REQUIRE(q >= d.lower);
            REQUIRE(q <= d.upper);
            REQUIRE(d.quantize(q) == q);
        }
    }
}

TEST_CASE("eval_term examples")
{
    const auto ts = builtin_data(5);
    const auto spec = builtin_dictionary(5, 0.01);
    const auto w = valid_row_range(spec, ts);

    SUBCASE("Mackey-Glass nonlinearity")
    {
        const std::vector<double> p{0, 1, 0, 10, 20};
        const auto col = eval_term(ts, p, spec, w);
        REQUIRE(col);
        for (std::size_t k = w.first; k <= w.last; k += 97) {
            const double lag = ts(k - 2000, 0);
            CHECK((*col)[k - w.first] == doctest::Approx(lag / (1 + std::pow(lag, 10))).epsilon(1e-14));
        }
    }
    SUBCASE("monomial constant")
    {
        const auto ts1 = builtin_data(2);
        const auto spec1 = builtin_dictionary(2, 0.01);
        const auto col = eval_term(ts1, std::vector<double>{0, 0, 0}, spec1, valid_row_range(spec1, ts1));
        REQUIRE(col);
        for (double v : *col)
            REQUIRE(v == 1.0);
    }
    SUBCASE("Ikeda template with zero sine exponent")
    {
        const auto ts4 = builtin_data(4);
        const auto spec4 = builtin_dictionary(4, 0.01);
        const auto w4 = valid_row_range(spec4, ts4);
        const auto col = eval_term(ts4, std::vector<double>{1, 0, 0, 0}, spec4, w4);
        REQUIRE(col);
        for (std::size_t k = w4.first; k <= w4.last; ++k)
            REQUIRE((*col)[k - w4.first] == ts4(k, 0));
    }
    SUBCASE("denominator guard")
    {
        TimeSeries zeros(0.0, 0.01, 4000, 1);
        const auto col = eval_term(zeros, std::vector<double>{1, 1, 1, 1, 10}, spec, valid_row_range(spec, zeros));
        CHECK_FALSE(col.has_value());
    }
}

TEST_CASE("design matrix")
{
    const auto ts = builtin_data(2);
    const auto spec = builtin_dictionary(2, 0.01);
    const auto w = valid_row_range(spec, ts);
    ParamMatrix p(5, 3);
    const double rows[5][3] = {{0, 1, 0}, {1, 0, 0}, {1, 0, 1}, {1, 1, 0}, {0, 1, 0}};
    for (std::size_t i = 0; i < 5; ++i)
        std::copy(rows[i], rows[i] + 3, p.row(i).begin());

    SUBCASE("one column per active term")
    {
        const StructureVector d{1, 1, 0, 0, 0};
        const auto a = build_design_matrix(ts, p, d, spec, w);
        REQUIRE(a);
        CHECK(a->cols() == 2);
        CHECK(static_cast<std::size_t>(a->rows()) == w.count());
        const StructureVector none{0, 0, 0, 0, 0};
        CHECK(build_design_matrix(ts, p, none, spec, w)->cols() == 0);
    }
    SUBCASE("Lorenz x equation from y and x")
    {
        const StructureVector d{1, 1, 0, 0, 0};
        const auto a = build_design_matrix(ts, p, d, spec, w);
        const auto deriv = central_difference(ts);
        Eigen::VectorXd b(static_cast<Eigen::Index>(w.count()));
        for (std::size_t k = w.first; k <= w.last; ++k)
            b[static_cast<Eigen::Index>(k - w.first)] = deriv(k, 0);
        const auto fit = least_squares_fit(*a, b);
        REQUIRE(fit);
        CHECK(fit->coefficients[0] == doctest::Approx(10.0).epsilon(0.01));
        CHECK(fit->coefficients[1] == doctest::Approx(-10.0).epsilon(0.01));
    }
    SUBCASE("duplicate terms give identical columns")
    {
        const StructureVector d{1, 0, 0, 0, 1};
        const auto a = build_design_matrix(ts, p, d, spec, w);
        REQUIRE(a);
        CHECK((a->col(0) - a->col(1)).norm() == 0.0);
    }
}

TEST_CASE("rendering")
{
    const auto spec3 = builtin_dictionary(3, 0.01);
    CHECK(render_term(std::vector<double>{1, 2, 0, 0, 0, 0}, spec3, 0.01, 0.5) == "0.5000·x(t−2)");
    const auto spec1 = builtin_dictionary(1, 0.01);
    CHECK(render_term(std::vector<double>{0, 0, 0}, spec1, 0.01, 0.1931) == "0.1931");
    CHECK(render_term(std::vector<double>{1, 1, 0}, spec1, 0.01, 1.0006) == "1.0006·x·y");
    CHECK(render_term(std::vector<double>{1, 0, 0}, spec1, 0.01, -0.1) == "−0.1000·x");
    const auto spec4 = builtin_dictionary(4, 0.01);
    CHECK(render_term(std::vector<double>{0, 0, 1, 1.59}, spec4, 0.01, 5.9983) == "5.9983·sin(x(t−1.59))");
    const auto spec5 = builtin_dictionary(5, 0.01);
    CHECK(render_term(std::vector<double>{0, 1, 0, 10, 20}, spec5, 0.01, 0.2) == "0.2000·x(t−20)/(1+x^10(t−20))");
    CHECK(render_term(std::vector<double>{1, 0, 0, 0, 10}, spec5, 0.01, -0.2) == "−0.1000·x");
    CHECK(variable_name(0, 3) == "x");
    CHECK(variable_name(2, 3) == "z");
    CHECK(variable_name(3, 4) == "x4");
}

TEST_CASE("term codes drop delays of absent factors")
{
    const auto spec = builtin_dictionary(3, 0.01);
    CHECK(encode_term(std::vector<double>{1, 2, 0, 3, 0, 4}, spec, 0.01) ==
          encode_term(std::vector<double>{1, 2, 0, 0, 0, 0}, spec, 0.01));
    CHECK(encode_term(std::vector<double>{1, 2, 0, 0, 0, 0}, spec, 0.01) !=
          encode_term(std::vector<double>{1, 1, 0, 0, 0, 0}, spec, 0.01));
}

TEST_CASE("delay identity: zero delays reduce T2 to T1")
{
    const auto ts = random_series(300, 3, 2);
    auto t1 = builtin_dictionary(1, 0.01);
    auto t2 = builtin_dictionary(3, 0.01);
    for (auto& d : t2.domains)
        if (d.role == ParamRole::delay)
            d.upper = 0.5;
    const auto w = valid_row_range(t2, ts);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto e = random_params(t1, rng);
        const auto a = eval_term(ts, e, t1, w);
        const auto b = eval_term(ts, std::vector<double>{e[0], 0, e[1], 0, e[2], 0}, t2, w);
        REQUIRE(a);
        REQUIRE(b);
        REQUIRE(*a == *b);
    }
}

TEST_CASE("row alignment: one more step of delay shifts the column by one row")
{
    const auto ts = random_series(400, 3, 4);
    auto spec = builtin_dictionary(3, 0.01);
    for (auto& d : spec.domains)
        if (d.role == ParamRole::delay)
            d = ParamDomain{0.0, 1.0, ParamKind::grid_real, 0.01, ParamRole::delay};
    const auto w = valid_row_range(spec, ts);
    const RowWindow later{w.first + 1, w.last};
    const auto a = eval_term(ts, std::vector<double>{2, 0.31, 0, 0, 1, 0.31}, spec, later);
    const auto b = eval_term(ts, std::vector<double>{2, 0.3, 0, 0, 1, 0.3}, spec, w);
    REQUIRE(a);
    REQUIRE(b);
    REQUIRE(a->size() + 1 == b->size());
    for (std::size_t k = 0; k < a->size(); ++k)
        REQUIRE((*a)[k] == (*b)[k]);
}

TEST_CASE("constant-term property")
{
    const auto ts = random_series(700, 3, 5);
    const auto spec = builtin_dictionary(3, 0.01);
    const auto w = valid_row_range(spec, ts);
    for (double tau : {0.0, 1.0, 2.5, 5.0}) {
        const auto col = eval_term(ts, std::vector<double>{0, tau, 0, tau, 0, tau}, spec, w);
        REQUIRE(col);
        for (double v : *col)
            REQUIRE(v == 1.0);
    }
}

TEST_CASE("cached evaluator matches the reference evaluation")
{
    for (int id = 1; id <= 5; ++id) {
        CAPTURE(id);
        const auto spec = small_delay_spec(id);
        const std::size_t cols = id == 4 || id == 5 ? 1 : 3;
        const auto ts = random_series(200, cols, 10 + id, id == 4 ? -2.0 : 0.2);
        const auto w = valid_row_range(spec, ts);
        TermEvaluator ev(ts, spec, w);
        std::vector<double> out(w.count());
        std::mt19937_64 rng(id);
        for (int i = 0; i < 300; ++i) {
            const auto p = random_params(spec, rng);
            const auto ref = eval_term(ts, p, spec, w);
            const bool ok = ev.evaluate(encode_term(p, spec, 0.01), out);
            REQUIRE(ok == ref.has_value());
            if (ok)
                REQUIRE(out == *ref);
        }
    }
}

TEST_CASE("parsed templates behave like the built-in ones")
{
    const auto ts = random_series(400, 1, 6, -2.0, 2.0);
    auto builtin = builtin_dictionary(4, 0.01);
    auto parsed = builtin;
    parsed.term = parse_template("x1^p1(t-p2) * sin^p3(x1(t-p4))");
    REQUIRE(parsed.term.param_count == 4);
    auto alt = builtin;
    alt.term = parse_template("x1^p1(t-p2)*sin(x1(t-p4))^p3");
    const auto w = RowWindow{300, 398};
    for (auto& d : builtin.domains)
        if (d.role == ParamRole::delay)
            d.upper = 2.0;
    std::mt19937_64 rng(7);
    for (int i = 0; i < 100; ++i) {
        const auto p = random_params(builtin, rng);
        const auto a = eval_term(ts, p, builtin, w);
        REQUIRE(*a == *eval_term(ts, p, parsed, w));
        REQUIRE(*a == *eval_term(ts, p, alt, w));
    }
    const auto mg = parse_template("x1^p1 * x1^p2(t-p5) / (x1^p3 + x1^p4(t-p5))");
    CHECK(mg.param_count == 5);
    CHECK(mg.denominator.size() == 2);
    CHECK_THROWS_AS(parse_template("x1^p1 +"), Error);
    CHECK_THROWS_AS(parse_template("x1^p2"), Error);
    CHECK(template_by_id("T2", 2).param_count == 4);
}

TEST_CASE("dictionary validation")
{
    auto spec = builtin_dictionary(1, 0.01);
    CHECK_NOTHROW(validate(spec));
    auto bad = spec;
    bad.max_terms = 0;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = spec;
    bad.domains.pop_back();
    CHECK_THROWS_AS(validate(bad), Error);
    bad = spec;
    bad.domains[0].lower = 3;
    bad.domains[0].upper = 1;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = spec;
    bad.domains[0].lower = -1;
    CHECK_THROWS_AS(validate(bad), Error);
    bad = builtin_dictionary(4, 0.01);
    bad.domains[1].grid = 0.0;
    CHECK_THROWS_AS(validate(bad), Error);
    CHECK_THROWS_AS(builtin_dictionary(6, 0.01), Error);
}
