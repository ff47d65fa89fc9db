#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iwpair/json_io.hpp"
#include "iwpair/solve.hpp"

using namespace iwpair;
using nlohmann::json;

namespace {

json soft_border_doc() {
    return json::parse(R"({
      "params": {"delta": 0.5},
      "interval": {"lo": "-inf", "hi": "+inf"},
      "scale": {"type": "identity"},
      "speed": {"density": 2},
      "sde": {"drift": "0", "sigma": "1"},
      "mu_A": {"atoms": [{"at": 1.0, "mass": "1/delta"}]},
      "pair": {"direction": "increasing", "c": 1.0, "a": "delta"},
      "solve": {"domain": {"lo": -4.0, "hi": 4.0}}
    })");
}

} // namespace

TEST_CASE("problem parsing") {
    Problem pr = parse_problem(soft_border_doc());
    CHECK(pr.spec.interval.lo == -kInf);
    CHECK(pr.spec.recurrent());
    REQUIRE(pr.mu.atoms().size() == 1);
    CHECK(pr.mu.atoms()[0].mass == doctest::Approx(2.0)); // 1/delta
    CHECK(pr.a == doctest::Approx(0.5));
    CHECK(pr.has_pair);
    CHECK(*pr.solve.domain_lo == -4.0);

    auto sol = solve_increasing(pr.pair_problem(), pr.solve);
    CHECK(sol.value(2.0) == doctest::Approx(1.5));
}

TEST_CASE("validation errors name the failing field") {
    auto expect_field = [](json doc, const std::string& field) {
        try {
            parse_problem(doc);
            FAIL_CHECK("expected ValidationError for ", field);
        } catch (const ValidationError& e) {
            CHECK(e.field() == field);
        }
    };
    json d1 = soft_border_doc();
    d1.erase("interval");
    expect_field(d1, "interval");

    json d2 = soft_border_doc();
    d2["interval"] = {{"lo", 2.0}, {"hi", 1.0}};
    expect_field(d2, "interval");

    json d3 = soft_border_doc();
    d3["mu_A"]["atoms"][0]["mass"] = -1.0;
    expect_field(d3, "mu_A.atoms");

    json d4 = soft_border_doc();
    d4["pair"]["c"] = "nonsense(";
    expect_field(d4, "pair.c");

    json d5 = soft_border_doc();
    d5["pair"]["a"] = -2.0;
    expect_field(d5, "pair.a");

    json d6 = soft_border_doc();
    d6.erase("mu_A");
    expect_field(d6, "mu_A");
}

TEST_CASE("piecewise densities parse with breakpoints") {
    json doc = soft_border_doc();
    doc["mu_A"] = json::parse(R"({"density": {"pieces": [
        {"from": -1.0, "to": 0.0, "value": 0.25},
        {"from": 0.0, "to": 1.5, "value": "0.5 + 0*x"}
    ]}})");
    Problem pr = parse_problem(doc);
    CHECK(pr.mu.density(-0.5) == doctest::Approx(0.25));
    CHECK(pr.mu.density(0.7) == doctest::Approx(0.5));
    CHECK(pr.mu.density(2.0) == 0.0);
    CHECK(pr.mu.breakpoints().size() == 4);
}

TEST_CASE("pair solution serialization round-trips") {
    Problem pr = parse_problem(soft_border_doc());
    auto sol = solve_increasing(pr.pair_problem(), pr.solve);
    json j = to_json(sol);
    auto back = pair_solution_from_json(j, sol.scale(), sol.interval());
    for (double x = -3.0; x <= 3.0; x += 0.37)
        CHECK(back.value(x) == doctest::Approx(sol.value(x)).epsilon(1e-14));
    CHECK(back.kappa() == sol.kappa());
    CHECK(back.direction() == sol.direction());

    std::ostringstream csv;
    write_csv(csv, sol);
    std::string s = csv.str();
    CHECK(s.substr(0, 24) == "x,s,g,p_minus,p_plus\n-4,");

    // Identical inputs produce byte-identical artifacts.
    std::ostringstream csv2;
    write_csv(csv2, sol);
    CHECK(csv.str() == csv2.str());
    CHECK(to_json(sol).dump() == j.dump());
}

TEST_CASE("estimate serialization carries flags") {
    EstimateResult r;
    r.mean = 0.25;
    r.std_error = 0.001;
    r.n_effective = 1000;
    r.truncation_rate = 0.02;
    r.flagged = true;
    r.note = "horizon bound";
    json j = to_json(r);
    CHECK(j["mean"] == 0.25);
    CHECK(j["flags"]["flagged"] == true);
    CHECK(j["flags"]["truncation_rate"] == 0.02);
}

TEST_CASE("parameter override re-parses the document") {
    // Via the in-memory path used by sweeps.
    json doc = soft_border_doc();
    doc["params"]["delta"] = 0.25;
    Problem pr = parse_problem(doc);
    CHECK(pr.mu.atoms()[0].mass == doctest::Approx(4.0));
    CHECK(pr.a == doctest::Approx(0.25));
}
