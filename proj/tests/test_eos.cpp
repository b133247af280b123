#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "uvlab/eos.hpp"
#include "uvlab/fixed_points.hpp"

using namespace uvlab;

namespace {

const UVHyper kRef{0.6, 1.0, 1.0, 2.0};  // eta_c = 0.5 geometry

// Closed-form period-2 points of the manifold map:
//   df = [q (1 - q y) +- sqrt(q^2 (q y - 1)(3 + q y))] / (2 q^2),  q = eta k
std::array<double, 2> period2_closed_form(const UVHyper& h) {
    const double q = h.eta * h.k();
    const double qy = q * h.y;
    const double root = std::sqrt(q * q * (qy - 1.0) * (3.0 + qy));
    return {(q * (1.0 - qy) - root) / (2.0 * q * q),
            (q * (1.0 - qy) + root) / (2.0 * q * q)};
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(lo + (hi - lo) * i / (n - 1));
    return v;
}

}  // namespace

TEST_CASE("manifold map fixes 0 and -y") {
    CHECK(manifold_map(0.0, kRef) == 0.0);
    CHECK(manifold_map(-2.0, kRef) == -2.0);
}

TEST_CASE("manifold map hand value") {
    // -0.1 + (-0.06)(-2.06)(1.9)
    CHECK(manifold_map(-0.1, kRef) == Catch::Approx(0.13484).margin(1e-12));
}

TEST_CASE("manifold lambda and loss") {
    CHECK(manifold_lambda(0.0, kRef) == 4.0);
    CHECK(manifold_lambda(-2.0, kRef) == 0.0);
    CHECK(beta({-0.7, manifold_lambda(-0.7, kRef)}, kRef) == Catch::Approx(0.0).margin(1e-15));

    CHECK(manifold_loss(2.0 / 0.5, kRef) == 0.0);          // lambda = 2/eta_c
    CHECK(manifold_loss(0.0, kRef) == 2.0);                // y^2/2 at the origin
    CHECK(manifold_loss(4.0, kRef) == 0.0);                // lambda_min is the zero-loss point
}

TEST_CASE("manifold dynamics agree with the full map started on the manifold") {
    // Long horizons in the contracting regimes; in the chaotic window the
    // in-manifold Lyapunov exponent is positive and any two rounding
    // realizations separate exponentially, so the window that keeps 1e-10
    // meaningful in double precision is short.
    auto run = [](double eta, int steps) {
        UVHyper h{eta, 1.0, 1.0, 2.0};
        double df = -0.8;
        FunctionState s{df, manifold_lambda(df, h)};
        for (int t = 0; t < steps; ++t) {
            df = manifold_map(df, h);
            s = step_function_space(s, h);
            const double expect = manifold_lambda(df, h);
            CHECK(std::abs(s.lam - expect) <= 1e-10 * std::max(1.0, std::abs(expect)));
        }
    };
    run(0.45, 2000);  // convergent
    run(0.6, 2000);   // stable 2-cycle
    run(0.7, 25);     // chaotic
}

TEST_CASE("period-2 onset thresholds") {
    auto [eta1, eta2] = period2_onset(kRef);
    CHECK(eta1 == 0.5);
    CHECK(eta2 == Catch::Approx((std::sqrt(32.0) - 2.0) / 4.0).margin(1e-15));
    CHECK(eta2 == Catch::Approx(0.914214).margin(1e-6));
    CriticalRates cr = critical_rates(1.0, 1.0, 2.0);
    CHECK(eta1 == *cr.eta_c);
    CHECK_THROWS_AS(period2_onset(UVHyper{0.5, 1.0, 1.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(period2_onset(UVHyper{0.5, 1.0, 1.0, -1.0}), std::invalid_argument);
}

TEST_CASE("period-1 orbit search finds the map's fixed points") {
    auto guesses = linspace(-3.0, 3.0, 25);
    auto pts = find_period_orbit_manifold(kRef, 1, guesses);
    // 0 and -y are always present; 2/(eta k) = 10/3 lies beyond the guesses'
    // basin edge but may appear as well
    bool has_zero = false, has_minus_y = false;
    for (double p : pts) {
        if (std::abs(p) <= 1e-10) has_zero = true;
        if (std::abs(p + 2.0) <= 1e-10) has_minus_y = true;
    }
    CHECK(has_zero);
    CHECK(has_minus_y);
}

TEST_CASE("period-2 orbit matches the closed-form radicals at eta = 0.6") {
    auto guesses = linspace(-1.5, 1.5, 31);
    auto pts = find_period_orbit_manifold(kRef, 2, guesses);
    REQUIRE(pts.size() == 2);
    auto expect = period2_closed_form(kRef);
    CHECK(std::abs(pts[0] - expect[0]) <= 1e-8);
    CHECK(std::abs(pts[1] - expect[1]) <= 1e-8);
    // the two points map to each other
    CHECK(std::abs(manifold_map(pts[0], kRef) - pts[1]) <= 1e-10);
    CHECK(std::abs(manifold_map(pts[1], kRef) - pts[0]) <= 1e-10);
}

TEST_CASE("no period-2 orbit below the onset") {
    UVHyper h{0.45, 1.0, 1.0, 2.0};
    auto pts = find_period_orbit_manifold(h, 2, linspace(-1.9, 3.0, 41));
    CHECK(pts.empty());
}

TEST_CASE("full-map period-2 orbit closes and is fixed by the two-step map") {
    auto mpts = find_period_orbit_manifold(kRef, 2, linspace(-1.5, 1.5, 31));
    REQUIRE(mpts.size() == 2);
    std::vector<FunctionState> guesses;
    for (double p : mpts) guesses.push_back({p, manifold_lambda(p, kRef)});
    auto orbit = find_period_orbit_full(kRef, 2, guesses);
    REQUIRE(orbit.size() == 2);
    for (const auto& s : orbit) {
        FunctionState two = step_two(s, kRef);
        CHECK(std::abs(two.delta_f - s.delta_f) <= 1e-10);
        CHECK(std::abs(two.lam - s.lam) <= 1e-10);
    }
    FunctionState next = step_function_space(orbit[0], kRef);
    CHECK(std::abs(next.delta_f - orbit[1].delta_f) <= 1e-9);
    CHECK(std::abs(next.lam - orbit[1].lam) <= 1e-9);
}

TEST_CASE("manifold bifurcation: single branch below the critical rate") {
    BifurcationConfig cfg;
    cfg.kind = MapKind::manifold;
    cfg.base = {0.0, 1.0, 1.0, 2.0};
    cfg.eta_min = 0.3;
    cfg.eta_max = 0.45;
    cfg.eta_count = 16;
    cfg.init_df = -0.5;
    cfg.transient = 20000;
    cfg.record = 200;
    BifurcationDiagram d = bifurcation(cfg);
    for (const auto& e : d.entries) {
        REQUIRE_FALSE(e.diverged);
        REQUIRE(e.period);
        CHECK(*e.period == 1);
        CHECK(e.distinct.size() == 1);
        CHECK(e.distinct[0] == Catch::Approx(4.0).margin(1e-6));
    }
}

TEST_CASE("manifold bifurcation: period-2 band straddles 2/eta at eta = 0.6") {
    BifurcationConfig cfg;
    cfg.kind = MapKind::manifold;
    cfg.base = {0.0, 1.0, 1.0, 2.0};
    cfg.eta_min = 0.6;
    cfg.eta_max = 0.61;
    cfg.eta_count = 2;
    cfg.init_df = -0.5;
    BifurcationDiagram d = bifurcation(cfg);
    const auto& e = d.entries.front();
    REQUIRE_FALSE(e.diverged);
    REQUIRE(e.period);
    CHECK(*e.period == 2);
    REQUIRE(e.distinct.size() == 2);
    const double mid = 2.0 / 0.6;
    CHECK(e.distinct[0] < mid);
    CHECK(e.distinct[1] > mid);
    // the recorded band values are the closed-form orbit's lambdas
    auto expect = period2_closed_form({0.6, 1.0, 1.0, 2.0});
    CHECK(e.distinct[0] == Catch::Approx(manifold_lambda(expect[0], {0.6, 1.0, 1.0, 2.0})).margin(1e-6));
    CHECK(e.distinct[1] == Catch::Approx(manifold_lambda(expect[1], {0.6, 1.0, 1.0, 2.0})).margin(1e-6));
}

TEST_CASE("detected period divides the distinct-value count") {
    BifurcationConfig cfg;
    cfg.kind = MapKind::manifold;
    cfg.base = {0.0, 1.0, 1.0, 2.0};
    cfg.eta_min = 0.45;
    cfg.eta_max = 0.65;
    cfg.eta_count = 21;
    cfg.init_df = -0.5;
    cfg.transient = 50000;
    cfg.record = 512;
    cfg.threads = 2;
    BifurcationDiagram d = bifurcation(cfg);
    for (const auto& e : d.entries) {
        if (e.diverged || !e.period) continue;
        CHECK(e.distinct.size() % std::size_t(*e.period) == 0);
    }
}

TEST_CASE("full-model bifurcation from the manifold reproduces the manifold diagram") {
    UVHyper h{0.63, 1.0, 1.0, 2.0};
    double df = -0.4;
    FunctionState s{df, manifold_lambda(df, h)};
    for (int t = 0; t < 30000; ++t) {
        df = manifold_map(df, h);
        s = step_function_space(s, h);
    }
    for (int t = 0; t < 64; ++t) {
        df = manifold_map(df, h);
        s = step_function_space(s, h);
        CHECK(std::abs(s.lam - manifold_lambda(df, h)) <= 1e-9 * std::max(1.0, s.lam));
    }
}

TEST_CASE("bifurcation CSV and JSON exports") {
    BifurcationConfig cfg;
    cfg.kind = MapKind::manifold;
    cfg.base = {0.0, 1.0, 1.0, 2.0};
    cfg.eta_min = 0.45;
    cfg.eta_max = 0.55;
    cfg.eta_count = 3;
    cfg.init_df = -0.5;
    cfg.transient = 5000;
    cfg.record = 128;
    BifurcationDiagram d = bifurcation(cfg);
    bifurcation_to_csv(d, "bif_test.csv");
    std::ifstream in("bif_test.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "eta,lambda_value");
    nlohmann::json j = bifurcation_to_json(d);
    REQUIRE(j.size() == 3);
    CHECK(j[0].contains("period"));
    CHECK(j[0].contains("diverged"));
    std::remove("bif_test.csv");
}
