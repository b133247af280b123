#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <vector>

#include "uvlab/fixed_points.hpp"
#include "uvlab/phase_portrait.hpp"

using namespace uvlab;

namespace {
const UVHyper kRef{0.5, 1.0, 1.0, 2.0};
}

TEST_CASE("sharpening sign") {
    CHECK(sharpening_sign({0.0, 3.0}, kRef) == SharpeningSign::stationary);
    CHECK(sharpening_sign({-2.0, 5.0}, kRef) == SharpeningSign::increasing);
    CHECK(sharpening_sign({-2.0, 1.0}, {0.1, 1.0, 1.0, 2.0}) == SharpeningSign::increasing);
    // below the lambda-nullcline left of II the trace decreases
    CHECK(sharpening_sign({-2.8, 1.8}, {0.55, 1.0, 1.0, 2.0}) == SharpeningSign::decreasing);
}

TEST_CASE("vector field: null arrows exactly at fixed points") {
    GridSpec spec{-4.5, 4.5, 0.5, 12.5, 9};  // centers hit integer coordinates
    PortraitGrid grid = vector_field(spec, kRef, 1);
    REQUIRE(grid.cells.size() == 81);
    int nulls = 0;
    for (const auto& c : grid.cells) {
        const bool at_ii = c.state.delta_f == -2.0 && c.state.lam == 0.0;
        const bool at_iii = c.state.delta_f == -4.0 && c.state.lam == 4.0;
        const bool at_iv = c.state.delta_f == 4.0 && c.state.lam == 12.0;
        const bool on_line = c.state.delta_f == 0.0;
        if (at_ii || at_iii || at_iv || on_line) {
            CHECK_FALSE(c.has_arrow);
            ++nulls;
        } else {
            CHECK(c.has_arrow);
            CHECK(std::hypot(c.unit_update[0], c.unit_update[1]) ==
                  Catch::Approx(1.0).margin(1e-12));
        }
    }
    CHECK(nulls >= 9);  // at least the delta_f = 0 column
}

TEST_CASE("vector field: lambda-component sign at a sharpening cell") {
    GridSpec spec{-2.5, -0.5, 4.5, 6.5, 2};
    // first cell centered at (-2, 5)
    PortraitGrid grid = vector_field(spec, kRef, 1);
    REQUIRE(grid.cells.size() == 4);
    const auto& c = grid.cells[0];
    CHECK(c.state.delta_f == -2.0);
    CHECK(c.state.lam == 5.0);
    REQUIRE(c.has_arrow);
    CHECK(c.unit_update[1] > 0.0);
}

TEST_CASE("two-step field differs from one-step near oscillation") {
    GridSpec spec{-1.0, 1.0, 3.0, 7.0, 4};
    PortraitGrid one = vector_field(spec, {0.6, 1.0, 1.0, 2.0}, 1);
    PortraitGrid two = vector_field(spec, {0.6, 1.0, 1.0, 2.0}, 2);
    bool any_differs = false;
    for (std::size_t i = 0; i < one.cells.size(); ++i) {
        if (!one.cells[i].has_arrow || !two.cells[i].has_arrow) continue;
        if (std::abs(one.cells[i].unit_update[0] - two.cells[i].unit_update[0]) > 1e-6)
            any_differs = true;
    }
    CHECK(any_differs);
}

TEST_CASE("classify_region labels") {
    CHECK(classify_region({1.0, 1.0}, kRef) == Region::forbidden);  // 6 > 1
    CHECK(classify_region({-2.0, 2.0}, {1.5, 1.0, 1.0, 2.0}) == Region::divergent);
    CHECK(classify_region({-2.0, 5.0}, kRef) == Region::sharpening);
    CHECK(classify_region({-2.8, 1.8}, {0.55, 1.0, 1.0, 2.0}) == Region::reduction);
    bool stationary = false;
    // a point on the legal part of the zero-loss line (lambda >= 2ky = 4)
    CHECK(classify_region({0.0, 5.0}, kRef, 1000, kDivergenceThreshold, &stationary) ==
          Region::reduction);
    CHECK(stationary);
}

TEST_CASE("nullclines pass through the outer fixed points") {
    std::vector<double> df{-4.0, -2.0, 4.0};
    Nullclines n = nullclines(kRef, df);
    // delta_f-nullcline: eta*k^2*df*(df+y): at -4 -> 4, at -2 -> 0, at 4 -> 12
    REQUIRE(n.df_curve.size() == 3);
    CHECK(n.df_curve[0][1] == Catch::Approx(4.0).margin(1e-12));
    CHECK(n.df_curve[1][1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(n.df_curve[2][1] == Catch::Approx(12.0).margin(1e-12));
    // lambda-nullcline: 4(df+y)/(eta df): at -4 -> 4, at -2 -> 0, at 4 -> 12
    REQUIRE(n.lam_curve.size() == 3);
    CHECK(n.lam_curve[0][1] == Catch::Approx(4.0).margin(1e-12));
    CHECK(n.lam_curve[1][1] == Catch::Approx(0.0).margin(1e-12));
    CHECK(n.lam_curve[2][1] == Catch::Approx(12.0).margin(1e-12));
}

TEST_CASE("nullclines drop negative-lambda samples and the singular origin") {
    std::vector<double> df{-1.0, 0.0, 1.0};
    Nullclines n = nullclines(kRef, df);
    for (const auto& p : n.df_curve) CHECK(p[1] >= 0.0);
    for (const auto& p : n.lam_curve) {
        CHECK(p[1] >= 0.0);
        CHECK(p[0] != 0.0);
    }
}

TEST_CASE("sampled nullcline intersections are Table-style fixed points") {
    // solve df-null = lam-null between the sampled grid points by bisection
    const UVHyper h = kRef;
    auto gap = [&](double df) {
        return h.eta * h.k() * h.k() * df * (df + h.y) - 4.0 * (df + h.y) / (h.eta * df);
    };
    auto bisect = [&](double lo, double hi) {
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            if (gap(lo) * gap(mid) <= 0.0) hi = mid;
            else lo = mid;
        }
        return 0.5 * (lo + hi);
    };
    const double root_neg = bisect(-5.0, -3.0);
    const double root_pos = bisect(3.0, 5.0);
    CHECK(root_neg == Catch::Approx(-4.0).margin(1e-9));
    CHECK(root_pos == Catch::Approx(4.0).margin(1e-9));
}

TEST_CASE("classification is stable under horizon doubling") {
    GridSpec spec{-6.0, 6.0, 0.0, 14.0, 100};
    UVHyper h{0.55, 1.0, 1.0, 2.0};
    PortraitGrid a = vector_field(spec, h, 1);
    PortraitGrid b = vector_field(spec, h, 1);
    classify_grid(a, h, 1000, kDivergenceThreshold, 2);
    classify_grid(b, h, 2000, kDivergenceThreshold, 2);
    int flips = 0;
    for (std::size_t i = 0; i < a.cells.size(); ++i)
        if (a.cells[i].region != b.cells[i].region) ++flips;
    CHECK(flips <= int(a.cells.size() * 2 / 100));
}

TEST_CASE("arrows adjacent to the stable line segment point toward it") {
    UVHyper h{0.3, 1.0, 1.0, 2.0};
    // stable band: lambda in [lambda_min, 2/eta) = [4, 6.67); |df| <= 0.1*y
    GridSpec spec{-0.2, 0.2, 4.2, 6.2, 8};
    PortraitGrid grid = vector_field(spec, h, 1);
    for (const auto& c : grid.cells) {
        if (!c.has_arrow) continue;
        if (std::abs(c.state.delta_f) > 0.1 * h.y) continue;
        CHECK(c.unit_update[0] * c.state.delta_f < 0.0);
    }
}

TEST_CASE("forbidden cells are forbidden-only and CSV schema holds") {
    GridSpec spec{-6.0, 6.0, 0.0, 10.0, 20};
    UVHyper h = kRef;
    PortraitGrid grid = vector_field(spec, h, 1);
    classify_grid(grid, h, 200, kDivergenceThreshold, 2);
    for (const auto& c : grid.cells)
        if (is_forbidden(c.state, h)) CHECK(*c.region == Region::forbidden);

    portrait_to_csv(grid, "portrait_test.csv");
    std::ifstream in("portrait_test.csv");
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "delta_f,lambda,g_df,g_lam,region");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 400);
    std::remove("portrait_test.csv");

    Nullclines n = nullclines(h, std::vector<double>{-4.0, 1.0});
    nullclines_to_csv(n, "null_test.csv");
    std::ifstream nin("null_test.csv");
    REQUIRE(std::getline(nin, line));
    CHECK(line == "delta_f,lambda,curve");
    std::remove("null_test.csv");
}
