#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pmshoot/analysis.hpp"
#include "pmshoot/continuation.hpp"

using namespace pmshoot;

namespace {

const ProblemParams kBase{0.0, 3.0, 1.5, 1.0 / 3.0};

SolutionRecord make_rec(double lambda, double du0, double dv0, double sup_v) {
    SolutionRecord r;
    r.lambda = lambda;
    r.du0 = du0;
    r.dv0 = dv0;
    r.sup_v = sup_v;
    return r;
}

ScanPolicy fast_policy() {
    ScanPolicy p;
    p.threads = 2;
    return p;
}

}  // namespace

TEST_CASE("label_branches") {
    SECTION("two records split by sup_v") {
        const auto res = label_branches({make_rec(5, 40, 15, 4.0), make_rec(5, 2, 0.1, 0.5)});
        REQUIRE(res.lower.has_value());
        REQUIRE(res.upper.has_value());
        CHECK(res.lower->du0 == 2.0);
        CHECK(res.upper->du0 == 40.0);
        CHECK(res.lower->branch == BranchLabel::lower);
        CHECK(res.upper->branch == BranchLabel::upper);
    }
    SECTION("single record follows the nearest previous root") {
        const auto res = label_branches({make_rec(5, 10, 3, 1.0)}, std::make_pair(9.0, 2.5),
                                        std::make_pair(40.0, 15.0));
        CHECK(res.lower.has_value());
        CHECK_FALSE(res.upper.has_value());
        const auto res2 = label_branches({make_rec(5, 39, 14, 4.0)}, std::make_pair(9.0, 2.5),
                                         std::make_pair(40.0, 15.0));
        CHECK(res2.upper.has_value());
    }
    SECTION("single record without history stays unlabeled") {
        const auto res = label_branches({make_rec(5, 10, 3, 1.0)});
        CHECK(res.unlabeled.has_value());
        CHECK(res.unlabeled->branch == BranchLabel::unlabeled);
    }
    SECTION("equal sup_v within 1e-9 breaks the tie by smaller du0") {
        const auto res =
            label_branches({make_rec(5, 7.0, 1.0, 2.0), make_rec(5, 3.0, 1.5, 2.0 + 1e-10)});
        REQUIRE(res.lower.has_value());
        CHECK(res.lower->du0 == 3.0);
    }
    SECTION("more than two records flags the middle ones") {
        const auto res = label_branches(
            {make_rec(5, 1, 1, 0.5), make_rec(5, 2, 2, 1.5), make_rec(5, 3, 3, 3.5)});
        REQUIRE(res.lower.has_value());
        REQUIRE(res.upper.has_value());
        REQUIRE(res.extras.size() == 1);
        CHECK(res.extras[0].sup_v == 1.5);
    }
    SECTION("empty input") {
        const auto res = label_branches({});
        CHECK_FALSE(res.lower.has_value());
        CHECK_FALSE(res.upper.has_value());
        CHECK_FALSE(res.unlabeled.has_value());
    }
}

TEST_CASE("solve_window finds the lambda=10 roots in the acceptance windows") {
    ProblemParams prm = kBase;
    prm.lambda = 10.0;

    SECTION("lower window") {
        const auto res = solve_window(ScanWindow{0.0, 5.0, 0.0, 1.0, 0.1}, prm, fast_policy());
        REQUIRE(res.records.size() == 1);
        CHECK(std::fabs(res.records[0].du0 - 1.0) < 0.1);
        CHECK(std::fabs(res.records[0].dv0 - 0.03) < 0.1);
        CHECK(std::max(std::fabs(res.records[0].residue_u1),
                       std::fabs(res.records[0].residue_v1)) < 1e-6);
    }
    SECTION("upper window") {
        const auto res = solve_window(ScanWindow{30.0, 60.0, 5.0, 30.0, 0.1}, prm, fast_policy());
        REQUIRE(res.records.size() == 1);
        CHECK(std::fabs(res.records[0].du0 - 44.0) < 1.5);
        CHECK(std::fabs(res.records[0].dv0 - 16.5) < 1.5);
        CHECK(std::max(std::fabs(res.records[0].residue_u1),
                       std::fabs(res.records[0].residue_v1)) < 1e-6);
    }
}

TEST_CASE("discover_roots finds both lambda=1 solutions at their native scales") {
    ProblemParams prm = kBase;
    prm.lambda = 1.0;
    const auto recs = discover_roots(ScanWindow{0.0, 80.0, 0.0, 40.0, 1.0}, prm, fast_policy());
    REQUIRE(recs.size() == 2);
    // Lower solution: slopes of order 1e-2 / 4e-5, negative energy.
    CHECK_THAT(recs[0].du0, Catch::Matchers::WithinRel(0.00985599, 1e-3));
    CHECK_THAT(recs[0].dv0, Catch::Matchers::WithinRel(4.18337e-05, 1e-3));
    CHECK(recs[0].energy < 0.0);
    // Upper solution: order-40 slopes, positive energy here.
    CHECK_THAT(recs[1].du0, Catch::Matchers::WithinRel(43.948, 1e-2));
    CHECK_THAT(recs[1].dv0, Catch::Matchers::WithinRel(17.3247, 1e-2));
    CHECK(recs[1].sup_v > recs[0].sup_v);
}

TEST_CASE("lower branch obeys the concave-limit scaling law") {
    // With the convex term negligible, the system -u'' = lambda v^r,
    // -v'' = u^q is invariant under u -> lambda^{1/(1-qr)} u,
    // v -> lambda^{q/(1-qr)} v, so for (q, r) = (1.5, 1/3) the lower-branch
    // slopes scale as du0 ~ lambda^2 and dv0 ~ lambda^3.
    ProblemParams p1 = kBase, p2 = kBase;
    p1.lambda = 1.0;
    p2.lambda = 2.0;
    const auto r1 = discover_roots(ScanWindow{0.0, 1.0, 0.0, 0.1, 0.1}, p1, fast_policy());
    const auto r2 = discover_roots(ScanWindow{0.0, 1.0, 0.0, 0.1, 0.1}, p2, fast_policy());
    REQUIRE_FALSE(r1.empty());
    REQUIRE_FALSE(r2.empty());
    CHECK_THAT(r2[0].du0 / r1[0].du0, Catch::Matchers::WithinRel(4.0, 1e-3));
    CHECK_THAT(r2[0].dv0 / r1[0].dv0, Catch::Matchers::WithinRel(8.0, 1e-3));
}

TEST_CASE("trace_branches over the fold", "[heavy]") {
    SweepConfig cfg;
    cfg.lambda_from = 48.6;
    cfg.lambda_to = 49.6;
    cfg.lambda_step = 0.5;
    // Both roots sit well inside one modest window here; skip the generous
    // fallback so the death path stays cheap (the acceptance run keeps it).
    cfg.lower_window = ScanWindow{10.0, 45.0, 1.0, 15.0, 1.0};
    cfg.upper_window = ScanWindow{10.0, 45.0, 1.0, 15.0, 1.0};
    cfg.use_fallback = false;
    ProblemParams base = kBase;
    const TraceResult res = trace_branches(cfg, base, fast_policy());

    REQUIRE_FALSE(res.lower.records.empty());
    REQUIRE_FALSE(res.upper.records.empty());
    REQUIRE(res.lambda_bif.has_value());
    CHECK(*res.lambda_bif > 48.6);
    CHECK(*res.lambda_bif < 49.6);

    // Branch ordering and lambda monotonicity.
    for (std::size_t i = 0; i + 1 < res.lower.records.size(); ++i)
        CHECK(res.lower.records[i].lambda < res.lower.records[i + 1].lambda);
    for (const auto& lo : res.lower.records)
        for (const auto& up : res.upper.records)
            if (lo.lambda == up.lambda) CHECK(lo.sup_v < up.sup_v);

    const auto rows = emit_bifurcation_data(res.lower, res.upper);
    CHECK(rows.size() == res.lower.records.size() + res.upper.records.size());
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) CHECK(rows[i].lambda <= rows[i + 1].lambda);

    SECTION("bracket validity around the fold estimate") {
        const double bif = *res.lambda_bif;
        const auto& last_lo = res.lower.records.back();
        ScanWindow around{last_lo.du0 - 8.0, last_lo.du0 + 8.0,
                          std::max(0.0, last_lo.dv0 - 4.0), last_lo.dv0 + 4.0, 1.0};
        ProblemParams below = kBase, above = kBase;
        below.lambda = bif - cfg.lambda_step;
        above.lambda = bif + cfg.lambda_step;
        CHECK_FALSE(discover_roots(around, below, fast_policy()).empty());
        CHECK(discover_roots(around, above, fast_policy()).empty());
    }
}

TEST_CASE("warm-start consistency: halving the step keeps shared points", "[heavy]") {
    SweepConfig coarse, fine;
    coarse.lambda_from = fine.lambda_from = 44.0;
    coarse.lambda_to = fine.lambda_to = 46.0;
    coarse.lambda_step = 1.0;
    fine.lambda_step = 0.5;
    const TraceResult rc = trace_branches(coarse, kBase, fast_policy());
    const TraceResult rf = trace_branches(fine, kBase, fast_policy());
    REQUIRE(rc.lower.records.size() == 3);
    REQUIRE(rf.lower.records.size() == 5);
    for (const auto& a : rc.lower.records)
        for (const auto& b : rf.lower.records)
            if (a.lambda == b.lambda) CHECK_THAT(a.sup_v, Catch::Matchers::WithinAbs(b.sup_v, 1e-3));
    for (const auto& a : rc.upper.records)
        for (const auto& b : rf.upper.records)
            if (a.lambda == b.lambda) CHECK_THAT(a.sup_v, Catch::Matchers::WithinAbs(b.sup_v, 1e-3));
}

TEST_CASE("trace_branches reports nothing above the fold") {
    SweepConfig cfg;
    cfg.lambda_from = 52.0;
    cfg.lambda_to = 53.0;
    cfg.lambda_step = 1.0;
    cfg.lower_window = ScanWindow{0.0, 50.0, 0.0, 25.0, 1.0};
    cfg.upper_window = ScanWindow{10.0, 60.0, 1.0, 30.0, 1.0};
    const TraceResult res = trace_branches(cfg, kBase, fast_policy());
    CHECK(res.lower.records.empty());
    CHECK(res.upper.records.empty());
    CHECK_FALSE(res.lambda_bif.has_value());
}

TEST_CASE("SweepConfig validation") {
    SweepConfig cfg;
    cfg.lambda_step = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.lambda_step = 1.0;
    cfg.lambda_from = 10.0;
    cfg.lambda_to = 5.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
