#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "pmufdi/grid/admittance.hpp"
#include "pmufdi/grid/attack_sets.hpp"
#include "pmufdi/grid/case.hpp"
#include "pmufdi/grid/measurement.hpp"
#include "pmufdi/grid/plans.hpp"
#include "support/oracles.hpp"

using namespace pmufdi;

namespace {

const GridCase& rts24() {
    static const GridCase g = load_case(oracle::data_path("case24_ieee_rts.m"));
    return g;
}
const GridCase& ieee118() {
    static const GridCase g = load_case(oracle::data_path("case118.m"));
    return g;
}

GridCase single_line(double charging = 0.0, double tap = 0.0) {
    std::string text = oracle::kTwoBusCase;
    std::string line = "  1 2 0.01 0.1 0 250";
    auto pos = text.find(line);
    std::string repl = "  1 2 0 0.1 " + std::to_string(charging) + " 250 250 250 " + std::to_string(tap) +
                       " 0 1 -360 360;";
    auto end = text.find('\n', pos);
    text.replace(pos, end - pos, repl);
    return parse_case(text);
}

}  // namespace

TEST(ParseCase, TwoBusCase) {
    const GridCase g = parse_case(oracle::kTwoBusCase);
    EXPECT_EQ(g.bus_count(), 2);
    EXPECT_EQ(g.branch_count(), 1);
    EXPECT_EQ(g.base_mva(), 100.0);
    EXPECT_EQ(g.branches()[0].impedance, Complex(0.01, 0.1));
    EXPECT_EQ(g.slack_index(), 0);
    ASSERT_EQ(g.loads().size(), 1u);
    EXPECT_DOUBLE_EQ(g.loads()[0].pd, 0.5);
    EXPECT_DOUBLE_EQ(g.loads()[0].qd, 0.2);
    EXPECT_TRUE(g.is_load_bus(BusId(2)));
    EXPECT_FALSE(g.is_load_bus(BusId(1)));
}

TEST(ParseCase, Rts24Counts) {
    EXPECT_EQ(rts24().bus_count(), 24);
    EXPECT_EQ(rts24().branch_count(), 38);
    EXPECT_EQ(rts24().generators().size(), 33u);
}

TEST(ParseCase, Ieee118Counts) {
    EXPECT_EQ(ieee118().bus_count(), 118);
    EXPECT_EQ(ieee118().branch_count(), 186);
}

TEST(ParseCase, FileOrderIsPreserved) {
    const GridCase& g = rts24();
    for (int i = 0; i < g.bus_count(); ++i) EXPECT_EQ(g.buses()[static_cast<std::size_t>(i)].id.value, i + 1);
    for (int k = 0; k < g.branch_count(); ++k) EXPECT_EQ(g.branches()[static_cast<std::size_t>(k)].id.value, k + 1);
}

TEST(ParseCase, DanglingBranchEndpointRejected) {
    std::string text = oracle::kTwoBusCase;
    text.replace(text.find("  1 2 0.01"), 5, "  1 99");
    EXPECT_THROW(
        {
            try {
                parse_case(text);
            } catch (const ValidationError& e) {
                EXPECT_NE(std::string(e.what()).find("99"), std::string::npos);
                throw;
            }
        },
        ValidationError);
}

TEST(ParseCase, DanglingEndpointIn24BusCase) {
    std::ifstream in(oracle::data_path("case24_ieee_rts.m"));
    std::stringstream ss;
    ss << in.rdbuf();
    std::string text = ss.str();
    const auto branch = text.find("mpc.branch");
    const auto first_row = text.find("\n", branch) + 1;
    const auto tab = text.find_first_not_of(" \t", first_row);
    const auto end = text.find_first_of(" \t", tab);
    text.replace(tab, end - tab, "99");
    EXPECT_THROW(parse_case(text), ValidationError);
}

TEST(ParseCase, MissingSlackRejected) {
    std::string text = oracle::kTwoBusCase;
    text.replace(text.find("  1 3 0"), 7, "  1 2 0");
    EXPECT_THROW(parse_case(text), ValidationError);
}

TEST(ParseCase, SyntaxErrorReportsLineAndColumn) {
    std::string text = oracle::kTwoBusCase;
    text.replace(text.find("2 1 50"), 6, "2 1 5@");
    try {
        parse_case(text);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 7);
        EXPECT_GT(e.column(), 1);
    }
}

TEST(ParseCase, ZeroImpedanceRejected) {
    std::string text = oracle::kTwoBusCase;
    text.replace(text.find("0.01 0.1"), 8, "0 0");
    EXPECT_THROW(build_admittances(parse_case(text)), ValidationError);
}

TEST(ParseCase, PerUnitConversionAndTapDefault) {
    const GridCase& g = rts24();
    EXPECT_DOUBLE_EQ(g.demand()[0].real(), 1.08);
    EXPECT_DOUBLE_EQ(g.demand()[0].imag(), 0.22);
    EXPECT_EQ(g.branches()[0].tap, 1.0);
}

TEST(Admittance, SingleLineFromRow) {
    const Admittances a = build_admittances(single_line());
    EXPECT_NEAR(std::abs(a.yf(0, 0) - Complex(0, -10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(a.yf(0, 1) - Complex(0, 10)), 0.0, 1e-12);
}

TEST(Admittance, HalfChargingAtFromEnd) {
    const Admittances a0 = build_admittances(single_line(0.0, 1.0));
    const Admittances a1 = build_admittances(single_line(0.2, 1.0));
    EXPECT_NEAR(std::abs(a1.yf(0, 0) - a0.yf(0, 0) - Complex(0, 0.1)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(a1.yf(0, 1) - a0.yf(0, 1)), 0.0, 1e-12);
}

TEST(Admittance, MatchesStampingOracle) {
    for (const GridCase* g : {&rts24(), &ieee118()}) {
        const Admittances a = build_admittances(*g);
        const oracle::Dense ref = oracle::stamp_ybus(*g);
        EXPECT_LT((oracle::Dense(a.ybus) - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Admittance, RowSumsEqualChargingAndShunts) {
    const GridCase& g = rts24();
    const Admittances a = build_admittances(g);
    for (int i = 0; i < g.bus_count(); ++i) {
        Complex expected = g.buses()[static_cast<std::size_t>(i)].shunt;
        bool tapped = false;
        for (const auto& br : g.branches()) {
            if (br.tap != 1.0 || br.shift_deg != 0.0) {
                if (g.bus_index(br.from) == i || g.bus_index(br.to) == i) tapped = true;
            }
            if (g.bus_index(br.from) == i || g.bus_index(br.to) == i) expected += Complex(0, br.charging / 2);
        }
        if (tapped) continue;
        EXPECT_NEAR(std::abs(a.ybus.row(i).sum() - expected), 0.0, 1e-9) << "bus " << i + 1;
    }
}

TEST(Admittance, SymmetricWithoutTapsOrShifts) {
    std::string text = oracle::kTwoBusCase;
    const GridCase g = parse_case(text);
    const Admittances a = build_admittances(g);
    EXPECT_LT((a.ybus - a.ybus.transpose()).cwiseAbs().maxCoeff(), 1e-12);

    // Strip taps from the 118-bus case.
    GridCase h = ieee118();
    std::vector<Branch> branches = h.branches();
    for (auto& br : branches) {
        br.tap = 1.0;
        br.shift_deg = 0.0;
    }
    const GridCase flat(h.base_mva(), h.buses(), branches, h.generators(), h.loads());
    const Admittances af = build_admittances(flat);
    EXPECT_LT((af.ybus - af.ybus.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Admittance, CurrentsMatchYbusInjection) {
    const GridCase& g = ieee118();
    const Admittances a = build_admittances(g);
    std::mt19937_64 rng(3);
    const ComplexVector v = oracle::random_matrix(rng, g.bus_count(), 1).col(0);
    ComplexVector inj = ComplexVector::Zero(g.bus_count());
    const ComplexVector i_f = a.yf * v, i_t = a.yt * v;
    for (int k = 0; k < g.branch_count(); ++k) {
        const auto& br = g.branches()[static_cast<std::size_t>(k)];
        inj[g.bus_index(br.from)] += i_f[k];
        inj[g.bus_index(br.to)] += i_t[k];
    }
    for (int i = 0; i < g.bus_count(); ++i) inj[i] += g.buses()[static_cast<std::size_t>(i)].shunt * v[i];
    EXPECT_LT((inj - a.ybus * v).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MeasurementMatrix, VoltageRowIsUnitVector) {
    const GridCase g = parse_case(oracle::kTwoBusCase);
    PmuPlan plan;
    plan.voltage_buses = {BusId(1)};
    const DependencyMatrix dm = build_measurement_matrix(g, plan);
    ASSERT_EQ(dm.measurement_count(), 1);
    EXPECT_EQ(dm.h()(0, 0), Complex(1, 0));
    EXPECT_EQ(dm.h()(0, 1), Complex(0, 0));
}

TEST(MeasurementMatrix, FromCurrentRowAndNormalization) {
    const GridCase g = single_line();
    PmuPlan plan;
    plan.from_branches = {BranchId(1)};
    const DependencyMatrix dm = build_measurement_matrix(g, plan);
    EXPECT_NEAR(std::abs(dm.h()(0, 0) - Complex(0, -10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(dm.h()(0, 1) - Complex(0, 10)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(dm.h_bar()(0, 0) - Complex(0, -10) / std::sqrt(200.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(dm.h_bar()(0, 1) - Complex(0, 10) / std::sqrt(200.0)), 0.0, 1e-12);
    EXPECT_EQ(dm.labels()[0].str(), "F1");
}

TEST(MeasurementMatrix, BuiltinPlanSizesAndOrder) {
    const DependencyMatrix d24 = build_measurement_matrix(rts24(), ieee24_plan());
    EXPECT_EQ(d24.measurement_count(), 9 + 20 + 12);
    EXPECT_EQ(d24.labels().front().str(), "V1");
    EXPECT_EQ(d24.labels()[9].str(), "F1");
    EXPECT_EQ(d24.labels()[29].str(), "T1");
    const DependencyMatrix d118 = build_measurement_matrix(ieee118(), ieee118_plan());
    EXPECT_EQ(ieee118_plan().voltage_buses.size(), 32u);
    EXPECT_EQ(ieee118_plan().from_branches.size(), 63u);
    EXPECT_EQ(ieee118_plan().to_branches.size(), 62u);
    EXPECT_EQ(d118.measurement_count(), 157);
}

TEST(MeasurementMatrix, RowsOfHbarHaveUnitNorm) {
    for (auto [g, plan] : {std::pair{&rts24(), ieee24_plan()}, std::pair{&ieee118(), ieee118_plan()}}) {
        const DependencyMatrix dm = build_measurement_matrix(*g, plan);
        for (Eigen::Index r = 0; r < dm.h_bar().rows(); ++r) EXPECT_NEAR(dm.h_bar().row(r).norm(), 1.0, 1e-12);
        for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(plan.voltage_buses.size()); ++r) {
            EXPECT_EQ(dm.h().row(r).cwiseAbs().sum(), 1.0);
            EXPECT_EQ(dm.h()(r, g->bus_index(plan.voltage_buses[static_cast<std::size_t>(r)])), Complex(1, 0));
        }
    }
}

TEST(MeasurementMatrix, NormalizationIsIdempotent) {
    const DependencyMatrix dm = build_measurement_matrix(ieee118(), ieee118_plan());
    EXPECT_LT((normalize_rows(dm.h_bar()) - dm.h_bar()).cwiseAbs().maxCoeff(), 1e-12);
    std::mt19937_64 rng(11);
    const ComplexMatrix m = oracle::random_matrix(rng, 7, 5);
    const ComplexMatrix once = normalize_rows(m);
    EXPECT_LT((normalize_rows(once) - once).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MeasurementMatrix, AllZeroRowRejected) {
    ComplexMatrix h = ComplexMatrix::Zero(2, 2);
    h(0, 0) = 1.0;
    EXPECT_THROW(DependencyMatrix(h, {MeasurementLabel::parse("V1"), MeasurementLabel::parse("F1")}),
                 ValidationError);

    GridCase g = single_line();
    std::vector<Branch> br = g.branches();
    br[0].in_service = false;
    const GridCase off(g.base_mva(), g.buses(), br, g.generators(), g.loads());
    PmuPlan plan;
    plan.from_branches = {BranchId(1)};
    EXPECT_THROW(build_measurement_matrix(off, plan), ValidationError);
}

TEST(MeasurementMatrix, PlanValidation) {
    PmuPlan dup;
    dup.voltage_buses = {BusId(1), BusId(1)};
    EXPECT_THROW(dup.validate(rts24()), ValidationError);
    PmuPlan missing;
    missing.from_branches = {BranchId(39)};
    EXPECT_THROW(missing.validate(rts24()), ValidationError);
    EXPECT_NO_THROW(ieee24_plan().validate(rts24()));
    EXPECT_NO_THROW(ieee118_plan().validate(ieee118()));
    EXPECT_THROW(builtin_plan("ieee14"), ValidationError);
}

TEST(MeasurementLabels, RoundTrip) {
    for (const char* s : {"V1", "F12", "T186"}) EXPECT_EQ(MeasurementLabel::parse(s).str(), s);
    EXPECT_THROW(MeasurementLabel::parse("X3"), ValidationError);
    EXPECT_THROW(MeasurementLabel::parse("V"), ValidationError);
    EXPECT_THROW(MeasurementLabel::parse("F1x"), ValidationError);
}

TEST(Observability, SingleVoltageRowOnTwoBuses) {
    const GridCase g = parse_case(oracle::kTwoBusCase);
    PmuPlan plan;
    plan.voltage_buses = {BusId(1)};
    const Observability o = check_observability(build_measurement_matrix(g, plan));
    EXPECT_EQ(o.rank, 1);
    EXPECT_FALSE(o.observable);
}

TEST(Observability, BuiltinPlansAreObservable) {
    const Observability o24 = check_observability(build_measurement_matrix(rts24(), ieee24_plan()));
    EXPECT_TRUE(o24.observable);
    EXPECT_EQ(o24.rank, 24);
    const Observability o118 = check_observability(build_measurement_matrix(ieee118(), ieee118_plan()));
    EXPECT_TRUE(o118.observable);
    EXPECT_EQ(o118.rank, 118);
}

TEST(Observability, DuplicateRowAddsNoRank) {
    ComplexMatrix h(2, 3);
    h << Complex(1, 0), Complex(0, 0), Complex(0, 0), Complex(1, 0), Complex(0, 0), Complex(0, 0);
    const DependencyMatrix dm(h, {MeasurementLabel::parse("V1"), MeasurementLabel::parse("V1")});
    EXPECT_EQ(check_observability(dm).rank, 1);
}

TEST(AttackSets, Bus8IsValidAndJIsItsIncidentRows) {
    const DependencyMatrix dm = build_measurement_matrix(rts24(), ieee24_plan());
    const AttackSetValidation v = validate_attack_set(rts24(), dm, {BusId(8)});
    EXPECT_TRUE(v.valid) << (v.reasons.empty() ? "" : v.reasons.front());
    EXPECT_EQ(v.attacked, std::vector<BusId>{BusId(8)});
    EXPECT_TRUE(v.reasons.empty());
    // Oracle: every H row with a nonzero column for bus 8.
    std::vector<int> expected;
    for (Eigen::Index r = 0; r < dm.h().rows(); ++r)
        if (std::abs(dm.h()(r, rts24().bus_index(BusId(8)))) > 0) expected.push_back(static_cast<int>(r));
    EXPECT_EQ(v.measurements, expected);
    // Every measured branch incident to bus 8 is in J.
    for (std::size_t r = 0; r < dm.labels().size(); ++r) {
        const auto& l = dm.labels()[r];
        if (l.kind == MeasurementKind::Voltage) continue;
        const Branch& br = rts24().branch(BranchId(l.id));
        if (br.from == BusId(8) || br.to == BusId(8)) {
            EXPECT_NE(std::find(v.measurements.begin(), v.measurements.end(), static_cast<int>(r)),
                      v.measurements.end())
                << l.str();
        }
    }
    for (BusId b : v.boundary) EXPECT_TRUE(rts24().is_load_bus(b));
}

TEST(AttackSets, SubgraphStructure) {
    const DependencyMatrix dm = build_measurement_matrix(rts24(), ieee24_plan());
    const AttackSetValidation v = validate_attack_set(rts24(), dm, {BusId(3), BusId(9)});
    for (BusId b : v.attacked) EXPECT_TRUE(std::binary_search(v.subgraph.begin(), v.subgraph.end(), b));
    for (BusId b : v.boundary) {
        EXPECT_TRUE(std::binary_search(v.subgraph.begin(), v.subgraph.end(), b));
        EXPECT_FALSE(std::binary_search(v.attacked.begin(), v.attacked.end(), b));
    }
    EXPECT_EQ(v.subgraph.size(), v.attacked.size() + v.boundary.size());
}

TEST(AttackSets, SlackWithNonLoadNeighborIsInvalid) {
    const GridCase& g = rts24();
    const DependencyMatrix dm = build_measurement_matrix(g, ieee24_plan());
    const BusId slack = g.buses()[static_cast<std::size_t>(g.slack_index())].id;
    const AttackSetValidation v = validate_attack_set(g, dm, {slack});
    EXPECT_FALSE(v.valid);
    ASSERT_FALSE(v.reasons.empty());
    bool named = false;
    for (BusId b : v.boundary)
        if (!g.is_load_bus(b))
            for (const auto& r : v.reasons) named |= r.find(std::to_string(b.value)) != std::string::npos;
    EXPECT_TRUE(named);
}

TEST(AttackSets, EmptyOrDuplicateInputRejected) {
    const DependencyMatrix dm = build_measurement_matrix(rts24(), ieee24_plan());
    EXPECT_THROW(validate_attack_set(rts24(), dm, {}), ValidationError);
    EXPECT_THROW(validate_attack_set(rts24(), dm, {BusId(8), BusId(8)}), ValidationError);
    EXPECT_THROW(validate_attack_set(rts24(), dm, {BusId(99)}), ValidationError);
}

TEST(AttackSets, PlanOverloadAgrees) {
    const DependencyMatrix dm = build_measurement_matrix(rts24(), ieee24_plan());
    const auto a = validate_attack_set(rts24(), ieee24_plan(), {BusId(8)});
    const auto b = validate_attack_set(rts24(), dm, {BusId(8)});
    EXPECT_EQ(a.measurements, b.measurements);
    EXPECT_EQ(enumerate_attack_sets(rts24(), ieee24_plan(), 2), enumerate_attack_sets(rts24(), dm, 2));
}

TEST(AttackSets, TwoBusCaseHasNoValidSingle) {
    // Neither bus carries load, so each one's only neighbor disqualifies it.
    std::string text = oracle::kTwoBusCase;
    text.replace(text.find("2 1 50 20"), 9, "2 1 0 0");
    const GridCase g = parse_case(text);
    PmuPlan plan;
    plan.voltage_buses = {BusId(1), BusId(2)};
    const DependencyMatrix dm = build_measurement_matrix(g, plan);
    EXPECT_TRUE(enumerate_attack_sets(g, dm, 1).empty());
    EXPECT_FALSE(validate_attack_set(g, dm, {BusId(2)}).valid);

    // With a load on bus 2 only bus 1 qualifies.
    const GridCase loaded = parse_case(oracle::kTwoBusCase);
    const auto sets = enumerate_attack_sets(loaded, build_measurement_matrix(loaded, plan), 1);
    ASSERT_EQ(sets.size(), 1u);
    EXPECT_EQ(sets.front(), std::vector<BusId>{BusId(1)});
}

TEST(AttackSets, Ieee118SinglesAreExactlyLoadBounded) {
    const GridCase& g = ieee118();
    const DependencyMatrix dm = build_measurement_matrix(g, ieee118_plan());
    const auto sets = enumerate_attack_sets(g, dm, 1);
    std::set<int> listed;
    for (const auto& s : sets) {
        ASSERT_EQ(s.size(), 1u);
        listed.insert(s.front().value);
    }
    const auto adj = g.adjacency();
    for (int i = 0; i < g.bus_count(); ++i) {
        bool all_load = true;
        for (int j : adj[static_cast<std::size_t>(i)])
            all_load &= g.is_load_bus(g.buses()[static_cast<std::size_t>(j)].id);
        EXPECT_EQ(all_load, listed.count(g.buses()[static_cast<std::size_t>(i)].id.value) == 1) << "bus " << i + 1;
    }
    EXPECT_FALSE(sets.empty());
}

TEST(AttackSets, EnumerationIsSoundConnectedSortedAndUnique) {
    const GridCase& g = rts24();
    const DependencyMatrix dm = build_measurement_matrix(g, ieee24_plan());
    const auto sets = enumerate_attack_sets(g, dm, 5);
    EXPECT_TRUE(std::is_sorted(sets.begin(), sets.end()));
    EXPECT_EQ(std::adjacent_find(sets.begin(), sets.end()), sets.end());
    for (const auto& s : sets) {
        EXPECT_GE(s.size(), 1u);
        EXPECT_LE(s.size(), 5u);
        EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
        EXPECT_TRUE(oracle::connected(g, s));
        EXPECT_TRUE(validate_attack_set(g, dm, s).valid);
    }
}

TEST(AttackSets, EnumerationIsComplete) {
    // Brute force over all pairs: every connected valid pair must be listed.
    const GridCase& g = rts24();
    const DependencyMatrix dm = build_measurement_matrix(g, ieee24_plan());
    const auto sets = enumerate_attack_sets(g, dm, 2);
    const std::set<std::vector<BusId>> listed(sets.begin(), sets.end());
    for (int a = 1; a <= 24; ++a) {
        const std::vector<BusId> one{BusId(a)};
        EXPECT_EQ(listed.count(one) == 1, validate_attack_set(g, dm, one).valid);
        for (int b = a + 1; b <= 24; ++b) {
            const std::vector<BusId> two{BusId(a), BusId(b)};
            const bool expect = oracle::connected(g, two) && validate_attack_set(g, dm, two).valid;
            EXPECT_EQ(listed.count(two) == 1, expect) << a << "," << b;
        }
    }
    EXPECT_THROW(enumerate_attack_sets(g, dm, 0), ValidationError);
}

TEST(AttackSets, SupportPropagatesOnlyIntoJ) {
    const GridCase& g = rts24();
    const DependencyMatrix dm = build_measurement_matrix(g, ieee24_plan());
    std::mt19937_64 rng(5);
    const auto sets = enumerate_attack_sets(g, dm, 3);
    for (std::size_t k = 0; k < sets.size(); k += 3) {
        const auto v = validate_attack_set(g, dm, sets[k]);
        ComplexMatrix c = ComplexMatrix::Zero(6, g.bus_count());
        for (BusId b : v.attacked) c.col(g.bus_index(b)) = oracle::random_matrix(rng, 6, 1).col(0);
        const ComplexMatrix d = c * dm.h_bar().transpose();
        for (Eigen::Index j = 0; j < d.cols(); ++j) {
            const bool in_j = std::binary_search(v.measurements.begin(), v.measurements.end(), static_cast<int>(j));
            if (!in_j) {
                EXPECT_EQ(d.col(j).norm(), 0.0) << "column " << j;
            }
        }
    }
}
