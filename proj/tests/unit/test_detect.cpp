#include <gtest/gtest.h>

#include "pmufdi/attack/designer.hpp"
#include "pmufdi/attack/naive.hpp"
#include "pmufdi/detect/ld_detector.hpp"
#include "pmufdi/grid/plans.hpp"
#include "support/oracles.hpp"

using namespace pmufdi;

namespace {

struct Fixture {
    GridCase grid;
    DependencyMatrix dm;
    GeneratedData data;
};

const Fixture& rts24() {
    static const Fixture f = [] {
        Fixture x;
        x.grid = load_case(oracle::data_path("case24_ieee_rts.m"));
        x.dm = build_measurement_matrix(x.grid, ieee24_plan());
        GenerationOptions opts;
        opts.seed = 1;
        x.data = generate_block(x.grid, x.dm, opts);
        return x;
    }();
    return f;
}

MeasurementBlock window(int first) { return rts24().data.measurements.window(first, 60); }

DetectionResult with_norms(std::vector<double> norms, double fro = 1.0) {
    DetectionResult r;
    r.input_fro = fro;
    r.c_ld = ComplexMatrix::Zero(4, static_cast<Eigen::Index>(norms.size()));
    for (std::size_t j = 0; j < norms.size(); ++j) r.c_ld(0, static_cast<Eigen::Index>(j)) = norms[j];
    return r;
}

DependencyMatrix identity_dm(int n) {
    std::vector<MeasurementLabel> labels;
    for (int i = 0; i < n; ++i) labels.push_back({MeasurementKind::Voltage, i + 1});
    return DependencyMatrix(ComplexMatrix::Identity(n, n), labels);
}

void expect_invariants(const DetectionResult& r) {
    EXPECT_LE(r.feasibility, 1e-6 * r.input_fro);
    EXPECT_TRUE(r.certificate_holds());
    EXPECT_TRUE(r.diagnostics.converged);
    EXPECT_NEAR(r.objective, nuclear_norm(r.z_ld) + r.lambda * l12_norm(r.c_ld), 1e-12 * r.objective);
}

}  // namespace

TEST(Detect, CleanBlockIsNotFlagged) {
    for (int first : {31, 91}) {
        const DetectionResult r = detect(window(first), rts24().dm, 1.05);
        expect_invariants(r);
        EXPECT_TRUE(r.state_support.empty()) << "window " << first;
        EXPECT_TRUE(r.measurement_support.empty());
        EXPECT_EQ(classify_outcome(r, {}), Outcome::Clean);
        EXPECT_LE((r.z_ld - window(first).z).norm(), 1e-5 * r.input_fro);
    }
}

TEST(Detect, DesignedAttackBypasses) {
    const Fixture& f = rts24();
    std::vector<std::vector<BusId>> sets{{BusId(8)}};
    for (const auto& s : enumerate_attack_sets(f.grid, f.dm, 3))
        if (s.size() > sets.back().size()) sets.push_back(s);
    ASSERT_EQ(sets.size(), 3u);
    for (int first : {31, 91}) {
        for (const auto& set : sets) {
            const AttackScenario sc = design_attack(window(first), f.grid, f.dm, set);
            const DetectionResult r = detect(sc.attacked_block, f.dm, 1.05);
            expect_invariants(r);
            EXPECT_EQ(classify_outcome(r, sc.attacked_columns), Outcome::Bypassed);
        }
    }
}

TEST(Detect, NeverDetectedWithinIAcrossLambdas) {
    const Fixture& f = rts24();
    const AttackScenario sc = design_attack(window(31), f.grid, f.dm, {BusId(8)});
    for (double lambda : {0.5, 1.05, 2.0, 5.0, 1e6}) {
        const DetectionResult r = detect(sc.attacked_block, f.dm, lambda);
        expect_invariants(r);
        const Outcome o = classify_outcome(r, sc.attacked_columns);
        EXPECT_NE(o, Outcome::DetectedWithinI) << "lambda " << lambda;
        if (lambda >= 1.05) {
            EXPECT_EQ(o, Outcome::Bypassed) << "lambda " << lambda;
        }
    }
}

TEST(Detect, NaiveAttackSupportRecovered) {
    const Fixture& f = rts24();
    std::mt19937_64 rng(9);
    for (int first : {31, 91}) {
        const MeasurementBlock z = window(first);
        const RealVector off = off_row_space_norms(z, f.dm);
        for (int bus : {1, 2, 7, 8, 11}) {
            ASSERT_GT(off[bus - 1], 1.05) << "bus " << bus << " is not recoverable at this lambda";
            const ComplexMatrix c = naive_ramp_attack(z, 24, {bus - 1}, 0.1, rng);
            const MeasurementBlock zbar = apply_attack(z, c, f.dm);
            const DetectionResult r = detect(zbar, f.dm, 1.05);
            expect_invariants(r);
            EXPECT_EQ(r.state_support, std::vector<int>{bus - 1}) << "window " << first << " bus " << bus;
            EXPECT_EQ(classify_outcome(r, {bus - 1}), Outcome::DetectedWithinI);
            // Measurement support is J for that bus.
            const auto v = validate_attack_set(f.grid, f.dm, {BusId(bus)});
            EXPECT_EQ(r.measurement_support, v.measurements);
        }
    }
}

TEST(Detect, HugeLambdaGivesZeroC) {
    const Fixture& f = rts24();
    std::mt19937_64 rng(10);
    const MeasurementBlock z = window(31);
    const MeasurementBlock zbar = apply_attack(z, naive_ramp_attack(z, 24, {7}, 0.1, rng), f.dm);
    const DetectionResult r = detect(zbar, f.dm, 1e6);
    expect_invariants(r);
    EXPECT_TRUE(r.state_support.empty());
    EXPECT_LE(r.c_ld.norm(), 1e-9 * r.input_fro);
}

TEST(Detect, NonPositiveLambdaRejected) {
    EXPECT_THROW(detect(window(31), rts24().dm, 0.0), ValidationError);
    EXPECT_THROW(detect(window(31), rts24().dm, -1.0), ValidationError);
}

TEST(Detect, NonConvergenceReported) {
    SolverOptions opts;
    opts.max_iterations = 1;
    std::mt19937_64 rng(11);
    const MeasurementBlock z = window(31);
    const MeasurementBlock zbar = apply_attack(z, naive_ramp_attack(z, 24, {7}, 0.1, rng), rts24().dm);
    EXPECT_THROW(detect(zbar, rts24().dm, 1.05, opts), ConvergenceError);
}

TEST(Detect, MatchesReferenceMinimizer) {
    std::mt19937_64 rng(31);
    for (int t = 0; t < 6; ++t) {
        std::uniform_int_distribution<int> rows(4, 8), meas(5, 10), states(2, 4);
        const int n = rows(rng), nz = meas(rng), nb = states(rng);
        const ComplexMatrix h = oracle::random_matrix(rng, nz, nb);
        std::vector<MeasurementLabel> labels;
        for (int j = 0; j < nz; ++j) labels.push_back({MeasurementKind::FromCurrent, j + 1});
        const DependencyMatrix dm(h, labels);
        MeasurementBlock b;
        b.labels = labels;
        b.z = oracle::random_low_rank(rng, n, nz, 1) + oracle::random_matrix(rng, n, nz, 0.1);
        // Plant a column-sparse term on state 0.
        ComplexMatrix c = ComplexMatrix::Zero(n, nb);
        c.col(0) = oracle::random_matrix(rng, n, 1).col(0);
        b.z += c * dm.h_bar().transpose();
        const double lambda = t % 2 == 0 ? 0.3 : 1.0;
        const DetectionResult r = detect(b, dm, lambda);
        expect_invariants(r);
        const double ref = oracle::reference_ld_objective(b.z, dm.h_bar().transpose(), lambda);
        EXPECT_LE(std::abs(r.objective - ref), 1e-3 * ref)
            << "trial " << t << " admm " << r.objective << " ref " << ref;
    }
}

TEST(IdentifySupport, Examples) {
    const DependencyMatrix dm = identity_dm(3);
    DetectionResult zero = with_norms({0, 0, 0});
    identify_support(zero, dm);
    EXPECT_TRUE(zero.state_support.empty());
    EXPECT_TRUE(zero.measurement_support.empty());

    DetectionResult dominant = with_norms({0.1, 1.0, 0.05});
    ThresholdPolicy coarse;
    coarse.rel = 0.5;
    identify_support(dominant, dm, coarse);
    EXPECT_EQ(dominant.state_support, std::vector<int>{1});
    EXPECT_EQ(dominant.measurement_support, std::vector<int>{1});
    EXPECT_DOUBLE_EQ(dominant.state_norms[0], 0.1);

    // The absolute floor suppresses columns that are tiny relative to the data.
    DetectionResult tiny = with_norms({1e-9, 0, 0}, 1.0);
    identify_support(tiny, dm);
    EXPECT_TRUE(tiny.state_support.empty());
}

TEST(IdentifySupport, DefaultThresholdFormula) {
    const ThresholdPolicy p;
    RealVector norms(3);
    norms << 2.0, 0.0, 1e-4;
    EXPECT_DOUBLE_EQ(p.threshold(norms, 10.0, 4, 25), 2e-3);
    norms << 1e-9, 0, 0;
    EXPECT_DOUBLE_EQ(p.threshold(norms, 10.0, 4, 25), 1e-6 * 10.0 / 10.0);
}

TEST(ClassifyOutcome, Examples) {
    DetectionResult none = with_norms({0, 0, 0});
    identify_support(none, identity_dm(3));
    EXPECT_EQ(classify_outcome(none, {2}), Outcome::Bypassed);
    EXPECT_EQ(classify_outcome(none, {}), Outcome::Clean);
    EXPECT_EQ(classify_outcome(none, {}, true), Outcome::Bypassed);

    DetectionResult at8;
    at8.state_support = {7};
    EXPECT_EQ(classify_outcome(at8, {7}), Outcome::DetectedWithinI);
    DetectionResult at9;
    at9.state_support = {8};
    EXPECT_EQ(classify_outcome(at9, {7}), Outcome::DetectedOutsideI);
    DetectionResult both;
    both.state_support = {7, 8};
    EXPECT_EQ(classify_outcome(both, {7}), Outcome::DetectedOutsideI);
    EXPECT_EQ(classify_outcome(both, {7, 8}), Outcome::DetectedWithinI);

    EXPECT_STREQ(to_string(Outcome::Bypassed), "Bypassed");
    EXPECT_STREQ(to_string(Outcome::DetectedOutsideI), "DetectedOutsideI");
}

TEST(ClassifyOutcome, BusIds) {
    EXPECT_EQ(to_bus_ids(rts24().grid, {0, 7}), (std::vector<BusId>{BusId(1), BusId(8)}));
}
