#pragma once

#include <array>
#include <string_view>

// Published summary statistics from the crowdfunding experiment. The raw
// participant data is not public; these constants only feed the transform
// and aggregation checks in `replicate`.

namespace cfgame::reference {

struct CoefficientRow {
    std::string_view predictor;
    double coefficient;
    double odds_ratio;
    double ci_low;
    double ci_high;
    double p_value;  // 0 encodes "< 0.001"
};

struct RegressionTable {
    std::string_view outcome;
    int n_obs;
    double lr_chi2;
    int df;
    std::array<CoefficientRow, 4> rows;
};

// Signal-following (IsTrue) regression.
inline constexpr RegressionTable kTable1{
    "is_true", 613, 106.08, 3,
    {{{"(Intercept)", 1.941, 6.969, 4.536, 10.689, 0.0},
      {"Crowdfunding", -1.975, 0.139, 0.092, 0.209, 0.0},
      {"BallRatio85", 0.091, 1.095, 0.754, 1.590, 0.633},
      {"GroupSize25", -0.051, 0.950, 0.655, 1.380, 0.789}}}};

// Risk-aversion (RA) regression.
inline constexpr RegressionTable kTable2{
    "ra", 628, 15.38, 3,
    {{{"(Intercept)", -3.3490, 0.035, 0.015, 0.080, 0.0},
      {"GroupSize25", 0.1509, 1.163, 0.572, 2.365, 0.677},
      {"BallRatio85", -0.8814, 0.414, 0.193, 0.889, 0.024},
      {"Threshold80", 1.1789, 3.251, 1.440, 7.346, 0.005}}}};

// Mutual-insurance (MutIns) regression.
inline constexpr RegressionTable kTable3{
    "mut_ins", 324, 5.34, 3,
    {{{"(Intercept)", 1.910, 6.758, 3.437, 13.849, 0.0},
      {"GroupSize25", -0.021, 0.979, 0.453, 2.115, 0.957},
      {"BallRatio85", 0.929, 2.532, 1.115, 5.750, 0.026},
      {"Threshold80", 0.064, 1.066, 0.494, 2.303, 0.871}}}};

// Group correctness (%) by condition.
struct CorrectnessCell {
    int ball_ratio;
    int group_size;
    int groups;
    double voting50;
    double cf50;
    double cf80;
};
inline constexpr std::array<CorrectnessCell, 4> kTable4{{{55, 5, 20, 75.00, 40.00, 50.00},
                                                         {55, 25, 4, 75.00, 75.00, 25.00},
                                                         {85, 5, 20, 95.00, 50.00, 50.00},
                                                         {85, 25, 4, 100.00, 50.00, 50.00}}};

// Crowdfunding aggregation rates (%).
struct AggregationCell {
    int ball_ratio;
    int threshold;
    int group_size;
    double g_given_met;
    double met_given_g;
    double notmet_given_b;
};
inline constexpr std::array<AggregationCell, 8> kTable5{{{55, 50, 5, 40, 100.00, 0.00},
                                                         {55, 50, 25, 75, 100.00, 0.00},
                                                         {55, 80, 5, 58.83, 76.92, 0.00},
                                                         {55, 80, 25, 0, 0.00, 33.33},
                                                         {85, 50, 5, 50, 100.00, 0.00},
                                                         {85, 50, 25, 50, 100.00, 0.00},
                                                         {85, 80, 5, 52.63, 90.91, 0.00},
                                                         {85, 80, 25, 50, 100.00, 0.00}}};

// Information-aggregation constants (baseline: n = 5, q = 50%, p = 0.55).
struct AggregationBaseline {
    double psi = 0.034;
    double lambda = 0.871;
    double phi = 71.0 / 81.0;
    double rho = 0.0643;
    double phi_h = 0.882;
    double phi_l = 0.870;
    double theta_cf = 0.502;
    double theta_voting_055 = 0.593;
    double theta_voting_085 = 0.973;
    double theta_voting_055_observed = 0.569;
    double theta_voting_085_observed = 0.907;
    double voting_follow_rate = 0.874;
};
inline constexpr AggregationBaseline kAggregationBaseline{};

// Probabilities quoted next to the odds ratios.
inline constexpr double kIsTrueBaseline = 0.874;         // regression narrative
inline constexpr double kIsTrueBaselineAlt = 0.872;      // probability-change sentence
inline constexpr double kIsTrueCrowdfunding = 0.490;
inline constexpr double kRaBaseline = 0.034;
inline constexpr double kRaBallRatio85 = 0.015;
inline constexpr double kRaThreshold80 = 0.102;
inline constexpr double kMutInsBaseline = 0.871;
inline constexpr double kMutInsBallRatio85 = 0.944;

}  // namespace cfgame::reference
