#pragma once

#include "errors.hpp"
#include "normal.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hle {

/// Annual transition matrix over living states. Entry (j, k) is the
/// probability of moving from state k to state j in one year; the deficit of
/// column k below 1 is the probability of dying.
using TransitionMatrix = Eigen::MatrixXd;

/// One transition matrix per single year of age, starting at age 0.
using MatrixSchedule = std::vector<TransitionMatrix>;

inline constexpr int kMaxAge = 99;
inline constexpr int kAgeCount = kMaxAge + 1;
inline constexpr int kRegimeBoundaryAge = 65;

enum class HealthMeasure { sah, hh };
enum class Gender { male, female };
enum class AgeRegime { under65, over65 };

/// Living states ordered best to worst. Death is implicit and always last.
inline std::span<const std::string_view> state_names(HealthMeasure measure) {
    static constexpr std::array<std::string_view, 4> sah{"VeryGood", "Good", "Fair",
                                                          "BadVeryBad"};
    static constexpr std::array<std::string_view, 2> hh{"NoneSlight", "Severe"};
    if (measure == HealthMeasure::sah) {
        return sah;
    }
    return hh;
}

inline std::size_t living_state_count(HealthMeasure measure) {
    return state_names(measure).size();
}

/// Number of leading states counted as healthy: VeryGood and Good for SAH,
/// NoneSlight for HH.
inline std::size_t healthy_state_count(HealthMeasure measure) {
    return measure == HealthMeasure::sah ? 2 : 1;
}

inline std::string_view to_string(HealthMeasure measure) {
    return measure == HealthMeasure::sah ? "SAH" : "HH";
}

inline std::string_view to_string(Gender gender) {
    return gender == Gender::male ? "male" : "female";
}

inline std::string_view to_string(AgeRegime regime) {
    return regime == AgeRegime::under65 ? "under65" : "over65";
}

/// Regime is chosen by the age at the start of the transition interval.
inline AgeRegime regime_for_age(int age) {
    return age < kRegimeBoundaryAge ? AgeRegime::under65 : AgeRegime::over65;
}

/// Subject characteristics entering the linear predictor.
class Covariates {
public:
    Covariates(int age, Gender gender) : age_{age}, gender_{gender} {
        if (age < 0 || age > kMaxAge) {
            throw ValidationError("covariate age " + std::to_string(age) +
                                  " outside [0, " + std::to_string(kMaxAge) + "]");
        }
    }

    int age() const noexcept { return age_; }
    Gender gender() const noexcept { return gender_; }

private:
    int age_;
    Gender gender_;
};

/// Standard errors as published; carried along, never used in computation.
struct StandardErrors {
    std::vector<double> cutpoints;
    double age_coeff = 0.0;
    double gender_coeff = 0.0;
};

/// Ordered-probit equation for one initial state. The constant term is
/// absorbed into the cutpoints, so the linear predictor holds covariates only.
class ProbitEquation {
public:
    ProbitEquation(std::size_t initial_state, std::vector<double> cutpoints,
                   double age_coeff, double gender_coeff, StandardErrors std_errors = {})
        : initial_state_{initial_state}, cutpoints_{std::move(cutpoints)},
          age_coeff_{age_coeff}, gender_coeff_{gender_coeff},
          std_errors_{std::move(std_errors)} {
        if (cutpoints_.empty()) {
            throw ValidationError("probit equation needs at least one cutpoint");
        }
        if (!std::isfinite(age_coeff_) || !std::isfinite(gender_coeff_)) {
            throw ValidationError("probit coefficients must be finite");
        }
        for (std::size_t j = 0; j < cutpoints_.size(); ++j) {
            if (!std::isfinite(cutpoints_[j])) {
                throw ValidationError("cutpoints must be finite");
            }
            if (j > 0 && cutpoints_[j] < cutpoints_[j - 1]) {
                throw ValidationError("cutpoints out of order at position " +
                                      std::to_string(j + 1));
            }
        }
        if (!std_errors_.cutpoints.empty() &&
            std_errors_.cutpoints.size() != cutpoints_.size()) {
            throw ValidationError("cutpoint standard errors do not match cutpoints");
        }
    }

    std::size_t initial_state() const noexcept { return initial_state_; }
    const std::vector<double> &cutpoints() const noexcept { return cutpoints_; }
    double age_coeff() const noexcept { return age_coeff_; }
    double gender_coeff() const noexcept { return gender_coeff_; }
    const StandardErrors &std_errors() const noexcept { return std_errors_; }

    /// Female = 1, Male = 0.
    double linear_predictor(const Covariates &cov) const noexcept {
        return age_coeff_ * cov.age() +
               (cov.gender() == Gender::female ? gender_coeff_ : 0.0);
    }

private:
    std::size_t initial_state_;
    std::vector<double> cutpoints_;
    double age_coeff_;
    double gender_coeff_;
    StandardErrors std_errors_;
};

/// Probability vector over destination states, best living state first and
/// death last. With xb the linear predictor and cutpoints a_1..a_J:
///   p_j = Phi(a_j - xb) - Phi(a_{j-1} - xb),  a_0 = -inf
///   p_death = 1 - Phi(a_J - xb)
inline std::vector<double> transition_distribution(const ProbitEquation &eq,
                                                   const Covariates &cov) {
    const double xb = eq.linear_predictor(cov);
    const auto &cut = eq.cutpoints();
    std::vector<double> probs;
    probs.reserve(cut.size() + 1);
    double lower = -std::numeric_limits<double>::infinity();
    for (const double c : cut) {
        probs.push_back(standard_normal_interval(lower, c - xb));
        lower = c - xb;
    }
    probs.push_back(standard_normal_interval(lower, std::numeric_limits<double>::infinity()));
    return probs;
}

/// Equations for every living state of one measure, under and over 65.
class ProbitCoefficientSet {
public:
    ProbitCoefficientSet(HealthMeasure measure, std::vector<ProbitEquation> under65,
                         std::vector<ProbitEquation> over65)
        : measure_{measure}, under65_{std::move(under65)}, over65_{std::move(over65)} {
        check_regime(under65_, AgeRegime::under65);
        check_regime(over65_, AgeRegime::over65);
    }

    HealthMeasure measure() const noexcept { return measure_; }
    std::size_t state_count() const noexcept { return living_state_count(measure_); }
    int age_regime_boundary() const noexcept { return kRegimeBoundaryAge; }

    const std::vector<ProbitEquation> &equations(AgeRegime regime) const noexcept {
        return regime == AgeRegime::under65 ? under65_ : over65_;
    }

private:
    void check_regime(std::vector<ProbitEquation> &eqs, AgeRegime regime) const {
        const auto where = std::string(to_string(measure_)) + " " +
                           std::string(to_string(regime));
        const std::size_t states = living_state_count(measure_);
        if (eqs.size() != states) {
            throw ValidationError(where + ": expected " + std::to_string(states) +
                                  " equations, got " + std::to_string(eqs.size()));
        }
        std::sort(eqs.begin(), eqs.end(), [](const auto &x, const auto &y) {
            return x.initial_state() < y.initial_state();
        });
        for (std::size_t k = 0; k < states; ++k) {
            if (eqs[k].initial_state() != k) {
                throw ValidationError(where + ": duplicate or missing initial state " +
                                      std::string(state_names(measure_)[k]));
            }
            if (eqs[k].cutpoints().size() != states) {
                throw ValidationError(where + ": equation for " +
                                      std::string(state_names(measure_)[k]) + " needs " +
                                      std::to_string(states) + " cutpoints");
            }
        }
    }

    HealthMeasure measure_;
    std::vector<ProbitEquation> under65_;
    std::vector<ProbitEquation> over65_;
};

/// Column k holds the living-state part of the distribution for initial
/// state k at the given age.
inline TransitionMatrix build_transition_matrix(const ProbitCoefficientSet &set, int age,
                                                Gender gender) {
    const Covariates cov{age, gender};
    const auto &eqs = set.equations(regime_for_age(age));
    const auto n = static_cast<Eigen::Index>(set.state_count());
    TransitionMatrix m(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto probs = transition_distribution(eqs[static_cast<std::size_t>(k)], cov);
        for (Eigen::Index j = 0; j < n; ++j) {
            m(j, k) = probs[static_cast<std::size_t>(j)];
        }
    }
    return m;
}

inline MatrixSchedule build_all_matrices(const ProbitCoefficientSet &set, Gender gender) {
    MatrixSchedule out;
    out.reserve(kAgeCount);
    for (int age = 0; age < kAgeCount; ++age) {
        out.push_back(build_transition_matrix(set, age, gender));
    }
    return out;
}

} // namespace hle
