#pragma once

#include "errors.hpp"
#include "probit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hle {

/// Persons (or probability mass) per living state.
using CohortVector = Eigen::VectorXd;

/// N and Z arrays, both indexed by age.
///
/// occupancy[i](j, k): probability of being alive in state j at exact age i
/// given state k at birth; occupancy[0] is the identity.
///
/// expected_years[a](j, k): expected number of later birthdays (a+1 onward)
/// reached in state j given state k at age a; expected_years[horizon] is zero.
struct OccupancyTensor {
    std::vector<Eigen::MatrixXd> occupancy;
    std::vector<Eigen::MatrixXd> expected_years;
};

struct HealthExpectancy {
    double le = 0.0;
    double hle = 0.0;
    double uhle = 0.0;
    double pct_healthy = 0.0;
};

/// Throws unless `matrices` is a non-empty run of equal-sized square matrices.
inline Eigen::Index schedule_state_count(const MatrixSchedule &matrices) {
    if (matrices.empty()) {
        throw ValidationError("empty transition matrix schedule");
    }
    const auto n = matrices.front().rows();
    for (std::size_t a = 0; a < matrices.size(); ++a) {
        if (matrices[a].rows() != n || matrices[a].cols() != n) {
            throw ValidationError("transition matrix at age " + std::to_string(a) +
                                  " is not " + std::to_string(n) + "x" + std::to_string(n));
        }
    }
    return n;
}

inline CohortVector best_state_cohort(Eigen::Index states) {
    return CohortVector::Unit(states, 0);
}

namespace detail {

inline void check_cohort(const MatrixSchedule &matrices, const CohortVector &x0) {
    const auto n = schedule_state_count(matrices);
    if (x0.size() != n) {
        throw ValidationError("cohort vector has " + std::to_string(x0.size()) +
                              " states, matrices have " + std::to_string(n));
    }
    if ((x0.array() < 0.0).any() || !(x0.sum() > 0.0)) {
        throw ValidationError("cohort vector must be non-negative with positive total");
    }
}

} // namespace detail

/// s_0 .. s_L for L = matrices.size(): s_i = 1'(M_{i-1}...M_0 x0) / 1'x0.
inline std::vector<double> survival_curve(const MatrixSchedule &matrices, const CohortVector &x0) {
    detail::check_cohort(matrices, x0);
    const double total = x0.sum();
    std::vector<double> s;
    s.reserve(matrices.size() + 1);
    s.push_back(1.0);
    CohortVector x = x0;
    for (const auto &m : matrices) {
        x = m * x;
        s.push_back(x.sum() / total);
    }
    return s;
}

/// N[0] = I, N[i+1] = M_i N[i].
inline std::vector<Eigen::MatrixXd> occupancy(const MatrixSchedule &matrices) {
    const auto n = schedule_state_count(matrices);
    std::vector<Eigen::MatrixXd> out;
    out.reserve(matrices.size() + 1);
    out.push_back(Eigen::MatrixXd::Identity(n, n));
    for (const auto &m : matrices) {
        out.push_back(m * out.back());
    }
    return out;
}

/// Z[L] = 0 and Z[a] = (I + Z[a+1]) M_a, so Z[L-1] = M_{L-1}. Later
/// matrices multiply on the left because cohorts propagate as x' = M x.
inline std::vector<Eigen::MatrixXd> expected_years(const MatrixSchedule &matrices) {
    const auto n = schedule_state_count(matrices);
    const auto horizon = matrices.size();
    std::vector<Eigen::MatrixXd> z(horizon + 1, Eigen::MatrixXd::Zero(n, n));
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
    for (std::size_t a = horizon; a-- > 0;) {
        z[a] = (eye + z[a + 1]) * matrices[a];
    }
    return z;
}

inline OccupancyTensor occupancy_tensor(const MatrixSchedule &matrices) {
    return {occupancy(matrices), expected_years(matrices)};
}

/// Living-state distribution at `age` of the cohort started at x0, normalised
/// to sum to one.
inline Eigen::VectorXd state_mix_at_age(const MatrixSchedule &matrices, const CohortVector &x0,
                                        int age) {
    detail::check_cohort(matrices, x0);
    if (age < 0 || static_cast<std::size_t>(age) > matrices.size()) {
        throw ValidationError("age " + std::to_string(age) + " outside the schedule");
    }
    CohortVector x = x0;
    for (int a = 0; a < age; ++a) {
        x = matrices[static_cast<std::size_t>(a)] * x;
    }
    const double alive = x.sum();
    if (!(alive > 0.0)) {
        throw DomainError("no survivors at age " + std::to_string(age));
    }
    return x / alive;
}

/// le and hle from Z[at_age] weighted by `mix`; `healthy` lists the state
/// indices counted as healthy.
inline HealthExpectancy healthy_life_expectancy(const std::vector<Eigen::MatrixXd> &z,
                                                std::span<const Eigen::Index> healthy,
                                                int at_age, const Eigen::VectorXd &mix) {
    if (at_age < 0 || static_cast<std::size_t>(at_age) >= z.size()) {
        throw ValidationError("age " + std::to_string(at_age) + " outside the schedule");
    }
    const auto &za = z[static_cast<std::size_t>(at_age)];
    if (mix.size() != za.cols()) {
        throw ValidationError("state mix has the wrong number of states");
    }
    if ((mix.array() < 0.0).any() || std::abs(mix.sum() - 1.0) > 1e-9) {
        throw ValidationError("state mix must be a probability vector");
    }
    HealthExpectancy out;
    const Eigen::RowVectorXd total_years = za.colwise().sum();
    out.le = total_years.dot(mix);
    for (const auto j : healthy) {
        if (j < 0 || j >= za.rows()) {
            throw ValidationError("healthy state index out of range");
        }
        out.hle += za.row(j).dot(mix);
    }
    if (!(out.le > 0.0)) {
        throw DomainError("life expectancy is zero at age " + std::to_string(at_age));
    }
    out.uhle = out.le - out.hle;
    out.pct_healthy = 100.0 * out.hle / out.le;
    return out;
}

inline std::vector<Eigen::Index> healthy_states(HealthMeasure measure) {
    std::vector<Eigen::Index> out;
    for (std::size_t j = 0; j < healthy_state_count(measure); ++j) {
        out.push_back(static_cast<Eigen::Index>(j));
    }
    return out;
}

inline HealthExpectancy healthy_life_expectancy(const MatrixSchedule &matrices,
                                                HealthMeasure measure, int at_age,
                                                const Eigen::VectorXd &mix) {
    if (schedule_state_count(matrices) != static_cast<Eigen::Index>(living_state_count(measure))) {
        throw ValidationError("matrices do not match the " + std::string(to_string(measure)) +
                              " state count");
    }
    const auto healthy = healthy_states(measure);
    return healthy_life_expectancy(expected_years(matrices), healthy, at_age, mix);
}

/// Shifts le and hle by half a year, split in proportion to the healthy share.
inline HealthExpectancy with_half_year_correction(HealthExpectancy h) {
    const double share = h.le > 0.0 ? h.hle / h.le : 0.0;
    h.le += 0.5;
    h.hle += 0.5 * share;
    h.uhle = h.le - h.hle;
    return h;
}

/// Long format: age,destination_state,birth_state,value.
inline void write_tensor_csv(std::ostream &out, const std::vector<Eigen::MatrixXd> &tensor) {
    out.precision(17);
    out << "age,destination_state,birth_state,value\n";
    for (std::size_t a = 0; a < tensor.size(); ++a) {
        const auto &m = tensor[a];
        for (Eigen::Index k = 0; k < m.cols(); ++k) {
            for (Eigen::Index j = 0; j < m.rows(); ++j) {
                out << a << ',' << j << ',' << k << ',' << m(j, k) << '\n';
            }
        }
    }
}

} // namespace hle
