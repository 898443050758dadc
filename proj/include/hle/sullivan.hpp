#pragma once

#include "csv.hpp"
#include "errors.hpp"
#include "lifetable.hpp"

#include <algorithm>
#include <istream>
#include <span>
#include <string>
#include <vector>

namespace hle {

// Prevalence-based healthy life expectancy:
//   nLx    = e_x l_x - e_{x+n} l_{x+n}
//   nLWDx  = nLx (1 - nd_x)
//   HLE_x  = sum over groups from x upward of nLWDx, divided by l_x
//          = e_x - sum of (nLx - nLWDx) / l_x   (groups reach the table end)
// Ages past the end of the table have l = 0 and e = 0.

/// Survivors l_x and remaining life expectancy e_x by age.
class LifeTableSchedule {
public:
    LifeTableSchedule(std::vector<int> ages, std::vector<double> survivors,
                      std::vector<double> expectation)
        : ages_{std::move(ages)}, survivors_{std::move(survivors)},
          expectation_{std::move(expectation)} {
        if (ages_.empty() || ages_.size() != survivors_.size() ||
            ages_.size() != expectation_.size()) {
            throw ValidationError("life table schedule columns differ in length or are empty");
        }
        for (std::size_t i = 0; i < ages_.size(); ++i) {
            if (i > 0 && ages_[i] <= ages_[i - 1]) {
                throw ValidationError("schedule ages must increase");
            }
            if (!(survivors_[i] >= 0.0) || !(expectation_[i] >= 0.0)) {
                throw ValidationError("negative l_x or e_x at age " + std::to_string(ages_[i]));
            }
            if (i > 0 && survivors_[i] > survivors_[i - 1]) {
                throw ValidationError("l_x increases at age " + std::to_string(ages_[i]));
            }
        }
    }

    const std::vector<int> &ages() const noexcept { return ages_; }
    int last_age() const noexcept { return ages_.back(); }

    bool has_age(int age) const { return std::binary_search(ages_.begin(), ages_.end(), age); }

    /// l_x; zero beyond the end of the table.
    double survivors(int age) const { return lookup(age, survivors_); }
    /// e_x; zero beyond the end of the table.
    double expectation(int age) const { return lookup(age, expectation_); }

private:
    double lookup(int age, const std::vector<double> &col) const {
        if (age > last_age()) {
            return 0.0;
        }
        const auto it = std::lower_bound(ages_.begin(), ages_.end(), age);
        if (it == ages_.end() || *it != age) {
            throw ValidationError("life table schedule has no row for age " + std::to_string(age));
        }
        return col[static_cast<std::size_t>(it - ages_.begin())];
    }

    std::vector<int> ages_;
    std::vector<double> survivors_;
    std::vector<double> expectation_;
};

struct PrevalenceGroup {
    int age_from = 0;
    int age_to = 0; ///< exclusive
    double ill_health_rate = 0.0;
};

/// Ill-health proportions for contiguous, non-overlapping age groups.
class PrevalenceSchedule {
public:
    explicit PrevalenceSchedule(std::vector<PrevalenceGroup> groups) : groups_{std::move(groups)} {
        if (groups_.empty()) {
            throw ValidationError("prevalence schedule is empty");
        }
        std::sort(groups_.begin(), groups_.end(),
                  [](const auto &a, const auto &b) { return a.age_from < b.age_from; });
        for (std::size_t i = 0; i < groups_.size(); ++i) {
            const auto &g = groups_[i];
            if (g.age_to <= g.age_from) {
                throw ValidationError("empty prevalence group starting at " +
                                      std::to_string(g.age_from));
            }
            if (!(g.ill_health_rate >= 0.0 && g.ill_health_rate <= 1.0)) {
                throw ValidationError("ill-health rate for group starting at " +
                                      std::to_string(g.age_from) + " must lie in [0, 1]");
            }
            if (i > 0 && g.age_from != groups_[i - 1].age_to) {
                throw ValidationError("prevalence groups overlap or leave a gap at age " +
                                      std::to_string(groups_[i - 1].age_to));
            }
        }
    }

    const std::vector<PrevalenceGroup> &groups() const noexcept { return groups_; }

private:
    std::vector<PrevalenceGroup> groups_;
};

inline double person_years(double l_x, double e_x, double l_xn, double e_xn) {
    const double years = e_x * l_x - e_xn * l_xn;
    if (years < 0.0) {
        throw ValidationError("inconsistent schedule: negative person-years");
    }
    return years;
}

inline double person_years(const LifeTableSchedule &schedule, int x, int n) {
    return person_years(schedule.survivors(x), schedule.expectation(x), schedule.survivors(x + n),
                        schedule.expectation(x + n));
}

inline double healthy_person_years(double person_years, double ill_health_rate) {
    return person_years * (1.0 - ill_health_rate);
}

/// Healthy years from `from_age`. The groups must run to the end of the
/// table, so their person-years telescope to e_x l_x and the healthy share
/// is computed as e_x minus the unhealthy years; zero prevalence then gives
/// e_x exactly.
inline double sullivan_hle(const LifeTableSchedule &schedule, const PrevalenceSchedule &prevalence,
                           int from_age) {
    const auto &groups = prevalence.groups();
    const auto first = std::find_if(groups.begin(), groups.end(),
                                    [&](const auto &g) { return g.age_from == from_age; });
    if (first == groups.end()) {
        throw ValidationError("no prevalence group starts at age " + std::to_string(from_age));
    }
    if (schedule.survivors(groups.back().age_to) > 0.0) {
        throw ValidationError("prevalence groups end at age " +
                              std::to_string(groups.back().age_to) +
                              " but the life table has survivors beyond it");
    }
    const double l_from = schedule.survivors(from_age);
    if (!(l_from > 0.0)) {
        throw DomainError("l_x is zero at age " + std::to_string(from_age));
    }
    double unhealthy = 0.0;
    for (auto it = first; it != groups.end(); ++it) {
        const double years = person_years(schedule, it->age_from, it->age_to - it->age_from);
        unhealthy += years - healthy_person_years(years, it->ill_health_rate);
    }
    return std::max(0.0, schedule.expectation(from_age) - unhealthy / l_from);
}

/// l_x = radix * s_x and e_x = sum_{i>x} s_i / s_x, for s indexed by age from 0.
inline LifeTableSchedule schedule_from_survival(std::span<const double> survival,
                                                double radix = 100000.0) {
    std::vector<int> ages;
    std::vector<double> l, e;
    for (std::size_t i = 0; i < survival.size(); ++i) {
        ages.push_back(static_cast<int>(i));
        l.push_back(radix * survival[i]);
        // Same summation as LifeTable::life_expectancy so the two agree bit for bit.
        e.push_back(survival[i] > 0.0 ? life_expectancy_from_survival(survival, static_cast<int>(i))
                                      : 0.0);
    }
    return {std::move(ages), std::move(l), std::move(e)};
}

/// CSV with header `age,lx,ex`.
inline LifeTableSchedule load_life_table_schedule(std::istream &in) {
    const auto t = csv::read(in);
    const auto age = t.column("age");
    const auto lx = t.column("lx");
    const auto ex = t.column("ex");
    if (!age || !lx || !ex) {
        throw ValidationError("life table schedule needs columns age,lx,ex");
    }
    std::vector<int> ages;
    std::vector<double> l, e;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_numbers[r];
        ages.push_back(csv::to_int(t.rows[r][*age], line));
        l.push_back(csv::to_double(t.rows[r][*lx], line));
        e.push_back(csv::to_double(t.rows[r][*ex], line));
    }
    return {std::move(ages), std::move(l), std::move(e)};
}

/// CSV with header `age_from,age_to,ill_health_rate`; age_to is exclusive.
inline PrevalenceSchedule load_prevalence(std::istream &in) {
    const auto t = csv::read(in);
    const auto from = t.column("age_from");
    const auto to = t.column("age_to");
    const auto rate = t.column("ill_health_rate");
    if (!from || !to || !rate) {
        throw ValidationError("prevalence file needs columns age_from,age_to,ill_health_rate");
    }
    std::vector<PrevalenceGroup> groups;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto line = t.line_numbers[r];
        groups.push_back({csv::to_int(t.rows[r][*from], line), csv::to_int(t.rows[r][*to], line),
                          csv::to_double(t.rows[r][*rate], line)});
    }
    return PrevalenceSchedule{std::move(groups)};
}

} // namespace hle
