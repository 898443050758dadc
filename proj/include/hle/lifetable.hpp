#pragma once

#include "csv.hpp"
#include "errors.hpp"
#include "probit.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace hle {

/// Expected whole years lived beyond `from_age`: the sum of s_i / s_from over
/// i > from_age. `survival` is indexed by exact age, with survival[0] the
/// radix. The half-year correction adds 0.5 for the fraction of the year of
/// death, for comparison with official actuarial tables.
inline double life_expectancy_from_survival(std::span<const double> survival, int from_age,
                                            bool half_year_correction = false) {
    if (from_age < 0 || static_cast<std::size_t>(from_age) >= survival.size()) {
        throw DomainError("life expectancy: from_age " + std::to_string(from_age) +
                          " outside the survival curve");
    }
    const double base = survival[static_cast<std::size_t>(from_age)];
    if (!(base > 0.0)) {
        throw DomainError("life expectancy: nobody survives to age " + std::to_string(from_age));
    }
    double sum = 0.0;
    for (std::size_t i = static_cast<std::size_t>(from_age) + 1; i < survival.size(); ++i) {
        sum += survival[i];
    }
    return sum / base + (half_year_correction ? 0.5 : 0.0);
}

/// Exogenous survival proportions s*_i by exact age for one gender and year.
class LifeTable {
public:
    /// `survival[0]` is the proportion alive at `first_age`, which must be 0
    /// or 1. Values must be positive, at most 1 and non-increasing.
    LifeTable(int first_age, std::vector<double> survival, Gender gender = Gender::male,
              int base_year = 0)
        : first_age_{first_age}, survival_{std::move(survival)}, gender_{gender},
          base_year_{base_year} {
        if (first_age_ != 0 && first_age_ != 1) {
            throw ValidationError("life table must start at age 0 or 1, not " +
                                  std::to_string(first_age_));
        }
        if (survival_.empty()) {
            throw ValidationError("life table has no rows");
        }
        for (std::size_t i = 0; i < survival_.size(); ++i) {
            const double v = survival_[i];
            const int age = first_age_ + static_cast<int>(i);
            if (!std::isfinite(v) || v <= 0.0 || v > 1.0) {
                throw ValidationError("survival at age " + std::to_string(age) +
                                      " must lie in (0, 1]");
            }
            if (i > 0 && v > survival_[i - 1]) {
                throw ValidationError("non-monotone at age " + std::to_string(age));
            }
        }
    }

    int first_age() const noexcept { return first_age_; }
    int last_age() const noexcept { return first_age_ + static_cast<int>(survival_.size()) - 1; }
    Gender gender() const noexcept { return gender_; }
    int base_year() const noexcept { return base_year_; }
    const std::vector<double> &values() const noexcept { return survival_; }

    double survival_at(int age) const {
        if (age == 0 && first_age_ == 1) {
            return 1.0;
        }
        if (age < first_age_ || age > last_age()) {
            throw ValidationError("life table has no entry for age " + std::to_string(age));
        }
        return survival_[static_cast<std::size_t>(age - first_age_)];
    }

    /// Survival indexed by age from 0; age 0 is 1 when the file starts at 1.
    std::vector<double> survival_by_age() const {
        std::vector<double> out;
        out.reserve(static_cast<std::size_t>(last_age()) + 1);
        if (first_age_ == 1) {
            out.push_back(1.0);
        }
        out.insert(out.end(), survival_.begin(), survival_.end());
        return out;
    }

    /// s*_1 .. s*_horizon, the alignment target.
    Eigen::VectorXd target(int horizon) const {
        if (last_age() < horizon) {
            throw ValidationError("life table ends at age " + std::to_string(last_age()) +
                                  "; target needs ages 1.." + std::to_string(horizon));
        }
        Eigen::VectorXd s(horizon);
        for (int i = 1; i <= horizon; ++i) {
            s(i - 1) = survival_at(i);
        }
        return s;
    }

    double life_expectancy(int from_age, bool half_year_correction = false) const {
        const auto s = survival_by_age();
        return life_expectancy_from_survival(s, from_age, half_year_correction);
    }

    friend bool operator==(const LifeTable &, const LifeTable &) = default;

private:
    int first_age_;
    std::vector<double> survival_;
    Gender gender_;
    int base_year_;
};

namespace detail {

inline LifeTable table_from_rows(const csv::Table &t, const std::vector<std::size_t> &rows,
                                 std::size_t age_col, std::size_t value_col, bool is_qx,
                                 Gender gender, int year) {
    std::vector<int> ages;
    std::vector<double> values;
    for (const auto r : rows) {
        const auto line = t.line_numbers[r];
        ages.push_back(csv::to_int(t.rows[r][age_col], line));
        values.push_back(csv::to_double(t.rows[r][value_col], line));
    }
    for (std::size_t i = 1; i < ages.size(); ++i) {
        if (ages[i] != ages[i - 1] + 1) {
            throw ValidationError("missing age " + std::to_string(ages[i - 1] + 1) +
                                  " (ages must be consecutive)");
        }
    }
    if (!is_qx) {
        return LifeTable{ages.front(), std::move(values), gender, year};
    }
    if (ages.front() != 0) {
        throw ValidationError("qx table must start at age 0");
    }
    std::vector<double> survival;
    survival.reserve(values.size());
    double alive = 1.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double q = values[i];
        if (!(q >= 0.0 && q <= 1.0)) {
            throw ValidationError("qx at age " + std::to_string(ages[i]) + " must lie in [0, 1]");
        }
        alive *= 1.0 - q;
        survival.push_back(alive);
    }
    return LifeTable{1, std::move(survival), gender, year};
}

} // namespace detail

/// Reads one or more life tables from CSV with header `age,survival` or
/// `age,qx`, optionally preceded by a `year` column holding several tables.
inline std::vector<LifeTable> load_life_tables(std::istream &in, Gender gender = Gender::male,
                                               int default_year = 0) {
    const auto t = csv::read(in);
    const auto age_col = t.column("age");
    const auto surv_col = t.column("survival");
    const auto qx_col = t.column("qx");
    const auto year_col = t.column("year");
    if (!age_col) {
        throw ValidationError("life table needs an 'age' column");
    }
    if (surv_col && qx_col) {
        throw ValidationError("life table has both 'survival' and 'qx' columns");
    }
    if (!surv_col && !qx_col) {
        throw ValidationError("life table needs a 'survival' or 'qx' column");
    }
    if (t.rows.empty()) {
        throw ValidationError("life table has no rows");
    }

    std::map<int, std::vector<std::size_t>> by_year;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const int year = year_col ? csv::to_int(t.rows[r][*year_col], t.line_numbers[r])
                                  : default_year;
        by_year[year].push_back(r);
    }
    std::vector<LifeTable> out;
    for (const auto &[year, rows] : by_year) {
        try {
            out.push_back(detail::table_from_rows(t, rows, *age_col,
                                                  surv_col ? *surv_col : *qx_col,
                                                  qx_col.has_value(), gender, year));
        } catch (const ValidationError &e) {
            if (year_col) {
                throw ValidationError("year " + std::to_string(year) + ": " + e.what());
            }
            throw;
        }
    }
    return out;
}

inline LifeTable load_life_table(std::istream &in, Gender gender = Gender::male,
                                 int default_year = 0) {
    auto tables = load_life_tables(in, gender, default_year);
    if (tables.size() != 1) {
        throw ValidationError("expected one life table, found " + std::to_string(tables.size()));
    }
    return std::move(tables.front());
}

/// Writes `age,survival` rows with shortest round-trip formatting.
inline void write_life_table(std::ostream &out, const LifeTable &table) {
    out << "age,survival\n";
    for (int age = table.first_age(); age <= table.last_age(); ++age) {
        out << age << ',' << csv::format(table.survival_at(age)) << '\n';
    }
}

inline void write_life_tables(std::ostream &out, std::span<const LifeTable> tables) {
    out << "year,age,survival\n";
    for (const auto &table : tables) {
        for (int age = table.first_age(); age <= table.last_age(); ++age) {
            out << table.base_year() << ',' << age << ',' << csv::format(table.survival_at(age))
                << '\n';
        }
    }
}

} // namespace hle
