#pragma once

#include "errors.hpp"
#include "multistate.hpp"
#include "probit.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace hle {

/// xoshiro256** seeded through splitmix64.
class Xoshiro256StarStar {
public:
    static constexpr const char *algorithm = "xoshiro256**/splitmix64";

    explicit Xoshiro256StarStar(std::uint64_t seed) noexcept {
        for (auto &word : state_) {
            word = splitmix64(seed);
        }
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() noexcept {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    static std::uint64_t splitmix64(std::uint64_t &x) noexcept {
        std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

/// Independent stream for one agent; depends only on (seed, agent).
inline Xoshiro256StarStar agent_stream(std::uint64_t seed, std::uint64_t agent) noexcept {
    std::uint64_t mixer = seed;
    const std::uint64_t base = Xoshiro256StarStar::splitmix64(mixer);
    return Xoshiro256StarStar{base ^ (agent * 0xD1B54A32D192ED03ULL)};
}

struct SimulationConfig {
    std::uint64_t agents = 1'000'000;
    std::uint64_t seed = 1;
    std::string measure; ///< label only
    std::string gender;  ///< label only
    MatrixSchedule matrices;
    Eigen::VectorXd birth_mix;
    std::vector<Eigen::Index> healthy;
    int hle_age = 65;
    unsigned threads = 0; ///< 0 = hardware concurrency
};

struct SimulationResult {
    std::string rng = Xoshiro256StarStar::algorithm;
    std::uint64_t seed = 0;
    std::uint64_t agents = 0;
    /// By exact age 0..L.
    std::vector<double> survival;
    std::vector<double> survival_se;
    /// (j, k): mean birthdays 1..L reached in state j for agents born in k.
    Eigen::MatrixXd state_years;
    Eigen::MatrixXd state_years_se;
    std::vector<std::uint64_t> birth_counts;
    int hle_age = 0;
    std::uint64_t alive_at_hle_age = 0;
    double le_mean = 0.0;
    double le_se = 0.0;
    double hle_mean = 0.0;
    double hle_se = 0.0;
};

namespace detail {

struct SimTally {
    std::vector<std::uint64_t> alive;   // by age
    std::vector<std::uint64_t> years;   // (j, k) flattened j + S k
    std::vector<std::uint64_t> years_sq;
    std::vector<std::uint64_t> births;
    std::uint64_t at_hle = 0, le_sum = 0, le_sq = 0, hle_sum = 0, hle_sq = 0;

    SimTally(std::size_t horizon, std::size_t states)
        : alive(horizon + 1, 0), years(states * states, 0), years_sq(states * states, 0),
          births(states, 0) {}

    void merge(const SimTally &o) {
        for (std::size_t i = 0; i < alive.size(); ++i) alive[i] += o.alive[i];
        for (std::size_t i = 0; i < years.size(); ++i) {
            years[i] += o.years[i];
            years_sq[i] += o.years_sq[i];
        }
        for (std::size_t i = 0; i < births.size(); ++i) births[i] += o.births[i];
        at_hle += o.at_hle;
        le_sum += o.le_sum;
        le_sq += o.le_sq;
        hle_sum += o.hle_sum;
        hle_sq += o.hle_sq;
    }
};

/// Inverse-CDF draw; u <= cum picks the lower index on ties. Returns
/// cum.size() for the final (death) bucket.
inline std::size_t draw(std::span<const double> cum, double u) noexcept {
    for (std::size_t j = 0; j < cum.size(); ++j) {
        if (u <= cum[j]) {
            return j;
        }
    }
    return cum.size();
}

inline double mean_se(double sum, double sum_sq, double n) {
    if (n < 2.0) {
        return 0.0;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    return std::sqrt(var / n);
}

} // namespace detail

/// Simulates individual lifetimes under the schedule. Each agent draws its
/// state at age a+1 from column (current state) of M_a, death absorbing, and
/// is credited one year in state j for each later birthday reached in j.
/// Results depend only on the config, not on the thread count.
inline SimulationResult simulate(const SimulationConfig &config) {
    const auto states = schedule_state_count(config.matrices);
    const auto s = static_cast<std::size_t>(states);
    const auto horizon = config.matrices.size();
    if (config.agents < 1) {
        throw ValidationError("simulation needs at least one agent");
    }
    if (config.birth_mix.size() != states || (config.birth_mix.array() < 0.0).any() ||
        std::abs(config.birth_mix.sum() - 1.0) > 1e-9) {
        throw ValidationError("birth mix must be a probability vector over the living states");
    }
    if (config.hle_age < 0 || static_cast<std::size_t>(config.hle_age) > horizon) {
        throw ValidationError("hle_age outside the schedule");
    }
    std::vector<bool> healthy(s, false);
    for (const auto j : config.healthy) {
        if (j < 0 || j >= states) {
            throw ValidationError("healthy state index out of range");
        }
        healthy[static_cast<std::size_t>(j)] = true;
    }

    // cum[(a * S + k) * S + j] = P(next state <= j | state k at age a)
    std::vector<double> cum(horizon * s * s);
    for (std::size_t a = 0; a < horizon; ++a) {
        for (std::size_t k = 0; k < s; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < s; ++j) {
                acc += config.matrices[a](static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
                cum[(a * s + k) * s + j] = acc;
            }
        }
    }
    std::vector<double> birth_cum(s);
    {
        double acc = 0.0;
        for (std::size_t k = 0; k < s; ++k) {
            acc += config.birth_mix(static_cast<Eigen::Index>(k));
            birth_cum[k] = acc;
        }
        birth_cum[s - 1] = 1.0;
    }

    const std::uint64_t hle_age = static_cast<std::uint64_t>(config.hle_age);
    auto run_range = [&](std::uint64_t begin, std::uint64_t end, detail::SimTally &tally) {
        std::vector<std::uint64_t> years(s);
        for (std::uint64_t agent = begin; agent < end; ++agent) {
            auto rng = agent_stream(config.seed, agent);
            const std::size_t born = detail::draw(birth_cum, rng.uniform());
            std::size_t state = born;
            std::fill(years.begin(), years.end(), 0);
            std::uint64_t after = 0, healthy_after = 0;
            bool reached_hle_age = hle_age == 0;
            ++tally.alive[0];
            ++tally.births[born];
            for (std::size_t a = 0; a < horizon; ++a) {
                const std::span<const double> column(&cum[(a * s + state) * s], s);
                const std::size_t next = detail::draw(column, rng.uniform());
                if (next == s) {
                    break;
                }
                state = next;
                ++tally.alive[a + 1];
                ++years[state];
                if (a + 1 == hle_age) {
                    reached_hle_age = true;
                } else if (reached_hle_age) {
                    ++after;
                    healthy_after += healthy[state] ? 1 : 0;
                }
            }
            for (std::size_t j = 0; j < s; ++j) {
                tally.years[j + s * born] += years[j];
                tally.years_sq[j + s * born] += years[j] * years[j];
            }
            if (reached_hle_age) {
                ++tally.at_hle;
                tally.le_sum += after;
                tally.le_sq += after * after;
                tally.hle_sum += healthy_after;
                tally.hle_sq += healthy_after * healthy_after;
            }
        }
    };

    unsigned threads = config.threads ? config.threads : std::thread::hardware_concurrency();
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(
                                                           std::min<std::uint64_t>(config.agents, 64))));
    std::vector<detail::SimTally> tallies(threads, detail::SimTally(horizon, s));
    {
        std::vector<std::jthread> workers;
        const std::uint64_t chunk = (config.agents + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::uint64_t begin = std::min(config.agents, t * chunk);
            const std::uint64_t end = std::min(config.agents, begin + chunk);
            workers.emplace_back([&, begin, end, t] { run_range(begin, end, tallies[t]); });
        }
    }
    detail::SimTally total(horizon, s);
    for (const auto &t : tallies) {
        total.merge(t);
    }

    SimulationResult out;
    out.seed = config.seed;
    out.agents = config.agents;
    const auto n = static_cast<double>(config.agents);
    for (std::size_t a = 0; a <= horizon; ++a) {
        const double p = static_cast<double>(total.alive[a]) / n;
        out.survival.push_back(p);
        out.survival_se.push_back(std::sqrt(p * (1.0 - p) / n));
    }
    out.birth_counts = total.births;
    out.state_years = Eigen::MatrixXd::Zero(states, states);
    out.state_years_se = Eigen::MatrixXd::Zero(states, states);
    for (std::size_t k = 0; k < s; ++k) {
        const auto nk = static_cast<double>(total.births[k]);
        for (std::size_t j = 0; j < s && nk > 0; ++j) {
            const auto sum = static_cast<double>(total.years[j + s * k]);
            const auto sq = static_cast<double>(total.years_sq[j + s * k]);
            out.state_years(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = sum / nk;
            out.state_years_se(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                detail::mean_se(sum, sq, nk);
        }
    }
    out.hle_age = config.hle_age;
    out.alive_at_hle_age = total.at_hle;
    if (total.at_hle > 0) {
        const auto m = static_cast<double>(total.at_hle);
        out.le_mean = static_cast<double>(total.le_sum) / m;
        out.hle_mean = static_cast<double>(total.hle_sum) / m;
        out.le_se = detail::mean_se(static_cast<double>(total.le_sum),
                                    static_cast<double>(total.le_sq), m);
        out.hle_se = detail::mean_se(static_cast<double>(total.hle_sum),
                                     static_cast<double>(total.hle_sq), m);
    }
    return out;
}

struct OracleCheck {
    std::string quantity;
    double analytic = 0.0;
    double empirical = 0.0;
    double standard_error = 0.0;
    bool pass = false;
};

/// Compares the simulation with the analytic recursions: survival at
/// `survival_ages`, le and hle at the config's hle_age, and every expected
/// state-years entry Z[0](j, k) for birth states that occurred. A check
/// passes when |analytic - empirical| <= z * SE.
inline std::vector<OracleCheck> compare_with_analytic(const SimulationConfig &config,
                                                      const SimulationResult &result,
                                                      std::span<const int> survival_ages,
                                                      double z = 3.0) {
    std::vector<OracleCheck> checks;
    const auto within = [z](double a, double e, double se) {
        return std::abs(a - e) <= z * se + 1e-12;
    };
    const auto analytic_survival = survival_curve(config.matrices, config.birth_mix);
    for (const int age : survival_ages) {
        if (age < 0 || static_cast<std::size_t>(age) >= analytic_survival.size()) {
            throw ValidationError("survival check age out of range");
        }
        const auto i = static_cast<std::size_t>(age);
        checks.push_back({"survival@" + std::to_string(age), analytic_survival[i],
                          result.survival[i], result.survival_se[i],
                          within(analytic_survival[i], result.survival[i], result.survival_se[i])});
    }

    const auto z_tensor = expected_years(config.matrices);
    if (result.alive_at_hle_age > 1) {
        const auto mix = state_mix_at_age(config.matrices, config.birth_mix, config.hle_age);
        const auto h = healthy_life_expectancy(z_tensor, config.healthy, config.hle_age, mix);
        const auto tag = std::to_string(config.hle_age);
        checks.push_back({"le@" + tag, h.le, result.le_mean, result.le_se,
                          within(h.le, result.le_mean, result.le_se)});
        checks.push_back({"hle@" + tag, h.hle, result.hle_mean, result.hle_se,
                          within(h.hle, result.hle_mean, result.hle_se)});
    }

    const auto &z0 = z_tensor.front();
    for (Eigen::Index k = 0; k < z0.cols(); ++k) {
        if (result.birth_counts[static_cast<std::size_t>(k)] < 2) {
            continue;
        }
        for (Eigen::Index j = 0; j < z0.rows(); ++j) {
            const double a = z0(j, k);
            const double e = result.state_years(j, k);
            const double se = result.state_years_se(j, k);
            checks.push_back({"Z[0](" + std::to_string(j) + "," + std::to_string(k) + ")", a, e,
                              se, within(a, e, se)});
        }
    }
    return checks;
}

inline nlohmann::json to_json(const SimulationResult &r, std::span<const OracleCheck> checks) {
    nlohmann::json doc;
    doc["rng"] = r.rng;
    doc["seed"] = r.seed;
    doc["agents"] = r.agents;
    doc["survival"] = r.survival;
    doc["survival_se"] = r.survival_se;
    const auto matrix = [](const Eigen::MatrixXd &m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.rows(); ++j) {
            std::vector<double> row(static_cast<std::size_t>(m.cols()));
            for (Eigen::Index k = 0; k < m.cols(); ++k) {
                row[static_cast<std::size_t>(k)] = m(j, k);
            }
            rows.push_back(row);
        }
        return rows;
    };
    doc["state_years"] = matrix(r.state_years);
    doc["state_years_se"] = matrix(r.state_years_se);
    doc["birth_counts"] = r.birth_counts;
    doc["hle_age"] = r.hle_age;
    doc["alive_at_hle_age"] = r.alive_at_hle_age;
    doc["le_mean"] = r.le_mean;
    doc["le_se"] = r.le_se;
    doc["hle_mean"] = r.hle_mean;
    doc["hle_se"] = r.hle_se;
    nlohmann::json list = nlohmann::json::array();
    bool all = true;
    for (const auto &c : checks) {
        list.push_back({{"quantity", c.quantity},
                        {"analytic", c.analytic},
                        {"empirical", c.empirical},
                        {"standard_error", c.standard_error},
                        {"pass", c.pass}});
        all = all && c.pass;
    }
    doc["checks"] = list;
    doc["all_pass"] = all;
    return doc;
}

} // namespace hle
