#pragma once

#include "errors.hpp"
#include "lifetable.hpp"
#include "multistate.hpp"
#include "probit.hpp"

#include <Eigen/Dense>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace hle {

// Joint least-squares adjustment of a transition matrix schedule so that the
// survival curve it implies equals an exogenous life table.
//
// All matrices are flattened into one stacked vector n (age-major, then
// column, then row). With V = diag(n0^2) frozen at the starting point, each
// step solves the linearised problem
//
//   min 1/2 (D + dn)' V^-1 (D + dn)   s.t.  S (D + dn) = S D + s* - s(n)
//
// where D is the accumulated change from n0 and S = ds/dn at the current
// iterate, giving
//
//   dn = V S' (S V S')^-1 (S D + s* - s(n)) - D.
//
// Entries that are zero in n0 have zero weight and never move.

struct AlignmentOptions {
    /// Bound on max |s*_i - s_i| at convergence; also scales the step test.
    double tolerance = 1e-9;
    int max_iterations = 100;
    /// Fraction of each step applied, in (0, 1].
    double damping = 1.0;
    /// Use a minimum-norm solve instead of failing on a singular S V S'.
    bool allow_rank_deficient = false;
    /// Rounds of clamp-and-rerun allowed before giving up.
    int max_clamp_rounds = 10;
};

struct AlignmentReport {
    int iterations = 0;
    double final_residual = 0.0;
    double objective = 0.0;
    int clamped_entries = 0;
    bool converged = false;
};

inline void to_json(nlohmann::json &j, const AlignmentReport &r) {
    j = nlohmann::json{{"iterations", r.iterations},
                       {"final_residual", r.final_residual},
                       {"objective", r.objective},
                       {"clamped_entries", r.clamped_entries},
                       {"converged", r.converged}};
}

struct AlignmentResult {
    MatrixSchedule matrices;
    AlignmentReport report;
};

/// Position of entry (row, column) of the age-`age` matrix in the stacked vector.
inline Eigen::Index stacked_index(Eigen::Index age, Eigen::Index column, Eigen::Index row,
                                  Eigen::Index states) {
    return age * states * states + column * states + row;
}

inline Eigen::VectorXd stack(const MatrixSchedule &matrices) {
    const auto s = schedule_state_count(matrices);
    const auto block = s * s;
    Eigen::VectorXd n(static_cast<Eigen::Index>(matrices.size()) * block);
    for (std::size_t a = 0; a < matrices.size(); ++a) {
        // Eigen storage is column-major, which is exactly the block layout.
        n.segment(static_cast<Eigen::Index>(a) * block, block) =
            Eigen::Map<const Eigen::VectorXd>(matrices[a].data(), block);
    }
    return n;
}

inline MatrixSchedule unstack(const Eigen::VectorXd &n, Eigen::Index states) {
    const auto block = states * states;
    if (states <= 0 || n.size() == 0 || n.size() % block != 0) {
        throw ValidationError("stacked vector length " + std::to_string(n.size()) +
                              " is not a multiple of " + std::to_string(block));
    }
    MatrixSchedule out;
    out.reserve(static_cast<std::size_t>(n.size() / block));
    for (Eigen::Index off = 0; off < n.size(); off += block) {
        out.emplace_back(Eigen::Map<const Eigen::MatrixXd>(n.data() + off, states, states));
    }
    return out;
}

/// s_1 .. s_L for the stacked vector n.
inline Eigen::VectorXd survival_constraints(const Eigen::VectorXd &n, Eigen::Index states,
                                            const CohortVector &x0) {
    const auto s = survival_curve(unstack(n, states), x0);
    return Eigen::Map<const Eigen::VectorXd>(s.data() + 1, static_cast<Eigen::Index>(s.size()) - 1);
}

/// Analytic ds_i/dn_j, shape L x len(n). For the entry (r, q) of M_a and a < i:
///   ds_i/d(M_a)_{rq} = [1' M_{i-1} ... M_{a+1}]_r [M_{a-1} ... M_0 x0]_q / 1'x0
/// and zero for a >= i.
inline Eigen::MatrixXd survival_jacobian(const Eigen::VectorXd &n, Eigen::Index states,
                                         const CohortVector &x0) {
    const auto matrices = unstack(n, states);
    detail::check_cohort(matrices, x0);
    const auto horizon = static_cast<Eigen::Index>(matrices.size());
    const double total = x0.sum();

    // forward[a] = M_{a-1} ... M_0 x0 / 1'x0
    std::vector<Eigen::VectorXd> forward;
    forward.reserve(matrices.size());
    forward.push_back(x0 / total);
    for (Eigen::Index a = 0; a + 1 < horizon; ++a) {
        forward.push_back(matrices[static_cast<std::size_t>(a)] * forward.back());
    }

    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(horizon, n.size());
    for (Eigen::Index i = 1; i <= horizon; ++i) {
        Eigen::RowVectorXd suffix = Eigen::RowVectorXd::Ones(states);
        for (Eigen::Index a = i - 1; a >= 0; --a) {
            const auto &fa = forward[static_cast<std::size_t>(a)];
            for (Eigen::Index q = 0; q < states; ++q) {
                for (Eigen::Index r = 0; r < states; ++r) {
                    jac(i - 1, stacked_index(a, q, r, states)) = suffix(r) * fa(q);
                }
            }
            suffix = suffix * matrices[static_cast<std::size_t>(a)];
        }
    }
    return jac;
}

/// 1/2 dn' V^-1 dn over the entries with positive weight.
inline double weighted_objective(const Eigen::VectorXd &dn, const Eigen::VectorXd &weights) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < dn.size(); ++i) {
        if (weights(i) > 0.0) {
            sum += dn(i) * dn(i) / weights(i);
        }
    }
    return 0.5 * sum;
}

/// V_ii = n0_i^2.
inline Eigen::VectorXd alignment_weights(const Eigen::VectorXd &n0) {
    return n0.array().square().matrix();
}

namespace detail {

inline constexpr double kPivotThreshold = 1e-12;

/// Solves W x = rhs for symmetric positive semi-definite W by Cholesky, or by
/// a minimum-norm complete orthogonal decomposition when allowed. Row k of W
/// is the constraint on survival to age k+1. Pivots are judged against their
/// own diagonal, since survival (and with it the row scale) decays with age.
inline Eigen::VectorXd solve_constraint_system(const Eigen::MatrixXd &w, const Eigen::VectorXd &rhs,
                                               bool allow_rank_deficient) {
    const auto m = w.rows();
    if (allow_rank_deficient) {
        const Eigen::VectorXd d = w.diagonal().unaryExpr(
            [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; });
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(d.asDiagonal() * w * d.asDiagonal());
        cod.setThreshold(kPivotThreshold);
        return d.asDiagonal() * cod.solve(d.asDiagonal() * rhs);
    }
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const double pivot = w(k, k) - l.row(k).head(k).squaredNorm();
        if (!(w(k, k) > 0.0) || !(pivot > kPivotThreshold * w(k, k))) {
            throw SingularSystemError(
                static_cast<int>(k) + 1,
                "constraint system is rank deficient at the survival constraint for age " +
                    std::to_string(k + 1) +
                    " (the target is structurally unreachable from the starting matrices)");
        }
        l(k, k) = std::sqrt(pivot);
        for (Eigen::Index i = k + 1; i < m; ++i) {
            l(i, k) = (w(i, k) - l.row(i).head(k).dot(l.row(k).head(k))) / l(k, k);
        }
    }
    const Eigen::VectorXd y = l.triangularView<Eigen::Lower>().solve(rhs);
    return l.transpose().triangularView<Eigen::Upper>().solve(y);
}

inline void check_target(const Eigen::VectorXd &target, Eigen::Index horizon) {
    if (target.size() != horizon) {
        throw ValidationError("target has " + std::to_string(target.size()) +
                              " survival values, schedule covers " + std::to_string(horizon) +
                              " ages");
    }
    for (Eigen::Index i = 0; i < horizon; ++i) {
        const double v = target(i);
        if (!std::isfinite(v) || v <= 0.0 || v > 1.0) {
            throw ValidationError("target survival at age " + std::to_string(i + 1) +
                                  " must lie in (0, 1]");
        }
        if (i > 0 && v > target(i - 1)) {
            throw ValidationError("target survival increases at age " + std::to_string(i + 1) +
                                  "; no sub-stochastic schedule can reach it");
        }
    }
}

inline constexpr double kColumnSlack = 1e-12;

inline void check_schedule_probabilities(const MatrixSchedule &matrices) {
    for (std::size_t a = 0; a < matrices.size(); ++a) {
        const auto &m = matrices[a];
        if (!m.allFinite() || (m.array() < 0.0).any() || (m.array() > 1.0).any() ||
            (m.colwise().sum().array() > 1.0 + kColumnSlack).any()) {
            throw ValidationError("transition matrix at age " + std::to_string(a) +
                                  " is not sub-stochastic");
        }
    }
}

/// Pulls every infeasible entry or column back to the boundary and freezes
/// it. Returns the number of entries changed.
inline int clamp_to_feasible(Eigen::VectorXd &n, std::vector<bool> &frozen, Eigen::Index states) {
    int clamped = 0;
    for (Eigen::Index off = 0; off < n.size(); off += states) {
        for (Eigen::Index r = 0; r < states; ++r) {
            double &v = n(off + r);
            if (v < 0.0 || v > 1.0) {
                v = std::clamp(v, 0.0, 1.0);
                frozen[static_cast<std::size_t>(off + r)] = true;
                ++clamped;
            }
        }
        const double sum = n.segment(off, states).sum();
        if (sum > 1.0 + kColumnSlack) {
            n.segment(off, states) /= sum;
            for (Eigen::Index r = 0; r < states; ++r) {
                if (!frozen[static_cast<std::size_t>(off + r)]) {
                    frozen[static_cast<std::size_t>(off + r)] = true;
                    ++clamped;
                }
            }
        }
    }
    return clamped;
}

} // namespace detail

/// Adjusts `matrices0` so that the survival curve of cohort x0 matches
/// `target` (s*_1 .. s*_L). Returns the best iterate with converged = false
/// when the iteration limit is reached.
inline AlignmentResult align(const MatrixSchedule &matrices0, const CohortVector &x0,
                             const Eigen::VectorXd &target, const AlignmentOptions &options = {}) {
    const auto states = schedule_state_count(matrices0);
    const auto horizon = static_cast<Eigen::Index>(matrices0.size());
    detail::check_cohort(matrices0, x0);
    detail::check_schedule_probabilities(matrices0);
    detail::check_target(target, horizon);
    if (!(options.damping > 0.0 && options.damping <= 1.0)) {
        throw ValidationError("damping must lie in (0, 1]");
    }
    if (!(options.tolerance > 0.0) || options.max_iterations < 1) {
        throw ValidationError("tolerance must be positive and max_iterations at least 1");
    }

    const Eigen::VectorXd n0 = stack(matrices0);
    const Eigen::VectorXd weights = alignment_weights(n0);
    const double step_tolerance = options.tolerance * std::max(1.0, n0.lpNorm<Eigen::Infinity>());
    std::vector<bool> frozen(static_cast<std::size_t>(n0.size()), false);

    Eigen::VectorXd n = n0;
    AlignmentReport report;
    Eigen::VectorXd best = n0;
    double best_residual = std::numeric_limits<double>::infinity();

    for (int round = 0;; ++round) {
        Eigen::VectorXd free_weights = weights;
        for (Eigen::Index i = 0; i < n.size(); ++i) {
            if (frozen[static_cast<std::size_t>(i)]) {
                free_weights(i) = 0.0;
            }
        }

        bool converged = false;
        for (int it = 0; it < options.max_iterations; ++it) {
            ++report.iterations;
            const Eigen::VectorXd residual = target - survival_constraints(n, states, x0);
            const double max_residual = residual.lpNorm<Eigen::Infinity>();
            if (max_residual < best_residual) {
                best_residual = max_residual;
                best = n;
            }

            const Eigen::MatrixXd jac = survival_jacobian(n, states, x0);
            Eigen::VectorXd moved = n - n0;
            for (Eigen::Index i = 0; i < n.size(); ++i) {
                if (free_weights(i) == 0.0) {
                    moved(i) = 0.0;
                }
            }
            const Eigen::MatrixXd weighted_jac = jac * free_weights.asDiagonal();
            const Eigen::MatrixXd system = weighted_jac * jac.transpose();
            const Eigen::VectorXd rhs = jac * moved + residual;
            const Eigen::VectorXd lambda =
                detail::solve_constraint_system(system, rhs, options.allow_rank_deficient);
            const Eigen::VectorXd step = weighted_jac.transpose() * lambda - moved;

            if (max_residual <= options.tolerance &&
                step.lpNorm<Eigen::Infinity>() <= step_tolerance) {
                converged = true;
                break;
            }
            n += options.damping * step;
        }

        if (!converged) {
            // One more evaluation so the final step is not wasted.
            const double last = (target - survival_constraints(n, states, x0)).lpNorm<Eigen::Infinity>();
            if (last < best_residual) {
                best_residual = last;
                best = n;
            }
            n = best;
            break;
        }

        const int clamped = detail::clamp_to_feasible(n, frozen, states);
        if (clamped == 0) {
            report.converged = true;
            break;
        }
        report.clamped_entries += clamped;
        if (round + 1 > options.max_clamp_rounds) {
            throw AlignmentError("aligned matrices left the probability simplex after " +
                                 std::to_string(options.max_clamp_rounds) +
                                 " clamp-and-rerun rounds; the target is not reachable "
                                 "with valid transition probabilities");
        }
        best_residual = std::numeric_limits<double>::infinity();
    }

    report.final_residual = (target - survival_constraints(n, states, x0)).lpNorm<Eigen::Infinity>();
    report.objective = weighted_objective(n - n0, weights);
    if (report.converged && report.final_residual > options.tolerance) {
        report.converged = false;
    }
    return {unstack(n, states), report};
}

inline AlignmentResult align(const MatrixSchedule &matrices0, const CohortVector &x0,
                             const LifeTable &target, const AlignmentOptions &options = {}) {
    return align(matrices0, x0, target.target(static_cast<int>(matrices0.size())), options);
}

/// First-order optimality check: the relative V-norm of the part of
/// V^-1 (n - n0) outside the row space of S at n, over the free entries.
/// Zero at an exact constrained optimum.
inline double stationarity_residual(const Eigen::VectorXd &n0, const Eigen::VectorXd &n,
                                    Eigen::Index states, const CohortVector &x0) {
    const Eigen::VectorXd weights = alignment_weights(n0);
    const Eigen::VectorXd dn = n - n0;
    const Eigen::MatrixXd jac = survival_jacobian(n, states, x0);
    const Eigen::MatrixXd weighted_jac = jac * weights.asDiagonal();
    const Eigen::VectorXd lambda =
        detail::solve_constraint_system(weighted_jac * jac.transpose(), jac * dn, true);
    const Eigen::VectorXd off = dn - weighted_jac.transpose() * lambda;
    const double norm_dn = std::sqrt(2.0 * weighted_objective(dn, weights));
    const double norm_off = std::sqrt(2.0 * weighted_objective(off, weights));
    return norm_dn > 0.0 ? norm_off / norm_dn : norm_off;
}

} // namespace hle
