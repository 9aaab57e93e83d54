// lp.hpp
// Small dense linear-program solver: two-phase primal simplex with Bland's
// rule. Sized for the decoy-state yield programs (tens of variables and
// constraints), not for anything large.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace tqkd::lp {

enum class Sense { LessEq, GreaterEq, Eq };

struct Constraint {
    std::vector<double> coeffs;  // one per variable
    Sense sense = Sense::LessEq;
    double rhs = 0.0;
};

enum class Status { Optimal, Infeasible, Unbounded };

struct Solution {
    Status status = Status::Infeasible;
    double objective = 0.0;
    std::vector<double> x;
};

// Variables are implicitly bounded below by zero; put upper bounds in as
// explicit rows. `maximize` flips the objective sign.
class Problem {
  public:
    explicit Problem(std::size_t n_vars) : n_(n_vars) {}

    void add_constraint(std::vector<double> coeffs, Sense sense, double rhs) {
        if (coeffs.size() != n_) throw std::invalid_argument("lp: coefficient count mismatch");
        rows_.push_back({std::move(coeffs), sense, rhs});
    }

    Solution solve(const std::vector<double>& objective, bool maximize) const {
        if (objective.size() != n_) throw std::invalid_argument("lp: objective size mismatch");

        // Normalize every row to rhs >= 0 and expand into standard form with
        // slack/surplus columns; rows then get artificial columns where the
        // slack cannot serve as an initial basis.
        const std::size_t m = rows_.size();
        std::vector<std::vector<double>> A(m);
        std::vector<double> b(m);
        std::size_t n_slack = 0;
        for (const auto& r : rows_)
            if (r.sense != Sense::Eq) ++n_slack;

        std::vector<std::size_t> slack_col(m, SIZE_MAX);
        std::size_t next_slack = n_;
        std::size_t n_art = 0;
        std::vector<std::size_t> art_col(m, SIZE_MAX);

        for (std::size_t i = 0; i < m; ++i) {
            auto row = rows_[i].coeffs;
            double rhs = rows_[i].rhs;
            Sense sense = rows_[i].sense;
            if (rhs < 0.0) {
                for (auto& v : row) v = -v;
                rhs = -rhs;
                if (sense == Sense::LessEq) sense = Sense::GreaterEq;
                else if (sense == Sense::GreaterEq) sense = Sense::LessEq;
            }
            A[i] = std::move(row);
            b[i] = rhs;
            if (sense == Sense::LessEq) {
                slack_col[i] = next_slack++;
            } else if (sense == Sense::GreaterEq) {
                slack_col[i] = next_slack++;  // surplus, coefficient -1, needs artificial
                art_col[i] = 0;               // marker, assigned below
                ++n_art;
            } else {
                art_col[i] = 0;
                ++n_art;
            }
        }

        const std::size_t total = n_ + n_slack + n_art;
        std::size_t next_art = n_ + n_slack;
        std::vector<std::vector<double>> T(m, std::vector<double>(total + 1, 0.0));
        std::vector<std::size_t> basis(m);

        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < n_; ++j) T[i][j] = A[i][j];
            const Sense sense = effective_sense(i);
            if (slack_col[i] != SIZE_MAX) T[i][slack_col[i]] = (sense == Sense::LessEq) ? 1.0 : -1.0;
            if (art_col[i] != SIZE_MAX) {
                art_col[i] = next_art++;
                T[i][art_col[i]] = 1.0;
                basis[i] = art_col[i];
            } else {
                basis[i] = slack_col[i];
            }
            T[i][total] = b[i];
        }

        // Phase 1: minimize the sum of artificials.
        if (n_art > 0) {
            std::vector<double> z(total + 1, 0.0);
            for (std::size_t i = 0; i < m; ++i)
                if (basis[i] >= n_ + n_slack)
                    for (std::size_t j = 0; j <= total; ++j) z[j] += T[i][j];
            if (!run_simplex(T, basis, z, total)) return {Status::Unbounded, 0.0, {}};
            if (z[total] > 1e-7) return {Status::Infeasible, 0.0, {}};
            // Pivot any artificial still in the basis out (degenerate rows).
            for (std::size_t i = 0; i < m; ++i) {
                if (basis[i] < n_ + n_slack) continue;
                std::size_t piv = SIZE_MAX;
                for (std::size_t j = 0; j < n_ + n_slack; ++j)
                    if (std::abs(T[i][j]) > 1e-9) {
                        piv = j;
                        break;
                    }
                if (piv != SIZE_MAX) pivot(T, basis, i, piv, total);
            }
        }

        // Phase 2 objective row (minimization form).
        std::vector<double> z(total + 1, 0.0);
        for (std::size_t j = 0; j < n_; ++j) z[j] = maximize ? objective[j] : -objective[j];
        // Zero out artificial columns so they never re-enter.
        for (std::size_t i = 0; i < m; ++i)
            if (art_col[i] != SIZE_MAX)
                for (auto& row : T) row[art_col[i]] = 0.0;
        // Make the objective row consistent with the current basis.
        for (std::size_t i = 0; i < m; ++i) {
            const double c = z[basis[i]];
            if (c != 0.0)
                for (std::size_t j = 0; j <= total; ++j) z[j] -= c * T[i][j];
        }
        if (!run_simplex(T, basis, z, total)) return {Status::Unbounded, 0.0, {}};

        Solution sol;
        sol.status = Status::Optimal;
        sol.x.assign(n_, 0.0);
        for (std::size_t i = 0; i < m; ++i)
            if (basis[i] < n_) sol.x[basis[i]] = T[i][total];
        double obj = 0.0;
        for (std::size_t j = 0; j < n_; ++j) obj += objective[j] * sol.x[j];
        sol.objective = obj;
        return sol;
    }

  private:
    std::size_t n_;
    std::vector<Constraint> rows_;

    Sense effective_sense(std::size_t i) const {
        Sense s = rows_[i].sense;
        if (rows_[i].rhs < 0.0) {
            if (s == Sense::LessEq) return Sense::GreaterEq;
            if (s == Sense::GreaterEq) return Sense::LessEq;
        }
        return s;
    }

    static void pivot(std::vector<std::vector<double>>& T, std::vector<std::size_t>& basis, std::size_t r,
                      std::size_t c, std::size_t total) {
        const double p = T[r][c];
        for (std::size_t j = 0; j <= total; ++j) T[r][j] /= p;
        for (std::size_t i = 0; i < T.size(); ++i) {
            if (i == r) continue;
            const double f = T[i][c];
            if (f == 0.0) continue;
            for (std::size_t j = 0; j <= total; ++j) T[i][j] -= f * T[r][j];
        }
        basis[r] = c;
    }

    // Minimizes; objective row z holds reduced costs with z[total] = -value.
    // Bland's rule, so termination is guaranteed. Returns false if unbounded.
    static bool run_simplex(std::vector<std::vector<double>>& T, std::vector<std::size_t>& basis,
                            std::vector<double>& z, std::size_t total) {
        const std::size_t m = T.size();
        for (;;) {
            std::size_t enter = SIZE_MAX;
            for (std::size_t j = 0; j < total; ++j)
                if (z[j] > 1e-9) {
                    enter = j;
                    break;
                }
            if (enter == SIZE_MAX) return true;

            std::size_t leave = SIZE_MAX;
            double best_ratio = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                if (T[i][enter] <= 1e-11) continue;
                const double ratio = T[i][total] / T[i][enter];
                if (leave == SIZE_MAX || ratio < best_ratio - 1e-12 ||
                    (std::abs(ratio - best_ratio) <= 1e-12 && basis[i] < basis[leave])) {
                    leave = i;
                    best_ratio = ratio;
                }
            }
            if (leave == SIZE_MAX) return false;

            pivot(T, basis, leave, enter, total);
            const double f = z[enter];
            for (std::size_t j = 0; j <= total; ++j) z[j] -= f * T[leave][j];
        }
    }
};

}  // namespace tqkd::lp
