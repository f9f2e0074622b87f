#include "privsig/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>

namespace privsig::lp {

namespace {

constexpr double kPivotTol = 1e-7;
constexpr double kCostTol = 1e-9;
constexpr double kDegenTol = 1e-11;
constexpr double kDropTol = 1e-12;
constexpr double kFeasEps = 1e-9;
constexpr int kBlandStreak = 60;
constexpr int kPricingBlock = 512;
constexpr std::size_t kCandidates = 64;

// Standard-form translation of one original variable.
struct VarMap {
    enum Kind { Shifted, Mirrored, Split } kind = Shifted;
    int col = 0;      // primary standard column
    int col_neg = -1; // second column of a free split
    double offset = 0.0;
};

// Sorted sparse row over the standard columns.
struct SpRow {
    std::vector<int> idx;
    std::vector<double> val;

    void push(int j, double v) {
        idx.push_back(j);
        val.push_back(v);
    }
    std::size_t nnz() const { return idx.size(); }

    double at(int j) const {
        const auto it = std::lower_bound(idx.begin(), idx.end(), j);
        if (it == idx.end() || *it != j) return 0.0;
        return val[static_cast<std::size_t>(it - idx.begin())];
    }

    void scale(double f) {
        for (double& v : val) v *= f;
    }
};

struct Standardized {
    std::vector<SpRow> rows;
    Eigen::VectorXd rhs;
    Eigen::VectorXd cost;
    std::vector<VarMap> vmap;
    std::vector<int> slack_col; // per row, -1 for equalities
    std::vector<int> support;   // rows per structural column
    int n_struct = 0;
    int n_cols = 0;
};

Standardized standardize(const LinearProgram& lp) {
    const int n = lp.num_vars();
    Standardized st;
    st.vmap.resize(static_cast<std::size_t>(n));

    int col = 0;
    std::vector<Row> extra_rows;
    for (int v = 0; v < n; ++v) {
        const double lo = lp.lower(v);
        const double hi = lp.upper(v);
        VarMap& m = st.vmap[static_cast<std::size_t>(v)];
        if (std::isfinite(lo)) {
            m.kind = VarMap::Shifted;
            m.col = col++;
            m.offset = lo;
            if (std::isfinite(hi)) {
                Row r;
                r.coeffs.emplace_back(v, 1.0);
                r.sense = Sense::LessEqual;
                r.rhs = hi;
                extra_rows.push_back(std::move(r));
            }
        } else if (std::isfinite(hi)) {
            m.kind = VarMap::Mirrored;
            m.col = col++;
            m.offset = hi;
        } else {
            m.kind = VarMap::Split;
            m.col = col++;
            m.col_neg = col++;
        }
    }
    st.n_struct = col;

    const int m_own = static_cast<int>(lp.rows.size());
    const int m_rows = m_own + static_cast<int>(extra_rows.size());
    auto row_at = [&](int i) -> const Row& {
        return i < m_own ? lp.rows[static_cast<std::size_t>(i)]
                         : extra_rows[static_cast<std::size_t>(i - m_own)];
    };

    int n_slacks = 0;
    for (int i = 0; i < m_rows; ++i)
        if (row_at(i).sense != Sense::Equal) ++n_slacks;
    st.n_cols = st.n_struct + n_slacks;

    st.rows.resize(static_cast<std::size_t>(m_rows));
    st.rhs = Eigen::VectorXd::Zero(m_rows);
    st.slack_col.assign(static_cast<std::size_t>(m_rows), -1);
    st.support.assign(static_cast<std::size_t>(st.n_struct), 0);

    std::vector<double> dense(static_cast<std::size_t>(st.n_struct), 0.0);
    std::vector<int> touched;
    int slack = st.n_struct;
    for (int i = 0; i < m_rows; ++i) {
        const Row& r = row_at(i);
        double rhs = r.rhs;
        touched.clear();
        for (const auto& [v, a] : r.coeffs) {
            const VarMap& m = st.vmap[static_cast<std::size_t>(v)];
            switch (m.kind) {
            case VarMap::Shifted:
                if (dense[static_cast<std::size_t>(m.col)] == 0.0) touched.push_back(m.col);
                dense[static_cast<std::size_t>(m.col)] += a;
                rhs -= a * m.offset;
                break;
            case VarMap::Mirrored:
                if (dense[static_cast<std::size_t>(m.col)] == 0.0) touched.push_back(m.col);
                dense[static_cast<std::size_t>(m.col)] -= a;
                rhs -= a * m.offset;
                break;
            case VarMap::Split:
                if (dense[static_cast<std::size_t>(m.col)] == 0.0) touched.push_back(m.col);
                dense[static_cast<std::size_t>(m.col)] += a;
                if (dense[static_cast<std::size_t>(m.col_neg)] == 0.0) touched.push_back(m.col_neg);
                dense[static_cast<std::size_t>(m.col_neg)] -= a;
                break;
            }
        }
        std::sort(touched.begin(), touched.end());
        SpRow& row = st.rows[static_cast<std::size_t>(i)];
        const double sign = (rhs < 0.0) ? -1.0 : 1.0;
        for (int j : touched) {
            const double v = dense[static_cast<std::size_t>(j)];
            dense[static_cast<std::size_t>(j)] = 0.0;
            if (v == 0.0) continue;
            row.push(j, sign * v);
            ++st.support[static_cast<std::size_t>(j)];
        }
        if (r.sense == Sense::LessEqual) {
            row.push(slack, sign);
            st.slack_col[static_cast<std::size_t>(i)] = slack++;
        } else if (r.sense == Sense::GreaterEqual) {
            row.push(slack, -sign);
            st.slack_col[static_cast<std::size_t>(i)] = slack++;
        }
        st.rhs(i) = sign * rhs;
    }

    st.cost = Eigen::VectorXd::Zero(st.n_cols);
    for (int v = 0; v < n; ++v) {
        const VarMap& m = st.vmap[static_cast<std::size_t>(v)];
        const double c = lp.objective(v);
        switch (m.kind) {
        case VarMap::Shifted: st.cost(m.col) += c; break;
        case VarMap::Mirrored: st.cost(m.col) -= c; break;
        case VarMap::Split:
            st.cost(m.col) += c;
            st.cost(m.col_neg) -= c;
            break;
        }
    }
    return st;
}

// Two-phase primal simplex on a sparse row tableau. Rows without a usable
// singleton start from a virtual artificial (basis id >= n_cols) that owns
// no stored column; phase 1 drives those rows to zero. Pricing is blocked
// Dantzig (most negative within a rotating block, lowest index on ties)
// with a full lowest-index Bland scan after a degenerate streak, which
// guarantees termination.
class SparseSimplex {
public:
    SparseSimplex(Standardized&& st, const SolveOptions& opt)
        : opt_(opt),
          rows_(std::move(st.rows)),
          rhs_(std::move(st.rhs)),
          cost2_(std::move(st.cost)),
          n_cols_(st.n_cols) {
        m_ = static_cast<int>(rows_.size());
        rhsp_ = rhs_;
        col_rows_.resize(static_cast<std::size_t>(n_cols_));
        for (int i = 0; i < m_; ++i)
            for (int j : rows_[static_cast<std::size_t>(i)].idx)
                col_rows_[static_cast<std::size_t>(j)].push_back(i);
        ruled_out_.assign(static_cast<std::size_t>(n_cols_), 0);
        list_dirty_.assign(static_cast<std::size_t>(n_cols_), 0);
        crash_basis(st);
        rows0_ = rows_; // post-crash rows are the reinversion baseline
        rhs0_ = rhs_;
        nnz0_ = total_nnz();
        load_cost_row(); // kept current by every pivot from here on
    }

    std::size_t total_nnz() const {
        std::size_t s = 0;
        for (const auto& r : rows_) s += r.nnz();
        return s;
    }

    // Reinversion: rebuilds the tableau from the pristine rows under the
    // current basis. Fill and roundoff accumulated by past pivots vanish,
    // and structural singleton columns become available again as cheap
    // hand-over partners. Only rows whose basic column is not already a
    // singleton need Gaussian steps.
    void refactorize() {
        // the current tableau is the fallback should the rebuild hit a
        // numerically singular pairing
        std::vector<SpRow> rows_bak = std::move(rows_);
        Eigen::VectorXd rhs_bak = std::move(rhs_);
        Eigen::VectorXd rhsp_bak = std::move(rhsp_);
        std::vector<std::vector<int>> lists_bak = std::move(col_rows_);
        std::vector<int> basis_bak = basis_;

        rows_ = rows0_;
        rhs_ = rhs0_;
        rhsp_ = rhs_;
        col_rows_.assign(static_cast<std::size_t>(n_cols_), {});
        for (int i = 0; i < m_; ++i)
            for (int j : rows_[static_cast<std::size_t>(i)].idx)
                col_rows_[static_cast<std::size_t>(j)].push_back(i);
        std::fill(list_dirty_.begin(), list_dirty_.end(), 0);

        std::vector<std::pair<int, double>> col;
        std::vector<char> done(static_cast<std::size_t>(m_), 0);
        int remaining = 0;
        // pass 1: eliminate basics in their assigned rows wherever possible
        bool progress = true;
        while (progress) {
            progress = false;
            remaining = 0;
            for (int i = 0; i < m_; ++i) {
                if (done[static_cast<std::size_t>(i)]) continue;
                const int b = basis_[static_cast<std::size_t>(i)];
                if (b >= n_cols_) { // virtual artificial: nothing to eliminate
                    done[static_cast<std::size_t>(i)] = 1;
                    progress = true;
                    continue;
                }
                gather_column(b, col);
                double piv = 0.0;
                for (const auto& [r, v] : col)
                    if (r == i) piv = v;
                if (std::fabs(piv) <= kPivotTol) {
                    ++remaining;
                    continue; // later, after other eliminations
                }
                pivot_inplace(i, b, col);
                done[static_cast<std::size_t>(i)] = 1;
                progress = true;
            }
        }
        // pass 2: the leftover block needs its row/basic pairing permuted;
        // assign each basic to the stuck row where its column is largest
        if (remaining > 0) {
            std::vector<int> stuck_basics;
            for (int i = 0; i < m_; ++i)
                if (!done[static_cast<std::size_t>(i)])
                    stuck_basics.push_back(basis_[static_cast<std::size_t>(i)]);
            std::sort(stuck_basics.begin(), stuck_basics.end());
            for (int b : stuck_basics) {
                gather_column(b, col);
                int pick = -1;
                double pick_val = 0.0;
                for (const auto& [r, v] : col) {
                    if (done[static_cast<std::size_t>(r)]) continue;
                    if (std::fabs(v) > std::fabs(pick_val)) {
                        pick = r;
                        pick_val = v;
                    }
                }
                if (pick < 0 || std::fabs(pick_val) <= kPivotTol) {
                    // numerically singular: keep the old tableau
                    rows_ = std::move(rows_bak);
                    rhs_ = std::move(rhs_bak);
                    rhsp_ = std::move(rhsp_bak);
                    col_rows_ = std::move(lists_bak);
                    basis_ = std::move(basis_bak);
                    pivots_since_refactor_ = 0;
                    return;
                }
                pivot_inplace(pick, b, col);
                basis_[static_cast<std::size_t>(pick)] = b;
                done[static_cast<std::size_t>(pick)] = 1;
            }
        }
        pivots_since_refactor_ = 0;
        nnz0_ = std::max(nnz0_, std::size_t(1));
        load_cost_row();
    }

    bool maybe_refactorize() {
        if (pivots_since_refactor_ < 64) return false;
        if (total_nnz() > 3 * nnz0_ + 1024 || pivots_since_refactor_ > 4096) {
            refactorize();
            return true;
        }
        return false;
    }

    SolveStatus run() {
        const SolveStatus s1 = phase1();
        if (s1 != SolveStatus::Optimal) return s1;
        expel_artificials();
        for (int i = 0; i < m_; ++i) {
            if (rhs_(i) < 0.0) rhs_(i) = 0.0; // phase 1 ends within 1e-7 of feasible
            if (rhsp_(i) < 0.0) rhsp_(i) = 0.0;
        }
        load_cost_row(); // refresh against accumulated roundoff
        return iterate();
    }

    Eigen::VectorXd standard_solution() const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n_cols_);
        for (int i = 0; i < m_; ++i)
            if (basis_[static_cast<std::size_t>(i)] < n_cols_)
                x(basis_[static_cast<std::size_t>(i)]) = std::max(rhs_(i), 0.0);
        return x;
    }

    long iterations() const { return iterations_; }

private:
    // Slack basic wherever a slack exists (its value may start negative:
    // phase 1 tolerates infeasible basics), structural singletons next,
    // virtual artificials for the rest (typically only equality rows).
    void crash_basis(const Standardized& st) {
        basis_.assign(static_cast<std::size_t>(m_), -1);
        is_basic_.assign(static_cast<std::size_t>(n_cols_), 0);
        n_artificial_ = 0;
        for (int i = 0; i < m_; ++i) {
            SpRow& row = rows_[static_cast<std::size_t>(i)];
            int pick = -1;
            double pick_val = 0.0;
            const int sc = st.slack_col[static_cast<std::size_t>(i)];
            if (sc >= 0) {
                pick = sc;
                pick_val = row.at(sc);
            }
            if (pick < 0) {
                for (std::size_t t = 0; t < row.nnz(); ++t) {
                    const int j = row.idx[t];
                    if (j < st.n_struct && st.support[static_cast<std::size_t>(j)] == 1 &&
                        !is_basic_[static_cast<std::size_t>(j)] && std::fabs(row.val[t]) > kPivotTol) {
                        pick = j;
                        pick_val = row.val[t];
                        break;
                    }
                }
            }
            if (pick >= 0) {
                if (pick_val != 1.0) {
                    row.scale(1.0 / pick_val);
                    rhs_(i) /= pick_val;
                    rhsp_(i) /= pick_val;
                }
                basis_[static_cast<std::size_t>(i)] = pick;
                is_basic_[static_cast<std::size_t>(pick)] = 1;
            } else {
                basis_[static_cast<std::size_t>(i)] = n_cols_ + i; // virtual artificial
                ++n_artificial_;
            }
        }
    }

    // Piecewise-linear phase 1: minimizes total infeasibility
    //   w = sum over ordinary rows of max(0, -x_i) + sum over artificial
    //       rows of |x_i|
    // with a long-step ratio test that passes every breakpoint while the
    // directional derivative stays negative, so one pivot can restore
    // feasibility of many rows at once.
    SolveStatus phase1() {
        std::vector<std::pair<int, double>> col, scratch_col;
        struct Break {
            double t;
            int pos; // index into col
            double change;
        };
        std::vector<Break> breaks;
        std::vector<std::pair<int, int>> passes; // (row, partner)
        int degen_streak = 0;
        bool cost_stale = true;
        bool accept_degenerate = false;

        for (;;) {
            if (iterations_ >= opt_.max_iterations) return SolveStatus::IterationLimit;
            if (maybe_refactorize()) cost_stale = true;

            // the gradient and infeasibility total are maintained
            // incrementally; full rebuilds happen at entry and after
            // reinversions
            if (cost_stale) {
                rebuild_phase1_cost();
                w_infeas_ = 0.0;
                for (int i = 0; i < m_; ++i) w_infeas_ += phase1_row_infeasibility(i);
                cost_stale = false;
                clear_rule_outs();
                candidates_w_.clear();
            }
            if (w_infeas_ <= 1e-7) return SolveStatus::Optimal;
            const int enter = choose_entering_phase1(degen_streak > kBlandStreak);
            if (enter < 0) {
                if (!ruled_out_list_.empty() && !accept_degenerate) {
                    // every descent direction is zero-blocked; retry taking
                    // the degenerate pivots so the basis can escape
                    accept_degenerate = true;
                    clear_rule_outs();
                    continue;
                }
                return SolveStatus::Infeasible; // w minimized above zero
            }

            gather_column(enter, col);
            double slope = 0.0;
            breaks.clear();
            passes.clear();
            for (std::size_t p = 0; p < col.size(); ++p) {
                const auto& [i, a] = col[p];
                if (std::fabs(a) < 1e-11) continue;
                const bool pivotable = std::fabs(a) > kPivotTol;
                const double r = rhsp_(i);
                const bool artificial = basis_[static_cast<std::size_t>(i)] >= n_cols_;
                if (artificial) {
                    if (r > kFeasEps) {
                        slope -= a;
                        if (pivotable && a > 0.0)
                            breaks.push_back({r / a, static_cast<int>(p), 2.0 * std::fabs(a)});
                    } else if (r < -kFeasEps) {
                        slope += a;
                        if (pivotable && a < 0.0)
                            breaks.push_back({r / a, static_cast<int>(p), 2.0 * std::fabs(a)});
                    } else if (pivotable) {
                        // parked at zero: hand the row to a partner where one
                        // exists, otherwise any movement grows |u| immediately
                        double delta = 0.0;
                        const int partner = swap_partner(i, enter, a, delta, scratch_col);
                        if (partner >= 0)
                            passes.push_back({i, partner});
                        else
                            breaks.push_back({0.0, static_cast<int>(p), std::fabs(a)});
                    } else {
                        slope += std::fabs(a);
                    }
                } else {
                    if (r < -kFeasEps) {
                        slope += a;
                        if (pivotable && a < 0.0) breaks.push_back({r / a, static_cast<int>(p), -a});
                    } else if (r > kFeasEps) {
                        if (pivotable && a > 0.0) breaks.push_back({r / a, static_cast<int>(p), a});
                    } else if (a > 0.0) {
                        // degenerate blocker: a partner keeps the row feasible
                        // past zero; failing that only a zero-length pivot does
                        double delta = 0.0;
                        const int partner = pivotable ? swap_partner(static_cast<int>(i), enter, a, delta, scratch_col) : -1;
                        if (partner >= 0)
                            passes.push_back({i, partner});
                        else if (pivotable)
                            breaks.push_back({0.0, static_cast<int>(p), a});
                        else
                            slope += a;
                    }
                }
            }
            if (slope >= -kCostTol) {
                // non-pivotable degenerate contributions hide the descent;
                // rule the column out until the next pivot and pick again
                rule_out(enter);
                ++iterations_;
                continue;
            }
            std::sort(breaks.begin(), breaks.end(), [&](const Break& x, const Break& y) {
                if (x.t != y.t) return x.t < y.t;
                return col[static_cast<std::size_t>(x.pos)].first < col[static_cast<std::size_t>(y.pos)].first;
            });
            int stop = -1;
            for (std::size_t b = 0; b < breaks.size(); ++b) {
                slope += breaks[b].change;
                if (slope >= 0.0) {
                    stop = static_cast<int>(b);
                    break;
                }
            }
            if (stop < 0) {
                if (breaks.empty()) { // no blocking movement at all
                    rule_out(enter);
                    ++iterations_;
                    continue;
                }
                stop = static_cast<int>(breaks.size()) - 1; // w reaches its floor at the last crossing
            }
            if (breaks[static_cast<std::size_t>(stop)].t <= kDegenTol && !accept_degenerate) {
                // a zero-length move: prefer a different direction first
                rule_out(enter);
                ++iterations_;
                continue;
            }
            const int row = col[static_cast<std::size_t>(breaks[static_cast<std::size_t>(stop)].pos)].first;
            degen_streak = (breaks[static_cast<std::size_t>(stop)].t <= kDegenTol) ? degen_streak + 1 : 0;
            for (const auto& [prow, partner] : passes) {
                gather_column(partner, scratch_col);
                phase1_cost_remove(scratch_col);
                pivot(prow, partner, scratch_col);
                phase1_cost_add(scratch_col);
                ++iterations_;
            }
            if (!passes.empty()) gather_column(enter, col); // passed rows changed entries
            phase1_cost_remove(col);
            pivot(row, enter, col);
            phase1_cost_add(col);
            clear_rule_outs();
            accept_degenerate = false;
            ++iterations_;
        }
    }

    // Incremental phase-1 gradient bookkeeping: only rows touched by a
    // pivot change their infeasibility class, so their contributions are
    // subtracted before the update and re-added afterwards.
    double phase1_row_weight(int i) const {
        const double r = rhsp_(i);
        if (basis_[static_cast<std::size_t>(i)] >= n_cols_)
            return (r > kFeasEps) ? -1.0 : (r < -kFeasEps ? 1.0 : 0.0);
        return (r < -kFeasEps) ? 1.0 : 0.0;
    }

    double phase1_row_infeasibility(int i) const {
        const double r = rhsp_(i);
        if (basis_[static_cast<std::size_t>(i)] >= n_cols_) return std::fabs(r);
        return std::max(0.0, -r);
    }

    void phase1_cost_remove(const std::vector<std::pair<int, double>>& col) {
        for (const auto& [i, v] : col) {
            if (v == 0.0) continue;
            w_infeas_ -= phase1_row_infeasibility(i);
            const double f = phase1_row_weight(i);
            if (f == 0.0) continue;
            const SpRow& row = rows_[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < row.nnz(); ++t) costw_(row.idx[t]) -= f * row.val[t];
        }
    }

    void phase1_cost_add(const std::vector<std::pair<int, double>>& col) {
        for (const auto& [i, v] : col) {
            if (v == 0.0) continue;
            w_infeas_ += phase1_row_infeasibility(i);
            const double f = phase1_row_weight(i);
            if (f == 0.0) continue;
            const SpRow& row = rows_[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < row.nnz(); ++t) costw_(row.idx[t]) += f * row.val[t];
        }
    }

    void rebuild_phase1_cost() {
        costw_ = Eigen::VectorXd::Zero(n_cols_);
        for (int i = 0; i < m_; ++i) {
            const double r = rhsp_(i);
            const bool artificial = basis_[static_cast<std::size_t>(i)] >= n_cols_;
            double f = 0.0;
            if (artificial)
                f = (r > kFeasEps) ? -1.0 : (r < -kFeasEps ? 1.0 : 0.0);
            else if (r < -kFeasEps)
                f = 1.0;
            if (f == 0.0) continue;
            const SpRow& row = rows_[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < row.nnz(); ++t) costw_(row.idx[t]) += f * row.val[t];
        }
        double max_w = 0.0, max_c = 0.0;
        for (int j = 0; j < n_cols_; ++j) {
            if (is_basic_[static_cast<std::size_t>(j)]) continue;
            max_w = std::max(max_w, std::fabs(costw_(j)));
            max_c = std::max(max_c, std::fabs(cost_(j)));
        }
        // composite bias: keep steering toward the true objective while
        // restoring feasibility, so phase 2 starts near its optimum
        mu_ = (max_c > 0.0) ? 0.25 * max_w / max_c : 0.0;
    }

    int choose_entering_phase1(bool bland) {
        if (bland) {
            for (int j = 0; j < n_cols_; ++j)
                if (!is_basic_[static_cast<std::size_t>(j)] && !ruled_out_[static_cast<std::size_t>(j)] &&
                    costw_(j) < -kCostTol)
                    return j;
            return -1;
        }
        // candidate-list pricing: a periodic full sweep harvests the most
        // attractive columns, iterations in between price only those
        const auto score_of = [&](int j) { return costw_(j) + mu_ * cost_(j); };
        const auto usable = [&](int j) {
            return !is_basic_[static_cast<std::size_t>(j)] && !ruled_out_[static_cast<std::size_t>(j)] &&
                   costw_(j) < -kCostTol;
        };
        for (int attempt = 0; attempt < 2; ++attempt) {
            int best = -1;
            double best_score = 0.0;
            for (int j : candidates_w_) {
                if (!usable(j)) continue;
                const double s = score_of(j);
                if (best < 0 || s < best_score) {
                    best_score = s;
                    best = j;
                }
            }
            if (best >= 0) return best;
            // refresh: keep the kCandidates best-scoring usable columns
            candidates_w_.clear();
            std::vector<std::pair<double, int>> pool;
            for (int j = 0; j < n_cols_; ++j)
                if (usable(j)) pool.emplace_back(score_of(j), j);
            const std::size_t keep = std::min<std::size_t>(pool.size(), kCandidates);
            std::partial_sort(pool.begin(), pool.begin() + static_cast<long>(keep), pool.end());
            for (std::size_t t = 0; t < keep; ++t) candidates_w_.push_back(pool[t].second);
            if (candidates_w_.empty()) return -1;
        }
        return -1;
    }

    void rule_out(int j) {
        if (!ruled_out_[static_cast<std::size_t>(j)]) {
            ruled_out_[static_cast<std::size_t>(j)] = 1;
            ruled_out_list_.push_back(j);
        }
    }

    void clear_rule_outs() {
        for (int j : ruled_out_list_) ruled_out_[static_cast<std::size_t>(j)] = 0;
        ruled_out_list_.clear();
    }

    void load_cost_row() {
        cost_ = cost2_;
        cost_rhs_ = 0.0;
        for (int i = 0; i < m_; ++i) {
            const int b = basis_[static_cast<std::size_t>(i)];
            if (b >= n_cols_ || cost2_(b) == 0.0) continue;
            const double cb = cost2_(b);
            const SpRow& row = rows_[static_cast<std::size_t>(i)];
            for (std::size_t t = 0; t < row.nnz(); ++t) cost_(row.idx[t]) -= cb * row.val[t];
            cost_rhs_ -= cb * rhs_(i);
        }
        for (int j = 0; j < n_cols_; ++j)
            if (is_basic_[static_cast<std::size_t>(j)]) cost_(j) = 0.0;
    }

    int choose_entering(bool bland) {
        if (bland) {
            for (int j = 0; j < n_cols_; ++j)
                if (!is_basic_[static_cast<std::size_t>(j)] && cost_(j) < -kCostTol) return j;
            return -1;
        }
        // rotating blocked Dantzig: most negative within the first block
        // holding any candidate
        int scanned = 0;
        int j = scan_pos_;
        while (scanned < n_cols_) {
            int best = -1;
            double best_cost = -kCostTol;
            const int block_end = scanned + kPricingBlock;
            for (; scanned < block_end && scanned < n_cols_; ++scanned, ++j) {
                if (j >= n_cols_) j = 0;
                if (!is_basic_[static_cast<std::size_t>(j)] && cost_(j) < best_cost) {
                    best_cost = cost_(j);
                    best = j;
                }
            }
            if (best >= 0) {
                scan_pos_ = j >= n_cols_ ? 0 : j;
                return best;
            }
        }
        return -1;
    }

    // Gathers (row, value) pairs of a column, purging stale entries. The
    // list can hold duplicates when fill re-created a cancelled entry, so
    // it is deduplicated whenever insertions happened since the last pass.
    void gather_column(int j, std::vector<std::pair<int, double>>& out) {
        out.clear();
        auto& list = col_rows_[static_cast<std::size_t>(j)];
        if (list_dirty_[static_cast<std::size_t>(j)]) {
            std::sort(list.begin(), list.end());
            list.erase(std::unique(list.begin(), list.end()), list.end());
            list_dirty_[static_cast<std::size_t>(j)] = 0;
        }
        std::size_t keep = 0;
        for (std::size_t t = 0; t < list.size(); ++t) {
            const int i = list[t];
            const double v = rows_[static_cast<std::size_t>(i)].at(j);
            if (v == 0.0) continue; // dropped by an earlier update
            list[keep++] = i;
            out.emplace_back(i, v);
        }
        list.resize(keep);
    }

    int choose_leaving(const std::vector<std::pair<int, double>>& col) const {
        int row = -1;
        double best_ratio = 0.0;
        for (const auto& [i, a] : col) {
            if (a <= kPivotTol) continue;
            const double ratio = std::max(rhsp_(i), 0.0) / a;
            if (row < 0 || ratio < best_ratio - 1e-12 ||
                (ratio <= best_ratio + 1e-12 &&
                 basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(row)])) {
                row = i;
                best_ratio = ratio;
            }
        }
        return row;
    }

    // row_i -= f * pivrow, merging sparse patterns and registering fill.
    void axpy_row(int i, double f, const SpRow& pivrow, double piv_rhs, double piv_rhsp) {
        const SpRow& a = rows_[static_cast<std::size_t>(i)];
        scratch_.idx.clear();
        scratch_.val.clear();
        scratch_.idx.reserve(a.nnz() + pivrow.nnz());
        scratch_.val.reserve(a.nnz() + pivrow.nnz());
        std::size_t ta = 0, tp = 0;
        while (ta < a.nnz() || tp < pivrow.nnz()) {
            int ja = ta < a.nnz() ? a.idx[ta] : n_cols_;
            int jp = tp < pivrow.nnz() ? pivrow.idx[tp] : n_cols_;
            if (ja < jp) {
                scratch_.push(ja, a.val[ta]);
                ++ta;
            } else if (jp < ja) {
                const double v = -f * pivrow.val[tp];
                if (std::fabs(v) > kDropTol) {
                    scratch_.push(jp, v);
                    col_rows_[static_cast<std::size_t>(jp)].push_back(i); // fill
                    list_dirty_[static_cast<std::size_t>(jp)] = 1;
                }
                ++tp;
            } else {
                const double v = a.val[ta] - f * pivrow.val[tp];
                if (std::fabs(v) > kDropTol) scratch_.push(ja, v);
                ++ta;
                ++tp;
            }
        }
        rows_[static_cast<std::size_t>(i)].idx.swap(scratch_.idx);
        rows_[static_cast<std::size_t>(i)].val.swap(scratch_.val);
        rhs_(i) -= f * piv_rhs;
        rhsp_(i) -= f * piv_rhsp;
    }

    void pivot_inplace(int row, int enter, const std::vector<std::pair<int, double>>& col) {
        double piv = 0.0;
        for (const auto& [i, v] : col)
            if (i == row) piv = v;
        SpRow& prow = rows_[static_cast<std::size_t>(row)];
        if (piv != 1.0) {
            prow.scale(1.0 / piv);
            rhs_(row) /= piv;
            rhsp_(row) /= piv;
        }
        for (std::size_t t = 0; t < prow.nnz(); ++t)
            if (prow.idx[t] == enter) prow.val[t] = 1.0;
        const SpRow pivrow = prow;
        const double piv_rhs = rhs_(row);
        const double piv_rhsp = rhsp_(row);
        for (const auto& [i, f] : col) {
            if (i == row || f == 0.0) continue;
            axpy_row(i, f, pivrow, piv_rhs, piv_rhsp);
        }
    }

    void pivot(int row, int enter, const std::vector<std::pair<int, double>>& col) {
        ++pivots_since_refactor_;
        double piv = 0.0;
        for (const auto& [i, v] : col)
            if (i == row) piv = v;
        SpRow& prow = rows_[static_cast<std::size_t>(row)];
        if (piv != 1.0) {
            prow.scale(1.0 / piv);
            rhs_(row) /= piv;
            rhsp_(row) /= piv;
        }
        // pin the entering coefficient so cancellations stay exact
        for (std::size_t t = 0; t < prow.nnz(); ++t)
            if (prow.idx[t] == enter) prow.val[t] = 1.0;

        const SpRow pivrow = prow; // stable copy
        const double piv_rhs = rhs_(row);
        const double piv_rhsp = rhsp_(row);
        for (const auto& [i, f] : col) {
            if (i == row || f == 0.0) continue;
            axpy_row(i, f, pivrow, piv_rhs, piv_rhsp);
        }
        const double fc = cost_(enter);
        if (fc != 0.0) {
            for (std::size_t t = 0; t < pivrow.nnz(); ++t) cost_(pivrow.idx[t]) -= fc * pivrow.val[t];
            cost_rhs_ -= fc * piv_rhs;
        }
        cost_(enter) = 0.0;

        const int old = basis_[static_cast<std::size_t>(row)];
        if (old < n_cols_) is_basic_[static_cast<std::size_t>(old)] = 0;
        is_basic_[static_cast<std::size_t>(enter)] = 1;
        basis_[static_cast<std::size_t>(row)] = enter;
    }

    // Looks for a nonbasic partner that can take over the basic position of
    // `row` once its current basic hits zero while `enter` keeps growing:
    // opposite-sign coefficient, non-negative reduced cost, and a singleton
    // column so the exchange costs one row update. Returns the partner and
    // the objective slope increase per unit of `enter`, or -1.
    int swap_partner(int row, int enter, double col_entry, double& slope_delta,
                     std::vector<std::pair<int, double>>& scratch_col) {
        const SpRow& r = rows_[static_cast<std::size_t>(row)];
        int best = -1;
        double best_delta = 0.0;
        for (std::size_t t = 0; t < r.nnz(); ++t) {
            const int u = r.idx[t];
            if (u == enter || is_basic_[static_cast<std::size_t>(u)]) continue;
            const double a = r.val[t];
            if (a >= -kPivotTol) continue;
            // cheap over-approximation first: reinversion keeps the lists of
            // true singletons short, fat lists cannot be singleton columns
            if (col_rows_[static_cast<std::size_t>(u)].size() > 8) continue;
            gather_column(u, scratch_col);
            if (scratch_col.size() != 1 || scratch_col[0].first != row) continue;
            const double delta = cost_(u) * (-col_entry / a);
            if (best < 0 || delta < best_delta || (delta == best_delta && u < best)) {
                best = u;
                best_delta = delta;
            }
        }
        slope_delta = best_delta;
        return best;
    }

    SolveStatus iterate() {
        int degen_streak = 0;
        std::vector<std::pair<int, double>> col, scratch_col;
        struct Break {
            double t;
            int row;
            double entry;
        };
        std::vector<Break> breaks;
        std::vector<std::pair<int, int>> passes; // (row, partner)
        for (;;) {
            if (iterations_ >= opt_.max_iterations) return SolveStatus::IterationLimit;
            maybe_refactorize(); // reloads the reduced costs itself
            const bool bland = degen_streak > kBlandStreak;
            const int enter = choose_entering(bland);
            if (enter < 0) return SolveStatus::Optimal;
            gather_column(enter, col);

            if (bland) { // plain single-breakpoint iteration guarantees termination
                const int row = choose_leaving(col);
                if (row < 0) return SolveStatus::Unbounded;
                double piv = 0.0;
                for (const auto& [i, v] : col)
                    if (i == row) piv = v;
                const double ratio = std::max(rhsp_(row), 0.0) / piv;
                degen_streak = (ratio <= kDegenTol) ? degen_streak + 1 : 0;
                pivot(row, enter, col);
                ++iterations_;
                continue;
            }

            // long-step ratio walk: pass blocking rows whose basic can hand
            // over to a cheap partner while the move keeps improving
            breaks.clear();
            for (const auto& [i, a] : col) {
                if (a <= kPivotTol) continue;
                breaks.push_back({std::max(rhsp_(i), 0.0) / a, i, a});
            }
            if (breaks.empty()) return SolveStatus::Unbounded;
            std::sort(breaks.begin(), breaks.end(), [&](const Break& x, const Break& y) {
                if (x.t != y.t) return x.t < y.t;
                return basis_[static_cast<std::size_t>(x.row)] < basis_[static_cast<std::size_t>(y.row)];
            });

            double slope = cost_(enter);
            passes.clear();
            int chosen = -1;
            double chosen_ratio = 0.0;
            for (const auto& b : breaks) {
                double delta = 0.0;
                const int partner = swap_partner(b.row, enter, b.entry, delta, scratch_col);
                if (partner < 0 || slope + delta >= 0.0) {
                    chosen = b.row;
                    chosen_ratio = b.t;
                    break;
                }
                slope += delta;
                passes.push_back({b.row, partner});
            }
            if (chosen < 0) {
                if (passes.empty()) return SolveStatus::Unbounded;
                // improving beyond every crossing: the handed-over basics
                // carry the ray, nothing blocks the entering column
                return SolveStatus::Unbounded;
            }

            for (const auto& [row, partner] : passes) {
                gather_column(partner, scratch_col);
                pivot(row, partner, scratch_col);
                ++iterations_;
            }
            if (!passes.empty()) gather_column(enter, col); // passed rows changed their entries
            degen_streak = (chosen_ratio <= kDegenTol) ? degen_streak + 1 : 0;
            pivot(chosen, enter, col);
            ++iterations_;
        }
    }

    // After phase 1 any virtual artificial still basic sits at value zero:
    // swap it for a real column where one exists, else its row is redundant
    // and stays parked.
    void expel_artificials() {
        std::vector<std::pair<int, double>> col;
        for (int i = 0; i < m_; ++i) {
            if (basis_[static_cast<std::size_t>(i)] < n_cols_) continue;
            const SpRow& row = rows_[static_cast<std::size_t>(i)];
            int target = -1;
            for (std::size_t t = 0; t < row.nnz(); ++t) {
                const int j = row.idx[t];
                if (!is_basic_[static_cast<std::size_t>(j)] && std::fabs(row.val[t]) > kPivotTol) {
                    if (target < 0 || j < target) target = j;
                }
            }
            if (target >= 0) {
                gather_column(target, col);
                pivot(i, target, col);
            }
        }
    }

    SolveOptions opt_;
    std::vector<SpRow> rows_;
    Eigen::VectorXd rhs_;  // exact values, reported in the solution
    Eigen::VectorXd rhsp_; // perturbed values driving ratio tests
    Eigen::VectorXd cost2_;
    Eigen::VectorXd cost_;  // phase-2 reduced costs, updated every pivot
    Eigen::VectorXd costw_; // phase-1 infeasibility gradient
    std::vector<char> ruled_out_;
    std::vector<char> list_dirty_;
    std::vector<int> ruled_out_list_;
    double mu_ = 0.0;
    double w_infeas_ = 0.0;
    std::vector<int> candidates_w_;
    std::vector<std::vector<int>> col_rows_;
    std::vector<int> basis_;
    std::vector<char> is_basic_;
    SpRow scratch_;
    std::vector<SpRow> rows0_; // pristine post-crash rows for reinversion
    Eigen::VectorXd rhs0_;
    std::size_t nnz0_ = 0;
    long pivots_since_refactor_ = 0;
    double cost_rhs_ = 0.0;
    int m_ = 0;
    int n_cols_ = 0;
    int n_artificial_ = 0;
    int scan_pos_ = 0;
    long iterations_ = 0;
};

Eigen::VectorXd recover(const std::vector<VarMap>& vmap, const Eigen::VectorXd& x_std, int num_vars) {
    Eigen::VectorXd x(num_vars);
    for (int v = 0; v < num_vars; ++v) {
        const VarMap& m = vmap[static_cast<std::size_t>(v)];
        switch (m.kind) {
        case VarMap::Shifted: x(v) = x_std(m.col) + m.offset; break;
        case VarMap::Mirrored: x(v) = m.offset - x_std(m.col); break;
        case VarMap::Split: x(v) = x_std(m.col) - x_std(m.col_neg); break;
        }
    }
    return x;
}

} // namespace

void LinearProgram::validate() const {
    const int n = num_vars();
    if (lower.size() != n || upper.size() != n)
        throw MalformedInstance("LinearProgram: bound dimensions disagree with objective");
    for (int v = 0; v < n; ++v)
        if (!(lower(v) <= upper(v))) throw MalformedInstance("LinearProgram: lower bound above upper bound");
    for (const auto& r : rows) {
        for (const auto& [v, a] : r.coeffs) {
            if (v < 0 || v >= n) throw MalformedInstance("LinearProgram: coefficient index out of range");
            if (!std::isfinite(a)) throw MalformedInstance("LinearProgram: non-finite coefficient");
        }
        if (!std::isfinite(r.rhs)) throw MalformedInstance("LinearProgram: non-finite rhs");
    }
}

const char* status_name(SolveStatus s) {
    switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
    }
    return "?";
}

LpSolution solve(const LinearProgram& lp, const SolveOptions& options) {
    lp.validate();

    Standardized st = standardize(lp);
    const std::vector<VarMap> vmap = st.vmap;
    SparseSimplex simplex(std::move(st), options);
    const SolveStatus status = simplex.run();

    LpSolution sol;
    sol.status = status;
    sol.iterations = simplex.iterations();
    if (status == SolveStatus::Optimal || status == SolveStatus::IterationLimit) {
        sol.x = recover(vmap, simplex.standard_solution(), lp.num_vars());
        sol.objective = lp.objective.dot(sol.x);
    } else {
        sol.x = Eigen::VectorXd::Zero(lp.num_vars());
        sol.objective = status == SolveStatus::Unbounded ? -kInfinity : 0.0;
    }
    return sol;
}

double max_residual(const LinearProgram& lp, const Eigen::VectorXd& x) {
    double worst = 0.0;
    for (const auto& r : lp.rows) {
        double lhs = 0.0;
        for (const auto& [v, a] : r.coeffs) lhs += a * x(v);
        switch (r.sense) {
        case Sense::LessEqual: worst = std::max(worst, lhs - r.rhs); break;
        case Sense::GreaterEqual: worst = std::max(worst, r.rhs - lhs); break;
        case Sense::Equal: worst = std::max(worst, std::fabs(lhs - r.rhs)); break;
        }
    }
    for (int v = 0; v < lp.num_vars(); ++v) {
        worst = std::max(worst, lp.lower(v) - x(v));
        if (std::isfinite(lp.upper(v))) worst = std::max(worst, x(v) - lp.upper(v));
    }
    return worst;
}

void dump(const LinearProgram& lp, std::ostream& os) {
    os << "vars " << lp.num_vars() << "\n";
    os << "min";
    for (int v = 0; v < lp.num_vars(); ++v)
        if (lp.objective(v) != 0.0) os << ' ' << v << ':' << lp.objective(v);
    os << "\n";
    for (int v = 0; v < lp.num_vars(); ++v) {
        if (lp.lower(v) != 0.0 || std::isfinite(lp.upper(v)))
            os << "bound " << v << ' ' << lp.lower(v) << ' ' << lp.upper(v) << "\n";
    }
    for (const auto& r : lp.rows) {
        os << "row " << (r.sense == Sense::LessEqual ? "<=" : r.sense == Sense::Equal ? "=" : ">=") << ' '
           << r.rhs;
        for (const auto& [v, a] : r.coeffs) os << ' ' << v << ':' << a;
        os << "\n";
    }
}

} // namespace privsig::lp
