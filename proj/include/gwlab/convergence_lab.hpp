#pragma once

#include "gwlab/asymptotics.hpp"
#include "gwlab/model.hpp"
#include "gwlab/montecarlo.hpp"
#include "gwlab/pgf_engine.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gwlab {

/// eps(n) = 0, c / n^p, or table[n-1] (zero past the end of the table).
struct Perturbation {
    enum class Kind { zero, power, table };
    Kind kind = Kind::zero;
    double c = 0.0;
    double p = 0.0;
    std::vector<double> table;

    static Perturbation none() { return {}; }
    static Perturbation power(double c, double p) { return {Kind::power, c, p, {}}; }
    double at(std::int64_t n) const;
};

/// Delta_n = A n^{-alpha}(1 + eps1(n)) + Delta_{n-1}(1 - B n^{-beta}(1 + eps2(n))), Delta_0 = 0.
struct RecursionSpec {
    double A = 1.0;
    double B = 1.0;
    double alpha = 1.0;
    double beta = 0.5;
    Perturbation eps1;
    Perturbation eps2;

    /// Throws DomainError unless A >= 0, B > 0, alpha > beta and beta in (0,1).
    void validate() const;
};

/// Returns n^{alpha-beta} Delta_n for n = 0..n_max (entry 0 is 0).
std::vector<double> lemma_basic_iterate(const RecursionSpec& r, std::int64_t n_max);

enum class Verdict { converging, inconclusive, diverging };
const char* to_string(Verdict v) noexcept;

/// Verdict from a deviation sequence: converging if its absolute values
/// shrink strictly (or are all zero), diverging if they grow strictly.
Verdict trend_verdict(const std::vector<double>& deviations);

struct LimitEstimate {
    double limit = 0.0;
    Verdict verdict = Verdict::inconclusive;
};

/// Extrapolates a sequence sampled on a geometric grid assuming
/// value + c n^{-delta}: Aitken's delta-squared on the last three points.
LimitEstimate limit_estimate(const std::vector<double>& values);

enum class TableKind { T1, Survival, T2, T3, T4, T5, Yaglom, Tot1 };
const char* to_string(TableKind k) noexcept;

/// How the observation time m follows n in the conditional tables.
enum class MRule {
    fixed,           // m = m_fixed
    sharp,           // m = y n^{gamma_i}
    geometric_mean,  // m = n^{(gamma_i + gamma_{i+1})/2}
    final_stage,     // m = x n
};
const char* to_string(MRule r) noexcept;

struct TableParams {
    int i = 1;
    /// T2: lambda over 1..N; T3: over i..N; T4: over i+1..N; T5 and Yaglom: {lambda}.
    std::vector<double> lambda;
    double x = 0.5;
    double y = 1.0;
    MRule m_rule = MRule::fixed;
    std::int64_t m_fixed = 1;
    T3Exponent exponent = T3Exponent::lemma;
    Precision precision = Precision::standard;
    PhiOptions phi;
    McConfig mc;
};

/// Natural m rule for each conditional kind: T2 geometric mean with
/// gamma_0 = 0, T3 sharp, T4 geometric mean, T5 final stage.
MRule default_m_rule(TableKind k) noexcept;

/// m for the given rule at level i (i = 0 allowed, gamma_0 = 0), rounded and
/// clamped to 1..n-1.
std::int64_t observation_time(MRule rule, const AsymptoticConstants& c, int i, const TableParams& p, std::int64_t n);

struct ConvergenceRow {
    /// Grid value: n, or lambda for Tot1.
    double n = 0;
    std::int64_t m = 0;
    double exact = 0;
    double predicted = 0;
    double ratio = 0;
    /// Numerical (or Monte Carlo standard) error of `exact`.
    double exact_error = 0;
};

struct ConvergenceTable {
    TableKind kind = TableKind::T1;
    std::string label;
    std::vector<ConvergenceRow> rows;
    /// Extrapolated limit of the ratio column.
    double extrapolated = 0;
    /// Verdict on |ratio - 1| along the grid.
    Verdict verdict = Verdict::inconclusive;

    double last_deviation() const { return rows.empty() ? 0.0 : std::abs(rows.back().ratio - 1.0); }
};

/// Exact finite-n values against the predicted asymptote on `grid`
/// (lambda values for Tot1, generations otherwise).
ConvergenceTable theorem_table(TableKind kind, const ModelSpec& spec, const TableParams& params,
                               const std::vector<double>& grid);

/// One table per lambda set; conditional regimes share the survival
/// recursion across the sets.
std::vector<ConvergenceTable> theorem_tables(TableKind kind, const ModelSpec& spec, const TableParams& params,
                                             const std::vector<std::vector<double>>& lambda_sets,
                                             const std::vector<double>& grid);

}  // namespace gwlab
