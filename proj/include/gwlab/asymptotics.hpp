#pragma once

// Limit constants of the strongly critical decomposable process and the
// limit functionals Phi_i.

#include "gwlab/model.hpp"
#include "gwlab/pgf_engine.hpp"

#include <span>
#include <string>
#include <variant>
#include <vector>

namespace gwlab {

/// All vectors are indexed by type (entry 0 is used only where a 0-th value
/// is meaningful: gamma(0) = 0, D(0) = 1).
class AsymptoticConstants {
public:
    int types() const noexcept { return n_; }

    double gamma(int i) const { return gamma_.at(static_cast<std::size_t>(i)); }
    double b(int i) const { return b_.at(static_cast<std::size_t>(i)); }
    /// m_{i,i+1}
    double m_next(int i) const { return m_next_.at(static_cast<std::size_t>(i)); }
    /// a_{i,j}; zero for j < i
    double a(int i, int j) const { return a_(i, j); }
    /// f_{k,i} = (k - i) a_{i,k}
    double f(int k, int i) const { return k < i ? 0.0 : (k - i) * a_(i, k); }
    /// c_{i,N}
    double c(int i) const { return c_.at(static_cast<std::size_t>(i)); }
    /// c_{1,i}: the c_{1,.} constant of the process restricted to types 1..i
    double c1(int i) const { return c1_.at(static_cast<std::size_t>(i)); }
    /// D_i for 0 <= i <= N-1
    double D(int i) const { return d_.at(static_cast<std::size_t>(i)); }
    /// g_{i,N} = gamma_i c_{i,N}
    double g(int i) const { return gamma(i) * c(i); }

    friend AsymptoticConstants constants(const MomentSummary& mom);

private:
    int n_ = 0;
    std::vector<double> gamma_, b_, m_next_, c_, c1_, d_;
    Matrix a_;
};

/// Throws ConstantsUndefinedError if some b_i or m_{i,i+1} is not in (0, inf).
AsymptoticConstants constants(const MomentSummary& mom);

struct IdentityResidual {
    std::string name;
    /// Largest relative residual over all indices the identity ranges over.
    double residual = 0.0;
};

/// The five relations tying the constants together, each evaluated from
/// independently computed quantities.
std::vector<IdentityResidual> constants_identities(const AsymptoticConstants& c);

enum class DerivativeMode { sensitivity, finite_difference };

struct PhiOptions {
    double rtol = 1e-10;
    /// Characteristics start where every transformed coordinate is at most this.
    double start_level = 1e-6;
    DerivativeMode derivatives = DerivativeMode::sensitivity;
    /// Relative step for DerivativeMode::finite_difference.
    double fd_step = 1e-5;
};

struct PhiValue {
    double value = 0.0;
    double error = 0.0;
    /// d Phi_i / d lambda_k, k = i..N; empty unless requested.
    std::vector<double> gradient;
};

/// Evaluates Phi_i(lambda_i, ..., lambda_N), 1 <= i < N, by integrating
/// the Riccati equation along lambda_k e^{(k-i+1) t} from t0 < 0 to 0.
class PhiSolver {
public:
    PhiSolver(const AsymptoticConstants& c, int i, PhiOptions opts = {});

    int index() const noexcept { return i_; }
    /// lambda has N - i + 1 nonnegative coordinates.
    PhiValue operator()(std::span<const double> lambda, bool with_gradient = false) const;

private:
    PhiValue solve(std::span<const double> lambda, bool sensitivities) const;

    int i_;
    int dim_;
    double b_;
    std::vector<double> f_;      // f_{k,i}, k = i..N
    std::vector<double> alpha_;  // first-order Taylor coefficients at 0
    std::vector<double> beta_;   // second-order coefficients, dim x dim
    PhiOptions opts_;
};

PhiValue phi_solve(const AsymptoticConstants& c, int i, std::span<const double> lambda, bool with_gradient = false,
                   const PhiOptions& opts = {});

/// The closed form of Phi_1 for two types.
double phi_closed_form_pair(double b, double m_next, double lambda1, double lambda2);

/// m (1 - H_m^{(i)}(e^{-lambda_i/m}, e^{-lambda_{i+1}/m^2}, ...)); lambda over i..N.
double phi_via_pgf_limit(const ModelSpec& spec, int i, std::span<const double> lambda, std::int64_t m);

enum class TheoremKind { T1, T2, T3, T4, T5, Yaglom, Tot1 };
const char* to_string(TheoremKind k) noexcept;

/// Exponent of the bracket (Phi_i(...)/y)^e in the sharp-boundary regime.
enum class T3Exponent {
    /// e = 1/2^{i-1}
    lemma,
    /// e = 1/2^i
    theorem,
};
const char* to_string(T3Exponent e) noexcept;

struct T1Args {
    int i = 1;
    double n = 1;
};
struct T2Args {
    std::vector<double> lambda;  // 1..N
};
struct T3Args {
    int i = 1;
    double y = 1;
    std::vector<double> lambda;  // i..N
    T3Exponent exponent = T3Exponent::lemma;
};
struct T4Args {
    int i = 1;
    std::vector<double> lambda;  // i+1..N
};
struct T5Args {
    double x = 0.5;
    double lambda = 0;
};
struct YaglomArgs {
    double lambda = 0;
};
struct Tot1Args {
    int i = 1;
    double lambda = 0;
};

using TheoremArgs = std::variant<T1Args, T2Args, T3Args, T4Args, T5Args, YaglomArgs, Tot1Args>;

double rhs_t1(const AsymptoticConstants& c, const T1Args& a);
double rhs_t2(const AsymptoticConstants& c, const T2Args& a, const PhiOptions& opts = {});
double rhs_t3(const AsymptoticConstants& c, const T3Args& a, const PhiOptions& opts = {});
double rhs_t4(const AsymptoticConstants& c, const T4Args& a);
double rhs_t5(const AsymptoticConstants& c, const T5Args& a);
double rhs_yaglom(const AsymptoticConstants& c, const YaglomArgs& a);
double rhs_tot1(const AsymptoticConstants& c, const Tot1Args& a);

TheoremKind kind_of(const TheoremArgs& args) noexcept;
double theorem_rhs(const AsymptoticConstants& c, const TheoremArgs& args, const PhiOptions& opts = {});

}  // namespace gwlab
