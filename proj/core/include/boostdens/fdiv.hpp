#pragma once

// f-divergences, their Fenchel machinery and the variational objective
//
//   J(u) = E_P f'(u) - E_Q (f* o f')(u)
//
// which lower-bounds I_f(P, Q) for every positive u and attains it at u = dP/dQ.

#include <span>
#include <string_view>
#include <vector>

namespace boostdens::fdiv {

enum class Divergence { KL, ReverseKL, Hellinger, Pearson, GAN };

inline constexpr Divergence kAllDivergences[] = {
    Divergence::KL, Divergence::ReverseKL, Divergence::Hellinger,
    Divergence::Pearson, Divergence::GAN};

std::string_view to_string(Divergence d);

/// Open interval (lo, hi); infinities allowed.
struct Interval {
  double lo;
  double hi;

  bool contains(double t) const { return t > lo && t < hi; }
};

enum class Column { f, conj, prime, conj_of_prime };

/// One f-divergence as four scalar maps with their domains.  `f`, `f_prime` and
/// `f_conj_of_prime` are defined on `dom_f`; `f_conj` on `dom_conj`.
///
/// Hellinger uses f(t) = (sqrt t - 1)^2, f'(t) = 1 - 1/sqrt t and
/// f*(s) = s / (1 - s).  The closed form 3/(s - 1) - 1 that circulates in some
/// tables is not the conjugate of this f and breaks Fenchel-Young; likewise the
/// GAN derivative is log t - log(t + 1).
struct DivergenceSpec {
  using Map = double (*)(double);

  Divergence name;
  Map f;
  Map f_conj;
  Map f_prime;
  Map f_conj_of_prime;
  Interval dom_f;
  Interval dom_conj;

  static DivergenceSpec make(Divergence d);
};

/// Evaluates one column of the divergence table; throws DomainError outside
/// the column's domain.
double eval_table(const DivergenceSpec& spec, Column column, double t);

/// Pair of probability vectors over a finite support; q strictly positive.
class DiscreteDistPair {
 public:
  /// Throws DomainError unless both vectors have equal positive length, are
  /// nonnegative, sum to 1 within 1e-12 and q > 0.
  DiscreteDistPair(std::vector<double> p, std::vector<double> q);

  std::size_t support_size() const { return p_.size(); }
  const std::vector<double>& p() const { return p_; }
  const std::vector<double>& q() const { return q_; }
  /// Density ratio p_i / q_i.
  std::vector<double> ratio() const;

 private:
  std::vector<double> p_;
  std::vector<double> q_;
};

/// Brute-force I_f(P, Q) = sum_i q_i f(p_i / q_i).
double f_divergence_discrete(const DivergenceSpec& spec, const DiscreteDistPair& pair);

/// Estimated J(u) from u evaluated on a P-sample and a Q-sample (sample means).
double variational_objective(const DivergenceSpec& spec, std::span<const double> u_on_p,
                             std::span<const double> u_on_q);

/// Exact J(u) on a discrete pair, u given per support point.
double variational_objective_exact(const DivergenceSpec& spec, const DiscreteDistPair& pair,
                                   std::span<const double> u);

// Isomorphisms between classifiers c, conditional probabilities D and density
// ratios d.

/// phi(D) = D / (1 - D).
double phi(double D);

struct IsomorphismImage {
  double D;  ///< sigma(c) in (0, 1)
  double d;  ///< phi(sigma(c)) = exp(c) > 0
};

/// Maps a classifier output to (sigma(c), exp(c)).  Saturates: for |c| > ~37
/// D rounds to 0 or 1, and d overflows to +inf past c ~ 709.
IsomorphismImage isomorphisms(double c);

}  // namespace boostdens::fdiv
