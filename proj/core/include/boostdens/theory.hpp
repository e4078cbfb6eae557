#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "boostdens/common.hpp"
#include "boostdens/fdiv.hpp"

// Brute-force checks of the boosting inequalities on finite supports.
namespace boostdens::theory {

/// P, Q_{t-1}, a candidate ratio update d > 0 and a step alpha.  The error
/// term is eps = d q / p, so d = (p / q) eps, and the classifier is c = log d.
class DiscreteBoostInstance {
 public:
  /// Throws DomainError for a size mismatch, d <= 0 or p with a zero entry.
  DiscreteBoostInstance(fdiv::DiscreteDistPair pair, Vec d, double alpha);
  /// d = (p / q) eps.
  static DiscreteBoostInstance from_error_term(fdiv::DiscreteDistPair pair, const Vec& eps, double alpha);

  const fdiv::DiscreteDistPair& pair() const { return pair_; }
  const Vec& p() const { return p_; }
  const Vec& q() const { return q_; }
  const Vec& d() const { return d_; }
  double alpha() const { return alpha_; }

  Vec epsilon() const;
  Vec c() const;
  double c_sup() const;
  /// Q_t proportional to q d^alpha, normalized.
  Vec updated(double alpha) const;
  Vec updated() const { return updated(alpha_); }
  /// R proportional to eps p, normalized.
  Vec error_density() const;
  double mu_p() const;
  double mu_q() const;

 private:
  fdiv::DiscreteDistPair pair_;
  Vec p_, q_, d_;
  double alpha_;
};

/// sum_i p_i log(p_i / q_i).
double kl(const Vec& p, const Vec& q);

/// Support size uniform in [min_support, max_support], P and Q from Dirichlet(1),
/// d log-uniform in [e^-2, e^2], alpha uniform in [0, 1].
DiscreteBoostInstance random_instance(Rng& rng, int min_support = 2, int max_support = 10);

/// Outcome of a single inequality: `lhs <= rhs` up to tolerance; slack = rhs - lhs.
struct Inequality {
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
  /// Fails when lhs exceeds rhs by more than rel_tol * max(1, |lhs|, |rhs|).
  bool holds(double rel_tol = 1e-9) const;
};

/// KL(P, Q_t) <= (1 - alpha) KL(P, Q) + alpha (log E_P eps - E_P log eps).
Inequality check_kl_bound(const DiscreteBoostInstance& inst);

/// KL(P, Q_t) <= (1 - alpha (1 - gamma)) KL(P, Q).  Throws PreconditionUnmet
/// unless KL(P, R) <= gamma KL(P, Q).
Inequality check_corollary_qt_rt(const DiscreteBoostInstance& inst, double gamma);

/// sqrt(1 - a^2) exp(-(b / 2) log((1 + a) / (1 - a))) <= 1 - a b.
/// Throws DomainError for |a| >= 1.
Inequality rn_inequality(double a, double b);
/// True when rn_inequality holds within an absolute slack of 1e-12.
bool check_rn_inequality(double a, double b);

/// Jensen gap E_Q exp(c) - exp(E_Q c) against D_exp(b || log((e^b - e^a) / (b - a)))
/// with a = min c, b = max c.  Throws DegenerateRange when a == b.
Inequality reverse_jensen(const Vec& c, const Vec& q);
/// Same bound with a caller-supplied range [a, b]; the bound needs c within it.
Inequality reverse_jensen_on_range(const Vec& c, const Vec& q, double a, double b);
bool check_reverse_jensen(const Vec& c, const Vec& q);

/// Closed form of D_exp(z || log s) with s = sinh(z) / z:
///   e^z (1/2 - 1/(2z)) + e^-z (1/2 + 1/(2z)) + s log s,  0 at z = 0.
double bregman_chord_gap(double z);
/// bregman_chord_gap(z) <= z^2.
Inequality bregbound(double z);
bool check_bregbound(double z);

/// E_Q exp(alpha c) <= sqrt(1 - mu_q^2) with alpha the WLA step for c_sup.
/// Throws DomainError unless mu_q lies in (-1, 1).
Inequality lemma_wla(const Vec& c, const Vec& q, double c_sup);
bool check_lemma_wla(const Vec& c, const Vec& q, double c_sup);

/// True when exp(2 c_sup) <= 2 + mu_p c_sup and E_Q exp(c) <= exp(mu_p c_sup / 4).
bool properly_scaled(const DiscreteBoostInstance& inst);

/// Regular regime: KL(P, Q_t) <= KL(P, Q) - (mu_p / 4) log((1 + mu_q) / (1 - mu_q))
/// for Q_t at the WLA step, which must be below 1.  High regime (alpha = 1,
/// mu_q >= mu* = tanh(c_sup)): decrease mu_p c_sup + mu*^2 (1/2 + delta / (1 - mu*^2))
/// with delta = mu_q / mu* - 1.  With `enforce` set, instances outside the
/// regime (or without positive edges) throw PreconditionUnmet; properly scaled
/// classifiers are the caller's responsibility.  `stated_c_sup` replaces the
/// true sup |c| in the edges and the decrease (used by negative controls).
Inequality regular_regime_bound(const DiscreteBoostInstance& inst, bool enforce = true);
Inequality high_regime_bound(const DiscreteBoostInstance& inst, bool enforce = true,
                             std::optional<double> stated_c_sup = std::nullopt);

struct WdaTerms {
  double mu_epsilon = 0.0;  ///< E_P log eps / c_sup
  double mu_p = 0.0;
  double identity_gap = 0.0;  ///< mu_p - KL(P, Q) / c_sup - mu_epsilon
  bool dominates(double gamma_eps) const { return mu_epsilon >= -gamma_eps; }
};
WdaTerms wda_mu_epsilon(const DiscreteBoostInstance& inst);

struct CheckReport {
  std::string name;
  std::size_t n_trials = 0;
  std::size_t n_violations = 0;
  double worst_slack = 0.0;
  double tolerance = 1e-9;
  /// Set when instance generation could not meet the hypothesis.
  std::optional<std::string> precondition_unmet;

  bool passed() const { return n_violations == 0 && !precondition_unmet; }
  void record(const Inequality& ineq);
};

struct SuiteReport {
  std::vector<CheckReport> checks;
  /// Out-of-hypothesis inputs; each must report at least one violation.
  std::vector<CheckReport> negative_controls;
  double seconds = 0.0;

  bool passed() const;
};

struct SuiteConfig {
  std::size_t trials = 1000;
  double tolerance = 1e-9;
  std::uint64_t seed = 0;
  /// Cap on rejection-sampling draws per accepted instance.
  std::size_t max_draws_per_instance = 2000;
};

SuiteReport run_suite(const SuiteConfig& config = {});

nlohmann::json to_json(const CheckReport& r);
nlohmann::json to_json(const SuiteReport& r);

}  // namespace boostdens::theory
