#include "boostdens/fdiv.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "boostdens/common.hpp"

namespace boostdens::fdiv {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// KL: f(t) = t log t
double kl_f(double t) { return t * std::log(t); }
double kl_conj(double s) { return std::exp(s - 1.0); }
double kl_prime(double t) { return std::log(t) + 1.0; }
double kl_conj_of_prime(double t) { return t; }

// Reverse KL: f(t) = -log t
double rkl_f(double t) { return -std::log(t); }
double rkl_conj(double s) { return -std::log(-s) - 1.0; }
double rkl_prime(double t) { return -1.0 / t; }
double rkl_conj_of_prime(double t) { return std::log(t) - 1.0; }

// Squared Hellinger: f(t) = (sqrt t - 1)^2
double hel_f(double t) {
  const double r = std::sqrt(t) - 1.0;
  return r * r;
}
double hel_conj(double s) { return s / (1.0 - s); }
double hel_prime(double t) { return 1.0 - 1.0 / std::sqrt(t); }
double hel_conj_of_prime(double t) { return std::sqrt(t) - 1.0; }

// Pearson chi^2: f(t) = (t - 1)^2
double pea_f(double t) { return (t - 1.0) * (t - 1.0); }
double pea_conj(double s) { return s * (4.0 + s) / 4.0; }
double pea_prime(double t) { return 2.0 * (t - 1.0); }
double pea_conj_of_prime(double t) { return t * t - 1.0; }

// GAN: f(t) = t log t - (t + 1) log(t + 1)
double gan_f(double t) { return t * std::log(t) - (t + 1.0) * std::log1p(t); }
double gan_conj(double s) { return -std::log1p(-std::exp(s)); }
double gan_prime(double t) { return std::log(t) - std::log1p(t); }
double gan_conj_of_prime(double t) { return std::log1p(t); }

[[noreturn]] void out_of_domain(const DivergenceSpec& spec, const char* what, double t,
                                Interval dom) {
  std::ostringstream os;
  os << to_string(spec.name) << ": " << what << " argument " << t << " outside (" << dom.lo
     << ", " << dom.hi << ")";
  throw DomainError(os.str());
}

}  // namespace

std::string_view to_string(Divergence d) {
  switch (d) {
    case Divergence::KL: return "KL";
    case Divergence::ReverseKL: return "ReverseKL";
    case Divergence::Hellinger: return "Hellinger";
    case Divergence::Pearson: return "Pearson";
    case Divergence::GAN: return "GAN";
  }
  return "?";
}

DivergenceSpec DivergenceSpec::make(Divergence d) {
  const Interval positive{0.0, kInf};
  switch (d) {
    case Divergence::KL:
      return {d, kl_f, kl_conj, kl_prime, kl_conj_of_prime, positive, {-kInf, kInf}};
    case Divergence::ReverseKL:
      return {d, rkl_f, rkl_conj, rkl_prime, rkl_conj_of_prime, positive, {-kInf, 0.0}};
    case Divergence::Hellinger:
      return {d, hel_f, hel_conj, hel_prime, hel_conj_of_prime, positive, {-kInf, 1.0}};
    case Divergence::Pearson:
      return {d, pea_f, pea_conj, pea_prime, pea_conj_of_prime, positive, {-kInf, kInf}};
    case Divergence::GAN:
      return {d, gan_f, gan_conj, gan_prime, gan_conj_of_prime, positive, {-kInf, 0.0}};
  }
  throw DomainError("unknown divergence");
}

double eval_table(const DivergenceSpec& spec, Column column, double t) {
  switch (column) {
    case Column::f:
      if (!spec.dom_f.contains(t)) out_of_domain(spec, "f", t, spec.dom_f);
      return spec.f(t);
    case Column::conj:
      if (!spec.dom_conj.contains(t)) out_of_domain(spec, "f*", t, spec.dom_conj);
      return spec.f_conj(t);
    case Column::prime:
      if (!spec.dom_f.contains(t)) out_of_domain(spec, "f'", t, spec.dom_f);
      return spec.f_prime(t);
    case Column::conj_of_prime:
      if (!spec.dom_f.contains(t)) out_of_domain(spec, "f* o f'", t, spec.dom_f);
      return spec.f_conj_of_prime(t);
  }
  throw DomainError("unknown column");
}

DiscreteDistPair::DiscreteDistPair(std::vector<double> p, std::vector<double> q)
    : p_(std::move(p)), q_(std::move(q)) {
  if (p_.empty() || p_.size() != q_.size())
    throw DomainError("discrete pair: p and q must have equal, positive length");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!(p_[i] >= 0.0)) throw DomainError("discrete pair: p must be nonnegative");
    if (!(q_[i] > 0.0)) throw DomainError("discrete pair: q must be strictly positive");
    sp += p_[i];
    sq += q_[i];
  }
  if (std::abs(sp - 1.0) > 1e-12 || std::abs(sq - 1.0) > 1e-12)
    throw DomainError("discrete pair: probabilities must sum to 1");
}

std::vector<double> DiscreteDistPair::ratio() const {
  std::vector<double> r(p_.size());
  for (std::size_t i = 0; i < p_.size(); ++i) r[i] = p_[i] / q_[i];
  return r;
}

double f_divergence_discrete(const DivergenceSpec& spec, const DiscreteDistPair& pair) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pair.support_size(); ++i) {
    const double t = pair.p()[i] / pair.q()[i];
    sum += pair.q()[i] * eval_table(spec, Column::f, t);
  }
  return sum;
}

double variational_objective(const DivergenceSpec& spec, std::span<const double> u_on_p,
                             std::span<const double> u_on_q) {
  if (u_on_p.empty() || u_on_q.empty())
    throw EmptySampleError("variational objective needs nonempty samples");
  double ep = 0.0;
  for (double u : u_on_p) ep += eval_table(spec, Column::prime, u);
  double eq = 0.0;
  for (double u : u_on_q) eq += eval_table(spec, Column::conj_of_prime, u);
  return ep / static_cast<double>(u_on_p.size()) - eq / static_cast<double>(u_on_q.size());
}

double variational_objective_exact(const DivergenceSpec& spec, const DiscreteDistPair& pair,
                                   std::span<const double> u) {
  if (u.size() != pair.support_size())
    throw DimensionError("variational objective: u must have one value per support point");
  double j = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    j += pair.p()[i] * eval_table(spec, Column::prime, u[i]);
    j -= pair.q()[i] * eval_table(spec, Column::conj_of_prime, u[i]);
  }
  return j;
}

double phi(double D) { return D / (1.0 - D); }

IsomorphismImage isomorphisms(double c) { return {sigmoid(c), std::exp(c)}; }

}  // namespace boostdens::fdiv
