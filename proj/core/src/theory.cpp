#include "boostdens/theory.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include <nlohmann/json.hpp>

namespace boostdens::theory {
namespace {

Vec to_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> dirichlet_ones(int n, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(static_cast<std::size_t>(n));
  double s = 0.0;
  for (auto& x : w) {
    // Guard against an exact zero, which the error term cannot divide by.
    do x = e(rng);
    while (!(x > 0.0));
    s += x;
  }
  for (auto& x : w) x /= s;
  return w;
}

Vec normalized(const Vec& w) { return w / w.sum(); }

double wla_alpha(double mu_q, double c_sup) { return std::log((1.0 + mu_q) / (1.0 - mu_q)) / (2.0 * c_sup); }

}  // namespace

DiscreteBoostInstance::DiscreteBoostInstance(fdiv::DiscreteDistPair pair, Vec d, double alpha)
    : pair_(std::move(pair)), p_(to_vec(pair_.p())), q_(to_vec(pair_.q())), d_(std::move(d)), alpha_(alpha) {
  if (d_.size() != p_.size()) throw DomainError("instance: d has wrong length");
  if (!(d_.array() > 0.0).all() || !d_.allFinite()) throw DomainError("instance: d must be positive and finite");
  if (!(p_.array() > 0.0).all()) throw DomainError("instance: the error term needs p > 0");
}

DiscreteBoostInstance DiscreteBoostInstance::from_error_term(fdiv::DiscreteDistPair pair, const Vec& eps,
                                                             double alpha) {
  const Vec p = to_vec(pair.p()), q = to_vec(pair.q());
  if (eps.size() != p.size()) throw DomainError("instance: eps has wrong length");
  Vec d = (p.array() / q.array() * eps.array()).matrix();
  return DiscreteBoostInstance(std::move(pair), std::move(d), alpha);
}

Vec DiscreteBoostInstance::epsilon() const { return (d_.array() * q_.array() / p_.array()).matrix(); }
Vec DiscreteBoostInstance::c() const { return d_.array().log().matrix(); }
double DiscreteBoostInstance::c_sup() const { return c().cwiseAbs().maxCoeff(); }

Vec DiscreteBoostInstance::updated(double alpha) const {
  // Work in logs so large |c| does not overflow.
  Vec lw = (q_.array().log() + alpha * c().array()).matrix();
  const double m = lw.maxCoeff();
  return normalized((lw.array() - m).exp().matrix());
}

Vec DiscreteBoostInstance::error_density() const { return normalized(epsilon().cwiseProduct(p_)); }

double DiscreteBoostInstance::mu_p() const { return p_.dot(c()) / c_sup(); }
double DiscreteBoostInstance::mu_q() const { return -q_.dot(c()) / c_sup(); }

double kl(const Vec& p, const Vec& q) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
  return s;
}

DiscreteBoostInstance random_instance(Rng& rng, int min_support, int max_support) {
  std::uniform_int_distribution<int> size(min_support, max_support);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  const int n = size(rng);
  fdiv::DiscreteDistPair pair(dirichlet_ones(n, rng), dirichlet_ones(n, rng));
  Vec d(n);
  for (int i = 0; i < n; ++i) d[i] = std::exp(u(rng));
  return DiscreteBoostInstance(std::move(pair), std::move(d), a(rng));
}

bool Inequality::holds(double rel_tol) const {
  const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
  return lhs <= rhs + rel_tol * scale;
}

Inequality check_kl_bound(const DiscreteBoostInstance& inst) {
  const Vec& p = inst.p();
  const Vec eps = inst.epsilon();
  const double a = inst.alpha();
  const double err = std::log(p.dot(eps)) - p.dot(eps.array().log().matrix());
  return {kl(p, inst.updated()), (1.0 - a) * kl(p, inst.q()) + a * err};
}

Inequality check_corollary_qt_rt(const DiscreteBoostInstance& inst, double gamma) {
  const double kl0 = kl(inst.p(), inst.q());
  // R = P is computed by renormalizing, so allow rounding in KL(P, R).
  if (kl(inst.p(), inst.error_density()) > gamma * kl0 + 1e-12)
    throw PreconditionUnmet("corollary: KL(P, R) exceeds gamma KL(P, Q)");
  return {kl(inst.p(), inst.updated()), (1.0 - inst.alpha() * (1.0 - gamma)) * kl0};
}

Inequality rn_inequality(double a, double b) {
  if (!(std::abs(a) < 1.0)) throw DomainError("rn inequality needs |a| < 1");
  return {std::sqrt(1.0 - a * a) * std::exp(-0.5 * b * std::log((1.0 + a) / (1.0 - a))), 1.0 - a * b};
}

bool check_rn_inequality(double a, double b) {
  const Inequality r = rn_inequality(a, b);
  return r.lhs <= r.rhs + 1e-12;
}

Inequality reverse_jensen_on_range(const Vec& c, const Vec& q, double a, double b) {
  if (c.size() != q.size() || c.size() == 0) throw DimensionError("reverse jensen: c and q differ in size");
  if (!(a < b)) throw DegenerateRange("reverse jensen: empty range");
  const double mean = q.dot(c);
  const double gap = q.dot(c.array().exp().matrix()) - std::exp(mean);
  const double slope = (std::exp(b) - std::exp(a)) / (b - a);
  const double z = std::log(slope);
  return {gap, std::exp(b) - slope - (b - z) * slope};
}

Inequality reverse_jensen(const Vec& c, const Vec& q) {
  if (c.size() == 0) throw DimensionError("reverse jensen: empty input");
  const double a = c.minCoeff(), b = c.maxCoeff();
  if (a == b) throw DegenerateRange("reverse jensen: c is constant, the gap is 0");
  return reverse_jensen_on_range(c, q, a, b);
}

bool check_reverse_jensen(const Vec& c, const Vec& q) { return reverse_jensen(c, q).holds(); }

double bregman_chord_gap(double z) {
  if (z == 0.0) return 0.0;
  const double s = std::sinh(z) / z;
  return std::exp(z) * (0.5 - 0.5 / z) + std::exp(-z) * (0.5 + 0.5 / z) + s * std::log(s);
}

Inequality bregbound(double z) { return {bregman_chord_gap(z), z * z}; }
bool check_bregbound(double z) { return bregbound(z).holds(); }

Inequality lemma_wla(const Vec& c, const Vec& q, double c_sup) {
  if (c.size() != q.size() || c.size() == 0) throw DimensionError("lemma: c and q differ in size");
  if (!(c_sup > 0.0)) throw DomainError("lemma: c_sup must be positive");
  const double mu = -q.dot(c) / c_sup;
  if (!(std::abs(mu) < 1.0)) throw DomainError("lemma: mu_q must lie in (-1, 1)");
  const double alpha = wla_alpha(mu, c_sup);
  return {q.dot((alpha * c).array().exp().matrix()), std::sqrt(1.0 - mu * mu)};
}

bool check_lemma_wla(const Vec& c, const Vec& q, double c_sup) { return lemma_wla(c, q, c_sup).holds(); }

bool properly_scaled(const DiscreteBoostInstance& inst) {
  const double cs = inst.c_sup();
  const double mp = inst.mu_p();
  return std::exp(2.0 * cs) <= 2.0 + mp * cs && inst.q().dot(inst.d()) <= std::exp(mp * cs / 4.0);
}

Inequality regular_regime_bound(const DiscreteBoostInstance& inst, bool enforce) {
  const double mp = inst.mu_p(), mq = inst.mu_q(), cs = inst.c_sup();
  if (!(std::abs(mq) < 1.0)) throw PreconditionUnmet("regular regime: mu_q must lie in (-1, 1)");
  const double alpha = wla_alpha(mq, cs);
  if (enforce && !(mp > 0.0 && mq > 0.0)) throw PreconditionUnmet("regular regime: edges must be positive");
  if (enforce && !(alpha < 1.0)) throw PreconditionUnmet("regular regime: step size is clamped");
  const double delta = mp / 4.0 * std::log((1.0 + mq) / (1.0 - mq));
  return {kl(inst.p(), inst.updated(alpha)), kl(inst.p(), inst.q()) - delta};
}

Inequality high_regime_bound(const DiscreteBoostInstance& inst, bool enforce, std::optional<double> stated_c_sup) {
  const double cs = stated_c_sup.value_or(inst.c_sup());
  if (!(cs > 0.0)) throw DomainError("high regime: c_sup must be positive");
  const double mp = inst.mu_p() * inst.c_sup() / cs, mq = inst.mu_q() * inst.c_sup() / cs;
  const double ms = std::tanh(cs);
  if (enforce && !(mp > 0.0 && mq > 0.0)) throw PreconditionUnmet("high regime: edges must be positive");
  if (enforce && !(mq >= ms)) throw PreconditionUnmet("high regime: mu_q is below tanh(c_sup)");
  const double dl = mq / ms - 1.0;
  const double decrease = mp * cs + ms * ms * (0.5 + dl / (1.0 - ms * ms));
  return {kl(inst.p(), inst.updated(1.0)), kl(inst.p(), inst.q()) - decrease};
}

WdaTerms wda_mu_epsilon(const DiscreteBoostInstance& inst) {
  const double cs = inst.c_sup();
  WdaTerms w;
  w.mu_epsilon = inst.p().dot(inst.epsilon().array().log().matrix()) / cs;
  w.mu_p = inst.mu_p();
  w.identity_gap = w.mu_p - kl(inst.p(), inst.q()) / cs - w.mu_epsilon;
  return w;
}

void CheckReport::record(const Inequality& ineq) {
  if (n_trials == 0 || ineq.slack() < worst_slack) worst_slack = ineq.slack();
  ++n_trials;
  if (!ineq.holds(tolerance)) ++n_violations;
}

bool SuiteReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed()) return false;
  for (const auto& c : negative_controls)
    if (c.n_violations == 0) return false;
  return true;
}

namespace {

// Scales c by 0.9^k until `accept` holds; returns the scaled instance.
std::optional<DiscreteBoostInstance> scale_until(const DiscreteBoostInstance& inst,
                                                 const std::function<bool(const DiscreteBoostInstance&)>& accept) {
  const Vec c = inst.c();
  double eta = 1.0;
  for (int k = 0; k < 400; ++k, eta *= 0.9) {
    DiscreteBoostInstance scaled(inst.pair(), (eta * c).array().exp().matrix(), inst.alpha());
    if (accept(scaled)) return scaled;
  }
  return std::nullopt;
}

// Draws instances until `make` returns one, at most `cap` times.
template <typename Make>
void battery(CheckReport& report, std::size_t trials, std::size_t cap, Rng& rng, Make make) {
  for (std::size_t t = 0; t < trials; ++t) {
    bool done = false;
    for (std::size_t draw = 0; draw < cap && !done; ++draw) {
      DiscreteBoostInstance inst = random_instance(rng);
      if (auto ineq = make(inst)) {
        report.record(*ineq);
        done = true;
      }
    }
    if (!done) {
      report.precondition_unmet = "no admissible instance within " + std::to_string(cap) + " draws";
      return;
    }
  }
}

bool positive_edges(const DiscreteBoostInstance& inst) { return inst.mu_p() > 0.0 && inst.mu_q() > 0.0; }

}  // namespace

SuiteReport run_suite(const SuiteConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  SuiteReport out;
  const std::size_t n = config.trials;
  const std::size_t cap = config.max_draws_per_instance;
  auto report = [&](std::string name) {
    CheckReport r;
    r.name = std::move(name);
    r.tolerance = config.tolerance;
    return r;
  };

  {
    CheckReport r = report("kl_bound");
    Rng rng = make_rng(config.seed, 1);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) { return std::optional(check_kl_bound(i)); });
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("corollary_qt_rt");
    Rng rng = make_rng(config.seed, 2);
    std::uniform_real_distribution<double> g(0.1, 1.0);
    battery(r, n, cap, rng, [&](const DiscreteBoostInstance& i) -> std::optional<Inequality> {
      const double gamma = g(rng);
      if (kl(i.p(), i.error_density()) > gamma * kl(i.p(), i.q())) return std::nullopt;
      return check_corollary_qt_rt(i, gamma);
    });
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("rn_inequality");
    for (int ia = -99; ia <= 99; ++ia)
      for (int ib = -99; ib <= 99; ++ib) {
        Inequality ineq = rn_inequality(ia / 100.0, ib / 100.0);
        r.record(ineq);
      }
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("reverse_jensen");
    Rng rng = make_rng(config.seed, 4);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> size(2, 10);
    for (std::size_t t = 0; t < n; ++t) {
      const int k = size(rng);
      Vec c(k);
      for (int i = 0; i < k; ++i) c[i] = u(rng);
      r.record(reverse_jensen(c, to_vec(dirichlet_ones(k, rng))));
    }
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("bregbound");
    for (int k = -2000; k <= 2000; ++k) r.record(bregbound(k * 1e-3));
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("lemma_wla");
    Rng rng = make_rng(config.seed, 6);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> cs(0.05, 2.0);
    std::uniform_int_distribution<int> size(2, 10);
    for (std::size_t t = 0; t < n;) {
      const int k = size(rng);
      const double c_sup = cs(rng);
      Vec c(k);
      for (int i = 0; i < k; ++i) c[i] = c_sup * u(rng);
      const Vec q = to_vec(dirichlet_ones(k, rng));
      if (!(std::abs(q.dot(c)) < c_sup)) continue;
      r.record(lemma_wla(c, q, c_sup));
      ++t;
    }
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("regular_regime");
    Rng rng = make_rng(config.seed, 7);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) -> std::optional<Inequality> {
      if (!positive_edges(i)) return std::nullopt;
      auto ps = scale_until(i, [](const DiscreteBoostInstance& s) { return properly_scaled(s); });
      if (!ps || !(wla_alpha(ps->mu_q(), ps->c_sup()) < 1.0)) return std::nullopt;
      return regular_regime_bound(*ps);
    });
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("high_regime");
    Rng rng = make_rng(config.seed, 8);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) -> std::optional<Inequality> {
      if (!positive_edges(i)) return std::nullopt;
      auto hi = scale_until(i, [](const DiscreteBoostInstance& s) { return s.mu_q() >= std::tanh(s.c_sup()); });
      if (!hi) return std::nullopt;
      return high_regime_bound(*hi);
    });
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("wda_identity");
    Rng rng = make_rng(config.seed, 9);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) {
      return std::optional(Inequality{std::abs(wda_mu_epsilon(i).identity_gap), 1e-12});
    });
    out.checks.push_back(r);
  }
  {
    CheckReport r = report("error_term_round_trip");
    Rng rng = make_rng(config.seed, 10);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) {
      const auto back = DiscreteBoostInstance::from_error_term(i.pair(), i.epsilon(), i.alpha());
      const double err = ((back.d() - i.d()).array() / i.d().array()).abs().maxCoeff();
      return std::optional(Inequality{err, 1e-14});
    });
    out.checks.push_back(r);
  }

  // Negative controls: inputs outside each result's hypothesis.
  {
    CheckReport r = report("kl_bound: alpha = 1.5");
    Rng rng = make_rng(config.seed, 101);
    battery(r, 1, cap, rng, [](const DiscreteBoostInstance& i) {
      return std::optional(check_kl_bound(DiscreteBoostInstance::from_error_term(i.pair(), Vec::Ones(i.p().size()), 1.5)));
    });
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("corollary_qt_rt: alpha = 1.5");
    Rng rng = make_rng(config.seed, 102);
    battery(r, 1, cap, rng, [](const DiscreteBoostInstance& i) {
      return std::optional(check_corollary_qt_rt(
          DiscreteBoostInstance::from_error_term(i.pair(), Vec::Ones(i.p().size()), 1.5), 0.0));
    });
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("rn_inequality: b = 3");
    r.record(rn_inequality(0.5, 3.0));
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("reverse_jensen: c outside the stated range");
    Vec c(2), q(2);
    c << -2.0, 2.0;
    q << 0.5, 0.5;
    r.record(reverse_jensen_on_range(c, q, -1.0, 1.0));
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("bregbound: z = 3");
    r.record(bregbound(3.0));
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("lemma_wla: |c| above c_sup");
    Vec c(2), q(2);
    c << -3.0, 2.0;
    q << 0.5, 0.5;
    r.record(lemma_wla(c, q, 1.0));
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("regular_regime: negative P edge");
    Rng rng = make_rng(config.seed, 107);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) -> std::optional<Inequality> {
      if (!(i.mu_p() < 0.0 && i.mu_q() > 0.0) || !(wla_alpha(i.mu_q(), i.c_sup()) < 1.0)) return std::nullopt;
      return regular_regime_bound(i, false);
    });
    out.negative_controls.push_back(r);
  }
  {
    // Claiming half the true confidence bound breaks |c| <= c_sup.
    CheckReport r = report("high_regime: c_sup understated");
    Rng rng = make_rng(config.seed, 108);
    battery(r, n, cap, rng, [](const DiscreteBoostInstance& i) -> std::optional<Inequality> {
      const double stated = i.c_sup() / 2.0;
      const double mp = i.mu_p() * 2.0, mq = i.mu_q() * 2.0;
      if (!(mp > 0.0 && mq >= std::tanh(stated) && mq < 1.0)) return std::nullopt;
      return high_regime_bound(i, true, stated);
    });
    out.negative_controls.push_back(r);
  }
  {
    // A constant error term e^-1 has mu_eps = -1 / c_sup, so it fails WDA for
    // any gamma_eps below that; recorded as lhs = -mu_eps, rhs = gamma_eps.
    CheckReport r = report("wda: constant error term below -gamma_eps");
    Rng rng = make_rng(config.seed, 109);
    battery(r, 1, cap, rng, [](const DiscreteBoostInstance& i) {
      const auto inst = DiscreteBoostInstance::from_error_term(i.pair(), Vec::Constant(i.p().size(), std::exp(-1.0)), 0.5);
      const WdaTerms w = wda_mu_epsilon(inst);
      const double gamma_eps = 0.5 / inst.c_sup();
      return std::optional(Inequality{-w.mu_epsilon, gamma_eps});
    });
    out.negative_controls.push_back(r);
  }
  {
    CheckReport r = report("error_term_round_trip: perturbed d");
    Rng rng = make_rng(config.seed, 110);
    battery(r, 1, cap, rng, [](const DiscreteBoostInstance& i) {
      Vec eps = i.epsilon();
      eps[0] *= 1.0 + 1e-6;
      const auto back = DiscreteBoostInstance::from_error_term(i.pair(), eps, i.alpha());
      const double err = ((back.d() - i.d()).array() / i.d().array()).abs().maxCoeff();
      return std::optional(Inequality{err, 1e-14});
    });
    out.negative_controls.push_back(r);
  }

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j{{"name", r.name},
                   {"n_trials", r.n_trials},
                   {"n_violations", r.n_violations},
                   {"worst_slack", r.worst_slack},
                   {"tolerance", r.tolerance},
                   {"passed", r.passed()}};
  if (r.precondition_unmet) j["precondition_unmet"] = *r.precondition_unmet;
  return j;
}

nlohmann::json to_json(const SuiteReport& r) {
  nlohmann::json checks = nlohmann::json::array(), controls = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  for (const auto& c : r.negative_controls) {
    auto j = to_json(c);
    j["detected"] = c.n_violations > 0;
    j.erase("passed");
    controls.push_back(j);
  }
  return {{"checks", checks}, {"negative_controls", controls}, {"seconds", r.seconds}, {"passed", r.passed()}};
}

}  // namespace boostdens::theory
