// Intervention functions d_t(a_t, h_t, eps_t) spanning the static / dynamic /
// stochastic / modified-treatment-policy taxonomy.
//
// Rules are parsed from a small keyword grammar and stored as a closed variant
// set, so the category tag and the technical-requirement gate can be decided
// structurally. Guards are comparisons and and/or combinations over named
// history columns, the natural treatment value `a`, the randomizer `eps`, and
// the time index `t`; no user-supplied code. Rule parameters are constants
// fixed before seeing data.
#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lmtp/common.hpp"
#include "lmtp/panel.hpp"
#include "lmtp/rng.hpp"

namespace lmtp {

enum class PolicyCategory { Static, Dynamic, Stochastic, Mtp };

inline std::string category_name(PolicyCategory c) {
  switch (c) {
    case PolicyCategory::Static: return "static";
    case PolicyCategory::Dynamic: return "dynamic";
    case PolicyCategory::Stochastic: return "stochastic";
    case PolicyCategory::Mtp: return "mtp";
  }
  return "?";
}

// Randomizer laws supported by the grammar.
struct RandomLaw {
  enum Kind { None, Uniform, Bernoulli, Normal } kind = None;
  double p = 0.5;     // Bernoulli
  double mu = 0.0;    // Normal
  double sigma = 1.0; // Normal
};

struct RandomizerDraw {
  int unit = 0;
  int time = 0;
  double value = kNaN;
};

// ---------------------------------------------------------------------------
// predicates and terms

struct Operand {
  enum Kind { NaturalA, Eps, Time, Column, WindowMax } kind = Column;
  std::string name;  // Column / WindowMax base name
  int window = 0;    // WindowMax: s in {t-window .. t}
};

struct Atom {
  Operand lhs;
  enum Cmp { Lt, Le, Gt, Ge, Eq, Ne } cmp = Eq;
  double rhs = 0.0;
};

// Disjunction of conjunctions ("and" binds tighter than "or").
struct Predicate {
  std::vector<std::vector<Atom>> clauses;
};

// Affine expression c0 + ca*a + ce*eps.
struct Term {
  double c0 = 0.0, ca = 0.0, ce = 0.0;
  bool uses_a() const { return ca != 0.0; }
  bool uses_eps() const { return ce != 0.0; }
};

// Evaluation context. `history` carries the covariate (and, for MTP chains,
// counterfactual exposure) values of H_t by column name; `prior_exposures`
// are the NATURAL values A_0..A_{t-1} in time order. Rules that trigger on
// past treatment (delay) read the natural path: under counterfactual
// propagation the shifted path never contains the trigger, which would
// silently turn a delay into never-treat.
struct PolicyContext {
  int t = 0;
  double natural_a = kNaN;
  double eps = kNaN;
  std::vector<double> prior_exposures;
  const std::vector<std::string>* hist_names = nullptr;
  const std::vector<double>* hist_values = nullptr;

  double lookup(const std::string& name, int time) const {
    if (hist_names) {
      // exact name first, then the per-time convention "<name>_<time>"
      for (std::size_t i = 0; i < hist_names->size(); ++i)
        if ((*hist_names)[i] == name) return (*hist_values)[i];
      const std::string timed = name + "_" + std::to_string(time);
      for (std::size_t i = 0; i < hist_names->size(); ++i)
        if ((*hist_names)[i] == timed) return (*hist_values)[i];
    }
    throw validation_error("policy references unknown history column '" + name + "'");
  }
};

inline double eval_operand(const Operand& op, const PolicyContext& ctx) {
  switch (op.kind) {
    case Operand::NaturalA: return ctx.natural_a;
    case Operand::Eps:
      if (is_missing(ctx.eps)) throw validation_error("rule reads eps but no randomizer was drawn");
      return ctx.eps;
    case Operand::Time: return static_cast<double>(ctx.t);
    case Operand::Column: return ctx.lookup(op.name, ctx.t);
    case Operand::WindowMax: {
      double best = -std::numeric_limits<double>::infinity();
      for (int s = std::max(0, ctx.t - op.window); s <= ctx.t; ++s)
        best = std::max(best, ctx.lookup(op.name, s));
      return best;
    }
  }
  return kNaN;
}

inline bool eval_atom(const Atom& a, const PolicyContext& ctx) {
  const double v = eval_operand(a.lhs, ctx);
  switch (a.cmp) {
    case Atom::Lt: return v < a.rhs;
    case Atom::Le: return v <= a.rhs;
    case Atom::Gt: return v > a.rhs;
    case Atom::Ge: return v >= a.rhs;
    case Atom::Eq: return v == a.rhs;
    case Atom::Ne: return v != a.rhs;
  }
  return false;
}

inline bool eval_pred(const Predicate& p, const PolicyContext& ctx) {
  for (const auto& clause : p.clauses) {
    bool all = true;
    for (const auto& a : clause)
      if (!eval_atom(a, ctx)) { all = false; break; }
    if (all) return true;
  }
  return false;
}

inline double eval_term(const Term& t, const PolicyContext& ctx) {
  double v = t.c0;
  if (t.ca != 0.0) v += t.ca * ctx.natural_a;
  if (t.ce != 0.0) {
    if (is_missing(ctx.eps)) throw validation_error("rule reads eps but no randomizer was drawn");
    v += t.ce * ctx.eps;
  }
  return v;
}

// ---------------------------------------------------------------------------
// rules

struct ConstantRule { double value = 0.0; };
struct IdentityRule {};
struct ThresholdRule { double bound = 0.0; bool cap_above = true; };
struct ShiftRule {
  bool multiplicative = false;
  double delta = 0.0;
  std::optional<Predicate> guard;  // shift applies where the guard holds
};
struct IpsiRrRule { double delta = 1.0; double fallback = 0.0; };
struct DelayRule { double trigger = 1.0; double fallback = 0.0; };
// Generalized case rule: covers covariate rules (no law, no a/eps) and
// randomized rules (law + terms/predicates over a, h, eps).
struct CaseRule {
  RandomLaw law;
  std::vector<std::pair<Term, Predicate>> cases;  // first matching wins
  Term otherwise;
};

using Rule = std::variant<ConstantRule, IdentityRule, ThresholdRule, ShiftRule,
                          IpsiRrRule, DelayRule, CaseRule>;

namespace detail {

inline bool pred_reads(const Predicate& p, Operand::Kind k) {
  for (const auto& cl : p.clauses)
    for (const auto& a : cl)
      if (a.lhs.kind == k) return true;
  return false;
}
inline bool pred_reads_history(const Predicate& p) {
  return pred_reads(p, Operand::Column) || pred_reads(p, Operand::WindowMax);
}

}  // namespace detail

inline RandomLaw rule_law(const Rule& r) {
  if (std::holds_alternative<IpsiRrRule>(r)) {
    RandomLaw law;
    law.kind = RandomLaw::Uniform;
    return law;
  }
  if (const auto* c = std::get_if<CaseRule>(&r)) return c->law;
  return RandomLaw{};
}

inline PolicyCategory rule_category(const Rule& r) {
  if (std::holds_alternative<ConstantRule>(r)) return PolicyCategory::Static;
  if (const auto* c = std::get_if<CaseRule>(&r)) {
    bool reads_a = false, reads_eps = false, reads_h = false;
    for (const auto& [term, pred] : c->cases) {
      reads_a = reads_a || term.uses_a() || detail::pred_reads(pred, Operand::NaturalA);
      reads_eps = reads_eps || term.uses_eps() || detail::pred_reads(pred, Operand::Eps);
      reads_h = reads_h || detail::pred_reads_history(pred);
    }
    reads_a = reads_a || c->otherwise.uses_a();
    reads_eps = reads_eps || c->otherwise.uses_eps();
    if (reads_a) return PolicyCategory::Mtp;
    if (reads_eps) return PolicyCategory::Stochastic;
    if (reads_h) return PolicyCategory::Dynamic;
    return PolicyCategory::Static;  // e.g. varies with t only
  }
  // threshold, shift, ipsi-rr, delay, identity all read the natural value
  return PolicyCategory::Mtp;
}

inline double eval_rule(const Rule& r, const PolicyContext& ctx) {
  if (const auto* c = std::get_if<ConstantRule>(&r)) return c->value;
  if (std::holds_alternative<IdentityRule>(r)) return ctx.natural_a;
  if (const auto* th = std::get_if<ThresholdRule>(&r)) {
    if (th->cap_above) return std::min(ctx.natural_a, th->bound);
    return std::max(ctx.natural_a, th->bound);
  }
  if (const auto* sh = std::get_if<ShiftRule>(&r)) {
    if (sh->guard && !eval_pred(*sh->guard, ctx)) return ctx.natural_a;
    return sh->multiplicative ? ctx.natural_a * sh->delta : ctx.natural_a + sh->delta;
  }
  if (const auto* ip = std::get_if<IpsiRrRule>(&r)) {
    if (is_missing(ctx.eps)) throw validation_error("ipsi-rr requires a randomizer draw");
    return ctx.eps < ip->delta ? ctx.natural_a : ip->fallback;
  }
  if (const auto* dl = std::get_if<DelayRule>(&r)) {
    if (ctx.natural_a != dl->trigger) return ctx.natural_a;
    for (double prev : ctx.prior_exposures)
      if (prev == dl->trigger) return ctx.natural_a;  // already triggered earlier
    return dl->fallback;
  }
  const auto& c = std::get<CaseRule>(r);
  for (const auto& [term, pred] : c.cases)
    if (eval_pred(pred, ctx)) return eval_term(term, ctx);
  return eval_term(c.otherwise, ctx);
}

// ---------------------------------------------------------------------------
// policy

class Policy {
public:
  Policy() = default;
  Policy(ExposureKind kind, std::vector<Rule> rules, std::uint64_t seed = 0)
      : kind_(kind), rules_(std::move(rules)), seed_(seed) {
    if (rules_.empty()) throw config_error("policy needs at least one rule");
  }

  ExposureKind exposure_kind() const { return kind_; }
  std::uint64_t seed() const { return seed_; }
  bool per_time() const { return rules_.size() > 1; }
  const std::vector<Rule>& rules() const { return rules_; }

  const Rule& rule_at(int t) const {
    if (rules_.size() == 1) return rules_[0];
    if (t < 0 || t >= static_cast<int>(rules_.size()))
      throw config_error("policy has no rule for time " + std::to_string(t));
    return rules_[t];
  }

  PolicyCategory category() const {
    PolicyCategory c = PolicyCategory::Static;
    for (const auto& r : rules_) c = std::max(c, rule_category(r));
    return c;
  }

  bool stochastic_at(int t) const { return rule_law(rule_at(t)).kind != RandomLaw::None; }

  RandomizerDraw draw_randomizer(std::uint64_t seed, int unit, int t) const {
    const RandomLaw law = rule_law(rule_at(t));
    if (law.kind == RandomLaw::None)
      throw validation_error("rule at time " + std::to_string(t) + " has no randomizer law");
    RandomizerDraw d;
    d.unit = unit;
    d.time = t;
    switch (law.kind) {
      case RandomLaw::Uniform:
        d.value = counter_uniform(seed, 0x9e75, unit, t);
        break;
      case RandomLaw::Bernoulli:
        d.value = counter_uniform(seed, 0x9e75, unit, t) < law.p ? 1.0 : 0.0;
        break;
      case RandomLaw::Normal:
        d.value = law.mu + law.sigma * counter_normal(seed, 0x9e75, unit, t);
        break;
      default: break;
    }
    return d;
  }

  double evaluate(const PolicyContext& ctx) const { return eval_rule(rule_at(ctx.t), ctx); }

  // Spec-shaped convenience overload.
  double evaluate(int t, double a, const HistoryView& h, const RandomizerDraw& eps) const {
    PolicyContext ctx;
    ctx.t = t;
    ctx.natural_a = a;
    ctx.eps = eps.value;
    ctx.hist_names = &h.names;
    ctx.hist_values = &h.values;
    return eval_rule(rule_at(t), ctx);
  }

  // Finite randomizer support {(eps value, probability)} for exact
  // enumeration; nullopt when the rule's randomness cannot be enumerated
  // (normal laws, or uniform eps flowing into an output term).
  std::optional<std::vector<std::pair<double, double>>> randomizer_support(int t) const {
    const Rule& r = rule_at(t);
    const RandomLaw law = rule_law(r);
    if (law.kind == RandomLaw::None) return std::vector<std::pair<double, double>>{{kNaN, 1.0}};
    if (law.kind == RandomLaw::Bernoulli)
      return std::vector<std::pair<double, double>>{{1.0, law.p}, {0.0, 1.0 - law.p}};
    if (law.kind == RandomLaw::Normal) return std::nullopt;
    // Uniform(0,1): piecewise-constant behavior in eps as long as eps only
    // appears in predicate cut points; representative midpoints carry the
    // interval probabilities.
    std::vector<double> cuts;
    if (const auto* ip = std::get_if<IpsiRrRule>(&r)) {
      cuts.push_back(ip->delta);
    } else if (const auto* c = std::get_if<CaseRule>(&r)) {
      if (c->otherwise.uses_eps()) return std::nullopt;
      for (const auto& [term, pred] : c->cases) {
        if (term.uses_eps()) return std::nullopt;
        for (const auto& cl : pred.clauses)
          for (const auto& a : cl)
            if (a.lhs.kind == Operand::Eps) cuts.push_back(a.rhs);
      }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    std::vector<double> edges{0.0};
    for (double c : cuts)
      if (c > 0.0 && c < 1.0) edges.push_back(c);
    edges.push_back(1.0);
    std::vector<std::pair<double, double>> support;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
      support.push_back({0.5 * (edges[i] + edges[i + 1]), edges[i + 1] - edges[i]});
    return support;
  }

private:
  ExposureKind kind_ = ExposureKind::Binary;
  std::vector<Rule> rules_;
  std::uint64_t seed_ = 0;
};

// ---------------------------------------------------------------------------
// technical-requirement gate

struct PolicyValidation {
  bool pass = true;
  std::vector<std::string> reasons;
};

// Requirement 1: d must not depend on the distribution of the data. True by
// construction of the grammar (parameters are literals); re-verified here by
// checking all parameters are finite constants. Requirement 2: the exposure is
// discrete, or the exposure is continuous and every rule is an
// additive/multiplicative shift (identity included) whose guard partitions the
// domain into intervals on which the map is strictly monotone.
inline PolicyValidation validate_policy_requirements(const Policy& policy,
                                                     ExposureKind kind) {
  PolicyValidation v;
  for (const auto& r : policy.rules()) {
    if (const auto* ip = std::get_if<IpsiRrRule>(&r)) {
      if (!(ip->delta > 0.0 && ip->delta <= 1.0)) {
        v.pass = false;
        v.reasons.push_back("ipsi-rr delta must lie in (0, 1]");
      }
    }
  }
  if (kind == ExposureKind::Continuous) {
    for (const auto& r : policy.rules()) {
      bool ok = false;
      std::string why;
      if (std::holds_alternative<IdentityRule>(r)) {
        ok = true;
      } else if (const auto* sh = std::get_if<ShiftRule>(&r)) {
        ok = !sh->multiplicative || sh->delta != 0.0;
        if (!ok) why = "multiplicative shift by 0 is not invertible";
      } else if (std::holds_alternative<ThresholdRule>(r)) {
        why = "threshold rule is not piecewise smooth invertible";
      } else {
        why = "rule is not piecewise smooth invertible for a continuous exposure";
      }
      if (!ok) {
        v.pass = false;
        v.reasons.push_back(
            (why.empty() ? std::string("rule rejected") : why) +
            "; confidence intervals, p-values, and standard errors will be incorrect");
      }
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// grammar

namespace detail {

struct Tokens {
  std::vector<std::string> toks;
  std::size_t pos = 0;
  bool done() const { return pos >= toks.size(); }
  const std::string& peek() const {
    static const std::string empty;
    return done() ? empty : toks[pos];
  }
  std::string next() {
    if (done()) throw config_error("policy spec ended unexpectedly");
    return toks[pos++];
  }
  bool accept(const std::string& s) {
    if (!done() && toks[pos] == s) { ++pos; return true; }
    return false;
  }
  void expect(const std::string& s) {
    if (!accept(s)) throw config_error("policy spec: expected '" + s + "' near '" + peek() + "'");
  }
};

inline Tokens tokenize_rule(const std::string& text) {
  Tokens t;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) { t.toks.push_back(cur); cur.clear(); }
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (std::isspace(static_cast<unsigned char>(ch))) { flush(); continue; }
    if (ch == ':' || ch == '(' || ch == ')' || ch == ',' || ch == '+' || ch == '*') {
      flush();
      if (ch != ':') t.toks.push_back(std::string(1, ch));
      continue;
    }
    if (ch == '<' || ch == '>' || ch == '=' || ch == '!') {
      flush();
      std::string op(1, ch);
      if (i + 1 < text.size() && text[i + 1] == '=') { op += '='; ++i; }
      t.toks.push_back(op);
      continue;
    }
    cur.push_back(ch);
  }
  flush();
  return t;
}

inline bool is_number(const std::string& s, double* out) {
  if (s.empty()) return false;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) return false;
    if (out) *out = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

inline double parse_number(Tokens& t) {
  std::string s = t.next();
  if (s == "-") s += t.next();
  double v;
  if (!is_number(s, &v)) throw config_error("policy spec: expected a number, got '" + s + "'");
  return v;
}

inline Atom::Cmp parse_cmp(Tokens& t) {
  const std::string op = t.next();
  if (op == "<") return Atom::Lt;
  if (op == "<=") return Atom::Le;
  if (op == ">") return Atom::Gt;
  if (op == ">=") return Atom::Ge;
  if (op == "==" || op == "=") return Atom::Eq;
  if (op == "!=") return Atom::Ne;
  throw config_error("policy spec: unknown comparator '" + op + "'");
}

inline Operand parse_operand(Tokens& t) {
  Operand op;
  const std::string s = t.next();
  if (s == "a") { op.kind = Operand::NaturalA; return op; }
  if (s == "eps") { op.kind = Operand::Eps; return op; }
  if (s == "t") { op.kind = Operand::Time; return op; }
  if (s == "max") {
    t.expect("(");
    op.kind = Operand::WindowMax;
    op.name = t.next();
    t.expect(",");
    op.window = static_cast<int>(parse_number(t));
    t.expect(")");
    return op;
  }
  op.kind = Operand::Column;
  op.name = s;
  return op;
}

inline Predicate parse_pred(Tokens& t) {
  Predicate p;
  p.clauses.push_back({});
  while (true) {
    Atom a;
    a.lhs = parse_operand(t);
    a.cmp = parse_cmp(t);
    a.rhs = parse_number(t);
    p.clauses.back().push_back(a);
    if (t.accept("and")) continue;
    if (t.accept("or")) { p.clauses.push_back({}); continue; }
    break;
  }
  return p;
}

// term := factor (("+"|"-") factor)* ; factor := [num "*"] (num | a | eps)
inline Term parse_term(Tokens& t) {
  Term out;
  double sign = 1.0;
  bool first = true;
  while (true) {
    if (!first) {
      if (t.accept("+")) sign = 1.0;
      else if (t.peek() == "-" ) { t.next(); sign = -1.0; }
      else break;
    } else if (t.peek() == "-") {
      t.next();
      sign = -1.0;
    }
    first = false;
    double coef = 1.0;
    std::string s = t.next();
    double num;
    if (is_number(s, &num)) {
      if (t.accept("*")) {
        coef = num;
        s = t.next();
      } else {
        out.c0 += sign * num;
        continue;
      }
    }
    if (s == "a") out.ca += sign * coef;
    else if (s == "eps") out.ce += sign * coef;
    else throw config_error("policy spec: unexpected term token '" + s + "'");
  }
  return out;
}

inline RandomLaw parse_law(Tokens& t) {
  RandomLaw law;
  const std::string name = t.next();
  if (name == "uniform") {
    law.kind = RandomLaw::Uniform;
    if (t.accept("(")) { parse_number(t); t.expect(","); parse_number(t); t.expect(")"); }
  } else if (name == "bernoulli") {
    law.kind = RandomLaw::Bernoulli;
    t.expect("(");
    law.p = parse_number(t);
    t.expect(")");
    if (!(law.p >= 0.0 && law.p <= 1.0)) throw config_error("bernoulli p outside [0,1]");
  } else if (name == "normal") {
    law.kind = RandomLaw::Normal;
    t.expect("(");
    law.mu = parse_number(t);
    t.expect(",");
    law.sigma = parse_number(t);
    t.expect(")");
    if (!(law.sigma > 0.0)) throw config_error("normal sigma must be positive");
  } else {
    throw config_error("unknown randomizer law '" + name +
                       "' (supported: uniform, bernoulli, normal)");
  }
  return law;
}

inline Rule parse_rule(const std::string& text) {
  Tokens t = tokenize_rule(text);
  const std::string head = t.next();
  auto finish = [&] {
    // tolerate a trailing "at all t"
    if (t.accept("at")) { t.expect("all"); t.expect("t"); }
    if (!t.done()) throw config_error("policy spec: trailing tokens near '" + t.peek() + "'");
  };
  if (head == "static" || head == "constant") {
    ConstantRule r{parse_number(t)};
    finish();
    return r;
  }
  if (head == "identity") {
    finish();
    return IdentityRule{};
  }
  if (head == "threshold") {
    ThresholdRule r;
    r.bound = parse_number(t);
    const std::string dir = t.next();
    if (dir == "cap-above") r.cap_above = true;
    else if (dir == "cap-below") r.cap_above = false;
    else throw config_error("threshold direction must be cap-above or cap-below");
    finish();
    return r;
  }
  if (head == "shift") {
    ShiftRule r;
    const std::string kind = t.next();
    if (kind == "add") r.multiplicative = false;
    else if (kind == "mult" || kind == "multiply") r.multiplicative = true;
    else throw config_error("shift kind must be add or multiply");
    t.accept("by");
    r.delta = parse_number(t);
    if (t.accept("when")) r.guard = parse_pred(t);
    if (r.guard) {
      for (const auto& cl : r.guard->clauses)
        for (const auto& a : cl)
          if (a.lhs.kind == Operand::Eps)
            throw config_error("shift guards may read a and history columns only");
    }
    finish();
    return r;
  }
  if (head == "ipsi-rr") {
    IpsiRrRule r;
    t.accept("delta");
    r.delta = parse_number(t);
    t.expect("fallback");
    r.fallback = parse_number(t);
    if (!(r.delta > 0.0 && r.delta <= 1.0))
      throw config_error("ipsi-rr delta must lie in (0, 1]");
    finish();
    return r;
  }
  if (head == "delay") {
    DelayRule r;
    t.accept("trigger");
    r.trigger = parse_number(t);
    t.expect("fallback");
    r.fallback = parse_number(t);
    finish();
    return r;
  }
  if (head == "case") {
    CaseRule r;
    if (t.accept("law")) r.law = parse_law(t);
    bool have_else = false;
    while (!have_else) {
      if (t.accept("else")) {
        r.otherwise = parse_term(t);
        have_else = true;
        break;
      }
      Term term = parse_term(t);
      t.expect("when");
      Predicate pred = parse_pred(t);
      r.cases.push_back({term, pred});
      if (t.accept("elif")) continue;
      t.expect("else");
      r.otherwise = parse_term(t);
      have_else = true;
    }
    finish();
    // a case rule that reads eps must declare a law
    const Rule probe = r;
    bool reads_eps = r.otherwise.uses_eps();
    for (const auto& [term, pred] : r.cases)
      reads_eps = reads_eps || term.uses_eps() || pred_reads(pred, Operand::Eps);
    if (reads_eps && r.law.kind == RandomLaw::None)
      throw config_error("case rule reads eps but declares no law");
    return probe;
  }
  throw config_error("unknown rule '" + head + "'");
}

}  // namespace detail

// Policy text: a single rule, or ';'-separated per-time entries of the form
// "t<k>: <rule>" covering t = 0..tau contiguously.
inline Policy parse_policy_spec(const std::string& text, ExposureKind kind,
                                std::uint64_t seed = 0) {
  // split on ';'
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == ';') { parts.push_back(cur); cur.clear(); }
    else cur.push_back(ch);
  }
  parts.push_back(cur);
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\n");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\n");
    return s.substr(b, e - b + 1);
  };
  std::vector<std::pair<int, std::string>> timed;
  std::vector<std::string> plain;
  for (auto& p : parts) {
    const std::string s = trim(p);
    if (s.empty()) continue;
    if (s.size() > 1 && s[0] == 't' && std::isdigit(static_cast<unsigned char>(s[1]))) {
      const auto colon = s.find(':');
      if (colon != std::string::npos) {
        const std::string idx = s.substr(1, colon - 1);
        double v;
        if (detail::is_number(idx, &v)) {
          timed.push_back({static_cast<int>(v), trim(s.substr(colon + 1))});
          continue;
        }
      }
    }
    plain.push_back(s);
  }
  if (!timed.empty() && !plain.empty())
    throw config_error("policy spec mixes per-time and default rules");
  if (timed.empty()) {
    if (plain.size() != 1) throw config_error("policy spec must contain exactly one rule");
    return Policy(kind, {detail::parse_rule(plain[0])}, seed);
  }
  std::sort(timed.begin(), timed.end());
  std::vector<Rule> rules;
  for (std::size_t i = 0; i < timed.size(); ++i) {
    if (timed[i].first != static_cast<int>(i))
      throw config_error("per-time policy rules must cover t = 0..tau contiguously");
    rules.push_back(detail::parse_rule(timed[i].second));
  }
  return Policy(kind, std::move(rules), seed);
}

}  // namespace lmtp
