#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "uscx/extreal.hpp"

namespace uscx {

/** Variable assignment used when evaluating expressions. */
using Env = std::map<std::string, double>;

/**
 * Type-erased pointwise action (s, x) -> y that a mapped expression applies
 * on top of its child.  Implementations live with the transform machinery;
 * the expression layer only needs evaluation and coordinate dependence.
 */
struct CoordMap {
  virtual ~CoordMap() = default;
  virtual ExtReal apply_at(double s, ExtReal x) const = 0;
  virtual bool uses_coord() const = 0;
};

/**
 * Immutable symbolic expression in the spatial coordinate s and a set of
 * named random variables.  The constructor grammar is a closed list of
 * continuity-preserving operations (constants, s, variables, +, -, *, min,
 * max, negation, absolute value), so every expression evaluates to a
 * function that is continuous in s wherever its value is finite.  Exact
 * trajectory decisions ride on that guarantee.
 */
class Expr {
 public:
  struct Node;  // implementation detail, defined in the translation unit

  /** Defaults to the constant 0. */
  Expr();

  static Expr constant(ExtReal c);
  static Expr var(const std::string& name);
  /** The spatial coordinate s. */
  static Expr coord();
  /**
   * child composed with a pointwise action: evaluates to
   * map->apply_at(s, child(s)).  Mapped expressions evaluate like any other
   * node but are not serializable (expr_to_json throws std::logic_error).
   */
  static Expr mapped(std::shared_ptr<const CoordMap> map, Expr child);

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  friend Expr max(const Expr& a, const Expr& b);
  friend Expr min(const Expr& a, const Expr& b);
  friend Expr abs(const Expr& a);

  /**
   * Evaluate at coordinate s under the assignment.  Extended-real
   * arithmetic keeps infinities; the indeterminate forms (+inf) + (-inf)
   * and 0 * inf throw std::domain_error rather than produce NaN.
   * An unassigned variable throws std::runtime_error ("unknown variable").
   */
  ExtReal eval(const Env& env, double s) const;

  /** True when the expression mentions the coordinate s. */
  bool depends_on_coord() const;

  /** Insert every variable name the expression mentions. */
  void collect_vars(std::set<std::string>& out) const;

  friend nlohmann::json expr_to_json(const Expr& e);
  friend Expr expr_from_json(const nlohmann::json& j);

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

/**
 * Serialize as a nested {op, ...} tree: {"op":"const","value":v} with v a
 * number or "+inf"/"-inf", {"op":"var","name":n}, {"op":"coord"}, binary
 * {"op":"add"|"sub"|"mul"|"max"|"min","lhs":...,"rhs":...}, and unary
 * {"op":"neg"|"abs","arg":...}.  Mapped expressions throw std::logic_error
 * ("mapped expression is not serializable").
 */
nlohmann::json expr_to_json(const Expr& e);

/** Parse the representation produced by expr_to_json ("unknown expression op"). */
Expr expr_from_json(const nlohmann::json& j);

}  // namespace uscx
