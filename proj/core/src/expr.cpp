#include "uscx/expr.hpp"

#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

namespace uscx {

namespace {

enum class Op { constant, variable, coord, add, sub, mul, max, min, neg, abs, mapped };

ExtReal ext_neg(ExtReal x) {
  if (x.is_pos_inf()) return ExtReal::neg_inf();
  if (x.is_neg_inf()) return ExtReal::pos_inf();
  return ExtReal(-x.raw());
}

ExtReal ext_abs(ExtReal x) { return x < ExtReal(0.0) ? ext_neg(x) : x; }

ExtReal ext_add(ExtReal a, ExtReal b) {
  if (a.is_finite() && b.is_finite()) return ExtReal(a.raw() + b.raw());
  if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf())) {
    throw std::domain_error("indeterminate extended sum");
  }
  return a.is_finite() ? b : a;
}

ExtReal ext_mul(ExtReal a, ExtReal b) {
  if (a.is_finite() && b.is_finite()) return ExtReal(a.raw() * b.raw());
  double sa = a.is_finite() ? a.raw() : (a.is_pos_inf() ? 1.0 : -1.0);
  double sb = b.is_finite() ? b.raw() : (b.is_pos_inf() ? 1.0 : -1.0);
  if (sa == 0.0 || sb == 0.0) throw std::domain_error("indeterminate extended product");
  return (sa > 0) == (sb > 0) ? ExtReal::pos_inf() : ExtReal::neg_inf();
}

}  // namespace

struct Expr::Node {
  Op op = Op::constant;
  ExtReal value{0.0};
  std::string name;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
  std::shared_ptr<const CoordMap> map;
  bool uses_coord = false;
};

namespace {

std::shared_ptr<Expr::Node> make_node(Op op) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  return n;
}

ExtReal eval_node(const Expr::Node& n, const Env& env, double s) {
  switch (n.op) {
    case Op::constant:
      return n.value;
    case Op::variable: {
      auto it = env.find(n.name);
      if (it == env.end()) throw std::runtime_error("unknown variable '" + n.name + "'");
      return ExtReal(it->second);
    }
    case Op::coord:
      return ExtReal(s);
    case Op::add:
      return ext_add(eval_node(*n.lhs, env, s), eval_node(*n.rhs, env, s));
    case Op::sub:
      return ext_add(eval_node(*n.lhs, env, s), ext_neg(eval_node(*n.rhs, env, s)));
    case Op::mul:
      return ext_mul(eval_node(*n.lhs, env, s), eval_node(*n.rhs, env, s));
    case Op::max:
      return max(eval_node(*n.lhs, env, s), eval_node(*n.rhs, env, s));
    case Op::min:
      return min(eval_node(*n.lhs, env, s), eval_node(*n.rhs, env, s));
    case Op::neg:
      return ext_neg(eval_node(*n.lhs, env, s));
    case Op::abs:
      return ext_abs(eval_node(*n.lhs, env, s));
    case Op::mapped:
      return n.map->apply_at(s, eval_node(*n.lhs, env, s));
  }
  throw std::logic_error("unreachable expression op");
}

void collect_node_vars(const Expr::Node& n, std::set<std::string>& out) {
  if (n.op == Op::variable) out.insert(n.name);
  if (n.lhs) collect_node_vars(*n.lhs, out);
  if (n.rhs) collect_node_vars(*n.rhs, out);
}

nlohmann::json node_to_json(const Expr::Node& n) {
  using nlohmann::json;
  switch (n.op) {
    case Op::constant: {
      json j{{"op", "const"}};
      if (n.value.is_finite()) {
        j["value"] = n.value.raw();
      } else {
        j["value"] = n.value.is_pos_inf() ? "+inf" : "-inf";
      }
      return j;
    }
    case Op::variable:
      return json{{"op", "var"}, {"name", n.name}};
    case Op::coord:
      return json{{"op", "coord"}};
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::max:
    case Op::min: {
      const char* name = n.op == Op::add   ? "add"
                         : n.op == Op::sub ? "sub"
                         : n.op == Op::mul ? "mul"
                         : n.op == Op::max ? "max"
                                           : "min";
      return json{{"op", name}, {"lhs", node_to_json(*n.lhs)}, {"rhs", node_to_json(*n.rhs)}};
    }
    case Op::neg:
    case Op::abs:
      return json{{"op", n.op == Op::neg ? "neg" : "abs"}, {"arg", node_to_json(*n.lhs)}};
    case Op::mapped:
      throw std::logic_error("mapped expression is not serializable");
  }
  throw std::logic_error("unreachable expression op");
}

}  // namespace

Expr::Expr() : Expr(constant(ExtReal(0.0))) {}

Expr Expr::constant(ExtReal c) {
  auto n = make_node(Op::constant);
  n->value = c;
  return Expr(std::move(n));
}

Expr Expr::var(const std::string& name) {
  if (name.empty()) throw std::invalid_argument("variable name must be nonempty");
  auto n = make_node(Op::variable);
  n->name = name;
  return Expr(std::move(n));
}

Expr Expr::coord() {
  auto n = make_node(Op::coord);
  n->uses_coord = true;
  return Expr(std::move(n));
}

Expr Expr::mapped(std::shared_ptr<const CoordMap> map, Expr child) {
  if (!map) throw std::invalid_argument("null coordinate map");
  auto n = make_node(Op::mapped);
  n->lhs = child.node_;
  n->uses_coord = map->uses_coord() || child.node_->uses_coord;
  n->map = std::move(map);
  return Expr(std::move(n));
}

Expr operator+(const Expr& a, const Expr& b) {
  auto n = make_node(Op::add);
  n->lhs = a.node_;
  n->rhs = b.node_;
  n->uses_coord = a.node_->uses_coord || b.node_->uses_coord;
  return Expr(std::move(n));
}

Expr operator-(const Expr& a, const Expr& b) {
  auto n = make_node(Op::sub);
  n->lhs = a.node_;
  n->rhs = b.node_;
  n->uses_coord = a.node_->uses_coord || b.node_->uses_coord;
  return Expr(std::move(n));
}

Expr operator*(const Expr& a, const Expr& b) {
  auto n = make_node(Op::mul);
  n->lhs = a.node_;
  n->rhs = b.node_;
  n->uses_coord = a.node_->uses_coord || b.node_->uses_coord;
  return Expr(std::move(n));
}

Expr operator-(const Expr& a) {
  auto n = make_node(Op::neg);
  n->lhs = a.node_;
  n->uses_coord = a.node_->uses_coord;
  return Expr(std::move(n));
}

Expr max(const Expr& a, const Expr& b) {
  auto n = make_node(Op::max);
  n->lhs = a.node_;
  n->rhs = b.node_;
  n->uses_coord = a.node_->uses_coord || b.node_->uses_coord;
  return Expr(std::move(n));
}

Expr min(const Expr& a, const Expr& b) {
  auto n = make_node(Op::min);
  n->lhs = a.node_;
  n->rhs = b.node_;
  n->uses_coord = a.node_->uses_coord || b.node_->uses_coord;
  return Expr(std::move(n));
}

Expr abs(const Expr& a) {
  auto n = make_node(Op::abs);
  n->lhs = a.node_;
  n->uses_coord = a.node_->uses_coord;
  return Expr(std::move(n));
}

ExtReal Expr::eval(const Env& env, double s) const { return eval_node(*node_, env, s); }

bool Expr::depends_on_coord() const { return node_->uses_coord; }

void Expr::collect_vars(std::set<std::string>& out) const { collect_node_vars(*node_, out); }

nlohmann::json expr_to_json(const Expr& e) { return node_to_json(*e.node_); }

Expr expr_from_json(const nlohmann::json& j) {
  const std::string op = j.at("op").get<std::string>();
  if (op == "const") {
    const auto& v = j.at("value");
    if (v.is_string()) return Expr::constant(extreal_from_token(v.get<std::string>()));
    return Expr::constant(ExtReal(v.get<double>()));
  }
  if (op == "var") return Expr::var(j.at("name").get<std::string>());
  if (op == "coord") return Expr::coord();
  if (op == "neg") return -expr_from_json(j.at("arg"));
  if (op == "abs") return abs(expr_from_json(j.at("arg")));
  if (op == "add" || op == "sub" || op == "mul" || op == "max" || op == "min") {
    Expr lhs = expr_from_json(j.at("lhs"));
    Expr rhs = expr_from_json(j.at("rhs"));
    if (op == "add") return lhs + rhs;
    if (op == "sub") return lhs - rhs;
    if (op == "mul") return lhs * rhs;
    if (op == "max") return max(lhs, rhs);
    return min(lhs, rhs);
  }
  throw std::runtime_error("unknown expression op");
}

}  // namespace uscx
