#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "additivity/dataset.hpp"

namespace additivity {

// Normal prior on one regression parameter.
struct PriorSpec {
  double mu = 0.0;
  double sigma = 10.0;  // standard deviation, > 0

  bool operator==(const PriorSpec&) const = default;
};

// Linear-predictor expressions: sums and products of parameters and
// 0/1 covariates, linear in the parameters. Grammar:
//
//   expr    := term ('+' term)*
//   term    := factor ('*' factor)*
//   factor  := identifier | '(' expr ')'
//
// An identifier that exactly matches one of the nine flag names is a
// covariate; anything else is a parameter. '*' binds tighter than '+'.
// Parenthesized sums are kept as nested nodes so printing reproduces the
// source grouping.
class PredictorExpr;

struct ParamNode {
  std::string name;
  bool operator==(const ParamNode&) const = default;
};

struct CovariateNode {
  Flag flag;
  bool operator==(const CovariateNode&) const = default;
};

struct ProductNode {
  std::vector<PredictorExpr> factors;  // >= 2
};

struct SumNode {
  std::vector<PredictorExpr> terms;  // >= 2
};

class PredictorExpr {
 public:
  using Node = std::variant<ParamNode, CovariateNode, ProductNode, SumNode>;

  PredictorExpr() : node_(ParamNode{}) {}
  explicit PredictorExpr(Node node) : node_(std::move(node)) {}

  const Node& node() const { return node_; }

 private:
  Node node_;
};

bool operator==(const PredictorExpr& a, const PredictorExpr& b);
inline bool operator!=(const PredictorExpr& a, const PredictorExpr& b) {
  return !(a == b);
}
bool operator==(const ProductNode& a, const ProductNode& b);
bool operator==(const SumNode& a, const SumNode& b);

// Parses predictor source text. Throws ValidationError with the character
// position for syntax errors, and a nonlinearity error when two
// parameter-bearing factors are multiplied.
PredictorExpr parse_predictor(std::string_view text);

// Prints with minimal syntax: " + " between sum terms, "*" between product
// factors, parentheses around nested sums. parse(to_string(e)) == e.
std::string to_string(const PredictorExpr& expr);

// Parameter names in first-appearance order (the reporting order).
std::vector<std::string> parameters(const PredictorExpr& expr);

// Covariates in first-appearance order, without duplicates.
std::vector<Flag> covariates(const PredictorExpr& expr);

// Per-row design vector d, aligned with parameters(expr): the predictor
// equals dot(d, theta) for every theta. For 0/1 covariates every entry is
// 0 or 1.
std::vector<double> compile_design(const PredictorExpr& expr,
                                   const StoryRecord& row);

// Direct evaluation; theta must supply every parameter of expr.
double eval_predictor(const PredictorExpr& expr,
                      const std::map<std::string, double>& theta,
                      const StoryRecord& row);

// A named Bernoulli-logit regression: outcome flag, predictor on the logit
// scale, and one normal prior per parameter.
struct ModelSpec {
  std::string name;
  Flag outcome;
  PredictorExpr predictor;
  std::vector<std::string> param_names;  // first-appearance order
  std::map<std::string, PriorSpec> priors;

  // Builds and validates: the outcome must not appear as a covariate, and
  // priors defaults to Normal(0,10) for every parameter before overrides
  // are applied.
  static ModelSpec make(
      std::string name, Flag outcome, std::string_view predictor_text,
      const std::map<std::string, PriorSpec>& prior_overrides = {});

  ModelSpec with_prior(const std::string& param, PriorSpec prior) const;
};

// The nine built-in models, three per outcome:
//   m*1  own values + own anti-values
//   m*2  nested: the own-value coefficient is shifted additively by the
//        other two religions' value flags, all gated by the own value flag
//   m*3  flat: all three value flags enter additively
// All priors Normal(0,10).
std::vector<ModelSpec> builtin_models();

const ModelSpec& builtin_model(std::string_view name);  // throws if unknown
bool is_builtin_model(std::string_view name);

// Parses "normal(mu,sigma)"; sigma must be positive.
PriorSpec parse_prior(std::string_view text);

// Parses an override of the form "name~normal(mu,sigma)".
std::pair<std::string, PriorSpec> parse_prior_override(std::string_view text);

// Model file: a JSON array (or {"models": [...]}) of entries with
// "name", "outcome", "predictor" and an optional "priors" list of
// override strings.
std::vector<ModelSpec> load_model_file(const std::filesystem::path& path);

}  // namespace additivity
