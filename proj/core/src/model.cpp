#include "additivity/model.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "additivity/errors.hpp"

namespace additivity {

namespace {

// ---------------------------------------------------------------------------
// Tokenizer

enum class TokKind { Ident, Plus, Star, LParen, RParen, End };

struct Token {
  TokKind kind;
  std::string text;
  std::size_t pos;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '+') {
      toks.push_back({TokKind::Plus, "+", i});
      ++i;
    } else if (c == '*') {
      toks.push_back({TokKind::Star, "*", i});
      ++i;
    } else if (c == '(') {
      toks.push_back({TokKind::LParen, "(", i});
      ++i;
    } else if (c == ')') {
      toks.push_back({TokKind::RParen, ")", i});
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[i])) ||
              text[i] == '_')) {
        ++i;
      }
      toks.push_back(
          {TokKind::Ident, std::string(text.substr(start, i - start)), start});
    } else {
      throw ValidationError("syntax error at position " + std::to_string(i) +
                            ": unexpected character '" + std::string(1, c) +
                            "'");
    }
  }
  toks.push_back({TokKind::End, "", text.size()});
  return toks;
}

// Case-sensitive covariate recognition: only the canonical uppercase flag
// names denote covariates, so lowercase identifiers like "a" or "b" always
// parse as parameters.
bool is_covariate_name(std::string_view ident, Flag* out) {
  for (Flag f : kAllFlags) {
    if (ident == flag_name(f)) {
      *out = f;
      return true;
    }
  }
  return false;
}

bool contains_param(const PredictorExpr& expr) {
  return std::visit(
      [](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ParamNode>) {
          return true;
        } else if constexpr (std::is_same_v<T, CovariateNode>) {
          return false;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          for (const auto& f : node.factors)
            if (contains_param(f)) return true;
          return false;
        } else {
          for (const auto& t : node.terms)
            if (contains_param(t)) return true;
          return false;
        }
      },
      expr.node());
}

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  PredictorExpr parse() {
    PredictorExpr e = parse_sum();
    if (peek().kind != TokKind::End) {
      fail("expected '+', '*' or end of input");
    }
    return e;
  }

 private:
  const Token& peek() const { return toks_[idx_]; }
  Token take() { return toks_[idx_++]; }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError("syntax error at position " +
                          std::to_string(peek().pos) + ": " + what);
  }

  PredictorExpr parse_sum() {
    std::vector<PredictorExpr> terms;
    terms.push_back(parse_product());
    while (peek().kind == TokKind::Plus) {
      take();
      terms.push_back(parse_product());
    }
    if (terms.size() == 1) return std::move(terms.front());
    return PredictorExpr(SumNode{std::move(terms)});
  }

  PredictorExpr parse_product() {
    std::vector<PredictorExpr> factors;
    std::size_t op_pos = peek().pos;
    factors.push_back(parse_factor());
    while (peek().kind == TokKind::Star) {
      op_pos = take().pos;
      factors.push_back(parse_factor());
    }
    if (factors.size() == 1) return std::move(factors.front());
    // Parentheses around a product are transparent, so nested products are
    // spliced flat; printing then reparses to the same tree. Parenthesized
    // sums stay nested (printing restores their parentheses).
    std::vector<PredictorExpr> flat;
    for (const auto& f : factors) {
      if (const auto* p = std::get_if<ProductNode>(&f.node())) {
        flat.insert(flat.end(), p->factors.begin(), p->factors.end());
      } else {
        flat.push_back(f);
      }
    }
    int param_bearing = 0;
    for (const auto& f : flat) {
      if (contains_param(f)) ++param_bearing;
    }
    if (param_bearing > 1) {
      throw ValidationError(
          "nonlinearity error at position " + std::to_string(op_pos) +
          ": a product may contain at most one parameter-bearing factor");
    }
    return PredictorExpr(ProductNode{std::move(flat)});
  }

  PredictorExpr parse_factor() {
    const Token& t = peek();
    switch (t.kind) {
      case TokKind::Ident: {
        Token tok = take();
        Flag f;
        if (is_covariate_name(tok.text, &f)) {
          return PredictorExpr(CovariateNode{f});
        }
        return PredictorExpr(ParamNode{tok.text});
      }
      case TokKind::LParen: {
        take();
        PredictorExpr inner = parse_sum();
        if (peek().kind != TokKind::RParen) fail("expected ')'");
        take();
        return inner;
      }
      default:
        fail("expected identifier or '('");
    }
  }

  std::vector<Token> toks_;
  std::size_t idx_ = 0;
};

// ---------------------------------------------------------------------------
// Affine form: predictor = constant + sum_j coef[j] * theta[j].
// Products with two param-bearing factors are rejected, so multiplication
// is always scalar-times-affine.

struct Affine {
  double constant = 0.0;
  std::vector<double> coef;  // aligned with a parameter index map

  bool has_params() const {
    return std::any_of(coef.begin(), coef.end(),
                       [](double c) { return c != 0.0; });
  }
};

Affine eval_affine(const PredictorExpr& expr,
                   const std::map<std::string, int>& param_index,
                   const StoryRecord& row) {
  const std::size_t p = param_index.size();
  return std::visit(
      [&](const auto& node) -> Affine {
        using T = std::decay_t<decltype(node)>;
        Affine out;
        out.coef.assign(p, 0.0);
        if constexpr (std::is_same_v<T, ParamNode>) {
          auto it = param_index.find(node.name);
          if (it == param_index.end()) {
            throw ValidationError("unknown parameter '" + node.name + "'");
          }
          out.coef[it->second] = 1.0;
        } else if constexpr (std::is_same_v<T, CovariateNode>) {
          out.constant = row.flag(node.flag);
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          double scalar = 1.0;
          bool have_affine = false;
          Affine inner;
          for (const auto& f : node.factors) {
            Affine a = eval_affine(f, param_index, row);
            if (a.has_params()) {
              if (have_affine) {
                throw ValidationError(
                    "nonlinearity error: product of two parameter-bearing "
                    "factors");
              }
              have_affine = true;
              inner = std::move(a);
            } else {
              scalar *= a.constant;
            }
          }
          if (have_affine) {
            out.constant = scalar * inner.constant;
            for (std::size_t j = 0; j < p; ++j)
              out.coef[j] = scalar * inner.coef[j];
          } else {
            out.constant = scalar;
          }
        } else {
          for (const auto& t : node.terms) {
            Affine a = eval_affine(t, param_index, row);
            out.constant += a.constant;
            for (std::size_t j = 0; j < p; ++j) out.coef[j] += a.coef[j];
          }
        }
        return out;
      },
      expr.node());
}

// True when the sum-of-products expansion of expr contains a monomial
// without any parameter. Such a predictor cannot be written as d·theta.
bool has_param_free_part(const PredictorExpr& expr) {
  return std::visit(
      [](const auto& node) -> bool {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ParamNode>) {
          return false;
        } else if constexpr (std::is_same_v<T, CovariateNode>) {
          return true;
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          for (const auto& f : node.factors) {
            if (contains_param(f)) return has_param_free_part(f);
          }
          return true;  // covariates only
        } else {
          for (const auto& t : node.terms) {
            if (has_param_free_part(t)) return true;
          }
          return false;
        }
      },
      expr.node());
}

void collect_params(const PredictorExpr& expr, std::vector<std::string>* out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ParamNode>) {
          if (std::find(out->begin(), out->end(), node.name) == out->end()) {
            out->push_back(node.name);
          }
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          for (const auto& f : node.factors) collect_params(f, out);
        } else if constexpr (std::is_same_v<T, SumNode>) {
          for (const auto& t : node.terms) collect_params(t, out);
        }
      },
      expr.node());
}

void collect_covariates(const PredictorExpr& expr, std::vector<Flag>* out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, CovariateNode>) {
          if (std::find(out->begin(), out->end(), node.flag) == out->end()) {
            out->push_back(node.flag);
          }
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          for (const auto& f : node.factors) collect_covariates(f, out);
        } else if constexpr (std::is_same_v<T, SumNode>) {
          for (const auto& t : node.terms) collect_covariates(t, out);
        }
      },
      expr.node());
}

void print_expr(const PredictorExpr& expr, std::ostringstream& out,
                bool inside_sum, bool inside_product) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ParamNode>) {
          out << node.name;
        } else if constexpr (std::is_same_v<T, CovariateNode>) {
          out << flag_name(node.flag);
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          bool first = true;
          for (const auto& f : node.factors) {
            if (!first) out << '*';
            print_expr(f, out, false, true);
            first = false;
          }
        } else {
          bool parens = inside_sum || inside_product;
          if (parens) out << '(';
          bool first = true;
          for (const auto& t : node.terms) {
            if (!first) out << " + ";
            print_expr(t, out, true, false);
            first = false;
          }
          if (parens) out << ')';
        }
      },
      expr.node());
}

}  // namespace

bool operator==(const ProductNode& a, const ProductNode& b) {
  return a.factors == b.factors;
}

bool operator==(const SumNode& a, const SumNode& b) {
  return a.terms == b.terms;
}

bool operator==(const PredictorExpr& a, const PredictorExpr& b) {
  return a.node() == b.node();
}

PredictorExpr parse_predictor(std::string_view text) {
  return Parser(text).parse();
}

std::string to_string(const PredictorExpr& expr) {
  std::ostringstream out;
  print_expr(expr, out, false, false);
  return out.str();
}

std::vector<std::string> parameters(const PredictorExpr& expr) {
  std::vector<std::string> out;
  collect_params(expr, &out);
  return out;
}

std::vector<Flag> covariates(const PredictorExpr& expr) {
  std::vector<Flag> out;
  collect_covariates(expr, &out);
  return out;
}

std::vector<double> compile_design(const PredictorExpr& expr,
                                   const StoryRecord& row) {
  if (has_param_free_part(expr)) {
    throw ValidationError(
        "predictor has a parameter-free additive term; every term must "
        "carry a parameter");
  }
  std::vector<std::string> names = parameters(expr);
  std::map<std::string, int> index;
  for (std::size_t j = 0; j < names.size(); ++j)
    index[names[j]] = static_cast<int>(j);
  Affine a = eval_affine(expr, index, row);
  return std::move(a.coef);
}

double eval_predictor(const PredictorExpr& expr,
                      const std::map<std::string, double>& theta,
                      const StoryRecord& row) {
  return std::visit(
      [&](const auto& node) -> double {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, ParamNode>) {
          auto it = theta.find(node.name);
          if (it == theta.end()) {
            throw ValidationError("missing parameter value for '" +
                                  node.name + "'");
          }
          return it->second;
        } else if constexpr (std::is_same_v<T, CovariateNode>) {
          return row.flag(node.flag);
        } else if constexpr (std::is_same_v<T, ProductNode>) {
          double prod = 1.0;
          for (const auto& f : node.factors)
            prod *= eval_predictor(f, theta, row);
          return prod;
        } else {
          double sum = 0.0;
          for (const auto& t : node.terms)
            sum += eval_predictor(t, theta, row);
          return sum;
        }
      },
      expr.node());
}

ModelSpec ModelSpec::make(std::string name, Flag outcome,
                          std::string_view predictor_text,
                          const std::map<std::string, PriorSpec>& overrides) {
  ModelSpec spec;
  spec.name = std::move(name);
  spec.outcome = outcome;
  spec.predictor = parse_predictor(predictor_text);
  spec.param_names = parameters(spec.predictor);
  if (spec.param_names.empty()) {
    throw ValidationError("model '" + spec.name +
                          "': predictor has no parameters");
  }
  if (has_param_free_part(spec.predictor)) {
    throw ValidationError("model '" + spec.name +
                          "': every additive term of the predictor must "
                          "carry a parameter");
  }
  for (Flag f : covariates(spec.predictor)) {
    if (f == outcome) {
      throw ValidationError("model '" + spec.name + "': outcome " +
                            std::string(flag_name(outcome)) +
                            " appears as a covariate in the predictor");
    }
  }
  for (const auto& p : spec.param_names) spec.priors[p] = PriorSpec{};
  for (const auto& [pname, prior] : overrides) {
    auto it = spec.priors.find(pname);
    if (it == spec.priors.end()) {
      throw ValidationError("model '" + spec.name + "': prior for unknown "
                            "parameter '" + pname + "'");
    }
    if (!(prior.sigma > 0.0)) {
      throw ValidationError("model '" + spec.name + "': prior sigma for '" +
                            pname + "' must be positive");
    }
    it->second = prior;
  }
  return spec;
}

ModelSpec ModelSpec::with_prior(const std::string& param,
                                PriorSpec prior) const {
  if (priors.find(param) == priors.end()) {
    throw ValidationError("model '" + name + "': no parameter '" + param +
                          "'");
  }
  if (!(prior.sigma > 0.0)) {
    throw ValidationError("prior sigma must be positive");
  }
  ModelSpec out = *this;
  out.priors[param] = prior;
  return out;
}

std::vector<ModelSpec> builtin_models() {
  // Series pattern: the own value flag leads, the other two religions
  // follow in B,C,T order; the anti-value term always matches the outcome.
  static const std::vector<ModelSpec> models = [] {
    std::vector<ModelSpec> out;
    out.push_back(ModelSpec::make("mB1", Flag::B, "a + bVB*VB + bAVB*AVB"));
    out.push_back(ModelSpec::make(
        "mB2", Flag::B, "a + (bVB + bVC*VC + bVT*VT)*VB + bAVB*AVB"));
    out.push_back(ModelSpec::make(
        "mB3", Flag::B, "a + (bVB*VB + bVC*VC + bVT*VT) + bAVB*AVB"));
    out.push_back(ModelSpec::make("mC1", Flag::C, "a + bVC*VC + bAVC*AVC"));
    out.push_back(ModelSpec::make(
        "mC2", Flag::C, "a + (bVC + bVB*VB + bVT*VT)*VC + bAVC*AVC"));
    out.push_back(ModelSpec::make(
        "mC3", Flag::C, "a + (bVC*VC + bVB*VB + bVT*VT) + bAVC*AVC"));
    out.push_back(ModelSpec::make("mT1", Flag::T, "a + bVT*VT + bAVT*AVT"));
    out.push_back(ModelSpec::make(
        "mT2", Flag::T, "a + (bVT + bVB*VB + bVC*VC)*VT + bAVT*AVT"));
    out.push_back(ModelSpec::make(
        "mT3", Flag::T, "a + (bVT*VT + bVB*VB + bVC*VC) + bAVT*AVT"));
    return out;
  }();
  return models;
}

const ModelSpec& builtin_model(std::string_view name) {
  static const std::vector<ModelSpec> models = builtin_models();
  for (const auto& m : models) {
    if (m.name == name) return m;
  }
  throw ValidationError("unknown builtin model '" + std::string(name) +
                        "' (expected one of mB1..mB3, mC1..mC3, mT1..mT3)");
}

bool is_builtin_model(std::string_view name) {
  for (const auto& m : builtin_models()) {
    if (m.name == name) return true;
  }
  return false;
}

PriorSpec parse_prior(std::string_view text) {
  std::string s(text);
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::size_t open = l.find('(');
  std::size_t close = l.rfind(')');
  std::string head = open == std::string::npos ? l : l.substr(0, open);
  head.erase(std::remove_if(head.begin(), head.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             head.end());
  if (head != "normal" || open == std::string::npos ||
      close == std::string::npos || close < open) {
    throw ValidationError("bad prior '" + s +
                          "': expected normal(mu,sigma)");
  }
  for (std::size_t i = close + 1; i < s.size(); ++i) {
    if (!std::isspace(static_cast<unsigned char>(s[i]))) {
      throw ValidationError("bad prior '" + s +
                            "': unexpected text after ')'");
    }
  }
  std::string args = s.substr(open + 1, close - open - 1);
  std::size_t comma = args.find(',');
  if (comma == std::string::npos) {
    throw ValidationError("bad prior '" + s +
                          "': expected two arguments normal(mu,sigma)");
  }
  PriorSpec prior;
  try {
    prior.mu = std::stod(args.substr(0, comma));
    prior.sigma = std::stod(args.substr(comma + 1));
  } catch (const std::exception&) {
    throw ValidationError("bad prior '" + s + "': non-numeric argument");
  }
  if (!(prior.sigma > 0.0)) {
    throw ValidationError("bad prior '" + s + "': sigma must be positive");
  }
  return prior;
}

std::pair<std::string, PriorSpec> parse_prior_override(std::string_view text) {
  std::size_t tilde = text.find('~');
  if (tilde == std::string_view::npos) {
    throw ValidationError("bad prior override '" + std::string(text) +
                          "': expected name~normal(mu,sigma)");
  }
  std::string name(text.substr(0, tilde));
  name.erase(std::remove_if(name.begin(), name.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             name.end());
  if (name.empty()) {
    throw ValidationError("bad prior override '" + std::string(text) +
                          "': empty parameter name");
  }
  return {name, parse_prior(text.substr(tilde + 1))};
}

std::vector<ModelSpec> load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open model file: " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model file " + path.string() +
                          ": invalid JSON: " + e.what());
  }
  const nlohmann::json* list = &doc;
  if (doc.is_object()) {
    if (!doc.contains("models")) {
      throw SchemaError("model file " + path.string() +
                        ": missing \"models\" array");
    }
    list = &doc["models"];
  }
  if (!list->is_array() || list->empty()) {
    throw ValidationError("model file " + path.string() +
                          ": expected a non-empty array of models");
  }
  std::vector<ModelSpec> out;
  for (const auto& entry : *list) {
    for (const char* key : {"name", "outcome", "predictor"}) {
      if (!entry.contains(key)) {
        throw SchemaError("model file " + path.string() +
                          ": entry missing \"" + key + "\"");
      }
    }
    auto outcome = flag_from_name(entry["outcome"].get<std::string>());
    if (!outcome) {
      throw ValidationError("model file " + path.string() +
                            ": bad outcome '" +
                            entry["outcome"].get<std::string>() + "'");
    }
    std::map<std::string, PriorSpec> overrides;
    if (entry.contains("priors")) {
      for (const auto& p : entry["priors"]) {
        auto [pname, prior] = parse_prior_override(p.get<std::string>());
        overrides[pname] = prior;
      }
    }
    out.push_back(ModelSpec::make(entry["name"].get<std::string>(), *outcome,
                                  entry["predictor"].get<std::string>(),
                                  overrides));
  }
  return out;
}

}  // namespace additivity
