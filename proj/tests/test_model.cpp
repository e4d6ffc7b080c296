#include <doctest.h>

#include <cmath>
#include <random>

#include "additivity/errors.hpp"
#include "additivity/model.hpp"
#include "test_helpers.hpp"

using namespace additivity;
using test_helpers::TempDir;
using test_helpers::write_file;

namespace {

const SumNode* as_sum(const PredictorExpr& e) {
  return std::get_if<SumNode>(&e.node());
}
const ProductNode* as_product(const PredictorExpr& e) {
  return std::get_if<ProductNode>(&e.node());
}

std::map<std::string, double> theta_map(const std::vector<std::string>& names,
                                        const std::vector<double>& values) {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < names.size(); ++i) out[names[i]] = values[i];
  return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

TEST_CASE("flat predictor parses to a three-term sum") {
  PredictorExpr e = parse_predictor("a + bVC*VC + bAVC*AVC");
  const SumNode* sum = as_sum(e);
  REQUIRE(sum != nullptr);
  CHECK(sum->terms.size() == 3);
  CHECK(parameters(e) == std::vector<std::string>{"a", "bVC", "bAVC"});
  CHECK(covariates(e) == std::vector<Flag>{Flag::VC, Flag::AVC});
}

TEST_CASE("nested predictor keeps one gated product") {
  PredictorExpr e =
      parse_predictor("a + (bVC + bVB*VB + bVT*VT)*VC + bAVC*AVC");
  const SumNode* sum = as_sum(e);
  REQUIRE(sum != nullptr);
  REQUIRE(sum->terms.size() == 3);
  const ProductNode* gate = as_product(sum->terms[1]);
  REQUIRE(gate != nullptr);
  REQUIRE(gate->factors.size() == 2);
  const SumNode* inner = as_sum(gate->factors[0]);
  REQUIRE(inner != nullptr);
  CHECK(inner->terms.size() == 3);
  CHECK(parameters(e) ==
        std::vector<std::string>{"a", "bVC", "bVB", "bVT", "bAVC"});
}

TEST_CASE("multiplying two parameters is a nonlinearity error") {
  CHECK_THROWS_AS(parse_predictor("bVC * bVB * VC"), ValidationError);
  CHECK_THROWS_AS(parse_predictor("(a + bVC*VC) * (b + bVT*VT)"),
                  ValidationError);
  try {
    parse_predictor("bVC*bVB*VC");
    FAIL("expected nonlinearity error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("nonlinearity") != std::string::npos);
  }
}

TEST_CASE("syntax errors carry a position") {
  CHECK_THROWS_AS(parse_predictor("a + "), ValidationError);
  CHECK_THROWS_AS(parse_predictor("a + (bVC*VC"), ValidationError);
  CHECK_THROWS_AS(parse_predictor("a ^ b"), ValidationError);
  CHECK_THROWS_AS(parse_predictor(""), ValidationError);
  try {
    parse_predictor("a + + b");
    FAIL("expected syntax error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("position") != std::string::npos);
  }
}

TEST_CASE("builtin catalogue matches the nine-model layout") {
  std::vector<ModelSpec> models = builtin_models();
  REQUIRE(models.size() == 9);

  const ModelSpec& mC3 = builtin_model("mC3");
  CHECK(to_string(mC3.predictor) ==
        "a + (bVC*VC + bVB*VB + bVT*VT) + bAVC*AVC");
  CHECK(mC3.outcome == Flag::C);

  const ModelSpec& mT2 = builtin_model("mT2");
  CHECK(to_string(mT2.predictor) == "a + (bVT + bVB*VB + bVC*VC)*VT + bAVT*AVT");
  CHECK(mT2.outcome == Flag::T);

  const ModelSpec& mB1 = builtin_model("mB1");
  CHECK(mB1.param_names == std::vector<std::string>{"a", "bVB", "bAVB"});
  CHECK(mB1.outcome == Flag::B);

  for (const auto& m : models) {
    for (const auto& name : m.param_names) {
      const PriorSpec& p = m.priors.at(name);
      CHECK(p.mu == 0.0);
      CHECK(p.sigma == 10.0);
    }
  }
  CHECK_THROWS_AS(builtin_model("mX9"), ValidationError);
}

TEST_CASE("parse(print(expr)) is structurally the identity") {
  for (const auto& m : builtin_models()) {
    PredictorExpr reparsed = parse_predictor(to_string(m.predictor));
    CHECK(reparsed == m.predictor);
  }
  // And printing canonical source reproduces it byte for byte.
  for (const char* src :
       {"a + bVB*VB + bAVB*AVB", "a + (bVC + bVB*VB + bVT*VT)*VC + bAVC*AVC",
        "a + (bVT*VT + bVB*VB + bVC*VC) + bAVT*AVT"}) {
    CHECK(to_string(parse_predictor(src)) == src);
  }
}

TEST_CASE("parenthesized products flatten to the associative form") {
  CHECK(parse_predictor("(bVC*VB)*VC") == parse_predictor("bVC*VB*VC"));
  CHECK(parse_predictor("bVC*(VB*VC)") == parse_predictor("bVC*VB*VC"));
  PredictorExpr e = parse_predictor("(bVC*VB)*VC");
  CHECK(parse_predictor(to_string(e)) == e);
  CHECK(to_string(e) == "bVC*VB*VC");
}

TEST_CASE("parse-print-parse fixed point on generated expressions") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_int_distribution<int> pick_flag(3, 8);  // covariate flags only
  auto random_term = [&](int idx) {
    std::string term = "p" + std::to_string(idx);
    int factors = 1 + coin(rng);
    for (int f = 0; f < factors; ++f) {
      term += "*" + std::string(flag_name(kAllFlags[pick_flag(rng)]));
    }
    return term;
  };
  for (int trial = 0; trial < 50; ++trial) {
    std::string src = "p0";
    int terms = 1 + static_cast<int>(rng() % 4);
    for (int t = 1; t <= terms; ++t) src += " + " + random_term(t);
    PredictorExpr once = parse_predictor(src);
    PredictorExpr twice = parse_predictor(to_string(once));
    CHECK(once == twice);
  }
}

TEST_CASE("compile_design expands the nested form by hand") {
  const ModelSpec& mC2 = builtin_model("mC2");
  auto row = test_helpers::record({Flag::VC, Flag::VB});
  // lp = a + (bVC + bVB*1 + bVT*0)*1 + bAVC*0 -> d = (1,1,1,0,0)
  CHECK(compile_design(mC2.predictor, row) ==
        std::vector<double>{1, 1, 1, 0, 0});
}

TEST_CASE("compile_design of an all-zero row keeps only the intercept") {
  for (const auto& m : builtin_models()) {
    auto row = test_helpers::record({});
    std::vector<double> d = compile_design(m.predictor, row);
    CHECK(d[0] == 1.0);
    for (std::size_t j = 1; j < d.size(); ++j) CHECK(d[j] == 0.0);
  }
}

TEST_CASE("compile_design reads flat forms directly") {
  const ModelSpec& mC3 = builtin_model("mC3");
  auto row = test_helpers::record({Flag::VC, Flag::VT, Flag::AVC});
  CHECK(compile_design(mC3.predictor, row) ==
        std::vector<double>{1, 1, 0, 1, 1});
}

TEST_CASE("design entries are binary for every builtin and random row") {
  std::mt19937_64 rng(11);
  for (const auto& m : builtin_models()) {
    for (int trial = 0; trial < 20; ++trial) {
      StoryRecord row;
      row.story_id = "r";
      for (Flag f : kAllFlags) {
        row.flags[static_cast<int>(f)] = rng() % 2;
      }
      for (double d : compile_design(m.predictor, row)) {
        CHECK((d == 0.0 || d == 1.0));
      }
    }
  }
}

TEST_CASE("eval_predictor reproduces the fitted nested-model value") {
  const ModelSpec& mC2 = builtin_model("mC2");
  auto theta = theta_map(mC2.param_names, {-2.03, 2.94, 0.01, 0.86, 2.19});
  auto row = test_helpers::record({Flag::VC, Flag::VT});
  double lp = eval_predictor(mC2.predictor, theta, row);
  CHECK(lp == doctest::Approx(-2.03 + 2.94 + 0.86).epsilon(1e-12));
}

TEST_CASE("eval_predictor is zero at theta zero") {
  for (const auto& m : builtin_models()) {
    auto theta = theta_map(m.param_names,
                           std::vector<double>(m.param_names.size(), 0.0));
    auto row = test_helpers::record({Flag::VB, Flag::VC, Flag::AVT});
    CHECK(eval_predictor(m.predictor, theta, row) == 0.0);
  }
}

TEST_CASE("eval_predictor equals the design-vector dot product") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (const auto& m : builtin_models()) {
    for (int trial = 0; trial < 25; ++trial) {
      StoryRecord row;
      row.story_id = "r";
      for (Flag f : kAllFlags) row.flags[static_cast<int>(f)] = rng() % 2;
      std::vector<double> values(m.param_names.size());
      for (auto& v : values) v = normal(rng);
      double direct =
          eval_predictor(m.predictor, theta_map(m.param_names, values), row);
      double via_design = dot(compile_design(m.predictor, row), values);
      CHECK(direct == doctest::Approx(via_design).epsilon(1e-12));
    }
  }
}

TEST_CASE("eval_predictor is linear in the parameters") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 2.0);
  const ModelSpec& m = builtin_model("mT2");
  for (int trial = 0; trial < 30; ++trial) {
    StoryRecord row;
    row.story_id = "r";
    for (Flag f : kAllFlags) row.flags[static_cast<int>(f)] = rng() % 2;
    std::vector<double> t1(m.param_names.size()), t2(m.param_names.size());
    for (auto& v : t1) v = normal(rng);
    for (auto& v : t2) v = normal(rng);
    double s = normal(rng);
    std::vector<double> combo(m.param_names.size());
    for (std::size_t j = 0; j < combo.size(); ++j) combo[j] = t1[j] + s * t2[j];
    double lhs =
        eval_predictor(m.predictor, theta_map(m.param_names, combo), row);
    double rhs =
        eval_predictor(m.predictor, theta_map(m.param_names, t1), row) +
        s * eval_predictor(m.predictor, theta_map(m.param_names, t2), row);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("nested and flat series agree when the own-value flag is set") {
  // Same parameter names, so one theta serves both predictors.
  std::mt19937_64 rng(41);
  std::normal_distribution<double> normal(0.0, 2.0);
  const ModelSpec& mC2 = builtin_model("mC2");
  const ModelSpec& mC3 = builtin_model("mC3");
  REQUIRE(mC2.param_names == mC3.param_names);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> values(mC2.param_names.size());
    for (auto& v : values) v = normal(rng);
    auto theta = theta_map(mC2.param_names, values);

    StoryRecord on;
    on.story_id = "on";
    for (Flag f : kAllFlags) on.flags[static_cast<int>(f)] = rng() % 2;
    on.set_flag(Flag::VC, 1);
    CHECK(eval_predictor(mC2.predictor, theta, on) ==
          doctest::Approx(eval_predictor(mC3.predictor, theta, on))
              .epsilon(1e-12));

    StoryRecord off = on;
    off.set_flag(Flag::VC, 0);
    double expected = values[0] + values[4] * off.flag(Flag::AVC);
    CHECK(eval_predictor(mC2.predictor, theta, off) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("eval_predictor reports missing parameter values") {
  PredictorExpr e = parse_predictor("a + bVC*VC");
  std::map<std::string, double> incomplete{{"a", 1.0}};
  CHECK_THROWS_AS(
      eval_predictor(e, incomplete, test_helpers::record({Flag::VC})),
      ValidationError);
}

TEST_CASE("ModelSpec::make rejects the outcome as a covariate") {
  CHECK_THROWS_AS(ModelSpec::make("bad", Flag::C, "a + bC*C"),
                  ValidationError);
}

TEST_CASE("ModelSpec::make rejects parameter-free additive terms") {
  CHECK_THROWS_AS(ModelSpec::make("bad", Flag::C, "a + VB"), ValidationError);
  CHECK_THROWS_AS(ModelSpec::make("bad", Flag::C, "a + (bVC + VB)*VC"),
                  ValidationError);
}

TEST_CASE("prior parsing") {
  PriorSpec p = parse_prior("normal(-3, 1)");
  CHECK(p.mu == -3.0);
  CHECK(p.sigma == 1.0);
  CHECK(parse_prior("Normal( 0 , 50 )").sigma == 50.0);
  CHECK_THROWS_AS(parse_prior("normal(0,-1)"), ValidationError);
  CHECK_THROWS_AS(parse_prior("cauchy(0,1)"), ValidationError);
  CHECK_THROWS_AS(parse_prior("normal(0)"), ValidationError);
  CHECK_THROWS_AS(parse_prior("normal(0,1)x"), ValidationError);

  auto [name, prior] = parse_prior_override("bVC~normal(0.5,2)");
  CHECK(name == "bVC");
  CHECK(prior.mu == 0.5);
  CHECK_THROWS_AS(parse_prior_override("normal(0,1)"), ValidationError);
}

TEST_CASE("prior overrides attach to the named parameter only") {
  ModelSpec spec = ModelSpec::make("custom", Flag::C, "a + bVC*VC",
                                   {{"bVC", {-3.0, 1.0}}});
  CHECK(spec.priors.at("bVC").mu == -3.0);
  CHECK(spec.priors.at("a").sigma == 10.0);
  CHECK_THROWS_AS(
      ModelSpec::make("custom", Flag::C, "a + bVC*VC", {{"zzz", {0, 1}}}),
      ValidationError);
}

TEST_CASE("model file round trip") {
  TempDir dir;
  std::string content = R"json([
    {"name": "own", "outcome": "C", "predictor": "a + bVC*VC",
     "priors": ["bVC~normal(0,5)"]},
    {"name": "flat", "outcome": "T",
     "predictor": "a + (bVT*VT + bVB*VB + bVC*VC) + bAVT*AVT"}
  ])json";
  auto path = write_file(dir, "models.json", content);
  std::vector<ModelSpec> models = load_model_file(path);
  REQUIRE(models.size() == 2);
  CHECK(models[0].priors.at("bVC").sigma == 5.0);
  CHECK(models[1].outcome == Flag::T);

  CHECK_THROWS_AS(
      load_model_file(write_file(dir, "bad.json", R"([{"name":"x"}])")),
      SchemaError);
  CHECK_THROWS_AS(load_model_file(write_file(dir, "notjson.json", "{{{{")),
                  ValidationError);
}
