#include "ismnet/model/dictionary.h"

#include <cmath>
#include <algorithm>
#include <regex>

#include "ismnet/error.h"

namespace ismnet {

namespace {

int parse_index(const std::string& digits, int state_dim, std::string_view text) {
  const int k = std::stoi(digits);
  if (k < 1 || k > state_dim) {
    throw ConfigError("dictionary term '" + std::string(text) +
                      "' references state x" + digits + " but n = " +
                      std::to_string(state_dim));
  }
  return k - 1;
}

double integer_power(double base, int exponent) {
  double r = 1.0;
  for (int e = 0; e < exponent; ++e) r *= base;
  return r;
}

// Graded then lexicographic enumeration of exponent vectors of total degree d.
void enumerate_degree(int n, int d, int var, std::vector<int>& current,
                      std::vector<std::vector<int>>& out) {
  if (var == n - 1) {
    current[var] = d;
    out.push_back(current);
    current[var] = 0;
    return;
  }
  for (int e = d; e >= 0; --e) {
    current[var] = e;
    enumerate_degree(n, d - e, var + 1, current, out);
  }
  current[var] = 0;
}

}  // namespace

double DictionaryTerm::eval(std::span<const double> x) const {
  switch (kind) {
    case Kind::kCoordinate:
      return x[a];
    case Kind::kMonomial: {
      double r = 1.0;
      for (std::size_t k = 0; k < exponents.size(); ++k) {
        if (exponents[k] != 0) r *= integer_power(x[k], exponents[k]);
      }
      return r;
    }
    case Kind::kSin:
      return std::sin(x[a] * x[b]);
    case Kind::kCos:
      return std::cos(x[a] * x[b]);
    case Kind::kLogOnePlusSquare:
      return std::log1p(x[a] * x[a]);
  }
  return 0.0;
}

std::string DictionaryTerm::name() const {
  auto var = [](int k) { return "x" + std::to_string(k + 1); };
  switch (kind) {
    case Kind::kCoordinate:
      return var(a);
    case Kind::kMonomial: {
      std::string s;
      for (std::size_t k = 0; k < exponents.size(); ++k) {
        if (exponents[k] == 0) continue;
        if (!s.empty()) s += "*";
        s += var(static_cast<int>(k));
        if (exponents[k] > 1) s += "^" + std::to_string(exponents[k]);
      }
      return s;
    }
    case Kind::kSin:
      return "sin(" + var(a) + "*" + var(b) + ")";
    case Kind::kCos:
      return "cos(" + var(a) + "*" + var(b) + ")";
    case Kind::kLogOnePlusSquare:
      return "ln(1+" + var(a) + "^2)";
  }
  return {};
}

DictionaryTerm DictionaryTerm::parse(std::string_view text, int state_dim) {
  std::string s;
  for (char c : text) {
    if (c != ' ' && c != '\t') s.push_back(c);
  }
  static const std::regex trig(R"((sin|cos)\(x(\d+)\*x(\d+)\))");
  static const std::regex logsq(R"(ln\(1\+x(\d+)\^2\))");
  static const std::regex factor(R"(x(\d+)(?:\^(\d+))?)");
  static const std::regex monomial(R"(x\d+(?:\^\d+)?(?:\*x\d+(?:\^\d+)?)*)");

  DictionaryTerm t;
  std::smatch m;
  if (std::regex_match(s, m, trig)) {
    t.kind = m[1] == "sin" ? Kind::kSin : Kind::kCos;
    t.a = parse_index(m[2], state_dim, text);
    t.b = parse_index(m[3], state_dim, text);
    if (t.a > t.b) std::swap(t.a, t.b);
    return t;
  }
  if (std::regex_match(s, m, logsq)) {
    t.kind = Kind::kLogOnePlusSquare;
    t.a = parse_index(m[1], state_dim, text);
    return t;
  }
  if (std::regex_match(s, monomial)) {
    t.exponents.assign(state_dim, 0);
    int degree = 0;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), factor);
         it != std::sregex_iterator(); ++it) {
      const int k = parse_index((*it)[1], state_dim, text);
      const int e = (*it)[2].matched ? std::stoi((*it)[2]) : 1;
      if (e < 1) throw ConfigError("zero exponent in term '" + s + "'");
      t.exponents[k] += e;
      degree += e;
    }
    if (degree == 1) {
      t.kind = Kind::kCoordinate;
      for (int k = 0; k < state_dim; ++k) {
        if (t.exponents[k] == 1) t.a = k;
      }
      t.exponents.clear();
    } else {
      t.kind = Kind::kMonomial;
    }
    return t;
  }
  throw ConfigError("unrecognized dictionary term '" + std::string(text) +
                    "' (expected a monomial, sin(xi*xj), cos(xi*xj) or "
                    "ln(1+xi^2))");
}

Dictionary::Dictionary(int state_dim) : Dictionary(state_dim, {}) {}

Dictionary::Dictionary(int state_dim, std::vector<DictionaryTerm> nonlinear)
    : state_dim_(state_dim) {
  if (state_dim < 1) throw DimensionError("dictionary needs n >= 1");
  terms_.reserve(state_dim + nonlinear.size());
  for (int k = 0; k < state_dim; ++k) {
    DictionaryTerm t;
    t.kind = DictionaryTerm::Kind::kCoordinate;
    t.a = k;
    terms_.push_back(t);
  }
  for (auto& t : nonlinear) {
    if (t.kind == DictionaryTerm::Kind::kCoordinate) {
      throw ConfigError("coordinate term '" + t.name() +
                        "' belongs to the linear head only");
    }
    const int top = std::max(t.a, t.b);
    if (top >= state_dim ||
        (t.kind == DictionaryTerm::Kind::kMonomial &&
         static_cast<int>(t.exponents.size()) != state_dim)) {
      throw DimensionError("term '" + t.name() + "' does not fit n = " +
                           std::to_string(state_dim));
    }
    if (index_of(t)) throw ConfigError("duplicate dictionary term '" + t.name() + "'");
    terms_.push_back(std::move(t));
  }
}

Dictionary Dictionary::parse(int state_dim, const std::vector<std::string>& terms,
                             int monomials_up_to) {
  std::vector<DictionaryTerm> nonlinear;
  if (monomials_up_to >= 2) {
    for (int d = 2; d <= monomials_up_to; ++d) {
      std::vector<std::vector<int>> exps;
      std::vector<int> cur(state_dim, 0);
      enumerate_degree(state_dim, d, 0, cur, exps);
      for (auto& e : exps) {
        DictionaryTerm t;
        t.kind = DictionaryTerm::Kind::kMonomial;
        t.exponents = std::move(e);
        nonlinear.push_back(std::move(t));
      }
    }
  }
  for (const auto& s : terms) nonlinear.push_back(DictionaryTerm::parse(s, state_dim));
  return Dictionary(state_dim, std::move(nonlinear));
}

void Dictionary::eval(std::span<const double> x, std::span<double> out) const {
  if (static_cast<int>(x.size()) != state_dim_ || out.size() != terms_.size()) {
    throw DimensionError("dictionary eval: expected x of length " +
                         std::to_string(state_dim_));
  }
  for (int k = 0; k < state_dim_; ++k) out[k] = x[k];
  for (std::size_t k = state_dim_; k < terms_.size(); ++k) {
    const double v = terms_[k].eval(x);
    if (!std::isfinite(v)) {
      throw DomainError("dictionary term '" + terms_[k].name() +
                        "' is not finite at the given state");
    }
    out[k] = v;
  }
}

Eigen::VectorXd Dictionary::eval(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(size());
  eval(std::span<const double>(x.data(), x.size()),
       std::span<double>(out.data(), out.size()));
  return out;
}

Eigen::VectorXd Dictionary::eval_nonlinear(const Eigen::VectorXd& x) const {
  return eval(x).tail(nonlinear_size());
}

Eigen::MatrixXd Dictionary::eval_columns(const Eigen::MatrixXd& states) const {
  if (states.rows() != state_dim_) {
    throw DimensionError("dictionary eval_columns: state rows != n");
  }
  Eigen::MatrixXd out(size(), states.cols());
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    eval(std::span<const double>(states.col(c).data(), state_dim_),
         std::span<double>(out.col(c).data(), size()));
  }
  return out;
}

std::optional<int> Dictionary::index_of(const DictionaryTerm& term) const {
  for (std::size_t k = 0; k < terms_.size(); ++k) {
    if (terms_[k] == term) return static_cast<int>(k);
  }
  return std::nullopt;
}

std::vector<std::string> Dictionary::names() const {
  std::vector<std::string> out;
  out.reserve(terms_.size());
  for (const auto& t : terms_) out.push_back(t.name());
  return out;
}

bool Dictionary::vanishes_at_origin() const {
  const std::vector<double> zero(state_dim_, 0.0);
  for (std::size_t k = state_dim_; k < terms_.size(); ++k) {
    if (terms_[k].eval(zero) != 0.0) return false;
  }
  return true;
}

}  // namespace ismnet
