#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ismnet {

/// One basis function of a dictionary. Terms come from a closed grammar so
/// that experiments are reproducible from configuration alone:
///
///   x3            coordinate projection (only in the linear head)
///   x1^2*x2       monomial of total degree >= 2
///   sin(x1*x2)    sine of a bilinear argument
///   cos(x1*x2)    cosine of a bilinear argument
///   ln(1+x2^2)    logarithm of one plus a square
///
/// State indices are 1-based in the textual form and 0-based in memory.
struct DictionaryTerm {
  enum class Kind { kCoordinate, kMonomial, kSin, kCos, kLogOnePlusSquare };

  Kind kind = Kind::kCoordinate;
  std::vector<int> exponents;  // kMonomial: one exponent per state
  int a = 0;                   // coordinate / first factor / log argument
  int b = 0;                   // second factor of sin / cos

  double eval(std::span<const double> x) const;
  std::string name() const;

  static DictionaryTerm parse(std::string_view text, int state_dim);

  friend bool operator==(const DictionaryTerm&, const DictionaryTerm&) = default;
};

/// Ordered basis Z(x) = [x; M(x)]: the first n entries are the coordinates,
/// the remaining z - n entries the nonlinear tail M(x).
class Dictionary {
 public:
  /// Linear-only dictionary (z = n).
  explicit Dictionary(int state_dim);
  Dictionary(int state_dim, std::vector<DictionaryTerm> nonlinear);

  /// Builds from textual nonlinear terms; `monomials_up_to` >= 2 prepends
  /// every monomial of degree 2..d (graded, then lexicographic order).
  static Dictionary parse(int state_dim, const std::vector<std::string>& terms,
                          int monomials_up_to = 0);

  int state_dim() const { return state_dim_; }
  int size() const { return static_cast<int>(terms_.size()); }
  int nonlinear_size() const { return size() - state_dim_; }
  const std::vector<DictionaryTerm>& terms() const { return terms_; }

  /// Evaluates Z(x) into `out` (length size()). Throws DomainError if any
  /// entry is not finite.
  void eval(std::span<const double> x, std::span<double> out) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& x) const;
  /// Nonlinear tail M(x).
  Eigen::VectorXd eval_nonlinear(const Eigen::VectorXd& x) const;

  /// Z evaluated column-wise over a state block (n x T) -> (z x T).
  Eigen::MatrixXd eval_columns(const Eigen::MatrixXd& states) const;

  std::optional<int> index_of(const DictionaryTerm& term) const;
  std::vector<std::string> names() const;

  /// True when M(0) = 0. The cos family violates this; callers warn only.
  bool vanishes_at_origin() const;

  friend bool operator==(const Dictionary&, const Dictionary&) = default;

 private:
  int state_dim_;
  std::vector<DictionaryTerm> terms_;
};

}  // namespace ismnet
