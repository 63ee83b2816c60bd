#include "intentgc/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace intentgc {

namespace {

template <class Real>
struct Evaluation {
  Real value = 0;
  std::vector<bool> signature;
};

template <class Real, class F>
Evaluation<Real> evaluate(const F& f, std::vector<Tensor<Real>>& params) {
  Tape<Real> tape;
  std::vector<Var> leaves;
  for (auto& p : params) leaves.push_back(tape.leaf(p, nullptr));
  Var out = f(tape, leaves);
  return {tape.value(out)[0], tape.kink_signature()};
}

std::vector<Tensor<double>> analytic_gradients(const ScalarFunction& f, const std::vector<Tensor<double>*>& params) {
  std::vector<Tensor<double>> analytic;
  for (auto* p : params) analytic.emplace_back(p->rows(), p->cols());
  Tape<double> tape;
  std::vector<Var> leaves;
  for (std::size_t i = 0; i < params.size(); ++i) leaves.push_back(tape.leaf(*params[i], &analytic[i]));
  tape.backward(f(tape, leaves));
  return analytic;
}

template <class Real, class F>
GradCheckReport compare(const F& f, const std::vector<Tensor<double>*>& params,
                        const std::vector<Tensor<double>>& analytic, double epsilon, double tolerance) {
  std::vector<Tensor<Real>> values;
  for (auto* p : params) values.push_back(p->template cast<Real>());
  const std::vector<bool> base_signature = evaluate<Real>(f, values).signature;
  const Real eps = static_cast<Real>(epsilon);

  GradCheckReport report;
  for (std::size_t p = 0; p < values.size(); ++p) {
    Tensor<Real>& value = values[p];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const Real saved = value[i];
      value[i] = saved + eps;
      const auto plus = evaluate<Real>(f, values);
      value[i] = saved - eps;
      const auto minus = evaluate<Real>(f, values);
      value[i] = saved;

      GradCoordinate coord;
      coord.param = p;
      coord.index = i;
      coord.analytic = analytic[p][i];
      coord.numeric = static_cast<double>((plus.value - minus.value) / (2 * eps));
      const double denom = std::max(1e-8, std::abs(coord.analytic) + std::abs(coord.numeric));
      coord.rel_error = std::abs(coord.analytic - coord.numeric) / denom;

      if (plus.signature != base_signature || minus.signature != base_signature) {
        report.excluded.push_back(coord);
        continue;
      }
      ++report.checked;
      report.max_rel_error = std::max(report.max_rel_error, coord.rel_error);
      if (coord.rel_error > tolerance) report.failures.push_back(coord);
    }
  }
  return report;
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f, const std::vector<Tensor<double>*>& params, double epsilon,
                           double tolerance) {
  return compare<double>(f, params, analytic_gradients(f, params), epsilon, tolerance);
}

GradCheckReport grad_check(const ScalarFunction& f, const ExtendedScalarFunction& reference,
                           const std::vector<Tensor<double>*>& params, double epsilon, double tolerance) {
  return compare<long double>(reference, params, analytic_gradients(f, params), epsilon, tolerance);
}

}  // namespace intentgc
