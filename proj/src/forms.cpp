#include "flowmatch/forms.hpp"

#include <bit>
#include <stdexcept>

namespace flowmatch::forms {

Form::Form(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 1 || dim > 20) throw std::invalid_argument("form dimension out of range");
  if (degree < 0 || degree > dim) throw std::invalid_argument("form degree out of range");
  coeff_.assign(std::size_t{1} << dim, 0.0);
}

Form Form::scalar(int dim, double value) {
  Form f(dim, 0);
  f[0] = value;
  return f;
}

Form Form::one_form(const Vec& covector) {
  Form f(static_cast<int>(covector.size()), 1);
  for (int i = 0; i < covector.size(); ++i) f[1u << i] = covector[i];
  return f;
}

Vec Form::as_vector() const {
  if (degree_ != 1) throw std::logic_error("as_vector needs a 1-form");
  Vec v(dim_);
  for (int i = 0; i < dim_; ++i) v[i] = coeff_[1u << i];
  return v;
}

int shuffle_sign(std::uint32_t a, std::uint32_t b) {
  if (a & b) return 0;
  // Each index of a must pass every smaller index of b.
  int inversions = 0;
  for (std::uint32_t rest = a; rest; rest &= rest - 1) {
    const std::uint32_t bit = rest & (~rest + 1);
    inversions += std::popcount(b & (bit - 1));
  }
  return (inversions % 2 == 0) ? 1 : -1;
}

Form wedge(const Form& a, const Form& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("wedge of forms on different spaces");
  const int m = a.dim();
  if (a.degree() + b.degree() > m) throw std::invalid_argument("wedge degree exceeds dimension");
  Form out(m, a.degree() + b.degree());
  const std::uint32_t full = 1u << m;
  for (std::uint32_t ia = 0; ia < full; ++ia) {
    if (std::popcount(ia) != a.degree() || a[ia] == 0.0) continue;
    for (std::uint32_t ib = 0; ib < full; ++ib) {
      if (std::popcount(ib) != b.degree() || b[ib] == 0.0) continue;
      const int s = shuffle_sign(ia, ib);
      if (s != 0) out[ia | ib] += s * a[ia] * b[ib];
    }
  }
  return out;
}

Form hodge_star(const Form& a) {
  const int m = a.dim();
  const std::uint32_t full = (1u << m) - 1;
  Form out(m, m - a.degree());
  for (std::uint32_t ia = 0; ia <= full; ++ia) {
    if (std::popcount(ia) != a.degree() || a[ia] == 0.0) continue;
    out[full & ~ia] += shuffle_sign(ia, full & ~ia) * a[ia];
  }
  return out;
}

}  // namespace flowmatch::forms
