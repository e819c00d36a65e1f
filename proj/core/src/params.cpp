#include "overcount/params.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "overcount/errors.hpp"

namespace overcount {

namespace {

constexpr double kSimplexTol = 1e-9;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_simplex(const Eigen::VectorXd& v, const char* name) {
  if (v.size() == 0) throw std::domain_error(std::string(name) + " is empty");
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
      throw std::domain_error(std::string(name) + "[" + std::to_string(i) +
                              "] outside [0, 1]: " + std::to_string(v[i]));
    }
  }
  const double s = v.sum();
  if (std::abs(s - 1.0) > kSimplexTol) {
    throw std::domain_error(std::string(name) + " sums to " + std::to_string(s) + ", not 1");
  }
}

void check_positive(const Eigen::VectorXd& v, const char* name) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] > 0.0) || !std::isfinite(v[i])) {
      throw std::domain_error(std::string(name) + "[" + std::to_string(i) +
                              "] must be positive and finite, got " + std::to_string(v[i]));
    }
  }
}

void check_categories(Eigen::Index p, const char* family) {
  if (p < 2) {
    throw std::domain_error(std::string(family) + " needs at least 2 categories");
  }
}

}  // namespace

std::string_view to_string(Family f) {
  switch (f) {
    case Family::mn: return "mn";
    case Family::dm: return "dm";
    case Family::rcm: return "rcm";
    case Family::nm: return "nm";
    case Family::gdm: return "gdm";
    case Family::ddm: return "ddm";
  }
  return "?";
}

Family parse_family(std::string_view name) {
  for (Family f : {Family::mn, Family::dm, Family::rcm, Family::nm, Family::gdm, Family::ddm}) {
    if (name == to_string(f)) return f;
  }
  throw InputError("unknown family '" + std::string(name) + "'");
}

Family family_of(const FamilyParams& params) {
  return static_cast<Family>(params.index());
}

std::size_t categories(const FamilyParams& params) {
  return std::visit(overloaded{
                        [](const MnParams& q) { return std::size_t(q.pi.size()); },
                        [](const DmParams& q) { return std::size_t(q.theta.size()); },
                        [](const RcmParams& q) { return std::size_t(q.pi.size()); },
                        [](const NmParams& q) { return std::size_t(q.pi.size() - 1); },
                        [](const GdmParams& q) { return std::size_t(q.alpha.size() + 1); },
                        [](const DdmParams& q) { return q.categories(); },
                    },
                    params);
}

std::size_t parameter_count(Family family, std::size_t p, std::size_t k) {
  switch (family) {
    case Family::mn: return p;
    case Family::dm: return p + 1;
    case Family::rcm: return p + 1;
    case Family::nm: return p + 2;
    case Family::gdm: return 2 * p - 1;
    case Family::ddm: return p * (k + 1) + k;
  }
  return 0;
}

std::size_t parameter_count(const FamilyParams& params) {
  const std::size_t k =
      std::holds_alternative<DdmParams>(params) ? std::get<DdmParams>(params).components() : 1;
  return parameter_count(family_of(params), categories(params), k);
}

void validate(const MnParams& q) {
  check_categories(q.pi.size(), "multinomial");
  check_simplex(q.pi, "pi");
}

void validate(const DmParams& q) {
  check_categories(q.theta.size(), "Dirichlet-multinomial");
  check_positive(q.theta, "theta");
}

void validate(const RcmParams& q) {
  check_categories(q.pi.size(), "random-clumped multinomial");
  check_simplex(q.pi, "pi");
  if (!(q.rho >= 0.0 && q.rho <= 1.0)) {
    throw std::domain_error("rho must lie in [0, 1], got " + std::to_string(q.rho));
  }
}

void validate(const NmParams& q) {
  check_categories(q.pi.size() - 1, "negative multinomial");
  check_simplex(q.pi, "pi");
  if (!(q.failure() > 0.0)) throw std::domain_error("failure probability must be positive");
  if (!(q.beta > 0.0) || !std::isfinite(q.beta)) {
    throw std::domain_error("beta must be positive, got " + std::to_string(q.beta));
  }
}

void validate(const GdmParams& q) {
  if (q.alpha.size() != q.beta.size()) {
    throw std::domain_error("alpha and beta must have equal length");
  }
  check_categories(q.alpha.size() + 1, "generalized Dirichlet-multinomial");
  check_positive(q.alpha, "alpha");
  check_positive(q.beta, "beta");
}

void validate(const DdmParams& q) {
  check_categories(q.beta.size(), "deep Dirichlet-multinomial");
  if (q.w.size() < 1) throw std::domain_error("ddm needs at least one component");
  if (q.alpha.rows() != q.w.size() || q.alpha.cols() != q.beta.size()) {
    throw std::domain_error("alpha must be K x p");
  }
  check_simplex(q.w, "w");
  check_positive(q.beta, "beta");
  for (Eigen::Index k = 0; k < q.alpha.rows(); ++k) {
    for (Eigen::Index j = 0; j < q.alpha.cols(); ++j) {
      const double a = q.alpha(k, j);
      if (!(a > -1.0 && a < 1.0)) {
        throw std::domain_error("alpha entries must lie in (-1, 1), got " + std::to_string(a));
      }
    }
  }
}

void validate(const FamilyParams& params) {
  std::visit([](const auto& q) { validate(q); }, params);
}

Eigen::VectorXd renormalized(const Eigen::VectorXd& probs) {
  if ((probs.array() < 0.0).any()) throw std::domain_error("negative probability");
  const double s = probs.sum();
  if (std::abs(s - 1.0) > kSimplexTol) {
    throw std::domain_error("probabilities sum to " + std::to_string(s) + ", not 1");
  }
  return probs / s;
}

FamilyParams renormalized(FamilyParams params) {
  std::visit(overloaded{
                 [](MnParams& q) { q.pi = renormalized(q.pi); },
                 [](DmParams&) {},
                 [](RcmParams& q) { q.pi = renormalized(q.pi); },
                 [](NmParams& q) { q.pi = renormalized(q.pi); },
                 [](GdmParams&) {},
                 [](DdmParams& q) { q.w = renormalized(q.w); },
             },
             params);
  return params;
}

}  // namespace overcount
