#pragma once

#include <cstddef>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

namespace overcount {

enum class Family { mn, dm, rcm, nm, gdm, ddm };

std::string_view to_string(Family f);
/// Accepts "mn", "dm", "rcm", "nm", "gdm", "ddm". Throws InputError otherwise.
Family parse_family(std::string_view name);

/// Multinomial: category probabilities.
struct MnParams {
  Eigen::VectorXd pi;
};

/// Dirichlet-multinomial with concentration vector theta.
struct DmParams {
  Eigen::VectorXd theta;

  double theta0() const { return theta.sum(); }
  /// Intra-class correlation rho^2 = 1 / (1 + theta0).
  double rho2() const { return 1.0 / (1.0 + theta0()); }
  Eigen::VectorXd pi() const { return theta / theta0(); }
};

/// Random-clumped multinomial: probabilities pi and clumping rate rho in [0, 1].
struct RcmParams {
  Eigen::VectorXd pi;
  double rho = 0.0;
};

/// Negative multinomial. pi has p + 1 entries; the last is the failure
/// probability. beta > 0 is the (possibly non-integer) number of failures.
struct NmParams {
  Eigen::VectorXd pi;
  double beta = 1.0;

  double failure() const { return pi[pi.size() - 1]; }
};

/// Generalized Dirichlet-multinomial (Connor-Mosimann): p - 1 pairs.
struct GdmParams {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

/// Deep Dirichlet-multinomial: mixture of K Dirichlet-multinomials with
/// concentrations beta * (1 + alpha_k). alpha is K x p, entries in (-1, 1).
struct DdmParams {
  Eigen::VectorXd w;
  Eigen::VectorXd beta;
  Eigen::MatrixXd alpha;

  std::size_t components() const { return static_cast<std::size_t>(w.size()); }
  std::size_t categories() const { return static_cast<std::size_t>(beta.size()); }
  Eigen::VectorXd theta(std::size_t k) const {
    return beta.cwiseProduct((1.0 + alpha.row(static_cast<Eigen::Index>(k)).array()).matrix()
                                 .transpose());
  }
};

using FamilyParams = std::variant<MnParams, DmParams, RcmParams, NmParams, GdmParams, DdmParams>;

Family family_of(const FamilyParams& params);

/// Number of observed categories p implied by the parameter set.
std::size_t categories(const FamilyParams& params);

/// Parameter counts as tabulated for AIC/BIC: MN p, DM p+1, RCM p+1, NM p+2,
/// GDM 2p-1, DDM p(K+1)+K. These exceed the free-parameter counts by one for
/// MN and DDM (the simplex constraint is not subtracted). K is ignored except
/// for DDM.
std::size_t parameter_count(Family family, std::size_t p, std::size_t k = 1);
std::size_t parameter_count(const FamilyParams& params);

/// Throw std::domain_error if an invariant is violated. Probability vectors
/// must sum to one within 1e-9.
void validate(const MnParams& params);
void validate(const DmParams& params);
void validate(const RcmParams& params);
void validate(const NmParams& params);
void validate(const GdmParams& params);
void validate(const DdmParams& params);
void validate(const FamilyParams& params);

/// Rescale a probability vector whose sum is within 1e-9 of one; throws
/// std::domain_error on negative entries or larger deviations.
Eigen::VectorXd renormalized(const Eigen::VectorXd& probs);

/// Renormalize every probability vector inside the parameter set.
FamilyParams renormalized(FamilyParams params);

}  // namespace overcount
