#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "ccr/core.hpp"

namespace ccr {

enum class Scheme { Complete, PerLossCensored, PerPaymentTruncated };

inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::Complete: return "complete";
    case Scheme::PerLossCensored: return "censored";
    case Scheme::PerPaymentTruncated: return "truncated";
  }
  return "?";
}

inline Scheme scheme_from_string(std::string_view s) {
  if (s == "complete") return Scheme::Complete;
  if (s == "censored" || s == "per_loss" || s == "per-loss") return Scheme::PerLossCensored;
  if (s == "truncated" || s == "per_payment" || s == "per-payment")
    return Scheme::PerPaymentTruncated;
  throw ValidationError("unknown observation scheme: " + std::string(s));
}

enum class ClaimStatus { Interior, AtLimit, BelowDeductible };

/// One observed claim. Under the censored and truncated schemes `amount` is
/// the payment y - d; at-limit payments equal l - d and below-deductible
/// claims carry amount 0.
struct ClaimRecord {
  double amount = 0.0;
  ClaimStatus status = ClaimStatus::Interior;
  std::vector<double> x;
};

struct PolicyRecord {
  std::string id;
  int year = 0;
  std::vector<double> x;
  long n = 0;
  std::vector<ClaimRecord> claims;
  double deductible = 0.0;
  double limit = kInf;

  /// Ground-up loss implied by an interior or at-limit payment.
  double ground_up(const ClaimRecord& c) const { return c.amount + deductible; }
};

struct Dataset {
  Scheme scheme = Scheme::Complete;
  std::vector<std::string> policy_columns;
  std::vector<std::string> claim_columns;
  std::vector<PolicyRecord> records;

  std::size_t total_claims() const {
    std::size_t k = 0;
    for (const auto& r : records) k += r.claims.size();
    return k;
  }
  long positive_records() const {
    long k = 0;
    for (const auto& r : records) k += r.n > 0;
    return k;
  }
};

/// Checks record-level invariants for the dataset's scheme.
inline void validate_record(const PolicyRecord& r, Scheme scheme) {
  const std::string who = "policy " + r.id + ": ";
  if (r.n < 0) throw ValidationError(who + "negative claim count");
  if (!(r.deductible >= 0.0)) throw ValidationError(who + "negative deductible");
  if (!(r.limit > r.deductible)) throw ValidationError(who + "limit must exceed deductible");
  if (static_cast<long>(r.claims.size()) != r.n)
    throw ValidationError(who + "n_claims=" + std::to_string(r.n) + " but " +
                          std::to_string(r.claims.size()) + " claim rows");
  const double cap = r.limit - r.deductible;
  for (const auto& c : r.claims) {
    if (!(c.amount >= 0.0) || !std::isfinite(c.amount))
      throw ValidationError(who + "claim amount must be finite and nonnegative");
    switch (c.status) {
      case ClaimStatus::Interior:
        if (c.amount <= 0.0) throw ValidationError(who + "claim amount must be positive");
        if (c.amount >= cap) throw ValidationError(who + "claim amount reaches the limit without at_limit flag");
        break;
      case ClaimStatus::AtLimit:
        if (scheme == Scheme::Complete) throw ValidationError(who + "at-limit claim in complete data");
        if (std::fabs(c.amount - cap) > 1e-9 * std::max(1.0, cap))
          throw ValidationError(who + "at-limit payment must equal limit - deductible");
        break;
      case ClaimStatus::BelowDeductible:
        if (scheme != Scheme::PerLossCensored)
          throw ValidationError(who + "below-deductible claim outside the censored scheme");
        break;
    }
  }
  if (scheme == Scheme::Complete && (r.deductible != 0.0 || r.limit != kInf))
    throw ValidationError(who + "complete data cannot carry a deductible or limit");
}

inline void validate_dataset(const Dataset& d) {
  for (const auto& r : d.records) {
    validate_record(r, d.scheme);
    if (r.x.size() != d.policy_columns.size())
      throw ValidationError("policy " + r.id + ": covariate count mismatch");
    for (const auto& c : r.claims)
      if (c.x.size() != d.claim_columns.size())
        throw ValidationError("policy " + r.id + ": claim covariate count mismatch");
  }
}

/// Under the censored scheme a claim with payment 0 is below the deductible.
inline void tag_below_deductible(Dataset& d) {
  if (d.scheme != Scheme::PerLossCensored) return;
  for (auto& r : d.records)
    for (auto& c : r.claims)
      if (c.status == ClaimStatus::Interior && c.amount == 0.0) c.status = ClaimStatus::BelowDeductible;
}

}  // namespace ccr
