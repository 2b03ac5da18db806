#pragma once

// Closed-form per-step FLOP and valley/peak memory models for the nine
// attention variants, plus the amortized cost that averages the continual
// landmark variants' update and non-update paths and the additive multi-layer
// composition. The polynomials are exact integer evaluations; instrumented
// counts agree with them up to bookkeeping differences (factor-2 band), which
// the test suite checks.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace conystrom {

enum class Variant {
  Att,         // batch exact attention
  Ny,          // batch landmark approximation, landmarks recomputed per call
  NyFix,       // batch landmark approximation, frozen landmarks and pinv
  CoRe,        // continual exact, retroactive output
  CoSi,        // continual exact, single output
  CoNyReCont,  // continual landmark, scheduled landmarks, retroactive output
  CoNySiCont,  // continual landmark, scheduled landmarks, single output
  CoNyReFix,   // continual landmark, frozen landmarks, retroactive output
  CoNySiFix,   // continual landmark, frozen landmarks, single output
};

inline const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Att: return "Att";
    case Variant::Ny: return "Ny";
    case Variant::NyFix: return "NyFix";
    case Variant::CoRe: return "CoRe";
    case Variant::CoSi: return "CoSi";
    case Variant::CoNyReCont: return "CoNyReCont";
    case Variant::CoNySiCont: return "CoNySiCont";
    case Variant::CoNyReFix: return "CoNyReFix";
    case Variant::CoNySiFix: return "CoNySiFix";
  }
  return "?";
}

inline std::optional<Variant> parse_variant(const std::string& name) {
  for (Variant v : {Variant::Att, Variant::Ny, Variant::NyFix, Variant::CoRe, Variant::CoSi,
                    Variant::CoNyReCont, Variant::CoNySiCont, Variant::CoNyReFix,
                    Variant::CoNySiFix}) {
    if (name == variant_name(v)) return v;
  }
  return std::nullopt;
}

inline bool variant_uses_landmarks(Variant v) {
  switch (v) {
    case Variant::Att:
    case Variant::CoRe:
    case Variant::CoSi:
      return false;
    default:
      return true;
  }
}

inline bool variant_is_continual(Variant v) {
  switch (v) {
    case Variant::Att:
    case Variant::Ny:
    case Variant::NyFix:
      return false;
    default:
      return true;
  }
}

// The scheduled-landmark continual variants, whose per-step cost depends on
// whether the step replaced a landmark.
inline bool variant_is_scheduled(Variant v) {
  return v == Variant::CoNyReCont || v == Variant::CoNySiCont;
}

// The retroactive-output variant that serves as a lower layer for a given
// continual variant in a stacked model: every layer but the last must emit
// all window rows for the layer above, so single-output variants stack on
// their retroactive sibling.
inline Variant retroactive_sibling(Variant v) {
  switch (v) {
    case Variant::CoSi: return Variant::CoRe;
    case Variant::CoNySiCont: return Variant::CoNyReCont;
    case Variant::CoNySiFix: return Variant::CoNyReFix;
    default: return v;
  }
}

struct MemoryCost {
  std::uint64_t valley = 0;  // persistent values held between steps/calls
  std::uint64_t peak = 0;    // maximum live values during a step/call
};

struct VariantCost {
  Variant variant = Variant::Att;
  std::uint64_t n = 0, d = 0, m = 0;

  VariantCost(Variant v, std::uint64_t n_in, std::uint64_t d_in, std::uint64_t m_in = 0)
      : variant(v), n(n_in), d(d_in), m(m_in) {
    if (n == 0 || d == 0)
      throw std::invalid_argument("VariantCost: n and d must be >= 1");
    if (variant_uses_landmarks(variant)) {
      if (m == 0 || m > n)
        throw std::invalid_argument("VariantCost: need 1 <= m <= n for landmark variants");
    } else if (m != 0) {
      throw std::invalid_argument("VariantCost: m must be 0 for non-landmark variants");
    }
  }

  // Per-step (continual) or per-call (batch) FLOPs. For the scheduled
  // landmark variants this is the update-path cost; see flops_nonupdated.
  std::uint64_t flops() const {
    const std::uint64_t nn = n, dd = d, mm = m;
    switch (variant) {
      case Variant::Att:
        return 2 * nn * nn * dd + nn * nn + nn * dd + nn;
      case Variant::Ny:
        return 4 * nn * dd * mm + 2 * nn * dd + nn + nn * mm * mm + 2 * nn * mm +
               dd * mm * mm + 24 * mm * mm * mm + 22 * mm * mm + 2 * mm;
      case Variant::NyFix:
        return 4 * nn * dd * mm + nn * mm * mm + 2 * nn * mm + nn + mm;
      case Variant::CoRe:
        return 7 * nn * dd + 4 * nn - 2 * dd - 2;
      case Variant::CoSi:
        return 3 * nn * dd + 2 * nn;
      case Variant::CoNyReCont:
        return nn * dd * mm + 8 * nn * dd + nn * mm * mm + nn * mm + 11 * nn +
               15 * dd * mm + 2 * dd + 24 * mm * mm * mm + 22 * mm * mm + 22 * mm;
      case Variant::CoNySiCont:
        return nn * dd * mm + 3 * nn * dd + nn + 9 * dd * mm + 2 * dd +
               24 * mm * mm * mm + 22 * mm * mm + 13 * mm;
      case Variant::CoNyReFix:
        return nn * dd * mm + 6 * dd * mm + mm * mm + 6 * mm;
      case Variant::CoNySiFix:
        return 7 * dd * mm + mm * mm + 6 * mm;
    }
    return 0;
  }

  // Cost of a step that does not replace a landmark: for the scheduled
  // variants this equals the corresponding frozen-landmark formula; for
  // every other variant each step costs the same and this returns flops().
  std::uint64_t flops_nonupdated() const {
    switch (variant) {
      case Variant::CoNyReCont:
        return VariantCost(Variant::CoNyReFix, n, d, m).flops();
      case Variant::CoNySiCont:
        return VariantCost(Variant::CoNySiFix, n, d, m).flops();
      default:
        return flops();
    }
  }

  // Average per-step cost of a scheduled-landmark stream: m of every n steps
  // take the update path, the rest the non-update path.
  double flops_amortized() const {
    if (!variant_is_scheduled(variant))
      throw std::invalid_argument("flops_amortized: defined for CoNyReCont/CoNySiCont only");
    const double u = static_cast<double>(flops());
    const double nu = static_cast<double>(flops_nonupdated());
    return (static_cast<double>(m) * u + static_cast<double>(n - m) * nu) /
           static_cast<double>(n);
  }

  MemoryCost memory() const {
    const std::int64_t nn = static_cast<std::int64_t>(n), dd = static_cast<std::int64_t>(d),
                       mm = static_cast<std::int64_t>(m);
    std::int64_t valley = 0, peak = 0;
    switch (variant) {
      case Variant::Att:
        valley = 3 * (nn * dd - 1);
        peak = nn * nn + 4 * nn * dd + 1;
        break;
      case Variant::Ny:
        valley = 3 * (nn * dd - 1);
        peak = 4 * nn * dd + 2 * nn * mm + 2 * dd * mm + 1 + 6 * mm * mm + mm;
        break;
      case Variant::NyFix:
        valley = 3 * (nn * dd - 1) + 2 * dd * mm + mm * mm;
        peak = 4 * nn * dd + 2 * nn * mm + 2 * dd * mm + 2 * mm * mm + 1;
        break;
      case Variant::CoRe:
        valley = 4 * nn * dd + nn - dd - 4;
        peak = 5 * nn * dd + 2 * nn;
        break;
      case Variant::CoSi:
        valley = 2 * (nn * dd - 1);
        peak = 2 * nn * dd + nn + 2 * dd;
        break;
      case Variant::CoNyReCont:
        valley = 3 * nn * dd + 2 * nn * mm + 4 * dd * mm + 2 * mm * mm - 2 * mm - 6;
        peak = 4 * nn * dd + 3 * nn * mm + 2 * nn + 4 * dd * mm + 7 * mm * mm + 4 * mm;
        break;
      case Variant::CoNySiCont:
        valley = 2 * nn * dd + 4 * dd * mm + 2 * mm * mm - 2;
        peak = 2 * nn * dd + nn * mm + nn + 4 * dd * mm + dd + 7 * mm * mm + 4 * mm;
        break;
      case Variant::CoNyReFix:
        valley = nn * mm + 3 * dd * mm + mm * mm + mm;
        peak = nn * dd + nn * mm + 3 * dd * mm + mm * mm + 2 * mm;
        break;
      case Variant::CoNySiFix:
        valley = 3 * dd * mm + mm * mm + mm;
        peak = 3 * dd * mm + dd + mm * mm + 2 * mm;
        break;
    }
    MemoryCost out;
    out.valley = valley < 0 ? 0 : static_cast<std::uint64_t>(valley);
    out.peak = peak < 0 ? 0 : static_cast<std::uint64_t>(peak);
    return out;
  }

  // Additive multi-layer composition. Batch variants run every layer in
  // full. For continual variants every layer but the last must produce all
  // window rows, so the lower layers run the retroactive sibling; scheduled
  // variants contribute their amortized per-step cost.
  double flops_layered(std::uint64_t layers) const {
    if (layers == 0) throw std::invalid_argument("flops_layered: layers must be >= 1");
    if (!variant_is_continual(variant))
      return static_cast<double>(layers) * static_cast<double>(flops());
    const VariantCost lower(retroactive_sibling(variant), n, d, m);
    const double lower_step =
        variant_is_scheduled(lower.variant) ? lower.flops_amortized()
                                            : static_cast<double>(lower.flops());
    const double self_step = variant_is_scheduled(variant)
                                 ? flops_amortized()
                                 : static_cast<double>(flops());
    return static_cast<double>(layers - 1) * lower_step + self_step;
  }
};

}  // namespace conystrom
