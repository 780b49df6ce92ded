#pragma once

// Illumination models: photometric map g(I, p_a) composed into the
// similarity by the appearance model so the search method never sees it.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

#include "warptrack/common.hpp"
#include "warptrack/image.hpp"

namespace warptrack {

class IlluminationModel {
public:
  virtual ~IlluminationModel() = default;
  virtual std::string name() const = 0;
  virtual int paramCount() const = 0;

  virtual Patch apply(const Patch& patch, const Vec& pa) const = 0;
  /// Per-pixel dg/dI (diagonal of the N x N Jacobian).
  virtual Vec dgDI(const Patch& patch, const Vec& pa) const = 0;
  /// N x A matrix of dg/dpa rows.
  virtual Mat dgDpa(const Patch& patch, const Vec& pa) const = 0;
  /// A x A contraction  sum_k gamma_k * d2g_k/dpa2.
  virtual Mat d2gDpa2Contraction(const Patch& patch, const Vec& pa,
                                 const RowVec& gamma) const = 0;
  /// N x A matrix with row k = d2g_k/(dI_k dpa).
  virtual Mat d2gDIdpa(const Patch& patch, const Vec& pa) const = 0;

  virtual Vec identityParams() const { return Vec::Zero(paramCount()); }
  /// Params of g(g(., inner), outer).
  virtual Vec compose(const Vec& outer, const Vec& inner) const = 0;
  virtual Vec invert(const Vec& pa) const = 0;
};

/// Gain-and-bias model: g(I, pa) = (1 + a) * I + b.
class GainBiasIlm : public IlluminationModel {
public:
  std::string name() const override { return "gb"; }
  int paramCount() const override { return 2; }

  Patch apply(const Patch& patch, const Vec& pa) const override {
    check(pa);
    return ((1.0 + pa[0]) * patch).array() + pa[1];
  }

  Vec dgDI(const Patch& patch, const Vec& pa) const override {
    check(pa);
    return Vec::Constant(patch.size(), 1.0 + pa[0]);
  }

  Mat dgDpa(const Patch& patch, const Vec& pa) const override {
    check(pa);
    Mat out(patch.size(), 2);
    out.col(0) = patch;
    out.col(1).setOnes();
    return out;
  }

  Mat d2gDpa2Contraction(const Patch&, const Vec&,
                         const RowVec&) const override {
    return Mat::Zero(2, 2);  // g is linear in (a, b)
  }

  Mat d2gDIdpa(const Patch& patch, const Vec&) const override {
    Mat out(patch.size(), 2);
    out.col(0).setOnes();
    out.col(1).setZero();
    return out;
  }

  Vec compose(const Vec& outer, const Vec& inner) const override {
    Vec pa(2);
    pa[0] = (1.0 + outer[0]) * (1.0 + inner[0]) - 1.0;
    pa[1] = (1.0 + outer[0]) * inner[1] + outer[1];
    return pa;
  }

  Vec invert(const Vec& pa) const override {
    const double gain = 1.0 + pa[0];
    if (std::abs(gain) < 1e-12)
      throw std::invalid_argument("gain-bias invert: zero gain");
    Vec out(2);
    out[0] = 1.0 / gain - 1.0;
    out[1] = -pa[1] / gain;
    return out;
  }

private:
  static void check(const Vec& pa) {
    if (pa.size() != 2 || !pa.allFinite())
      throw std::invalid_argument("gain-bias: bad parameter vector");
  }
};

inline std::shared_ptr<IlluminationModel> makeIlluminationModel(
    const std::string& name) {
  if (name == "none" || name.empty()) return nullptr;
  if (name == "gb") return std::make_shared<GainBiasIlm>();
  throw std::invalid_argument("unknown illumination model: " + name);
}

}  // namespace warptrack
