#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "warptrack/am/factory.hpp"
#include "warptrack/am/illumination.hpp"
#include "warptrack/sm/gradient_descent.hpp"
#include "warptrack/sm/nn.hpp"
#include "warptrack/sm/pf.hpp"
#include "warptrack/ssm/models.hpp"

namespace warptrack {

struct TrackerSpec {
  std::string sm = "fclk";   // iclk, fclk, falk, ialk, esm, nn, pf
  std::string am = "ssd";    // ssd, scv, rscv, ncc, zncc
  std::string ssm = "8";     // 2, 4, 6, 8 or names
  std::string ilm = "none";  // none, gb
  TrackerConfig config;
  AmOptions amOptions;
};

inline std::unique_ptr<TrackerBase> makeTracker(const TrackerSpec& spec) {
  auto am = makeAppearanceModel(spec.am, spec.amOptions);
  if (auto ilm = makeIlluminationModel(spec.ilm)) am->setIlluminationModel(ilm);
  auto ssm = makeStateSpaceModel(spec.ssm);

  if (spec.sm == "nn")
    return std::make_unique<NnTracker>(std::move(am), std::move(ssm), spec.config);
  if (spec.sm == "pf")
    return std::make_unique<PfTracker>(std::move(am), std::move(ssm), spec.config);

  GdVariant v;
  if (spec.sm == "iclk") v = GdVariant::Iclk;
  else if (spec.sm == "fclk") v = GdVariant::Fclk;
  else if (spec.sm == "falk") v = GdVariant::Falk;
  else if (spec.sm == "ialk") v = GdVariant::Ialk;
  else if (spec.sm == "esm") v = GdVariant::Esm;
  else throw std::invalid_argument("unknown search method: " + spec.sm);
  return std::make_unique<GdTracker>(v, std::move(am), std::move(ssm), spec.config);
}

}  // namespace warptrack
