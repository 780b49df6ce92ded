#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "warptrack/am/ncc.hpp"
#include "warptrack/am/ssd.hpp"

namespace warptrack {

struct AmOptions {
  int histBins = 64;          // SCV/RSCV joint-histogram bins
  double histRange = 256.0;
  double likelihoodAlpha = 5.0;
};

inline std::unique_ptr<AppearanceModel> makeAppearanceModel(
    const std::string& name, const AmOptions& opt = {}) {
  std::unique_ptr<AppearanceModel> am;
  if (name == "ssd")
    am = std::make_unique<Ssd>();
  else if (name == "scv")
    am = std::make_unique<Scv>(opt.histBins, opt.histRange);
  else if (name == "rscv")
    am = std::make_unique<Rscv>(opt.histBins, opt.histRange);
  else if (name == "ncc")
    am = std::make_unique<Ncc>();
  else if (name == "zncc")
    am = std::make_unique<Zncc>();
  else
    throw std::invalid_argument("unknown appearance model: " + name);
  am->setLikelihoodAlpha(opt.likelihoodAlpha);
  return am;
}

}  // namespace warptrack
