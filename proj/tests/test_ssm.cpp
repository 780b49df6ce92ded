#include <catch2/catch_amalgamated.hpp>

#include <functional>
#include <random>

#include "oracles.hpp"
#include "warptrack/ssm/models.hpp"

using namespace warptrack;
using Catch::Approx;

namespace {

const std::vector<std::string> kAllSsms = {"translation", "similitude",
                                           "affine", "homography"};

Corners boxCorners(double cx, double cy, double hx, double hy) {
  Corners c;
  c << cx - hx, cx + hx, cx + hx, cx - hx,
       cy - hy, cy - hy, cy + hy, cy + hy;
  return c;
}

// N x S finite-difference Jacobian of a patch-valued function
Mat fdPixJacobian(const std::function<Patch(const Vec&)>& patchOf, const Vec& p,
                  double eps) {
  const Patch probe = patchOf(p);
  Mat out(probe.size(), p.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    Vec pp = p, pm = p;
    pp[i] += eps;
    pm[i] -= eps;
    out.col(i) = (patchOf(pp) - patchOf(pm)) / (2.0 * eps);
  }
  return out;
}

// S^2 x N finite-difference pixel Hessian tensor
PixHessTensor fdPixHessTensor(const std::function<Patch(const Vec&)>& patchOf,
                              const Vec& p, double eps) {
  const Patch f0 = patchOf(p);
  const Eigen::Index n = f0.size(), s = p.size();
  PixHessTensor out(s * s, n);
  for (Eigen::Index i = 0; i < s; ++i) {
    Vec pp = p, pm = p;
    pp[i] += eps;
    pm[i] -= eps;
    const Patch dii = (patchOf(pp) - 2.0 * f0 + patchOf(pm)) / (eps * eps);
    for (Eigen::Index k = 0; k < n; ++k) out(i * s + i, k) = dii[k];
    for (Eigen::Index j = i + 1; j < s; ++j) {
      Vec a = p, b = p, c = p, d = p;
      a[i] += eps; a[j] += eps;
      b[i] += eps; b[j] -= eps;
      c[i] -= eps; c[j] += eps;
      d[i] -= eps; d[j] -= eps;
      const Patch dij =
          (patchOf(a) - patchOf(b) - patchOf(c) + patchOf(d)) / (4 * eps * eps);
      for (Eigen::Index k = 0; k < n; ++k) {
        out(i * s + j, k) = dij[k];
        out(j * s + i, k) = dij[k];
      }
    }
  }
  return out;
}

double tensorRelErr(const PixHessTensor& got, const PixHessTensor& want) {
  return (got - want).norm() / std::max(want.norm(), 1e-8);
}

}  // namespace

TEST_CASE("ssm initialize fits the given corners") {
  SECTION("homography round-trips any quad") {
    HomographySsm ssm;
    Corners c;
    c << 10.0, 52.0, 55.5, 8.0,
         12.0, 14.0, 49.0, 47.5;
    ssm.initialize(c, 5, 5);
    CHECK((ssm.getCorners() - c).norm() < 1e-9);
  }
  SECTION("translation recovers a pure shift") {
    TranslationSsm ssm;
    Corners c = StateSpaceModel::canonicalCorners();
    c.row(0).array() += 10.0;
    c.row(1).array() += 20.0;
    ssm.initialize(c, 3, 3);
    CHECK(ssm.getState()[0] == Approx(10.0));
    CHECK(ssm.getState()[1] == Approx(20.0));
  }
  SECTION("affine reproduces a sheared parallelogram") {
    AffineSsm ssm;
    Mat3 a = Mat3::Identity();
    a(0, 0) = 30.0; a(0, 1) = 8.0; a(0, 2) = 40.0;
    a(1, 0) = -5.0; a(1, 1) = 25.0; a(1, 2) = 35.0;
    Corners c;
    const Corners cc = StateSpaceModel::canonicalCorners();
    for (int j = 0; j < 4; ++j) {
      const Vec3 v = a * Vec3(cc(0, j), cc(1, j), 1.0);
      c.col(j) = v.head<2>();
    }
    ssm.initialize(c, 4, 4);
    CHECK((ssm.getCorners() - c).norm() < 1e-6);
  }
  SECTION("collinear corners are rejected") {
    HomographySsm ssm;
    Corners c;
    c << 0, 1, 2, 3,
         0, 1, 2, 3;
    CHECK_THROWS_AS(ssm.initialize(c, 3, 3), std::invalid_argument);
  }
}

TEST_CASE("applyWarp basics") {
  for (const auto& name : kAllSsms) {
    auto ssm = makeStateSpaceModel(name);
    ssm->initialize(boxCorners(20, 20, 10, 10), 4, 4);
    const PointGrid& g0 = ssm->canonicalGrid();
    const PointGrid same = ssm->applyWarp(g0, ssm->identityState());
    CHECK((same.pts - g0.pts).norm() == Approx(0.0).margin(1e-14));
  }

  TranslationSsm tr;
  tr.initialize(boxCorners(5, 5, 2, 2), 3, 3);
  Vec p(2);
  p << 2, 3;
  CHECK((tr.warpPoint(Vec2(0, 0), p) - Vec2(2, 3)).norm() < 1e-15);

  HomographySsm hm;
  hm.initialize(boxCorners(5, 5, 2, 2), 3, 3);
  Vec ph = Vec::Zero(8);
  ph[6] = 0.1;  // h20
  const Vec2 q = hm.warpPoint(Vec2(1, 0), ph);
  CHECK(q[0] == Approx(1.0 / 1.1));
  CHECK(q[1] == Approx(0.0).margin(1e-15));
}

TEST_CASE("compositional and additive updates") {
  std::mt19937_64 rng(23);
  for (const auto& name : kAllSsms) {
    auto ssm = makeStateSpaceModel(name);
    ssm->initialize(boxCorners(30, 30, 12, 12), 4, 4);

    SECTION(name + ": zero update is a no-op") {
      const Vec before = ssm->getState();
      ssm->compositionalUpdate(ssm->identityState());
      CHECK((ssm->getState() - before).norm() < 1e-12);
    }

    SECTION(name + ": composition matches the 3x3 matrix oracle") {
      for (int i = 0; i < 100; ++i) {
        const Vec p1 = oracle::randomState(*ssm, rng, 60, 60);
        const Vec p2 = oracle::smallPerturbation(*ssm, rng);
        const Vec got = ssm->composeStates(p1, p2);
        const Mat3 want = ssm->paramsToMatrix(p1) * ssm->paramsToMatrix(p2);
        const Mat3 gm = ssm->paramsToMatrix(got);
        CHECK((gm - want / want(2, 2)).norm() < 1e-9 * want.norm());
      }
    }

    SECTION(name + ": x_t = w(x0, p) after every mutation") {
      const Vec p = oracle::randomState(*ssm, rng, 60, 60);
      ssm->setState(p);
      const PointGrid direct = ssm->applyWarp(ssm->canonicalGrid(), p);
      CHECK((ssm->getPts().pts - direct.pts).norm() < 1e-12);
      ssm->additiveUpdate(0.01 * Vec::Ones(ssm->stateSize()));
      const PointGrid direct2 =
          ssm->applyWarp(ssm->canonicalGrid(), ssm->getState());
      CHECK((ssm->getPts().pts - direct2.pts).norm() < 1e-12);
    }
  }

  TranslationSsm tr;
  tr.initialize(StateSpaceModel::canonicalCorners(), 3, 3);
  Vec d1(2), d2(2);
  d1 << 1, 2;
  d2 << 3, 4;
  tr.compositionalUpdate(d1);
  tr.compositionalUpdate(d2);
  CHECK(tr.getState()[0] == Approx(4.0));
  CHECK(tr.getState()[1] == Approx(6.0));
}

TEST_CASE("invertState and group laws") {
  std::mt19937_64 rng(31);
  TranslationSsm tr;
  CHECK((tr.invertState(Vec::Zero(2)) - Vec::Zero(2)).norm() == 0.0);
  Vec p(2);
  p << 2, 3;
  CHECK(tr.invertState(p)[0] == Approx(-2.0));
  CHECK(tr.invertState(p)[1] == Approx(-3.0));

  for (const auto& name : kAllSsms) {
    auto ssm = makeStateSpaceModel(name);
    ssm->initialize(boxCorners(40, 40, 15, 15), 4, 4);
    for (int i = 0; i < 100; ++i) {
      const Vec base = oracle::randomState(*ssm, rng, 80, 80);
      const Vec delta = oracle::smallPerturbation(*ssm, rng);
      ssm->setState(base);
      ssm->compositionalUpdate(delta);
      ssm->compositionalUpdate(ssm->invertState(delta));
      CHECK((ssm->getState() - base).norm() < 1e-9 * std::max(1.0, base.norm()));
    }
  }

  HomographySsm hm;
  Vec sing = Vec::Zero(8);
  sing[0] = -1.0;  // zeroes the first row of H
  sing[1] = 0.0;
  sing[2] = 0.0;
  CHECK_THROWS_AS(hm.invertState(sing), SingularWarpError);
}

TEST_CASE("pixel Jacobians: closed forms and trivial cases") {
  SECTION("translation passes gradients through") {
    TranslationSsm ssm;
    ssm.initialize(boxCorners(10, 10, 4, 4), 3, 3);
    PixGrad g(9, 2);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-2, 2);
    for (Eigen::Index i = 0; i < 9; ++i) {
      g(i, 0) = uni(rng);
      g(i, 1) = uni(rng);
    }
    CHECK((ssm.cmptPixJacobian(g) - g).norm() == 0.0);
    CHECK(ssm.cmptPixJacobian(PixGrad::Zero(9, 2)).norm() == 0.0);
  }

  SECTION("homography dw/dp row at the identity") {
    HomographySsm ssm;
    Mat dw(2, 8);
    ssm.dwDp(2.0, 3.0, Vec::Zero(8), dw);
    const Eigen::RowVector2d grad(1.0, 1.0);
    RowVec row = grad * dw;
    RowVec want(8);
    want << 2, 3, 1, 2, 3, 1, -10, -15;
    CHECK((row - want).norm() < 1e-14);
  }

  SECTION("warped pixel Jacobian equals plain one at the identity state") {
    std::mt19937_64 rng(5);
    for (const auto& name : kAllSsms) {
      auto ssm = makeStateSpaceModel(name);
      ssm->initialize(StateSpaceModel::canonicalCorners(), 4, 4);
      ssm->setState(ssm->identityState());
      PixGrad g(ssm->canonicalGrid().size(), 2);
      std::uniform_real_distribution<double> uni(-3, 3);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        g(i, 0) = uni(rng);
        g(i, 1) = uni(rng);
      }
      CHECK((ssm->cmptWarpedPixJacobian(g) - ssm->cmptPixJacobian(g)).norm() <
            1e-12);
      // init state is the identity here, so the inverse-additive form
      // reduces to the plain pixel Jacobian as well
      CHECK((ssm->cmptApproxPixJacobian(g) - ssm->cmptPixJacobian(g)).norm() <
            1e-12);
    }
  }
}

TEST_CASE("pixel derivative chain matches finite differences on smooth images") {
  std::mt19937_64 rng(71);
  const int imgW = 120, imgH = 120;

  for (const auto& name : kAllSsms) {
    auto ssm = makeStateSpaceModel(name);
    ssm->initialize(boxCorners(60, 60, 25, 25), 4, 4);
    const PointGrid g0 = ssm->canonicalGrid();

    for (int trial = 0; trial < 25; ++trial) {
      const oracle::BilinearField field =
          oracle::randomBilinearField(rng, imgW, imgH);
      const Image img = field.raster(imgW, imgH);
      const Vec pHat = oracle::randomState(*ssm, rng, imgW, imgH);
      ssm->setState(pHat);
      // the chain is exactly quadratic in p for linear-in-p warps, so a
      // larger step kills roundoff without adding truncation error
      const double epsH = ssm->linearInParams() ? 2e-2 : 8e-4;

      const PixGrad grad = pixGrad(img, ssm->getPts());
      const PixHess hess = pixHess(img, ssm->getPts());

      // forward-additive: I(w(x0, p)) differentiated in p at pHat
      auto patchAdditive = [&](const Vec& p) {
        return samplePatch(img, ssm->applyWarp(g0, p));
      };
      {
        const Mat got = ssm->cmptPixJacobian(grad);
        const Mat want = fdPixJacobian(patchAdditive, pHat, 1e-5);
        CHECK(oracle::relErr(got, want) < 1e-4);
        const PixHessTensor gotH = ssm->cmptPixHessian(grad, hess);
        const PixHessTensor wantH = fdPixHessTensor(patchAdditive, pHat, epsH);
        CHECK(tensorRelErr(gotH, wantH) < 1e-3);
      }

      // forward-compositional: I(w(w(x0, d), pHat)) differentiated at d = 0
      auto patchCompositional = [&](const Vec& d) {
        return samplePatch(img, ssm->applyWarp(ssm->applyWarp(g0, d), pHat));
      };
      {
        const Mat got = ssm->cmptWarpedPixJacobian(grad);
        const Mat want =
            fdPixJacobian(patchCompositional, ssm->identityState(), 1e-5);
        CHECK(oracle::relErr(got, want) < 1e-4);
        const PixHessTensor gotH = ssm->cmptWarpedPixHessian(grad, hess);
        const PixHessTensor wantH =
            fdPixHessTensor(patchCompositional, ssm->identityState(), epsH);
        CHECK(tensorRelErr(gotH, wantH) < 1e-3);
      }
    }
  }
}

TEST_CASE("inverse-additive chain on exactly aligned scenes") {
  // Current image defined as C(y) = T(w^-1(y, pHat) then placed by pInit);
  // its patches are sampled purely through applyWarp + samplePatch, so the
  // alignment assumption holds exactly and so do the approximations.
  std::mt19937_64 rng(97);
  const int imgW = 120, imgH = 120;

  for (const auto& name : kAllSsms) {
    auto ssm = makeStateSpaceModel(name);
    ssm->initialize(boxCorners(60, 60, 25, 25), 4, 4);
    const PointGrid g0 = ssm->canonicalGrid();

    for (int trial = 0; trial < 25; ++trial) {
      const oracle::BilinearField field =
          oracle::randomBilinearField(rng, imgW, imgH);
      const Image tmplImg = field.raster(imgW, imgH);
      const Vec pInit = ssm->initState();
      const Vec pHat =
          ssm->composeStates(pInit, oracle::smallPerturbation(*ssm, rng, 0.5));
      ssm->setState(pHat);
      const double epsH = ssm->linearInParams() ? 2e-2 : 8e-4;

      // template derivatives sampled at the init grid
      const PointGrid initGrid = ssm->applyWarp(g0, pInit);
      const PixGrad grad0 = pixGrad(tmplImg, initGrid);
      const PixHess hess0 = pixHess(tmplImg, initGrid);

      const Vec backState = ssm->composeStates(pInit, ssm->invertState(pHat));
      auto alignedPatch = [&](const Vec& p) {
        const PointGrid cur = ssm->applyWarp(g0, p);
        return samplePatch(tmplImg, ssm->applyWarp(cur, backState));
      };
      // by construction alignedPatch(pHat) samples the template at its grid
      CHECK((alignedPatch(pHat) - samplePatch(tmplImg, initGrid)).norm() < 1e-9);

      const Mat got = ssm->cmptApproxPixJacobian(grad0);
      const Mat want = fdPixJacobian(alignedPatch, pHat, 1e-5);
      CHECK(oracle::relErr(got, want) < 1e-4);

      const PixHessTensor gotH = ssm->cmptApproxPixHessian(grad0, hess0);
      const PixHessTensor wantH = fdPixHessTensor(alignedPatch, pHat, epsH);
      CHECK(tensorRelErr(gotH, wantH) < 1e-3);
    }
  }
}

TEST_CASE("warp parameter Hessian vanishes for linear-in-p models") {
  std::mt19937_64 rng(13);
  for (const auto& name : {std::string("translation"), std::string("similitude"),
                           std::string("affine")}) {
    auto ssm = makeStateSpaceModel(name);
    ssm->initialize(boxCorners(30, 30, 10, 10), 3, 3);
    ssm->setState(oracle::randomState(*ssm, rng, 60, 60));
    CHECK(ssm->linearInParams());

    // the pixel Hessian must reduce to the pure image-curvature sandwich
    const Eigen::Index n = ssm->canonicalGrid().size();
    PixGrad grad(n, 2);
    PixHess hess(n, 3);
    std::uniform_real_distribution<double> uni(-1, 1);
    for (Eigen::Index k = 0; k < n; ++k) {
      grad(k, 0) = uni(rng);
      grad(k, 1) = uni(rng);
      hess(k, 0) = uni(rng);
      hess(k, 1) = uni(rng);
      hess(k, 2) = uni(rng);
    }
    const PixHessTensor got = ssm->cmptPixHessian(grad, hess);
    const int s = ssm->stateSize();
    Mat dw(2, s);
    for (Eigen::Index k = 0; k < n; ++k) {
      ssm->dwDp(ssm->canonicalGrid().pts(0, k), ssm->canonicalGrid().pts(1, k),
                ssm->getState(), dw);
      const Mat wantK = dw.transpose() * pixHessBlock(hess, k) * dw;
      const Mat gotK = Eigen::Map<const Mat>(got.col(k).data(), s, s);
      CHECK((gotK - wantK).norm() == 0.0);
    }
  }
}

TEST_CASE("estimateStateSigma") {
  TranslationSsm tr;
  tr.initialize(boxCorners(20, 20, 5, 5), 3, 3);
  const Vec sig = tr.estimateStateSigma(2.0);
  CHECK(sig[0] == Approx(2.0).margin(1e-9));
  CHECK(sig[1] == Approx(2.0).margin(1e-9));

  const Vec sig3 = tr.estimateStateSigma(6.0);
  CHECK((sig3 - 3.0 * sig).norm() < 1e-12);

  SECTION("homography Monte-Carlo: per-component corner response") {
    HomographySsm hm;
    hm.initialize(boxCorners(150, 150, 60, 60), 4, 4);
    const double cornerSigma = 2.0;
    const Vec sigma = hm.estimateStateSigma(cornerSigma);
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> gauss(0, 1);
    const Corners base = hm.getCorners();
    for (int i = 0; i < 8; ++i) {
      double acc = 0.0;
      const int draws = 10000;
      for (int t = 0; t < draws; ++t) {
        Vec eps = Vec::Zero(8);
        eps[i] = sigma[i] * gauss(rng);
        const Corners moved =
            hm.applyWarpToCorners(StateSpaceModel::canonicalCorners(),
                                  hm.composeStates(hm.getState(), eps));
        acc += (moved - base).colwise().norm().mean();
      }
      const double meanDisp = acc / draws;
      // E|z| = sqrt(2/pi) ~ 0.80, so the response sits within 30% of target
      CHECK(meanDisp > 0.7 * cornerSigma);
      CHECK(meanDisp < 1.3 * cornerSigma);
    }
  }
}

TEST_CASE("stochastic sampler") {
  SimilitudeSsm ssm;
  ssm.initialize(boxCorners(20, 20, 8, 8), 3, 3);

  SECTION("zero sigma gives the zero perturbation") {
    ssm.initializeSampler({Vec::Zero(4), 0.0, 42});
    CHECK(ssm.generatePerturbation().norm() == 0.0);
  }

  SECTION("draw statistics match the configured sigma") {
    Vec sigma(4);
    sigma << 0.5, 1.5, 0.05, 0.2;
    ssm.initializeSampler({sigma, 0.0, 7});
    const int n = 10000;
    Mat draws(n, 4);
    for (int i = 0; i < n; ++i)
      draws.row(i) = ssm.generatePerturbation().transpose();
    for (int j = 0; j < 4; ++j) {
      const double mean = draws.col(j).mean();
      const double sd = std::sqrt((draws.col(j).array() - mean).square().mean());
      CHECK(std::abs(mean) < 4.0 * sigma[j] / std::sqrt(static_cast<double>(n)));
      CHECK(sd == Approx(sigma[j]).epsilon(0.05));
    }
  }

  SECTION("random walk and auto-regression") {
    ssm.initializeSampler({Vec::Zero(4), 0.5, 42});
    Vec p(4);
    p << 1, 2, 0.1, -0.05;
    CHECK((ssm.additiveRandomWalk(p) - p).norm() == 0.0);
    const Vec pw = ssm.compositionalRandomWalk(p);
    CHECK((pw - ssm.composeStates(p, Vec::Zero(4))).norm() < 1e-12);

    const Vec prev = p, prev2 = 0.5 * p;
    const Vec ar = ssm.additiveAutoRegression1(prev, prev2);
    CHECK((ar - (prev + 0.5 * (prev - prev2))).norm() < 1e-12);
  }

  SECTION("compositional walk equals the matrix oracle") {
    std::mt19937_64 rng(4);
    HomographySsm hm, hm2;
    hm.initialize(boxCorners(20, 20, 8, 8), 3, 3);
    hm2.initialize(boxCorners(20, 20, 8, 8), 3, 3);
    hm.initializeSampler({Vec::Constant(8, 0.01), 0.0, 99});
    hm2.initializeSampler({Vec::Constant(8, 0.01), 0.0, 99});
    const Vec p = oracle::randomState(hm, rng, 60, 60);
    const Vec eps = hm2.generatePerturbation();  // same seed: same draw
    const Vec got = hm.compositionalRandomWalk(p);
    const Mat3 want = hm.paramsToMatrix(p) * hm.paramsToMatrix(eps);
    CHECK((hm.paramsToMatrix(got) - want / want(2, 2)).norm() < 1e-9);
  }
}

TEST_CASE("estimateMeanOfSamples") {
  TranslationSsm tr;
  tr.initialize(boxCorners(5, 5, 2, 2), 3, 3);
  Vec a(2), b(2);
  a << 0, 0;
  b << 2, 2;

  CHECK((tr.estimateMeanOfSamples({a}, Vec::Ones(1)) - a).norm() == 0.0);

  const Vec m = tr.estimateMeanOfSamples({a, b}, Vec::Ones(2));
  CHECK(m[0] == Approx(1.0));
  CHECK(m[1] == Approx(1.0));

  Vec w13(2);
  w13 << 1, 3;
  CHECK(tr.estimateMeanOfSamples({a, b}, w13)[0] == Approx(1.5));

  CHECK_THROWS_AS(tr.estimateMeanOfSamples({}, Vec::Zero(0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(tr.estimateMeanOfSamples({a, b}, Vec::Zero(2)),
                  std::invalid_argument);
}
