#include "whittlefit/bessel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wf {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIter = 10000;
constexpr double kPi = 3.14159265358979323846264338328;

// Taylor coefficients of 1/Gamma(1+z), |z| <= 1 (A&S 6.1.34).
constexpr double kInvGammaCoef[] = {
    1.0000000000000000,  0.5772156649015329,  -0.6558780715202538,
    -0.0420026350340952, 0.1665386113822915,  -0.0421977345555443,
    -0.0096219715278770, 0.0072189432466630,  -0.0011651675918591,
    -0.0002152416741149, 0.0001280502823882,  -0.0000201348547807,
    -0.0000012504934821, 0.0000011330272320,  -0.0000002056338417,
    0.0000000061160950,  0.0000000050020075,  -0.0000000011812746,
    0.0000000001043427,  0.0000000000077823,  -0.0000000000036968,
    0.0000000000005100,  -0.0000000000000206, -0.0000000000000054,
    0.0000000000000014,  0.0000000000000001};

// gam1 = [1/Gamma(1-mu) - 1/Gamma(1+mu)] / (2 mu), gam2 = the even part;
// evaluated by the series above so mu -> 0 is exact (no cancellation).
void temme_gammas(double mu, double& gam1, double& gam2, double& gampl,
                  double& gammi) {
  const double mu2 = mu * mu;
  double g1 = 0.0, g2 = 0.0, p = 1.0;
  for (int k = 0; k < 26; k += 2) {
    g2 += kInvGammaCoef[k] * p;           // a_k mu^k, k even
    if (k + 1 < 26) g1 += kInvGammaCoef[k + 1] * p;  // a_{k+1} mu^k
    p *= mu2;
  }
  gam1 = -g1;
  gam2 = g2;
  gampl = gam2 - mu * gam1;  // 1/Gamma(1+mu)
  gammi = gam2 + mu * gam1;  // 1/Gamma(1-mu)
}

// K_mu(x), K_{mu+1}(x) for |mu| <= 1/2, x <= 2 (Temme 1975).
void bessel_k_temme(double mu, double x, double& kmu, double& kmu1) {
  const double x2 = 0.5 * x;
  const double pimu = kPi * mu;
  const double fact = (std::abs(pimu) < kEps) ? 1.0 : pimu / std::sin(pimu);
  const double d = -std::log(x2);
  const double e1 = mu * d;
  const double fact2 = (std::abs(e1) < kEps) ? 1.0 : std::sinh(e1) / e1;
  double gam1, gam2, gampl, gammi;
  temme_gammas(mu, gam1, gam2, gampl, gammi);
  double ff = fact * (gam1 * std::cosh(e1) + gam2 * fact2 * d);
  double sum = ff;
  const double e = std::exp(e1);
  double p = 0.5 * e / gampl;
  double q = 0.5 / (e * gammi);
  double c = 1.0;
  const double dd = x2 * x2;
  double sum1 = p;
  int i = 1;
  for (; i <= kMaxIter; ++i) {
    ff = (i * ff + p + q) / (i * i - mu * mu);
    c *= dd / i;
    p /= (i - mu);
    q /= (i + mu);
    const double del = c * ff;
    sum += del;
    const double del1 = c * (p - i * ff);
    sum1 += del1;
    if (std::abs(del) < std::abs(sum) * kEps) break;
  }
  if (i > kMaxIter) throw std::runtime_error("bessel_k: series failed to converge");
  kmu = sum;
  kmu1 = sum1 * 2.0 / x;
}

// K_mu(x), K_{mu+1}(x) for |mu| <= 1/2, x > 2 (Steed's continued fraction).
void bessel_k_steed(double mu, double x, double& kmu, double& kmu1) {
  double b = 2.0 * (1.0 + x);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  const double a1 = 0.25 - mu * mu;
  double q = a1, c = a1, a = -a1;
  double s = 1.0 + q * delh;
  int i = 2;
  for (; i <= kMaxIter; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) < kEps) break;
  }
  if (i > kMaxIter) throw std::runtime_error("bessel_k: continued fraction failed");
  h = a1 * h;
  kmu = std::sqrt(kPi / (2.0 * x)) * std::exp(-x) / s;
  kmu1 = kmu * (mu + x + 0.5 - h) / x;
}

}  // namespace

double bessel_k(double nu, double x) {
  // nu = 0 is allowed internally (needed by the derivative); the covariance
  // models enforce nu > 0 on their own parameters.
  if (std::isnan(nu) || std::isnan(x) || nu < 0.0 || x <= 0.0)
    throw std::domain_error("bessel_k: requires nu >= 0 and x > 0");
  const int nl = static_cast<int>(nu + 0.5);
  const double mu = nu - nl;  // in [-1/2, 1/2]
  double kmu, kmu1;
  if (x <= 2.0)
    bessel_k_temme(mu, x, kmu, kmu1);
  else
    bessel_k_steed(mu, x, kmu, kmu1);
  const double xi2 = 2.0 / x;
  const double big = std::numeric_limits<double>::max();
  for (int j = 1; j <= nl; ++j) {
    const double fac = (mu + j) * xi2;
    if (kmu1 > big / (fac + 1.0))
      throw std::range_error("bessel_k: overflow");
    const double knext = fac * kmu1 + kmu;
    kmu = kmu1;
    kmu1 = knext;
  }
  // kmu holds K_{mu+nl} = K_nu after the recurrence
  if (kmu == 0.0) throw std::range_error("bessel_k: underflow");
  if (std::isinf(kmu)) throw std::range_error("bessel_k: overflow");
  return kmu;
}

double bessel_k_derivative(double nu, double x) {
  const double km = bessel_k(std::abs(nu - 1.0), x);  // K_{-a} = K_a
  const double kp = bessel_k(nu + 1.0, x);
  return -0.5 * (km + kp);
}

}  // namespace wf
