#include "whittlefit/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace wf::fft {
namespace {

struct PlanKey {
  std::vector<int> dims;
  int sign;
  bool in_place;
  bool operator<(const PlanKey& o) const {
    if (dims != o.dims) return dims < o.dims;
    if (sign != o.sign) return sign < o.sign;
    return in_place < o.in_place;
  }
};

std::mutex plan_mutex;
std::map<PlanKey, fftw_plan>& plan_cache() {
  static std::map<PlanKey, fftw_plan> cache;
  return cache;
}

fftw_plan get_plan(const PlanKey& key, fftw_complex* in, fftw_complex* out) {
  std::lock_guard<std::mutex> lock(plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  // FFTW is row-major (last index fastest); our layout has the first axis
  // fastest, so the dims are passed reversed.
  std::vector<int> rdims(key.dims.rbegin(), key.dims.rend());
  fftw_plan plan =
      fftw_plan_dft(static_cast<int>(rdims.size()), rdims.data(), in, out,
                    key.sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plan) throw std::runtime_error("fftw plan creation failed");
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

void c2c(const std::vector<int>& dims, const std::complex<double>* in,
         std::complex<double>* out, int sign) {
  if (dims.empty()) throw std::invalid_argument("fft: empty dims");
  auto* fin = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in));
  auto* fout = reinterpret_cast<fftw_complex*>(out);
  PlanKey key{dims, sign, in == out};
  fftw_plan plan = get_plan(key, fin, fout);
  fftw_execute_dft(plan, fin, fout);
}

void forward(const std::vector<int>& dims, const std::complex<double>* in,
             std::complex<double>* out) {
  c2c(dims, in, out, FFTW_FORWARD);
}

void backward(const std::vector<int>& dims, const std::complex<double>* in,
              std::complex<double>* out) {
  c2c(dims, in, out, FFTW_BACKWARD);
}

}  // namespace wf::fft
