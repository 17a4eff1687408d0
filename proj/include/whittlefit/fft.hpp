#pragma once

#include <complex>
#include <vector>

namespace wf::fft {

// d-dimensional complex DFT on data stored with the first axis fastest
// (colexicographic layout). sign -1 computes sum x_s e^{-i w.s}, sign +1 the
// unnormalized inverse. in == out is allowed. Plans are cached per shape and
// execution is safe from multiple threads on distinct buffers.
void c2c(const std::vector<int>& dims, const std::complex<double>* in,
         std::complex<double>* out, int sign);

void forward(const std::vector<int>& dims, const std::complex<double>* in,
             std::complex<double>* out);
void backward(const std::vector<int>& dims, const std::complex<double>* in,
              std::complex<double>* out);

}  // namespace wf::fft
