#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace hampde::fft {

/// Cached FFTW plans for one transform length. Execution uses the new-array
/// interface, so one plan serves every buffer of that length.
class Plan {
 public:
  explicit Plan(int size) : size_(size) {
    std::vector<std::complex<double>> scratch(static_cast<std::size_t>(size));
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    forward_ = fftw_plan_dft_1d(size, buf, buf, FFTW_FORWARD, flags);
    backward_ = fftw_plan_dft_1d(size, buf, buf, FFTW_BACKWARD, flags);
    if (forward_ == nullptr || backward_ == nullptr) throw std::runtime_error("fftw plan failed");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  ~Plan() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  [[nodiscard]] int size() const { return size_; }

  /// out[k] = Σ_j in[j] e^{-2πi jk/M}, unnormalized. In-place allowed.
  void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
    execute(forward_, in, out);
  }
  /// out[j] = Σ_k in[k] e^{+2πi jk/M}, unnormalized. In-place allowed.
  void backward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
    execute(backward_, in, out);
  }

 private:
  void execute(fftw_plan plan, std::span<const std::complex<double>> in,
               std::span<std::complex<double>> out) const {
    if (static_cast<int>(in.size()) != size_ || static_cast<int>(out.size()) != size_) {
      throw std::invalid_argument("fft buffer length mismatch");
    }
    // FFTW's signature is not const-correct; the input is not modified
    // unless in and out alias.
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    fftw_execute_dft(plan, src, dst);
  }

  int size_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Process-wide plan cache; plan creation is serialized, execution is not.
inline const Plan& plan(int size) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Plan>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(size);
  if (it == cache.end()) it = cache.emplace(size, std::make_unique<Plan>(size)).first;
  return *it->second;
}

/// Index of signed mode n on a length-M periodic grid.
inline int wrap(int n, int M) { return ((n % M) + M) % M; }

}  // namespace hampde::fft
