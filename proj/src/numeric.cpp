#include "vqlab/numeric.hpp"

#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "vqlab/error.hpp"

namespace vqlab {

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b, double abs_tol,
                           const std::string& what) {
  QuadratureResult r;
  if (a == b) return r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-10, &r.error, &l1);
  if (!std::isfinite(r.value) || r.error > abs_tol) {
    throw NumericError("quadrature did not converge: " + what,
                       {{"lower", a}, {"upper", b}, {"value", r.value}, {"error_estimate", r.error}, {"tolerance", abs_tol}});
  }
  return r;
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace vqlab
