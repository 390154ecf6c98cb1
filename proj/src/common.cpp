#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "nlf/error.hpp"
#include "nlf/ext_real.hpp"
#include "nlf/parallel.hpp"

namespace nlf {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidDomain: return "invalid-domain";
    case ErrorCode::kSyntax: return "syntax";
    case ErrorCode::kUnknownIdentifier: return "unknown-identifier";
    case ErrorCode::kArity: return "arity";
    case ErrorCode::kPole: return "pole";
    case ErrorCode::kEvalDomain: return "eval-domain";
    case ErrorCode::kNonSmooth: return "non-smooth";
    case ErrorCode::kAsymmetric: return "asymmetric";
    case ErrorCode::kUnsupported: return "unsupported";
    case ErrorCode::kPhiNonconvex: return "phi-nonconvex";
    case ErrorCode::kBoundary: return "boundary";
    case ErrorCode::kUndefinedFraction: return "undefined-fraction";
    case ErrorCode::kNonHomogeneous: return "non-homogeneous";
    case ErrorCode::kUnknownName: return "unknown-name";
    case ErrorCode::kMismatch: return "mismatch";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

std::string ExtReal::to_string() const {
  if (is_infinite()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value_);
  return buf;
}

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads.store(n); }

unsigned max_threads() {
  unsigned cap = g_max_threads.load();
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  return cap == 0 ? hw : std::min(cap, hw);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(max_threads(), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::size_t err_index = count;
  std::exception_ptr err;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        // keep the lowest failing index so the reported error is reproducible
        if (i < err_index) {
          err_index = i;
          err = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace nlf
