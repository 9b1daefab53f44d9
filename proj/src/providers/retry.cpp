#include <chrono>
#include <thread>

#include "providers/provider.hpp"

namespace cycleprompt::providers {

std::vector<int> RetryPolicy::delay_schedule() const {
  std::vector<int> delays;
  long long delay = backoff_ms;
  for (int k = 1; k < max_attempts; ++k) {
    delays.push_back(static_cast<int>(delay));
    delay *= 2;
  }
  return delays;
}

bool RetryPolicy::is_retryable(ProviderErrorKind kind) const {
  if (kind == ProviderErrorKind::kContentFilter) return false;
  return retryable.count(kind) > 0;
}

std::string run_with_retries(const RetryPolicy& policy, const std::function<std::string()>& attempt,
                             const RetryHooks& hooks) {
  if (policy.max_attempts < 1) throw PreconditionError("retry policy needs max_attempts >= 1");
  const auto delays = policy.delay_schedule();
  for (int k = 1;; ++k) {
    try {
      return attempt();
    } catch (const ProviderError& e) {
      if (hooks.on_failure) hooks.on_failure(k, e);
      if (!policy.is_retryable(e.kind())) throw ProviderError(e.kind(), e.detail(), k);
      if (k >= policy.max_attempts) {
        throw ProviderError(ProviderErrorKind::kExhaustedRetries,
                            "gave up after " + std::to_string(k) + " attempt(s); last error " +
                                to_string(e.kind()) + ": " + e.detail(),
                            k);
      }
      const int delay = delays[static_cast<std::size_t>(k - 1)];
      if (hooks.sleep) {
        hooks.sleep(delay);
      } else {
        std::this_thread::sleep_for(std::chrono::milliseconds(delay));
      }
    }
  }
}

}  // namespace cycleprompt::providers
