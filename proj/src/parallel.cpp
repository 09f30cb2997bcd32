#include <wg/parallel.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace wg
{
  unsigned int thread_count()
  {
    if (const char *env = std::getenv("WG_NUM_THREADS"))
      {
        try
          {
            const int n = std::stoi(env);
            if (n > 0)
              return static_cast<unsigned int>(n);
          }
        catch (const std::exception &)
          {}
      }
    return std::max(1u, std::thread::hardware_concurrency());
  }

  void parallel_for(std::size_t n, const std::function<void(std::size_t)> &body)
  {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1)
      {
        for (std::size_t i = 0; i < n; ++i)
          body(i);
        return;
      }

    std::atomic<std::size_t> next{0};
    std::exception_ptr       error;
    std::mutex               error_mutex;
    const auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++)
        {
          try
            {
              body(i);
            }
          catch (...)
            {
              std::lock_guard lock(error_mutex);
              if (!error)
                error = std::current_exception();
              next = n;
            }
        }
    };
    {
      std::vector<std::jthread> pool;
      for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(worker);
      worker();
    }
    if (error)
      std::rethrow_exception(error);
  }
} // namespace wg
