#include "inducer/parallel.hpp"

#include <omp.h>

#include <cstdlib>
#include <string>

#include "inducer/error.hpp"

namespace inducer {

int configure_threads() {
  if (const char* s = std::getenv("INDUCER_THREADS"); s && *s) {
    char* end = nullptr;
    long n = std::strtol(s, &end, 10);
    if (*end || n < 1) throw Error(ErrorClass::config, "bad-INDUCER_THREADS", s);
    omp_set_num_threads(int(n));
  }
  return thread_count();
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace inducer
