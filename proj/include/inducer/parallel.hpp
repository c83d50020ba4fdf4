#pragma once

namespace inducer {

// Applies INDUCER_THREADS (when set) and returns the thread count in use.
int configure_threads();
int thread_count();

}  // namespace inducer
