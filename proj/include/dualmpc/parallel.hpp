/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#ifdef DUALMPC_HAVE_OPENMP
#include <omp.h>
#endif

namespace dualmpc {

/// Selects between the serial reference loop and the OpenMP kernel.
/// Both write results by index; reductions are always done afterwards in
/// ascending index order, so the two produce bit-identical output.
enum class Execution { kSerial, kParallel };

Execution default_execution() noexcept;
void set_default_execution(Execution exec) noexcept;

bool openmp_available() noexcept;

/// Calls fn(i) for i in [0, n). fn must only write to slot i of its outputs.
/// In parallel mode the exception thrown by the lowest failing index is
/// rethrown, matching what the serial loop would report.
template <typename Fn>
void for_each_index(std::ptrdiff_t n, Execution exec, Fn&& fn) {
#ifdef DUALMPC_HAVE_OPENMP
  if (exec == Execution::kParallel && n > 1 && omp_get_max_threads() > 1) {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    return;
  }
#endif
  (void)exec;
  for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
}

}  // namespace dualmpc
