/*
 Copyright 2026 The safereach Authors

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

#ifndef SAFEREACH_PARALLEL_HPP
#define SAFEREACH_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace safereach {

/// Worker count from SAFEREACH_THREADS (unset or 0 means hardware concurrency).
unsigned worker_count();

/**
 * Calls body(i) for i in [0, count) using up to worker_count() threads with a
 * static block partition. The first exception thrown by any worker is
 * rethrown on the calling thread after all workers join.
 */
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace safereach

#endif
