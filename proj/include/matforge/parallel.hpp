// Copyright 2026 The matforge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace matforge {

// Process-wide worker count used by parallel_for. 0 selects hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

// Runs body(i) for i in [begin, end), split into contiguous chunks across
// workers. Bodies must write disjoint outputs; any reduction happens after
// the call returns so results do not depend on the worker count.
void parallel_for(std::size_t begin, std::size_t end, const std::function<void(std::size_t)>& body);

}  // namespace matforge
