// Copyright 2026 The e3dgs Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace e3dgs {

/// Worker count for library-internal loops. Read once from E3DGS_THREADS,
/// falling back to the hardware concurrency.
int thread_count();

/// Overrides the worker count for the rest of the process (0 restores the default).
void set_thread_count(int n);

/// Runs body(i) for i in [0, n). Work items must not share mutable state;
/// results that need reduction go into per-item slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace e3dgs
