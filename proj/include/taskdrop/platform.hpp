// Copyright 2026 The TaskDrop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

namespace taskdrop {

/// Keeps freed tensor buffers in the heap instead of returning them to the kernel. Training
/// allocates and frees the same sizes thousands of times per epoch. No-op outside glibc.
/// Keeps large short-lived buffers on the heap instead of fresh mmaps (glibc only; no-op
/// elsewhere). Call once at program start.
void configure_allocator();

}  // namespace taskdrop
