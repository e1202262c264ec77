// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <pexec/executor/types.hpp>
#include <pexec/statedb/state_db.hpp>

namespace pexec::executor {

/// Runs `tx` against `view`: nonce check, value transfer, then the receiver's program
/// when the receiver has code. Failures keep only the sender's nonce bump. All writes
/// land in `view`; the returned record carries its read and write sets.
ExecutionRecord execute_tx(const Transaction& tx, statedb::StateView& view);

}  // namespace pexec::executor
