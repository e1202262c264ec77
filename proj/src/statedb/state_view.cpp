// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <pexec/statedb/state_db.hpp>

namespace pexec::statedb {

Bytes StateView::get(const StateKey& key) const {
    if (auto it = writes_.find(key); it != writes_.end()) {
        return it->second;
    }
    reads_.push_back(key);
    return base_->get(key);
}

Bytes OverlayReader::get(const StateKey& key) const {
    if (auto it = overlay_->find(key); it != overlay_->end()) {
        return it->second;
    }
    return base_->get(key);
}

}  // namespace pexec::statedb
