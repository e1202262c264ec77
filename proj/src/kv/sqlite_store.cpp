// Copyright 2026 The pexec Authors
// SPDX-License-Identifier: Apache-2.0

#include <mutex>

#include <sqlite3.h>

#include <pexec/common/errors.hpp>
#include <pexec/kv/store.hpp>

namespace pexec::kv {

namespace {

    class Statement {
      public:
        Statement(sqlite3* db, const char* sql) {
            if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
                throw StorageFailure(std::string{"sqlite prepare: "} + sqlite3_errmsg(db));
            }
        }
        ~Statement() { sqlite3_finalize(stmt_); }
        Statement(const Statement&) = delete;
        Statement& operator=(const Statement&) = delete;

        sqlite3_stmt* get() const noexcept { return stmt_; }

        void reset() const {
            sqlite3_reset(stmt_);
            sqlite3_clear_bindings(stmt_);
        }

        void bind(int index, ByteView blob) const {
            // Zero-length blobs must still bind as blobs, not NULL.
            static const uint8_t kEmpty = 0;
            const void* p = blob.empty() ? &kEmpty : blob.data();
            sqlite3_bind_blob(stmt_, index, p, static_cast<int>(blob.size()), SQLITE_TRANSIENT);
        }

        Bytes column(int index) const {
            const auto* p = static_cast<const uint8_t*>(sqlite3_column_blob(stmt_, index));
            const int n = sqlite3_column_bytes(stmt_, index);
            return p == nullptr ? Bytes{} : Bytes{p, static_cast<std::size_t>(n)};
        }

      private:
        sqlite3_stmt* stmt_{nullptr};
    };

    void exec(sqlite3* db, const char* sql) {
        char* err = nullptr;
        if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
            std::string msg = err != nullptr ? err : "unknown";
            sqlite3_free(err);
            throw StorageFailure("sqlite: " + msg);
        }
    }

}  // namespace

struct SqliteStore::Impl {
    sqlite3* db{nullptr};
    std::mutex mutex;
    std::unique_ptr<Statement> get;
    std::unique_ptr<Statement> floor;
    std::unique_ptr<Statement> put;
    std::unique_ptr<Statement> erase;
    std::unique_ptr<Statement> scan;
};

SqliteStore::SqliteStore(const std::string& path) : impl_{std::make_unique<Impl>()} {
    if (sqlite3_open(path.c_str(), &impl_->db) != SQLITE_OK) {
        const std::string msg = sqlite3_errmsg(impl_->db);
        sqlite3_close(impl_->db);
        throw StorageFailure("sqlite open " + path + ": " + msg);
    }
    exec(impl_->db, "PRAGMA journal_mode=WAL");
    exec(impl_->db, "PRAGMA synchronous=NORMAL");
    exec(impl_->db, "CREATE TABLE IF NOT EXISTS kv (k BLOB PRIMARY KEY, v BLOB NOT NULL) WITHOUT ROWID");
    impl_->get = std::make_unique<Statement>(impl_->db, "SELECT v FROM kv WHERE k = ?1");
    impl_->floor = std::make_unique<Statement>(impl_->db, "SELECT k, v FROM kv WHERE k <= ?1 ORDER BY k DESC LIMIT 1");
    impl_->put = std::make_unique<Statement>(impl_->db, "INSERT OR REPLACE INTO kv (k, v) VALUES (?1, ?2)");
    impl_->erase = std::make_unique<Statement>(impl_->db, "DELETE FROM kv WHERE k = ?1");
    impl_->scan = std::make_unique<Statement>(impl_->db, "SELECT k, v FROM kv WHERE k >= ?1 ORDER BY k");
}

SqliteStore::~SqliteStore() {
    impl_->get.reset();
    impl_->floor.reset();
    impl_->put.reset();
    impl_->erase.reset();
    impl_->scan.reset();
    sqlite3_close(impl_->db);
}

std::optional<Bytes> SqliteStore::get(ByteView key) const {
    std::lock_guard lock{impl_->mutex};
    const Statement& st = *impl_->get;
    st.reset();
    st.bind(1, key);
    std::optional<Bytes> out;
    const int rc = sqlite3_step(st.get());
    if (rc == SQLITE_ROW) {
        out = st.column(0);
    } else if (rc != SQLITE_DONE) {
        throw StorageFailure(std::string{"sqlite get: "} + sqlite3_errmsg(impl_->db));
    }
    st.reset();
    return out;
}

std::optional<std::pair<Bytes, Bytes>> SqliteStore::floor(ByteView key, ByteView prefix) const {
    std::lock_guard lock{impl_->mutex};
    const Statement& st = *impl_->floor;
    st.reset();
    st.bind(1, key);
    std::optional<std::pair<Bytes, Bytes>> out;
    const int rc = sqlite3_step(st.get());
    if (rc == SQLITE_ROW) {
        Bytes k = st.column(0);
        if (ByteView{k}.starts_with(prefix)) {
            out.emplace(std::move(k), st.column(1));
        }
    } else if (rc != SQLITE_DONE) {
        throw StorageFailure(std::string{"sqlite floor: "} + sqlite3_errmsg(impl_->db));
    }
    st.reset();
    return out;
}

void SqliteStore::write(const WriteBatch& batch) {
    if (batch.empty()) {
        return;
    }
    std::lock_guard lock{impl_->mutex};
    exec(impl_->db, "BEGIN");
    try {
        for (const auto& op : batch.ops()) {
            const Statement& st = op.value ? *impl_->put : *impl_->erase;
            st.reset();
            st.bind(1, op.key);
            if (op.value) {
                st.bind(2, *op.value);
            }
            if (sqlite3_step(st.get()) != SQLITE_DONE) {
                throw StorageFailure(std::string{"sqlite write: "} + sqlite3_errmsg(impl_->db));
            }
        }
        exec(impl_->db, "COMMIT");
    } catch (...) {
        sqlite3_exec(impl_->db, "ROLLBACK", nullptr, nullptr, nullptr);
        throw;
    }
}

void SqliteStore::for_each_prefix(ByteView prefix, const std::function<bool(ByteView, ByteView)>& fn) const {
    // Collect first: the callback may call back into the store.
    std::vector<std::pair<Bytes, Bytes>> rows;
    {
        std::lock_guard lock{impl_->mutex};
        const Statement& st = *impl_->scan;
        st.reset();
        st.bind(1, prefix);
        while (sqlite3_step(st.get()) == SQLITE_ROW) {
            Bytes k = st.column(0);
            if (!ByteView{k}.starts_with(prefix)) {
                break;
            }
            rows.emplace_back(std::move(k), st.column(1));
        }
        st.reset();
    }
    for (const auto& [k, v] : rows) {
        if (!fn(k, v)) {
            return;
        }
    }
}

}  // namespace pexec::kv
