#pragma once

#include "tracescope/error.hpp"

#include <sqlite3.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tracescope::store::sql {

    [[noreturn]] inline void fail(sqlite3* db, const std::string& what) {
        throw error(error_code::io_error, what + ": " + (db ? sqlite3_errmsg(db) : "no database"));
    }

    class statement {
    public:
        statement(sqlite3* db, std::string_view text) : db_(db) {
            if (sqlite3_prepare_v2(db, text.data(), static_cast<int>(text.size()), &st_, nullptr) != SQLITE_OK)
                fail(db, "prepare '" + std::string(text) + "'");
        }
        statement(const statement&) = delete;
        statement& operator=(const statement&) = delete;
        ~statement() { sqlite3_finalize(st_); }

        statement& bind(int i, std::int64_t v) {
            check(sqlite3_bind_int64(st_, i, v));
            return *this;
        }
        statement& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
        statement& bind(int i, double v) {
            check(sqlite3_bind_double(st_, i, v));
            return *this;
        }
        statement& bind(int i, std::string_view v) {
            check(sqlite3_bind_text(st_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
            return *this;
        }
        statement& bind(int i, const std::string& v) { return bind(i, std::string_view(v)); }
        statement& bind(int i, const char* v) { return bind(i, std::string_view(v)); }
        statement& bind_null(int i) {
            check(sqlite3_bind_null(st_, i));
            return *this;
        }
        template <class T>
        statement& bind(int i, const std::optional<T>& v) {
            return v ? bind(i, *v) : bind_null(i);
        }

        // True while a row is available.
        bool step() {
            int rc = sqlite3_step(st_);
            if (rc == SQLITE_ROW) return true;
            if (rc == SQLITE_DONE) return false;
            fail(db_, "step");
        }
        void run() {
            while (step()) {
            }
            reset();
        }
        void reset() {
            sqlite3_reset(st_);
            sqlite3_clear_bindings(st_);
        }

        bool is_null(int c) const { return sqlite3_column_type(st_, c) == SQLITE_NULL; }
        int type(int c) const { return sqlite3_column_type(st_, c); }
        std::int64_t i64(int c) const { return sqlite3_column_int64(st_, c); }
        int i32(int c) const { return sqlite3_column_int(st_, c); }
        double real(int c) const { return sqlite3_column_double(st_, c); }
        std::string text(int c) const {
            auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st_, c));
            return p ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(st_, c))) : std::string();
        }
        std::optional<std::int64_t> opt_i64(int c) const {
            return is_null(c) ? std::nullopt : std::optional<std::int64_t>(i64(c));
        }
        std::optional<int> opt_i32(int c) const { return is_null(c) ? std::nullopt : std::optional<int>(i32(c)); }

    private:
        sqlite3* db_;
        sqlite3_stmt* st_{nullptr};

        void check(int rc) {
            if (rc != SQLITE_OK) fail(db_, "bind");
        }
    };

    inline void exec(sqlite3* db, const std::string& text) {
        char* msg = nullptr;
        if (sqlite3_exec(db, text.c_str(), nullptr, nullptr, &msg) != SQLITE_OK) {
            std::string m = msg ? msg : "unknown";
            sqlite3_free(msg);
            throw error(error_code::io_error, "sql '" + text.substr(0, 60) + "': " + m);
        }
    }

}  // namespace tracescope::store::sql
