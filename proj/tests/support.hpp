#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "entrain/error.hpp"

#define EXPECT_ERRC(stmt, errc)                                          \
    do {                                                                 \
        try {                                                            \
            stmt;                                                        \
            ADD_FAILURE() << "expected " << ::entrain::to_string(errc);  \
        } catch (const ::entrain::Error& e_) {                           \
            EXPECT_EQ(e_.code(), errc) << e_.what();                     \
        }                                                                \
    } while (0)

namespace testutil {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("entrain-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testutil
