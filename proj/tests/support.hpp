#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "splitcall/backends.hpp"
#include "splitcall/error.hpp"
#include "splitcall/gateway.hpp"
#include "splitcall/toolhub.hpp"

namespace test {

namespace fs = std::filesystem;

// Self-removing scratch directory.
class TempDir {
public:
    TempDir() {
        auto pattern = (fs::temp_directory_path() / "splitcall-test-XXXXXX").string();
        if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
        path_ = fs::canonical(pattern);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

    void write(const std::string& rel, const std::string& content) const {
        fs::create_directories((path_ / rel).parent_path());
        std::ofstream(path_ / rel, std::ios::binary) << content;
    }

private:
    fs::path path_;
};

inline splitcall::Errc error_code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const splitcall::Error& e) {
        return e.code();
    }
    throw std::runtime_error("expected splitcall::Error, nothing was thrown");
}

inline std::shared_ptr<splitcall::ScriptedBackend> script(
    std::initializer_list<std::pair<const char*, std::string>> rows) {
    std::vector<splitcall::ScriptEntry> entries;
    for (const auto& [adapter, reply] : rows) {
        entries.push_back({splitcall::AdapterId::parse(adapter), reply});
    }
    return std::make_shared<splitcall::ScriptedBackend>(std::move(entries));
}

// Number of "### tool:" blocks in a prompt.
inline std::size_t count_tool_blocks(const std::string& text) {
    std::size_t n = 0;
    for (auto pos = text.find("### tool: "); pos != std::string::npos; pos = text.find("### tool: ", pos + 1)) ++n;
    return n;
}

inline std::string all_content(const std::vector<splitcall::Message>& messages) {
    std::string out;
    for (const auto& m : messages) out += m.content + "\n";
    return out;
}

template <typename F>
double elapsed_ms(F&& fn) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
}

} // namespace test
