#include "splitcall/json_util.hpp"

#include <cctype>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "splitcall/error.hpp"

namespace splitcall {

namespace fs = std::filesystem;

std::string canonical_dump(const json& value) {
    return value.dump(-1, ' ', false, json::error_handler_t::replace);
}

std::string trim(std::string_view text) {
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) {
        --end;
    }
    return std::string(text.substr(begin, end - begin));
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(c);
    }
    return out;
}

std::string strip_code_fences(std::string_view text) {
    std::string body = trim(text);
    if (body.rfind("```", 0) != 0) {
        return body;
    }
    auto first_newline = body.find('\n');
    if (first_newline == std::string::npos) {
        return body;
    }
    auto closing = body.rfind("```");
    if (closing == std::string::npos || closing <= first_newline) {
        return trim(std::string_view(body).substr(first_newline + 1));
    }
    return trim(std::string_view(body).substr(first_newline + 1, closing - first_newline - 1));
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (auto& c : out) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

namespace {

bool is_continuation(unsigned char c) { return (c & 0xC0) == 0x80; }

} // namespace

std::size_t codepoint_count(std::string_view text) {
    std::size_t count = 0;
    for (unsigned char c : text) {
        if (!is_continuation(c)) {
            ++count;
        }
    }
    return count;
}

std::size_t codepoint_offset(std::string_view text, std::size_t byte_offset) {
    return codepoint_count(text.substr(0, byte_offset));
}

std::size_t byte_offset(std::string_view text, std::size_t codepoint_offset) {
    std::size_t seen = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (is_continuation(static_cast<unsigned char>(text[i]))) {
            continue;
        }
        if (seen == codepoint_offset) {
            return i;
        }
        ++seen;
    }
    return text.size();
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io_error, "cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::vector<json> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        try {
            rows.push_back(json::parse(line));
        } catch (const json::parse_error& e) {
            throw Error(Errc::parse_error,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return rows;
}

void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    fs::path temp = path;
    temp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(Errc::io_error, "cannot write " + temp.string());
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(Errc::io_error, "short write to " + temp.string());
        }
    }
    std::error_code ec;
    fs::rename(temp, path, ec);
    if (ec) {
        fs::remove(temp);
        throw Error(Errc::io_error, "cannot rename into " + path.string() + ": " + ec.message());
    }
}

std::string format_iso8601_utc(std::int64_t epoch_seconds) {
    std::time_t t = static_cast<std::time_t>(epoch_seconds);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buffer[32];
    std::strftime(buffer, sizeof(buffer), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buffer;
}

} // namespace splitcall
