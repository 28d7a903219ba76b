#include "stagewise/text.hpp"

#include <algorithm>
#include <cctype>

namespace stagewise::text {

namespace {

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

char lower(char c) noexcept {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

bool is_terminator(char c) noexcept { return c == '.' || c == '!' || c == '?'; }

// '.' at `pos` closes a run of digits that starts its line: "1. ", "12. ".
bool is_list_number(std::string_view s, std::size_t pos) {
    std::size_t k = pos;
    while (k > 0 && std::isdigit(static_cast<unsigned char>(s[k - 1]))) --k;
    if (k == pos) return false;
    while (k > 0 && (s[k - 1] == ' ' || s[k - 1] == '\t')) --k;
    return k == 0 || s[k - 1] == '\n';
}

}  // namespace

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

bool is_word_char(unsigned char c) noexcept { return std::isalnum(c) != 0 || c == '_'; }

std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from,
                    bool word_boundary) {
    if (needle.empty() || needle.size() > haystack.size()) return std::string_view::npos;
    for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
        bool match = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (lower(haystack[i + k]) != lower(needle[k])) {
                match = false;
                break;
            }
        }
        if (!match) continue;
        if (word_boundary) {
            const std::size_t end = i + needle.size();
            const bool left_ok = i == 0 || !is_word_char(static_cast<unsigned char>(haystack[i - 1])) ||
                                 !is_word_char(static_cast<unsigned char>(needle.front()));
            const bool right_ok = end == haystack.size() ||
                                  !is_word_char(static_cast<unsigned char>(haystack[end])) ||
                                  !is_word_char(static_cast<unsigned char>(needle.back()));
            if (!left_ok || !right_ok) continue;
        }
        return i;
    }
    return std::string_view::npos;
}

bool contains_ci(std::string_view haystack, std::string_view needle, bool word_boundary) {
    return find_ci(haystack, needle, 0, word_boundary) != std::string_view::npos;
}

std::vector<std::string> tokens(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(lower(c));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool mentions(std::string_view s, std::string_view phrase) {
    const auto needed = tokens(phrase);
    if (needed.empty()) return false;
    const auto have = tokens(s);
    return std::all_of(needed.begin(), needed.end(), [&](const std::string& t) {
        return std::find(have.begin(), have.end(), t) != have.end();
    });
}

std::vector<Sentence> split_sentences(std::string_view s) {
    std::vector<Sentence> out;
    const std::size_t n = s.size();
    std::size_t i = 0;
    while (i < n && is_space(s[i])) ++i;
    while (i < n) {
        const std::size_t start = i;
        std::size_t end = n;
        std::size_t j = i;
        while (j < n) {
            const char c = s[j];
            if (c == '\n') {
                end = j;
                break;
            }
            if (is_terminator(c)) {
                if (c == '.' && is_list_number(s, j)) {
                    ++j;
                    continue;
                }
                std::size_t k = j;
                while (k < n && is_terminator(s[k])) ++k;
                while (k < n && (s[k] == '"' || s[k] == '\'' || s[k] == ')')) ++k;
                if (k == n || is_space(s[k])) {
                    end = k;
                    break;
                }
                j = k;
                continue;
            }
            ++j;
        }
        std::size_t e = end;
        while (e > start && is_space(s[e - 1])) --e;
        std::size_t next = end;
        while (next < n && is_space(s[next])) ++next;
        if (e > start) out.push_back(Sentence{start, e, next});
        i = next;
    }
    return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t b = 0;
    while (true) {
        const auto p = s.find(sep, b);
        out.emplace_back(s.substr(b, p == std::string_view::npos ? std::string_view::npos : p - b));
        if (p == std::string_view::npos) break;
        b = p + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::string replace_all(std::string s, std::string_view needle, std::string_view replacement) {
    if (needle.empty()) return s;
    std::size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        s.replace(pos, needle.size(), replacement);
        pos += replacement.size();
    }
    return s;
}

}  // namespace stagewise::text
