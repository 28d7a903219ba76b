#pragma once
// Small text utilities shared by the detector, the prompt engine and the
// evaluation metrics. All case folding is ASCII-only; offsets are bytes.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stagewise::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
bool is_word_char(unsigned char c) noexcept;

// Case-insensitive search. With word_boundary set, a match must not be
// flanked by word characters.
std::size_t find_ci(std::string_view haystack, std::string_view needle, std::size_t from = 0,
                    bool word_boundary = false);
bool contains_ci(std::string_view haystack, std::string_view needle, bool word_boundary = false);

// Lowercase alphanumeric tokens.
std::vector<std::string> tokens(std::string_view s);
// True iff every token of `phrase` occurs among the tokens of `s`.
bool mentions(std::string_view s, std::string_view phrase);

// A sentence as a byte range into its source. `end` includes the
// terminating punctuation; `next` also covers trailing whitespace so that
// concatenating [start, next) ranges reproduces the source.
struct Sentence {
    std::size_t start = 0;
    std::size_t end = 0;
    std::size_t next = 0;
};

// Splits on runs of . ! ? followed by whitespace or end of text, and on
// newlines. "1." at the head of a line is a list number, not a terminator.
std::vector<Sentence> split_sentences(std::string_view s);

inline std::string_view slice(std::string_view s, const Sentence& sent) {
    return s.substr(sent.start, sent.end - sent.start);
}

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Replaces every occurrence of `needle` (case-sensitive).
std::string replace_all(std::string s, std::string_view needle, std::string_view replacement);

}  // namespace stagewise::text
