#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stagewise/text.hpp"

using namespace stagewise;

namespace {

std::vector<std::string> sentences(std::string_view s) {
    std::vector<std::string> out;
    for (const auto& sent : text::split_sentences(s)) out.emplace_back(text::slice(s, sent));
    return out;
}

}  // namespace

TEST_CASE("case folding and trimming") {
    CHECK(text::to_lower("Hello WORLD") == "hello world");
    CHECK(text::trim("  a b \n") == "a b");
    CHECK(text::trim("") == "");
}

TEST_CASE("find_ci with and without word boundaries") {
    CHECK(text::find_ci("I Feel Trapped", "feel trapped") == 2);
    CHECK(text::contains_ci("supervisors", "supervisor"));
    CHECK_FALSE(text::contains_ci("supervisors", "supervisor", true));
    CHECK(text::contains_ci("my supervisor.", "supervisor", true));
    CHECK(text::find_ci("abc", "") == std::string_view::npos);
}

TEST_CASE("tokens and mentions") {
    CHECK(text::tokens("It's the Supervisor-conflict!") ==
          std::vector<std::string>{"it", "s", "the", "supervisor", "conflict"});
    CHECK(text::mentions("A conflict with my supervisor.", "supervisor conflict"));
    CHECK_FALSE(text::mentions("my supervisors", "supervisor"));
    CHECK_FALSE(text::mentions("anything", ""));
}

TEST_CASE("sentence splitting") {
    CHECK(sentences("One. Two? Three!") == std::vector<std::string>{"One.", "Two?", "Three!"});
    CHECK(sentences("Wait... really?!") == std::vector<std::string>{"Wait...", "really?!"});
    CHECK(sentences("No terminator") == std::vector<std::string>{"No terminator"});
    CHECK(sentences("1. First step.\n2. Second step.") ==
          std::vector<std::string>{"1. First step.", "2. Second step."});
    CHECK(sentences("He said \"stop.\" Then left.") ==
          std::vector<std::string>{"He said \"stop.\"", "Then left."});
    CHECK(sentences("3.5 hours a day.") == std::vector<std::string>{"3.5 hours a day."});
    CHECK(sentences("").empty());
}

TEST_CASE("sentence ranges tile the source") {
    const std::string s = "  Lead. Then this?\n\nAnd a line\nend";
    std::string rebuilt;
    std::size_t prev = text::split_sentences(s).front().start;
    rebuilt = s.substr(0, prev);
    for (const auto& sent : text::split_sentences(s)) {
        CHECK(sent.start == prev);
        rebuilt += s.substr(sent.start, sent.next - sent.start);
        prev = sent.next;
    }
    CHECK(rebuilt == s);
}

TEST_CASE("split, join, replace_all") {
    CHECK(text::split("a,b,,c", ',') == std::vector<std::string>{"a", "b", "", "c"});
    CHECK(text::join({"a", "b"}, " → ") == "a → b");
    CHECK(text::replace_all("x-y-z", "-", "+") == "x+y+z");
}
