#include "dragun/text/analyzer.hpp"

#include <algorithm>

namespace dragun::text {
namespace {

// Working state for one word. `end` is the index one past the last letter of
// the current word; `stem_end` marks the end of the stem a suffix test found.
class Stemmer {
public:
    explicit Stemmer(std::string word) : b_(std::move(word)), end_(b_.size()) {}

    std::string run() {
        if (end_ == 0) return b_;
        step1ab();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return b_.substr(0, end_);
    }

private:
    bool is_consonant(std::size_t i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u':
                return false;
            case 'y':
                return i == 0 ? true : !is_consonant(i - 1);
            default:
                return true;
        }
    }

    // Number of VC sequences in b_[0, j).
    int measure(std::size_t j) const {
        int n = 0;
        std::size_t i = 0;
        while (true) {
            if (i >= j) return n;
            if (!is_consonant(i)) break;
            ++i;
        }
        ++i;
        while (true) {
            while (true) {
                if (i >= j) return n;
                if (is_consonant(i)) break;
                ++i;
            }
            ++i;
            ++n;
            while (true) {
                if (i >= j) return n;
                if (!is_consonant(i)) break;
                ++i;
            }
            ++i;
        }
    }

    bool has_vowel(std::size_t j) const {
        for (std::size_t i = 0; i < j; ++i) {
            if (!is_consonant(i)) return true;
        }
        return false;
    }

    bool double_consonant(std::size_t j) const {
        if (j < 2) return false;
        if (b_[j - 1] != b_[j - 2]) return false;
        return is_consonant(j - 1);
    }

    // cvc ending at j-1 where the final c is not w, x or y.
    bool cvc(std::size_t j) const {
        if (j < 3) return false;
        if (!is_consonant(j - 1) || is_consonant(j - 2) || !is_consonant(j - 3)) return false;
        const char c = b_[j - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends(std::string_view suffix) {
        if (suffix.size() > end_) return false;
        if (std::string_view(b_).substr(end_ - suffix.size(), suffix.size()) != suffix) return false;
        stem_end_ = end_ - suffix.size();
        return true;
    }

    void set_to(std::string_view replacement) {
        b_.replace(stem_end_, end_ - stem_end_, replacement);
        end_ = stem_end_ + replacement.size();
        b_.resize(end_);
    }

    void replace_if_measured(std::string_view replacement) {
        if (measure(stem_end_) > 0) set_to(replacement);
    }

    void step1ab() {
        if (b_[end_ - 1] == 's') {
            if (ends("sses")) {
                set_to("ss");
            } else if (ends("ies")) {
                set_to("i");
            } else if (end_ >= 2 && b_[end_ - 2] != 's') {
                --end_;
                b_.resize(end_);
            }
        }
        if (ends("eed")) {
            if (measure(stem_end_) > 0) set_to("ee");
            return;
        }
        if ((ends("ed") || ends("ing")) && has_vowel(stem_end_)) {
            set_to("");
            if (ends("at")) {
                set_to("ate");
            } else if (ends("bl")) {
                set_to("ble");
            } else if (ends("iz")) {
                set_to("ize");
            } else if (double_consonant(end_)) {
                const char c = b_[end_ - 1];
                if (c != 'l' && c != 's' && c != 'z') {
                    --end_;
                    b_.resize(end_);
                }
            } else if (measure(end_) == 1 && cvc(end_)) {
                stem_end_ = end_;
                set_to("e");
            }
        }
    }

    void step1c() {
        if (ends("y") && has_vowel(stem_end_)) set_to("i");
    }

    void step2() {
        if (end_ < 2) return;
        struct Rule { std::string_view from, to; };
        static constexpr Rule rules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"}, {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
        };
        for (const auto& r : rules) {
            if (ends(r.from)) {
                replace_if_measured(r.to);
                return;
            }
        }
    }

    void step3() {
        struct Rule { std::string_view from, to; };
        static constexpr Rule rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        for (const auto& r : rules) {
            if (ends(r.from)) {
                replace_if_measured(r.to);
                return;
            }
        }
    }

    void step4() {
        static constexpr std::string_view suffixes[] = {
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment",
            "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
        };
        // Longest match wins; "ement" must be tried before "ment" and "ent".
        std::size_t best_len = 0;
        std::string_view best;
        for (auto s : suffixes) {
            if (s.size() > best_len && s.size() <= end_ &&
                std::string_view(b_).substr(end_ - s.size()) == s) {
                best = s;
                best_len = s.size();
            }
        }
        if (best_len == 0) return;
        stem_end_ = end_ - best_len;
        if (best == "ion") {
            if (stem_end_ == 0 || (b_[stem_end_ - 1] != 's' && b_[stem_end_ - 1] != 't')) return;
        }
        if (measure(stem_end_) > 1) {
            end_ = stem_end_;
            b_.resize(end_);
        }
    }

    void step5() {
        if (b_[end_ - 1] == 'e') {
            const int m = measure(end_ - 1);
            if (m > 1 || (m == 1 && !cvc(end_ - 1))) {
                --end_;
                b_.resize(end_);
            }
        }
        if (end_ >= 1 && b_[end_ - 1] == 'l' && double_consonant(end_) && measure(end_) > 1) {
            --end_;
            b_.resize(end_);
        }
    }

    std::string b_;
    std::size_t end_;
    std::size_t stem_end_ = 0;
};

}  // namespace

std::string porter_stem(std::string_view word) {
    const bool plain = !word.empty() &&
        std::all_of(word.begin(), word.end(), [](char c) { return c >= 'a' && c <= 'z'; });
    if (!plain) return std::string(word);
    return Stemmer(std::string(word)).run();
}

}  // namespace dragun::text
