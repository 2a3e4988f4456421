#include "mmrag/tokenizer.hpp"

#include <cctype>

namespace mmrag {

namespace {

// Decodes one UTF-8 codepoint starting at `i`; advances `i` past it. Invalid
// bytes are consumed one at a time and returned verbatim.
char32_t decode_utf8(std::string_view s, std::size_t& i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c < 0x80) {
        ++i;
        return c;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((c & 0xe0) == 0xc0) {
        extra = 1;
        cp = c & 0x1f;
    } else if ((c & 0xf0) == 0xe0) {
        extra = 2;
        cp = c & 0x0f;
    } else if ((c & 0xf8) == 0xf0) {
        extra = 3;
        cp = c & 0x07;
    } else {
        ++i;
        return c;
    }
    if (i + extra >= s.size()) {
        // truncated sequence
        ++i;
        return c;
    }
    for (int k = 1; k <= extra; ++k) {
        unsigned char cc = static_cast<unsigned char>(s[i + k]);
        if ((cc & 0xc0) != 0x80) {
            ++i;
            return c;
        }
        cp = (cp << 6) | (cc & 0x3f);
    }
    i += extra + 1;
    return cp;
}

bool is_unicode_space(char32_t cp) {
    if (cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v') return true;
    switch (cp) {
        case 0x00a0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202f:
        case 0x205f:
        case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200a;
    }
}

bool is_strippable(unsigned char c) { return c < 0x80 && std::ispunct(c); }

// Walks the text, invoking `emit` with each raw whitespace-delimited span.
template <typename Fn>
void for_each_span(std::string_view text, Fn&& emit) {
    std::size_t i = 0;
    std::size_t start = 0;
    bool in_span = false;
    while (i < text.size()) {
        std::size_t at = i;
        char32_t cp = decode_utf8(text, i);
        if (is_unicode_space(cp)) {
            if (in_span) {
                emit(text.substr(start, at - start));
                in_span = false;
            }
        } else if (!in_span) {
            start = at;
            in_span = true;
        }
    }
    if (in_span) emit(text.substr(start));
}

// Lowercased span with surrounding ASCII punctuation removed; empty when the
// span was punctuation only.
std::string normalize_span(std::string_view span) {
    std::size_t b = 0, e = span.size();
    while (b < e && is_strippable(static_cast<unsigned char>(span[b]))) ++b;
    while (e > b && is_strippable(static_cast<unsigned char>(span[e - 1]))) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i) {
        unsigned char c = static_cast<unsigned char>(span[i]);
        out.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    return out;
}

} // namespace

std::vector<std::string> DefaultTokenizer::tokenize(std::string_view text) const {
    std::vector<std::string> tokens;
    for_each_span(text, [&](std::string_view span) {
        std::string tok = normalize_span(span);
        if (!tok.empty()) tokens.push_back(std::move(tok));
    });
    return tokens;
}

std::size_t DefaultTokenizer::count(std::string_view text) const {
    std::size_t n = 0;
    for_each_span(text, [&](std::string_view span) {
        if (!normalize_span(span).empty()) ++n;
    });
    return n;
}

} // namespace mmrag
