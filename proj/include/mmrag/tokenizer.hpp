#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mmrag {

// Token counting interface injected into chunking and the hash embedder.
// Implementations must be deterministic and satisfy
// count(text) == tokenize(text).size().
class Tokenizer {
public:
    virtual ~Tokenizer() = default;

    virtual std::vector<std::string> tokenize(std::string_view text) const = 0;

    virtual std::size_t count(std::string_view text) const { return tokenize(text).size(); }
};

// Dependency-free word tokenizer: lowercases ASCII, splits on Unicode
// whitespace, strips surrounding punctuation, keeps numerals. Tokens that are
// pure punctuation vanish.
class DefaultTokenizer final : public Tokenizer {
public:
    std::vector<std::string> tokenize(std::string_view text) const override;
    std::size_t count(std::string_view text) const override;
};

} // namespace mmrag
