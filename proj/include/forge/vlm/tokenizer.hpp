#pragma once

#include <string>
#include <vector>

namespace forge::vlm {

using Token = int;
using TokenSeq = std::vector<Token>;

// Byte-level tokenizer over a fixed 64-symbol alphabet: lowercase letters,
// digits, space, common punctuation, plus <eos>/<unk>. Uppercase input is
// folded to lowercase; characters outside the alphabet map to <unk>.
class Tokenizer {
public:
    static constexpr Token kEos = 0;
    static constexpr Token kUnk = 1;
    static constexpr int kVocabSize = 64;

    Tokenizer();

    TokenSeq encode(const std::string& text) const;  // no <eos> appended
    std::string decode(const TokenSeq& tokens) const;

    const std::vector<std::string>& symbols() const { return symbols_; }

private:
    std::vector<std::string> symbols_;
    int char_to_token_[256];
};

const Tokenizer& shared_tokenizer();

}  // namespace forge::vlm
