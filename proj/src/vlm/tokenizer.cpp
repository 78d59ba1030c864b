#include "forge/vlm/tokenizer.hpp"

#include <cctype>

namespace forge::vlm {

Tokenizer::Tokenizer() {
    symbols_.assign(kVocabSize, "");
    symbols_[kEos] = "<eos>";
    symbols_[kUnk] = "<unk>";
    symbols_[2] = " ";
    int next = 3;
    for (char c = 'a'; c <= 'z'; ++c) symbols_[next++] = std::string(1, c);
    for (char c = '0'; c <= '9'; ++c) symbols_[next++] = std::string(1, c);
    for (char c : std::string(".,?!'\":;-()<>/\n&%$#@*+=[]")) symbols_[next++] = std::string(1, c);

    for (int i = 0; i < 256; ++i) char_to_token_[i] = kUnk;
    for (int t = 2; t < kVocabSize; ++t)
        if (symbols_[t].size() == 1) char_to_token_[static_cast<unsigned char>(symbols_[t][0])] = t;
    for (char c = 'A'; c <= 'Z'; ++c)
        char_to_token_[static_cast<unsigned char>(c)] = char_to_token_[static_cast<unsigned char>(std::tolower(c))];
}

TokenSeq Tokenizer::encode(const std::string& text) const {
    TokenSeq out;
    out.reserve(text.size());
    for (unsigned char c : text) out.push_back(char_to_token_[c]);
    return out;
}

std::string Tokenizer::decode(const TokenSeq& tokens) const {
    std::string out;
    for (Token t : tokens) {
        if (t == kEos) break;
        if (t == kUnk || t < 0 || t >= kVocabSize) continue;
        out += symbols_[t];
    }
    return out;
}

const Tokenizer& shared_tokenizer() {
    static const Tokenizer tok;
    return tok;
}

}  // namespace forge::vlm
