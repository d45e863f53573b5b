#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace hdpo::tasks {

// Fixed token layout. Tokens 0..9 are the digits; 10..13 are the letters
// a..d; the rest are reserved operators and markers.
inline constexpr std::int32_t kDigitBase = 0;
inline constexpr std::int32_t kLetterBase = 10;
inline constexpr int kNumLetters = 4;
inline constexpr std::int32_t kPlus = 14;
inline constexpr std::int32_t kMinus = 15;
inline constexpr std::int32_t kAnswerMarker = 16;
inline constexpr std::int32_t kPrivOpen = 17;
inline constexpr std::int32_t kPrivClose = 18;
inline constexpr std::int32_t kEos = 19;
inline constexpr int kMinVocabSize = 20;

std::int32_t letter_token(char c);
std::vector<std::int32_t> letters_to_tokens(std::string_view s);

}  // namespace hdpo::tasks
