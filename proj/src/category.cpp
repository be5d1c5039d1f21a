#include "ctfvault/category.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace ctfvault {
namespace {

constexpr std::array<std::pair<std::string_view, Category>, 29> kSpellings = {{
    {"cryptography", Category::Cryptography},
    {"crypto", Category::Cryptography},
    {"binary-exploitation", Category::BinaryExploitation},
    {"binaryexploitation", Category::BinaryExploitation},
    {"pwn", Category::BinaryExploitation},
    {"reverse-engineering", Category::ReverseEngineering},
    {"reverseengineering", Category::ReverseEngineering},
    {"rev", Category::ReverseEngineering},
    {"web-exploitation", Category::WebExploitation},
    {"webexploitation", Category::WebExploitation},
    {"web", Category::WebExploitation},
    {"forensics", Category::Forensics},
    {"osint", Category::OSINT},
    {"blockchain", Category::Blockchain},
    {"radio-frequency", Category::RadioFrequency},
    {"radiofrequency", Category::RadioFrequency},
    {"rf", Category::RadioFrequency},
    {"social-engineering", Category::SocialEngineering},
    {"socialengineering", Category::SocialEngineering},
    {"steganography", Category::Steganography},
    {"stego", Category::Steganography},
    {"misc", Category::Misc},
    // Table labels, lowercased.
    {"binary exploitation (pwn)", Category::BinaryExploitation},
    {"binary exploitation", Category::BinaryExploitation},
    {"reverse engineering", Category::ReverseEngineering},
    {"web exploitation", Category::WebExploitation},
    {"radio frequency", Category::RadioFrequency},
    {"social engineering", Category::SocialEngineering},
    {"miscellaneous", Category::Misc},
}};

}  // namespace

std::string_view canonical_name(Category c) noexcept {
  switch (c) {
    case Category::Cryptography: return "cryptography";
    case Category::BinaryExploitation: return "binary-exploitation";
    case Category::ReverseEngineering: return "reverse-engineering";
    case Category::WebExploitation: return "web-exploitation";
    case Category::Forensics: return "forensics";
    case Category::OSINT: return "osint";
    case Category::Blockchain: return "blockchain";
    case Category::RadioFrequency: return "radio-frequency";
    case Category::SocialEngineering: return "social-engineering";
    case Category::Steganography: return "steganography";
    case Category::Misc: return "misc";
  }
  return "misc";
}

std::string_view table_label(Category c) noexcept {
  switch (c) {
    case Category::Cryptography: return "Cryptography";
    case Category::BinaryExploitation: return "Binary Exploitation (PWN)";
    case Category::ReverseEngineering: return "Reverse Engineering";
    case Category::WebExploitation: return "Web Exploitation";
    case Category::Forensics: return "Forensics";
    case Category::OSINT: return "OSINT";
    case Category::Blockchain: return "Blockchain";
    case Category::RadioFrequency: return "Radio Frequency";
    case Category::SocialEngineering: return "Social Engineering";
    case Category::Steganography: return "Steganography";
    case Category::Misc: return "MISC";
  }
  return "MISC";
}

std::optional<Category> category_from_string(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (const auto& [spelling, category] : kSpellings) {
    if (spelling == lowered) return category;
  }
  return std::nullopt;
}

std::span<const std::pair<std::string_view, Category>> category_spellings() noexcept {
  return kSpellings;
}

}  // namespace ctfvault
