#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

namespace ctfvault {

enum class Category {
  Cryptography,
  BinaryExploitation,
  ReverseEngineering,
  WebExploitation,
  Forensics,
  OSINT,
  Blockchain,
  RadioFrequency,
  SocialEngineering,
  Steganography,
  Misc,
};

// Ordered as the statistics table: Cryptography first, Misc last.
inline constexpr std::array<Category, 11> kAllCategories = {
    Category::Cryptography,      Category::BinaryExploitation,
    Category::ReverseEngineering, Category::WebExploitation,
    Category::Forensics,         Category::OSINT,
    Category::Blockchain,        Category::RadioFrequency,
    Category::SocialEngineering, Category::Steganography,
    Category::Misc,
};

/// Token written to manifests and JSON payloads, e.g. `binary-exploitation`.
std::string_view canonical_name(Category c) noexcept;

/// Row label in the statistics table, e.g. `Binary Exploitation (PWN)`.
std::string_view table_label(Category c) noexcept;

/// Case-insensitive lookup over canonical names, enum names and the short
/// alias table (`crypto`, `pwn`, `rev`, `web`, `osint`, `stego`, `rf`).
std::optional<Category> category_from_string(std::string_view text);

/// Every accepted spelling (lowercase) with the category it maps to.
std::span<const std::pair<std::string_view, Category>> category_spellings() noexcept;

}  // namespace ctfvault
