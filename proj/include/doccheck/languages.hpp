#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>

namespace doccheck {

enum class LanguageId { java, javascript, python, ruby, rust, go, csharp, cpp, c, php };

inline constexpr std::array<LanguageId, 10> kAllLanguages = {
    LanguageId::java, LanguageId::javascript, LanguageId::python, LanguageId::ruby,
    LanguageId::rust, LanguageId::go,         LanguageId::csharp, LanguageId::cpp,
    LanguageId::c,    LanguageId::php};

std::string_view to_string(LanguageId lang);
std::optional<LanguageId> parse_language(std::string_view name);

std::span<const std::string_view> extensions(LanguageId lang);
std::optional<LanguageId> language_for_path(const std::filesystem::path& path);

// The six languages with full golden coverage; the other four are staged.
bool fully_supported(LanguageId lang);

}  // namespace doccheck
