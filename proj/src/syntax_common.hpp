#pragma once

#include "doccheck/syntax.hpp"

namespace doccheck::syntax {

std::unique_ptr<SyntaxBackend> make_brace_backend(LanguageId lang);
std::unique_ptr<SyntaxBackend> make_python_backend();
std::unique_ptr<SyntaxBackend> make_ruby_backend();

}  // namespace doccheck::syntax
