#pragma once

namespace wdn {

/// Bundled benchmark inputs, identical to fixtures/*.wdn.
extern const char* const case_a_text;
extern const char* const case_b_text;
extern const char* const case_c_text;

}  // namespace wdn
