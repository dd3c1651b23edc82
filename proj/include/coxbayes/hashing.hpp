#pragma once

#include <string>
#include <string_view>

namespace coxbayes {

std::string sha1_hex(std::string_view data);
/// SHA-1 of "blob <size>\0<data>", as git computes object ids.
std::string git_blob_hash(std::string_view data);

}  // namespace coxbayes
