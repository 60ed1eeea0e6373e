#pragma once

// Splitting an endpoint URL for httplib, which wants "scheme://host:port" for
// the client and the path separately.

#include <string>
#include <string_view>

#include "fairrag/errors.hpp"

namespace fairrag::detail {

struct SplitUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/v1" (no trailing slash)
};

inline SplitUrl split_url(std::string_view url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError("endpoint URL needs a scheme: " + std::string(url));
  }
  auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string_view::npos) {
    out.origin = std::string(url);
  } else {
    out.origin = std::string(url.substr(0, path_start));
    out.path_prefix = std::string(url.substr(path_start));
  }
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  return out;
}

}  // namespace fairrag::detail
