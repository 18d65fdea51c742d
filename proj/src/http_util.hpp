#pragma once

#include <stdexcept>
#include <string>

namespace xferbench::detail {

struct UrlParts {
  std::string base; // scheme://host[:port]
  std::string path; // leading '/'
};

inline UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("URL without scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos)
    return UrlParts{url, "/"};
  return UrlParts{url.substr(0, path_start), url.substr(path_start)};
}

} // namespace xferbench::detail
