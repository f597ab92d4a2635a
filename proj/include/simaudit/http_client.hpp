#pragma once

#include <string>
#include <utility>
#include <vector>

namespace simaudit {

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs a JSON body to `url` (http:// or https://). Transport failures
/// return status 0 with the error text in body.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       int timeout_seconds);

}  // namespace simaudit
