#pragma once

#include <algorithm>
#include <cctype>
#include <string>

#include "sit/platform/api.hpp"

// after Eigen: <resolv.h> defines a _res macro that breaks Eigen headers
#include <httplib.h>

namespace sit::platform {

// Binds every route of `api` onto an httplib server. The caller owns the
// server and calls listen()/stop().
inline void mount(httplib::Server& server, Api& api) {
  httplib::Server::Handler forward = [&api](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.path = in.path;
    req.body = in.body;
    for (const auto& [k, v] : in.headers) {
      std::string name = k;
      std::transform(name.begin(), name.end(), name.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      req.headers[name] = v;
    }
    const auto resp = api.handle(req);
    out.status = resp.status;
    out.set_content(resp.body, resp.content_type.c_str());
  };
  const char* any = R"(/.*)";
  server.Get(any, forward);
  server.Post(any, forward);
  server.Put(any, forward);
  server.Delete(any, forward);
}

}  // namespace sit::platform
