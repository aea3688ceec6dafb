// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>

namespace grantgeo
{

/// `scheme://host[:port]` plus the request path, as cpp-httplib wants them.
struct HttpEndpoint
{
    std::string base;
    std::string path;
};

[[nodiscard]] HttpEndpoint split_endpoint(std::string_view url);

} // namespace grantgeo
