// SPDX-License-Identifier: Apache-2.0
#include <grantgeo/error.hpp>
#include <grantgeo/http_endpoint.hpp>

#include <fmt/format.h>

namespace grantgeo
{

HttpEndpoint split_endpoint(std::string_view url)
{
    auto const scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos)
        throw Error(ErrorCode::ConfigInvalid, fmt::format("endpoint '{}' lacks a scheme", url));
    auto const path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos)
        return { std::string(url), "/" };
    return { std::string(url.substr(0, path_start)), std::string(url.substr(path_start)) };
}

} // namespace grantgeo
