// http.hpp -- single include point for cpp-httplib with TLS support enabled,
// so every translation unit sees the same httplib configuration.

#ifndef SDWAN_HTTP_HPP
#define SDWAN_HTTP_HPP

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#endif // SDWAN_HTTP_HPP
