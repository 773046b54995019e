#ifndef MEDTEST_VERSION_HPP
#define MEDTEST_VERSION_HPP

namespace medtest {

inline constexpr const char* kVersion = "0.1.0";

}

#endif
