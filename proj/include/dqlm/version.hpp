#ifndef DQLM_VERSION_HPP
#define DQLM_VERSION_HPP

namespace dqlm {

inline constexpr int version_major = 0;
inline constexpr int version_minor = 1;
inline constexpr int version_patch = 0;
inline constexpr const char* version_string = "0.1.0";

}  // namespace dqlm

#endif  // DQLM_VERSION_HPP
